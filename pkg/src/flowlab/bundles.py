"""Holomorphic bundles on the torus presented by factors of automorphy.

A rank-``r`` bundle is given by multipliers ``A_1(z)`` and ``A_tau(z)``; a
local holomorphic section satisfies ``s(z + lam) = A_lam(z) s(z)``.  The
multiplier of a general lattice vector follows from the cocycle rule
``A_{lam+mu}(z) = A_lam(z + mu) A_mu(z)``, which is consistent exactly when
``A_1(z + tau) A_tau(z) = A_tau(z + 1) A_1(z)``.

Fields living on the bundle transform under a lattice translation as

* ``metric``:       ``h(z + lam) = A^{-*} h(z) A^{-1}``
* ``endomorphism``: ``s(z + lam) = A s(z) A^{-1}``
* ``section``:      ``s(z + lam) = A s(z)``
* ``scalar``:       periodic
* ``logdet``:       ``f(z + lam) = f(z) - 2 log|det A|`` (log det of a metric)

:func:`transport` applies one of these rules and :func:`pad` uses it to
fill the ghost layers needed by the finite-difference kernels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels
from . import expr as ex
from . import fiber
from .torus import TorusDomain

FIELD_KINDS = ("metric", "endomorphism", "section", "scalar", "logdet")

# Basis of trace-free 2x2 matrices shared with the Lie-algebra layer.
SL2_BASIS = np.array([
    [[0, 1], [0, 0]],   # E
    [[0, 0], [1, 0]],   # F
    [[1, 0], [0, -1]],  # H
], dtype=complex)


@dataclass(frozen=True, eq=False)
class FactorSystem:
    """A bundle presented by multipliers along the lattice generators.

    ``descriptor`` is the JSON-able construction tree the bundle came from,
    e.g. ``{"kind": "line", "degree": 2}``; it drives canonical metrics and
    the stability oracle.
    """

    rank: int
    tau: complex
    A_1: ex.Matrix
    A_tau: ex.Matrix
    descriptor: dict
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def multiplier(self, generator: str, z) -> np.ndarray:
        m = {"1": self.A_1, "tau": self.A_tau}[generator]
        return ex.evaluate(m, z)

    @property
    def det_trivial(self) -> bool:
        if "det_trivial" not in self._cache:
            z = sample_points(self.tau)
            ok = all(
                np.max(np.abs(fiber.det(self.multiplier(g, z)) - 1.0)) < 1e-10
                for g in ("1", "tau")
            )
            self._cache["det_trivial"] = bool(ok)
        return self._cache["det_trivial"]

    @property
    def blocks(self) -> list[tuple[int, int]]:
        """Index ranges ``[start, stop)`` of the finest block decomposition
        respected by both multipliers (from their sparsity on sample points)."""
        if "blocks" not in self._cache:
            z = sample_points(self.tau)
            nz = np.zeros((self.rank, self.rank), dtype=bool)
            for g in ("1", "tau"):
                nz |= np.any(np.abs(self.multiplier(g, z)) > 0, axis=-1)
            nz |= nz.T
            out, start, reach = [], 0, 0
            for i in range(self.rank):
                reach = max(reach, max(j for j in range(self.rank) if nz[i, j] or j == i))
                if reach == i:
                    out.append((start, i + 1))
                    start = i + 1
            self._cache["blocks"] = out
        return self._cache["blocks"]

    def to_json(self) -> str:
        return json.dumps(self.descriptor, sort_keys=True)


def sample_points(tau: complex, n: int = 32, seed: int = 20240611) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-0.5, 0.5, size=(2, n))
    return x + tau * y


def _check_tau(*bundles: FactorSystem) -> complex:
    taus = {b.tau for b in bundles}
    if len(taus) != 1:
        raise ValueError(f"bundles live on different tori: {sorted(taus, key=abs)}")
    return taus.pop()


# ---------------------------------------------------------------- constructions

def line_bundle(d: int, tau: complex = 1j) -> FactorSystem:
    """Degree-``d`` line bundle, ``A_1 = 1``, ``A_tau = exp(-pi i d tau - 2 pi i d z)``."""
    tau = complex(tau)
    a_tau = ex.exp(ex.add(ex.Const(-np.pi * 1j * d * tau), ex.mul(ex.Const(-2j * np.pi * d), ex.Z)))
    return FactorSystem(1, tau, ex.identity(1), ((a_tau,),), {"kind": "line", "degree": int(d)})


def atiyah_F2(tau: complex = 1j) -> FactorSystem:
    """The nonsplit self-extension of the trivial line bundle."""
    return FactorSystem(2, complex(tau), ex.identity(2), ex.matrix([[1, 1], [0, 1]]), {"kind": "atiyah"})


def direct_sum(*bundles: FactorSystem) -> FactorSystem:
    if not bundles:
        raise ValueError("direct_sum needs at least one summand")
    tau = _check_tau(*bundles)
    return FactorSystem(
        sum(b.rank for b in bundles), tau,
        ex.block_diag(*(b.A_1 for b in bundles)),
        ex.block_diag(*(b.A_tau for b in bundles)),
        {"kind": "sum", "summands": [b.descriptor for b in bundles]},
    )


def dual(b: FactorSystem) -> FactorSystem:
    return FactorSystem(
        b.rank, b.tau,
        ex.transpose(ex.inverse(b.A_1)), ex.transpose(ex.inverse(b.A_tau)),
        {"kind": "dual", "of": b.descriptor},
    )


def tensor(b1: FactorSystem, b2: FactorSystem) -> FactorSystem:
    tau = _check_tau(b1, b2)
    return FactorSystem(
        b1.rank * b2.rank, tau,
        ex.kron(b1.A_1, b2.A_1), ex.kron(b1.A_tau, b2.A_tau),
        {"kind": "tensor", "factors": [b1.descriptor, b2.descriptor]},
    )


def end_bundle(b: FactorSystem) -> FactorSystem:
    """End(E) = E (x) E^dual; an endomorphism ``phi`` is flattened row-major."""
    d = dual(b)
    return FactorSystem(
        b.rank ** 2, b.tau,
        ex.kron(b.A_1, d.A_1), ex.kron(b.A_tau, d.A_tau),
        {"kind": "end", "of": b.descriptor},
    )


def _adjoint_matrix(a: ex.Matrix) -> ex.Matrix:
    """Expression matrix of ``xi -> a xi a^{-1}`` on the (E, F, H) basis."""
    ainv = ex.inverse(a)
    cols = []
    for basis in SL2_BASIS:
        b = ex.matrix(basis)
        c = ex.matmul(ex.matmul(a, b), ainv)
        # coordinates of a trace-free matrix [[h, e], [f, -h]]
        cols.append((c[0][1], c[1][0], c[0][0]))
    return tuple(tuple(cols[j][i] for j in range(3)) for i in range(3))


def end0_bundle(b: FactorSystem) -> FactorSystem:
    """Trace-free endomorphisms of a det-trivial rank-2 bundle (the adjoint bundle)."""
    if b.rank != 2 or not b.det_trivial:
        raise ValueError("end0_bundle needs a det-trivial rank-2 bundle")
    return FactorSystem(
        3, b.tau, _adjoint_matrix(b.A_1), _adjoint_matrix(b.A_tau),
        {"kind": "end0", "of": b.descriptor},
    )


def perturb_multiplier(b: FactorSystem, epsilon: float) -> FactorSystem:
    """``A_tau -> (1 + epsilon z) A_tau``: a deliberately inconsistent presentation.

    Used to exercise the cocycle check; for ``epsilon != 0`` the result is not
    a bundle.
    """
    factor = ex.add(ex.ONE, ex.mul(ex.Const(epsilon), ex.Z))
    a_tau = tuple(tuple(ex.mul(factor, e) for e in row) for row in b.A_tau)
    return FactorSystem(b.rank, b.tau, b.A_1, a_tau,
                        {"kind": "perturbed_multiplier", "of": b.descriptor, "epsilon": float(epsilon)})


def from_descriptor(desc: dict[str, Any], tau: complex = 1j) -> FactorSystem:
    """Rebuild a bundle from its construction descriptor."""
    kind = desc.get("kind")
    if kind == "line":
        return line_bundle(int(desc["degree"]), tau)
    if kind == "atiyah":
        return atiyah_F2(tau)
    if kind == "sum":
        return direct_sum(*(from_descriptor(d, tau) for d in desc["summands"]))
    if kind == "dual":
        return dual(from_descriptor(desc["of"], tau))
    if kind == "tensor":
        f1, f2 = desc["factors"]
        return tensor(from_descriptor(f1, tau), from_descriptor(f2, tau))
    if kind == "end":
        return end_bundle(from_descriptor(desc["of"], tau))
    if kind == "end0":
        return end0_bundle(from_descriptor(desc["of"], tau))
    if kind == "perturbed_multiplier":
        return perturb_multiplier(from_descriptor(desc["of"], tau), float(desc["epsilon"]))
    raise ValueError(f"unknown bundle kind {kind!r}")


# ---------------------------------------------------------------- consistency

def validate_cocycle(b: FactorSystem, z=None) -> float:
    """Relative residual of ``A_1(z+tau) A_tau(z) = A_tau(z+1) A_1(z)``.

    The residual is normalized by the size of the two sides because line
    bundle multipliers grow like ``exp(2 pi d Im z)``.
    """
    z = sample_points(b.tau) if z is None else np.asarray(z)
    lhs = fiber.mm(b.multiplier("1", z + b.tau), b.multiplier("tau", z))
    rhs = fiber.mm(b.multiplier("tau", z + 1), b.multiplier("1", z))
    num = np.sqrt(np.sum(np.abs(lhs - rhs) ** 2, axis=(0, 1)))
    den = np.maximum(np.sqrt(np.sum(np.abs(lhs) ** 2, axis=(0, 1))),
                     np.sqrt(np.sum(np.abs(rhs) ** 2, axis=(0, 1))))
    return float(np.max(num / den))


def lattice_factor(b: FactorSystem, m: int, n: int, z) -> np.ndarray:
    """Multiplier ``A_{m + n tau}(z)`` built from the generators by the cocycle rule."""
    z = np.asarray(z, dtype=complex)
    acc = fiber.eye(b.rank, z.shape)
    w = z.copy()
    # translate by n*tau first, then by m
    for _ in range(abs(n)):
        if n > 0:
            acc = fiber.mm(b.multiplier("tau", w), acc)
            w = w + b.tau
        else:
            acc = fiber.mm(fiber.inv(b.multiplier("tau", w - b.tau)), acc)
            w = w - b.tau
    for _ in range(abs(m)):
        if m > 0:
            acc = fiber.mm(b.multiplier("1", w), acc)
            w = w + 1
        else:
            acc = fiber.mm(fiber.inv(b.multiplier("1", w - 1)), acc)
            w = w - 1
    return acc


def apply_rule(kind: str, a: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Transform field values at ``z`` into values at ``z + lam`` given ``a = A_lam(z)``."""
    if kind == "metric":
        w = fiber.inv(a)
        return fiber.mm(fiber.adjoint(w), fiber.mm(values, w))
    if kind == "endomorphism":
        return fiber.mm(a, fiber.mm(values, fiber.inv(a)))
    if kind == "section":
        return np.einsum("ij...,j...->i...", a, values)
    if kind == "scalar":
        return values
    if kind == "logdet":
        return values - 2.0 * np.log(np.abs(fiber.det(a)))
    raise ValueError(f"unknown transformation type {kind!r}; expected one of {FIELD_KINDS}")


def transport(b: FactorSystem, direction: str, values: np.ndarray, z, kind: str,
              side: str = "+") -> np.ndarray:
    """Values of a field at ``z + lam`` (side ``'+'``) or ``z - lam`` (side ``'-'``).

    ``direction`` is the lattice generator ``'1'`` or ``'tau'``.
    """
    if kind not in FIELD_KINDS:
        raise ValueError(f"unknown transformation type {kind!r}; expected one of {FIELD_KINDS}")
    step = {"1": (1, 0), "tau": (0, 1)}[direction]
    sign = {"+": 1, "-": -1}[side]
    a = lattice_factor(b, sign * step[0], sign * step[1], z)
    return apply_rule(kind, a, values)


class _Ghosts:
    """Precomputed gather indices and lattice factors for one padding width."""

    def __init__(self, b: FactorSystem, domain: TorusDomain, width: int):
        n = domain.N
        idx = np.arange(-width, n + width)
        base, shift = idx % n, idx // n
        self.ky, self.jx = np.meshgrid(base, base, indexing="ij")
        sy, sx = np.meshgrid(shift, shift, indexing="ij")
        z = domain.points(0)[self.ky, self.jx]
        self.factor = fiber.eye(b.rank, self.ky.shape)
        for m in np.unique(sx):
            for k in np.unique(sy):
                if m == 0 and k == 0:
                    continue
                mask = (sx == m) & (sy == k)
                self.factor[:, :, mask] = lattice_factor(b, int(m), int(k), z[mask])
        self.width = width
        # Only the ghost strips need a twist; strips whose factor is the
        # identity (e.g. unitary-trivial directions) are skipped entirely.
        w, m = width, n + width
        strips = [(slice(0, w), slice(None)), (slice(m, None), slice(None)),
                  (slice(w, m), slice(0, w)), (slice(w, m), slice(m, None))]
        ident = fiber.eye(b.rank, ())
        self.strips = []
        for sy_, sx_ in strips:
            f = self.factor[:, :, sy_, sx_]
            if np.allclose(f, ident[:, :, None, None], rtol=0, atol=0):
                continue
            inv = fiber.inv(f)
            self.strips.append((sy_, sx_, f, inv, -2.0 * np.log(np.abs(fiber.det(f)))))
        # flat gather tables for the compiled metric padding
        self.gidx = np.full(self.ky.shape, -1, dtype=np.int64)
        invs = []
        count = 0
        for sy_, sx_, _, inv, _ in self.strips:
            block = self.gidx[sy_, sx_]
            block[...] = np.arange(count, count + block.size).reshape(block.shape)
            invs.append(inv.reshape(b.rank, b.rank, -1))
            count += block.size
        self.invs = (np.ascontiguousarray(np.concatenate(invs, axis=2)) if invs
                     else np.zeros((b.rank, b.rank, 1), dtype=complex))


def pad(b: FactorSystem, domain: TorusDomain, values: np.ndarray, width: int,
        kind: str = "metric") -> np.ndarray:
    """Extend a grid field by ``width`` ghost layers using the bundle's twist."""
    if kind not in FIELD_KINDS:
        raise ValueError(f"unknown transformation type {kind!r}; expected one of {FIELD_KINDS}")
    key = ("ghosts", domain.N, domain.tau, width)
    if key not in b._cache:
        if domain.tau != b.tau:
            raise ValueError("domain and bundle disagree on tau")
        b._cache[key] = _Ghosts(b, domain, width)
    g = b._cache[key]
    if kind == "metric" and _kernels.AVAILABLE and values.ndim == 4:
        return _kernels.pad_metric_kernel(np.ascontiguousarray(values, dtype=complex),
                                          g.ky, g.jx, g.gidx, g.invs)
    out = np.pad(values, [(0, 0)] * (values.ndim - 2) + [(width, width)] * 2, mode="wrap")
    if kind == "scalar":
        return out
    for sy, sx, f, inv, logdet in g.strips:
        raw = out[..., sy, sx]
        if kind == "logdet":
            out[..., sy, sx] = raw + logdet
        elif kind == "metric":
            out[..., sy, sx] = fiber.mm(fiber.adjoint(inv), fiber.mm(raw, inv))
        elif kind == "endomorphism":
            out[..., sy, sx] = fiber.mm(f, fiber.mm(raw, inv))
        else:
            out[..., sy, sx] = np.einsum("ij...,j...->i...", f, raw)
    return out
