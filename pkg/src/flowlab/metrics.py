"""Hermitian metrics on automorphy bundles and their curvature.

Conventions (fixed once, everything else follows):

* a metric is a field of Hermitian positive matrices ``h`` with
  ``<s, t> = t^* h s``, so the ``h``-adjoint of an endomorphism is
  ``h^{-1} k^* h``;
* the Chern connection is ``d + h^{-1} dh`` in the holomorphic frame, with
  ``a_z = h^{-1} d_z h``;
* ``F_{z zbar} = -d_zbar(h^{-1} d_z h)`` is the ``dz ^ dzbar`` coefficient of
  the curvature;
* the mean curvature is ``K = i Lambda F = 2 F_{z zbar}``.

With these choices the canonical metric ``exp(-2 pi d Im(z)^2 / Im tau)`` on
the degree-``d`` line bundle has ``K = 2 pi d / vol`` and degree ``d``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels, bundles, fiber
from .bundles import SL2_BASIS, FactorSystem
from .torus import TorusDomain, crop, ddbar, hyperdiff, integrate, wirtinger

PAD = 4  # two stencil applications
PROVENANCE = ("canonical", "perturbed", "flow-evolved", "induced", "snapshot", "custom")


@dataclass(frozen=True, eq=False)
class MetricField:
    bundle: FactorSystem
    domain: TorusDomain
    values: np.ndarray  # (r, r, N, N), planes first
    provenance: str = "custom"

    @property
    def rank(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray, provenance: str | None = None) -> "MetricField":
        return replace(self, values=values, provenance=provenance or self.provenance)


@dataclass(frozen=True)
class SlopeData:
    degree: float
    rank: int
    slope: float
    einstein_constant: float


# ---------------------------------------------------------------- construction

def _canonical_values(desc: dict, domain: TorusDomain) -> np.ndarray:
    kind = desc["kind"]
    _, y = domain.lattice_coords()
    if kind == "line":
        d = desc["degree"]
        return np.exp(-2 * np.pi * d * domain.vol * y ** 2)[None, None].astype(complex)
    if kind == "atiyah":
        # M = I - y N with N = [[0, 1], [0, 0]] satisfies M(y + 1) = M(y) A_tau^{-1}
        # so M^* M obeys the metric rule exactly; A_1 = I makes it x-periodic.
        one = np.ones_like(y)
        return np.array([[one, -y], [-y, one + y ** 2]], dtype=complex)
    if kind == "sum":
        return fiber.block_diag(*(_canonical_values(d, domain) for d in desc["summands"]))
    if kind == "dual":
        return fiber.inv(np.conj(_canonical_values(desc["of"], domain)))
    if kind == "tensor":
        f1, f2 = desc["factors"]
        return fiber.kron(_canonical_values(f1, domain), _canonical_values(f2, domain))
    if kind == "end":
        h = _canonical_values(desc["of"], domain)
        return fiber.kron(h, fiber.inv(np.conj(h)))
    if kind == "end0":
        return induced_values(_canonical_values(desc["of"], domain), trace_free=True)
    if kind == "perturbed_multiplier":
        return _canonical_values(desc["of"], domain)
    raise ValueError(f"no canonical metric for bundle kind {kind!r}")


def canonical_metric(bundle: FactorSystem, domain: TorusDomain) -> MetricField:
    """Closed-form compatible metric for the built-in constructions.

    Line bundles get the constant-curvature metric; sums, duals, tensors and
    endomorphism bundles get the induced metrics; the Atiyah bundle gets
    ``M(y)^* M(y)`` with ``M(y) = I - y N``.
    """
    if domain.tau != bundle.tau:
        raise ValueError("domain and bundle disagree on tau")
    return MetricField(bundle, domain, _canonical_values(bundle.descriptor, domain), "canonical")


def flat_metric(bundle: FactorSystem, domain: TorusDomain) -> MetricField:
    """The identity metric (compatible only for unitary multipliers)."""
    return MetricField(bundle, domain, fiber.eye(bundle.rank, (domain.N, domain.N)), "custom")


def induced_values(h: np.ndarray, trace_free: bool) -> np.ndarray:
    """Metric on End(E) (or its trace-free part) induced by ``h``.

    The pairing is ``<phi, psi> = tr(phi psi^dagger) = tr(phi h^{-1} psi^* h)``.
    For ``trace_free`` the result is the Gram matrix on the (E, F, H) basis,
    otherwise the Kronecker form on row-major flattened endomorphisms.
    """
    hinv = fiber.inv(h)
    if not trace_free:
        return fiber.kron(h, np.conj(hinv))
    basis = [b[:, :, None, None] for b in SL2_BASIS]
    left = [fiber.mm(b, hinv) for b in basis]                      # b h^{-1}
    right = [fiber.mm(fiber.adjoint(b), h) for b in basis]         # b^* h
    out = np.empty((3, 3) + h.shape[2:], dtype=complex)
    for a in range(3):
        for c in range(3):
            # G[a, c] = <b_c, b_a>
            out[a, c] = fiber.trace(fiber.mm(left[c], right[a]))
    return out


def induce_end_metric(h: MetricField, trace_free: bool = True,
                      target: FactorSystem | None = None) -> MetricField:
    """Induced metric on ``end0_bundle(E)`` (or ``end_bundle(E)``)."""
    if trace_free and (h.rank != 2 or not h.bundle.det_trivial):
        raise ValueError("trace-free induced metric needs a det-trivial rank-2 bundle")
    if target is None:
        target = bundles.end0_bundle(h.bundle) if trace_free else bundles.end_bundle(h.bundle)
    return MetricField(target, h.domain, induced_values(h.values, trace_free), "induced")


# ---------------------------------------------------------------- curvature

def padded(h: MetricField, width: int = PAD) -> np.ndarray:
    return bundles.pad(h.bundle, h.domain, h.values, width, "metric")


def connection_from_padded(hp: np.ndarray, domain: TorusDomain) -> np.ndarray:
    """``a_z = h^{-1} d_z h`` on the padded region trimmed by two layers."""
    dz_h, _ = wirtinger(hp, domain)
    return fiber.mm(fiber.inv(crop(hp, 2)), dz_h)


def curvature_from_padded(hp: np.ndarray, domain: TorusDomain) -> np.ndarray:
    """``F_{z zbar} = -d_zbar(h^{-1} d_z h)``; trims four layers per side."""
    a_z = connection_from_padded(hp, domain)
    _, dzbar_a = wirtinger(a_z, domain)
    return -dzbar_a


# ---------------------------------------------------------------- frames
#
# Curvature is computed in a holomorphic frame chosen for accuracy.  For a
# holomorphic frame change ``s' = g s`` the metric becomes
# ``h' = g^{-*} h g^{-1}`` and the mean curvature ``K' = g K g^{-1}``, so ``K``
# can be evaluated from ``h'`` and conjugated back.  For a line bundle of
# degree ``d`` the frame ``g = exp(pi d z^2 / (2 Im tau))`` turns the canonical
# metric into the isotropic ``exp(-pi d |z|^2 / Im tau)``; in the original frame
# it is ``exp(-2 pi d Im(z)^2 / Im tau)``, which grows steeply across one seam
# and costs about a factor 10 in finite-difference accuracy.


def _frame(desc: dict, z: np.ndarray, b: float):
    """Holomorphic frame change for a descriptor, or ``None`` for the identity."""
    kind = desc["kind"]
    if kind == "line":
        d = desc["degree"]
        return None if d == 0 else np.exp(np.pi * d * z ** 2 / (2 * b))[None, None]
    if kind == "atiyah":
        return None
    if kind == "perturbed_multiplier":
        return _frame(desc["of"], z, b)
    if kind == "sum":
        parts = [_frame(d, z, b) for d in desc["summands"]]
        if all(p is None for p in parts):
            return None
        ranks = [bundles.from_descriptor(d).rank for d in desc["summands"]]
        return fiber.block_diag(*(fiber.eye(r, z.shape) if p is None else np.broadcast_to(p, (r, r) + z.shape)
                                  for p, r in zip(parts, ranks)))
    sub = _frame(desc["of"], z, b) if "of" in desc else None
    if kind == "dual":
        return None if sub is None else fiber.adjoint(np.conj(fiber.inv(sub)))
    if kind == "tensor":
        f1, f2 = (_frame(d, z, b) for d in desc["factors"])
        if f1 is None and f2 is None:
            return None
        r1, r2 = (bundles.from_descriptor(d).rank for d in desc["factors"])
        f1 = fiber.eye(r1, z.shape) if f1 is None else np.broadcast_to(f1, (r1, r1) + z.shape)
        f2 = fiber.eye(r2, z.shape) if f2 is None else np.broadcast_to(f2, (r2, r2) + z.shape)
        return fiber.kron(f1, f2)
    if kind == "end":
        if sub is None:
            return None
        return fiber.kron(sub, fiber.adjoint(np.conj(fiber.inv(sub))))
    if kind == "end0":
        if sub is None:
            return None
        sub = np.broadcast_to(sub, (2, 2) + z.shape)
        sub_inv = fiber.inv(sub)
        out = np.empty((3, 3) + z.shape, dtype=complex)
        for j, basis in enumerate(SL2_BASIS):
            c = fiber.mm(fiber.mm(sub, basis[:, :, None, None]), sub_inv)
            out[:, j] = [c[0, 1], c[1, 0], c[0, 0]]
        return out
    raise ValueError(f"no computational frame for bundle kind {kind!r}")


class _Frame:
    def __init__(self, g_padded: np.ndarray, width: int):
        r = g_padded.shape[0]
        off = ~np.eye(r, dtype=bool)
        self.diagonal = not np.any(g_padded[off])
        if self.diagonal:
            d = np.array([g_padded[i, i] for i in range(r)])
            # h'_ij = h_ij / (conj(g_i) g_j); K_ij = K'_ij g_j / g_i
            self.metric_weight = 1.0 / (np.conj(d)[:, None] * d[None, :])
            din = crop(d, width)
            self.curv_weight = din[None, :] / din[:, None]
        else:
            self.g_inv = fiber.inv(g_padded)
            self.g_in = crop(g_padded, width)
            self.g_in_inv = crop(self.g_inv, width)

    def to_frame(self, hp: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return hp * self.metric_weight
        return fiber.mm(fiber.adjoint(self.g_inv), fiber.mm(hp, self.g_inv))

    def from_frame(self, k: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return k * self.curv_weight
        return fiber.mm(self.g_in_inv, fiber.mm(k, self.g_in))


def computational_frame(bundle: FactorSystem, domain: TorusDomain) -> _Frame | None:
    key = ("frame", domain.N, domain.tau)
    if key not in bundle._cache:
        g = _frame(bundle.descriptor, domain.points(PAD), domain.vol)
        bundle._cache[key] = None if g is None else _Frame(np.ascontiguousarray(g, dtype=complex), PAD)
    return bundle._cache[key]


# ---------------------------------------------------------------- curvature (cont.)

def chern_connection(h: MetricField) -> np.ndarray:
    """``h^{-1} d_z h`` in the bundle's own holomorphic frame."""
    return crop(connection_from_padded(padded(h), h.domain), PAD - 2)


def curvature(h: MetricField) -> np.ndarray:
    """``F_{z zbar}`` as an endomorphism field (unsymmetrized)."""
    return 0.5 * mean_curvature(h, symmetrize=False)


def _framed(bundle: FactorSystem, domain: TorusDomain, values: np.ndarray):
    hp = bundles.pad(bundle, domain, values, PAD, "metric")
    frame = computational_frame(bundle, domain)
    return (hp, None) if frame is None else (frame.to_frame(hp), frame)


def _curvature_in_frame(hp: np.ndarray, domain: TorusDomain, symmetrize: bool,
                        compiled: bool | None) -> np.ndarray:
    if compiled is None:
        compiled = _kernels.AVAILABLE
    if compiled:
        return _kernels.mean_curvature(hp, domain.N, domain.dz_coeffs, domain.dzbar_coeffs, symmetrize)
    k = 2.0 * curvature_from_padded(hp, domain)
    if symmetrize:
        k = 0.5 * (k + fiber.h_adjoint(k, crop(hp, PAD)))
    return k


def mean_curvature_values(bundle: FactorSystem, domain: TorusDomain, values: np.ndarray,
                          symmetrize: bool = True, compiled: bool | None = None) -> np.ndarray:
    """Mean curvature of a raw metric array; ``compiled=False`` forces numpy."""
    hp, frame = _framed(bundle, domain, values)
    k = _curvature_in_frame(hp, domain, symmetrize, compiled)
    return k if frame is None else frame.from_frame(k)


def flow_terms(bundle: FactorSystem, domain: TorusDomain, values: np.ndarray,
               dissipation: float, compiled: bool | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(K, K + D)``: the mean curvature and the damped flow generator.

    ``D = -(dissipation N / 64) h^{-1} (delta_x^6 + delta_y^6) h`` (evaluated in
    the computational frame) is an ``h``-self-adjoint sixth-difference term.
    The composed first-derivative stencils behind ``K`` are blind to the
    grid's sawtooth modes, and where ``K`` is negative the multiplicative
    step amplifies them at rate ``2|K|``; ``D`` damps them at rate
    ``dissipation * N`` per axis while staying ``O(h^5)`` on smooth metrics.
    """
    hp, frame = _framed(bundle, domain, values)
    coef = dissipation * domain.N / 64.0
    if _kernels.AVAILABLE if compiled is None else compiled:
        k, gen = _kernels.curvature_and_generator(hp, domain.N, domain.dz_coeffs,
                                                  domain.dzbar_coeffs, coef)
    else:
        k = gen = _curvature_in_frame(hp, domain, True, False)
        if dissipation:
            q = hyperdiff(crop(hp, PAD - 3))
            gen = k - coef * fiber.mm(fiber.inv(crop(hp, PAD)), q)
    if frame is None:
        return k, gen
    k_out = frame.from_frame(k)
    return k_out, (frame.from_frame(gen) if dissipation else k_out)


def mean_curvature(h: MetricField, symmetrize: bool = True) -> np.ndarray:
    """``K = i Lambda F(h)``, projected to its ``h``-Hermitian part by default."""
    return mean_curvature_values(h.bundle, h.domain, h.values, symmetrize)


def hermitian_defect(h: MetricField) -> float:
    """Size of the non-``h``-Hermitian part of the raw finite-difference ``K``."""
    k = mean_curvature(h, symmetrize=False)
    return float(np.max(np.abs(k - fiber.h_adjoint(k, h.values))))


# ---------------------------------------------------------------- norms

def pointwise_norm(m: np.ndarray, h: np.ndarray, norm: str = "op") -> np.ndarray:
    """Pointwise size of an endomorphism field measured with ``h``.

    ``'hs'`` is the Hilbert-Schmidt norm ``sqrt(tr(m m^dagger))``; ``'op'`` is the
    operator norm, which for ``h``-Hermitian ``m`` is the largest |eigenvalue|.
    """
    if norm == "hs":
        return np.sqrt(np.maximum(fiber.hs_norm_sq(m, h), 0.0))
    if norm == "op":
        if m.shape[0] == 1:
            return np.abs(m[0, 0])
        mh = 0.5 * (m + fiber.h_adjoint(m, h))
        ev = fiber.h_hermitian_eigvals(mh, h)
        return np.max(np.abs(ev), axis=-1)
    raise ValueError(f"unknown norm {norm!r}")


def deviation(h: MetricField, lam: float) -> np.ndarray:
    k = mean_curvature(h)
    return k - lam * fiber.eye(h.rank, k.shape[2:])


def sup_deviation(h: MetricField, lam: float, norm: str = "op") -> float:
    """``sup_X |K(h) - lam Id|_h``."""
    return float(np.max(pointwise_norm(deviation(h, lam), h.values, norm)))


def l2_deviation(h: MetricField, lam: float, norm: str = "op") -> float:
    p = pointwise_norm(deviation(h, lam), h.values, norm)
    return float(np.sqrt(integrate(p ** 2, h.domain).real))


# ---------------------------------------------------------------- degree

def trace_mean_curvature(h: MetricField) -> np.ndarray:
    """``tr K = -2 d_z d_zbar log det h`` discretized on ``log det h``.

    Differencing the log-determinant (which obeys an additive seam rule)
    makes the discrete integral of ``tr K`` telescope, so the degree of a
    built-in bundle is an integer to rounding error.
    """
    logdet = np.log(np.abs(np.real(fiber.det(h.values))))
    lp = bundles.pad(h.bundle, h.domain, logdet, 2, "logdet")
    return -2.0 * ddbar(lp, h.domain)


def degree(bundle: FactorSystem, h: MetricField) -> SlopeData:
    if h.bundle is not bundle and h.bundle.descriptor != bundle.descriptor:
        raise ValueError("metric belongs to a different bundle")
    deg = integrate(trace_mean_curvature(h), h.domain).real / (2 * np.pi)
    mu = deg / bundle.rank
    return SlopeData(degree=deg, rank=bundle.rank, slope=mu,
                     einstein_constant=einstein_constant(mu, h.domain.vol))


def einstein_constant(slope: float, vol: float, n: int = 1) -> float:
    from math import factorial
    return 2 * np.pi * slope / (factorial(n - 1) * vol)


# ---------------------------------------------------------------- perturbation

def random_trig_field(rng: np.random.Generator, domain: TorusDomain, max_mode: int = 3) -> np.ndarray:
    """Real trigonometric polynomial with modes up to ``max_mode``, sup-normalized to 1."""
    x, y = domain.lattice_coords()
    phi = np.zeros_like(x)
    for n in range(0, max_mode + 1):
        for m in range(-max_mode, max_mode + 1):
            if n == 0 and m <= 0:
                continue
            a, b = rng.standard_normal(2) / (m * m + n * n)
            arg = 2 * np.pi * (m * x + n * y)
            phi += a * np.cos(arg) + b * np.sin(arg)
    return phi / np.max(np.abs(phi))


def perturb(h: MetricField, seed: int, amplitude: float, det_constrained: bool = False) -> MetricField:
    """Seeded smooth perturbation preserving seam compatibility.

    Each diagonal block of the bundle gets its own conformal factor
    ``exp(amplitude * phi_b)``.  With ``det_constrained`` the exponents are
    balanced so that ``det h`` is unchanged; a bundle with a single block of
    rank > 1 is instead deformed along its trace-free mean curvature.
    """
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    if amplitude == 0:
        return h.with_values(h.values.copy(), "perturbed")
    rng = np.random.default_rng(seed)
    blocks = h.bundle.blocks
    phis = [amplitude * random_trig_field(rng, h.domain) for _ in blocks]
    ranks = [b1 - b0 for b0, b1 in blocks]

    if det_constrained and len(blocks) == 1:
        if ranks[0] == 1:
            return h.with_values(h.values.copy(), "perturbed")
        k = mean_curvature(h)
        k0 = k - fiber.trace(k) / h.rank * fiber.eye(h.rank, k.shape[2:])
        scale = np.max(pointwise_norm(k0, h.values))
        if scale < 1e-12:
            raise ValueError("flat metric: no trace-free deformation direction available")
        vals = fiber.mm(h.values, fiber.expm(phis[0] * k0 / scale))
        return h.with_values(fiber.hermitian_part(vals), "perturbed")

    if det_constrained:
        mean = sum(r * p for r, p in zip(ranks, phis)) / sum(ranks)
        phis = [p - mean for p in phis]
    scale = np.ones((h.rank,) + phis[0].shape)
    for (b0, b1), p in zip(blocks, phis):
        scale[b0:b1] = np.exp(0.5 * p)
    vals = h.values * scale[:, None] * scale[None, :]
    return h.with_values(vals, "perturbed")


# ---------------------------------------------------------------- validity

_ONE_SIDED = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_CENTERED = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def seam_residual(h: MetricField) -> tuple[float, float]:
    """Compare twisted-centered and one-sided derivatives at the seam.

    Returns ``(seam, reference)``: the largest discrepancy on the boundary
    rows/columns (centered stencil reaching into ghost cells) and the same
    discrepancy a few cells inside, where both stencils see true data and
    differ only by discretization error.
    """
    hp = padded(h, 2)
    n = h.domain.N
    seam, ref = 0.0, 0.0
    for axis in (-1, -2):
        arr = np.moveaxis(hp, axis, 0)  # stencil axis first, padded by 2

        def centered(i):
            return sum(c * arr[i + 2 + s - 2] for s, c in enumerate(_CENTERED))

        def forward(i):
            return sum(c * arr[i + 2 + s] for s, c in enumerate(_ONE_SIDED))

        def backward(i):
            return -sum(c * arr[i + 2 - s] for s, c in enumerate(_ONE_SIDED))

        scale = np.max(np.abs(arr)) + 1e-300
        seam = max(seam,
                   np.max(np.abs(centered(0) - forward(0))) / scale,
                   np.max(np.abs(centered(n - 1) - backward(n - 1))) / scale)
        ref = max(ref,
                  np.max(np.abs(centered(4) - forward(4))) / scale,
                  np.max(np.abs(centered(n - 5) - backward(n - 5))) / scale)
    return float(seam), float(ref)


def check_metric(h: MetricField) -> dict[str, float | bool]:
    """Hermiticity, positivity and seam compatibility of a metric field."""
    herm = float(np.max(np.abs(h.values - fiber.adjoint(h.values))))
    ev = np.linalg.eigvalsh(fiber.to_stack(fiber.hermitian_part(h.values)))
    seam, ref = seam_residual(h)
    return {
        "hermiticity": herm,
        "min_eigenvalue": float(np.min(ev)),
        "seam": seam,
        "seam_reference": ref,
        "ok": bool(herm < 1e-12 * max(1.0, np.max(np.abs(h.values)))
                   and np.min(ev) > 0 and seam <= 10 * ref + 1e-10),
    }


# ---------------------------------------------------------------- snapshots

LAYOUT = "row-major, index order (k_y, j_x, row, col), interleaved re/im 64-bit IEEE"


def save_snapshot(h: MetricField, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.json`` (header) and ``<path>.bin`` (payload)."""
    path = Path(path)
    header_path, payload_path = path.with_suffix(".json"), path.with_suffix(".bin")
    payload = np.ascontiguousarray(np.moveaxis(np.moveaxis(h.values, 0, -1), 0, -1))
    payload.astype("<c16").tofile(payload_path)
    header = {
        "bundle": h.bundle.descriptor,
        "N": h.domain.N,
        "tau": [h.domain.tau.real, h.domain.tau.imag],
        "rank": h.rank,
        "byte_order": "little-endian",
        "layout": LAYOUT,
        "provenance": h.provenance,
        "payload": payload_path.name,
    }
    header_path.write_text(json.dumps(header, indent=2))
    return header_path, payload_path


def load_snapshot(header_path: str | Path) -> MetricField:
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    if header.get("byte_order") != "little-endian" or header.get("layout") != LAYOUT:
        raise ValueError("unsupported snapshot layout")
    tau = complex(*header["tau"])
    n, r = int(header["N"]), int(header["rank"])
    raw = np.fromfile(header_path.parent / header["payload"], dtype="<c16")
    if raw.size != n * n * r * r:
        raise ValueError(f"payload has {raw.size} entries, expected {n * n * r * r}")
    vals = np.moveaxis(np.moveaxis(raw.reshape(n, n, r, r), -1, 0), -1, 0).astype(complex)
    from .torus import make_torus
    bundle = bundles.from_descriptor(header["bundle"], tau)
    return MetricField(bundle, make_torus(tau, n), np.ascontiguousarray(vals), "snapshot")
