"""The SL(2, C) layer: Lie algebra data, the adjoint bundle and its metrics.

A reduction of an SL(2, C) bundle to SU(2) is a metric ``h`` with
``det h = 1`` on the rank-2 vector bundle ``E``.  The adjoint bundle is
``end0(E)`` with the induced metric from :func:`flowlab.metrics.induce_end_metric`.
Elements of ``sl(2)`` are trace-free 2x2 matrices with coordinates
``(e, f, h)`` on the basis ``E, F, H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fiber
from .bundles import SL2_BASIS, FactorSystem
from .flow import FlowConfig, FlowState, flow_to_time, max_stable_dt, run
from .metrics import (MetricField, canonical_metric, degree, induce_end_metric,
                      mean_curvature, pointwise_norm)
from .torus import make_torus


def coords(x: np.ndarray) -> np.ndarray:
    """Coordinates of trace-free matrices ``[[h, e], [f, -h]]`` (leading axes)."""
    return np.array([x[0, 1], x[1, 0], x[0, 0]])


def from_coords(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    return np.tensordot(SL2_BASIS, c, axes=([0], [0])).transpose((0, 1) + tuple(range(2, c.ndim + 1)))


def _bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return fiber.mm(a, b) - fiber.mm(b, a)


# ---------------------------------------------------------------- Lie data

@dataclass(frozen=True)
class LieStructure:
    basis: np.ndarray                # (3, 2, 2)
    structure_constants: np.ndarray  # [b_a, b_b] = sum_c C[a, b, c] b_c
    inner_metric: np.ndarray         # Gram matrix of the invariant metric
    killing: np.ndarray              # tr(ad b_a ad b_b)

    def adjoint_rep(self, g: np.ndarray) -> np.ndarray:
        """Matrix of ``x -> g x g^{-1}`` on the basis."""
        g = np.asarray(g, dtype=complex)
        gi = np.linalg.inv(g)
        cols = [g @ b @ gi for b in self.basis]
        return np.array([[c[0, 1], c[1, 0], c[0, 0]] for c in cols]).T

    def jacobi_residual(self) -> float:
        b = self.basis
        worst = 0.0
        for x in b:
            for y in b:
                for z in b:
                    j = (x @ (y @ z - z @ y) - (y @ z - z @ y) @ x
                         + y @ (z @ x - x @ z) - (z @ x - x @ z) @ y
                         + z @ (x @ y - y @ x) - (x @ y - y @ x) @ z)
                    worst = max(worst, float(np.max(np.abs(j))))
        return worst

    def homomorphism_residual(self, samples: int = 20, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            g1, g2 = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(2))
            d = self.adjoint_rep(g1 @ g2) - self.adjoint_rep(g1) @ self.adjoint_rep(g2)
            worst = max(worst, float(np.max(np.abs(d))))
        return worst


def sl2(metric_scale: float = 1.0) -> LieStructure:
    """``sl(2, C)`` with invariant metric ``metric_scale * tr(xi eta^*)``."""
    basis = SL2_BASIS.copy()
    sc = np.empty((3, 3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            sc[a, b] = coords(basis[a] @ basis[b] - basis[b] @ basis[a])
    inner = metric_scale * np.array([[np.trace(x @ y.conj().T) for y in basis] for x in basis])
    ads = [ad_map(b) for b in basis]
    killing = np.array([[np.trace(x @ y) for y in ads] for x in ads])
    return LieStructure(basis, sc, inner, killing)


@dataclass(frozen=True)
class GroupDescriptor:
    name: str = "SL2"
    center_dim: int = 0

    def __post_init__(self):
        expected = {"SL2": 0, "torus_factor": 1}
        if self.name not in expected:
            raise ValueError(f"unknown group {self.name!r}; expected one of {sorted(expected)}")
        if self.center_dim != expected[self.name]:
            raise ValueError(f"{self.name} has center dimension {expected[self.name]}")


def group(name: str) -> GroupDescriptor:
    return GroupDescriptor(name, 1 if name == "torus_factor" else 0)


# ---------------------------------------------------------------- adjoint map

def ad_map(xi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Matrix of ``[xi, .]`` on (E, F, H); works on single matrices or fields."""
    xi = np.asarray(xi, dtype=complex)
    if xi.shape[:2] != (2, 2):
        raise ValueError("ad_map expects 2x2 matrices (optionally a field of them)")
    scale = max(1.0, float(np.max(np.abs(xi)))) if xi.size else 1.0
    if np.max(np.abs(xi[0, 0] + xi[1, 1])) > tol * scale:
        raise ValueError("ad_map needs a trace-free argument")
    return _ad_field(xi)


def _ad_field(xi: np.ndarray) -> np.ndarray:
    """``ad`` without the trace check (scalars commute, so they drop out)."""
    extra = xi.shape[2:]
    out = np.empty((3, 3) + extra, dtype=complex)
    for j, b in enumerate(SL2_BASIS):
        bj = b.reshape((2, 2) + (1,) * len(extra))
        out[:, j] = coords(_bracket(xi, bj))
    return out


def c0_constant(lie: LieStructure, samples: int = 100, seed: int = 0,
                rtol: float = 1e-10) -> float:
    """The constant with ``|ad xi|_HS = c0 |xi|`` for the invariant metric.

    The Hilbert-Schmidt norm uses an orthonormal basis of the metric, i.e.
    ``|T|^2 = tr(T^H M T M^{-1})`` for the Gram matrix ``M``.  The ratio is
    evaluated on the basis and on seeded random elements; a spread above
    ``rtol`` means the metric is not a multiple of an invariant one.
    """
    m = np.asarray(lie.inner_metric, dtype=complex)
    if np.max(np.abs(m - m.conj().T)) > 1e-12 * np.max(np.abs(m)) or np.min(np.linalg.eigvalsh(m)) <= 0:
        raise ValueError("inner metric must be Hermitian positive definite")
    m_inv = np.linalg.inv(m)
    rng = np.random.default_rng(seed)
    xs = list(np.eye(3, dtype=complex)) + list(rng.standard_normal((samples, 3))
                                              + 1j * rng.standard_normal((samples, 3)))
    ratios = []
    for c in xs:
        t = ad_map(from_coords(c))
        hs = np.trace(t.conj().T @ m @ t @ m_inv).real
        ratios.append(np.sqrt(hs / (c.conj() @ m @ c).real))
    ratios = np.array(ratios)
    spread = (ratios.max() - ratios.min()) / ratios.mean()
    if spread > rtol:
        raise ValueError(f"|ad xi| / |xi| is not constant (relative spread {spread:.2e})")
    return float(ratios.mean())


C0_SL2 = 2.0


# ---------------------------------------------------------------- bundle checks

def norm_comparison_check(h: MetricField, c0: float | None = None) -> float:
    """Max relative gap between ``|K_ad|`` and ``c0 |K_E|`` (Hilbert-Schmidt).

    The left side is the mean curvature of the induced metric on the adjoint
    bundle, the right side the mean curvature of ``h`` on ``E``; they are
    computed independently.  The error is relative to ``sup c0 |K_E|``.
    """
    _require_det_one(h)
    c0 = c0_constant(sl2()) if c0 is None else c0
    h_ad = induce_end_metric(h)
    left = pointwise_norm(mean_curvature(h_ad), h_ad.values, "hs")
    right = c0 * pointwise_norm(mean_curvature(h), h.values, "hs")
    scale = float(np.max(right))
    gap = float(np.max(np.abs(left - right)))
    return gap / scale if scale > 1e-12 else gap


def curvature_relation_residual(h: MetricField, h_ad: MetricField | None = None) -> float:
    """``sup |K(induced metric) - ad(K(h))|`` measured with the induced metric."""
    _require_det_one(h)
    h_ad = induce_end_metric(h) if h_ad is None else h_ad
    diff = mean_curvature(h_ad) - _ad_field(mean_curvature(h))
    return float(np.max(pointwise_norm(diff, h_ad.values, "hs")))


def ad_image_residual(h_ad: MetricField, h: MetricField | None = None) -> float:
    """Distance of ``K(h_ad)`` from the image of ``ad``, sup over the grid.

    Each cell solves the least-squares problem in the Hilbert-Schmidt norm of
    ``h_ad``.  ``h`` is accepted for symmetry with the other checks but not
    needed: the image of ``ad`` does not depend on it.
    """
    k = mean_curvature(h_ad)
    g = h_ad.values
    gens = [np.broadcast_to(_ad_field(b.reshape(2, 2, 1, 1)), k.shape) for b in SL2_BASIS]

    def inner(a, b):
        # <a, b> = tr(a g^{-1} b^* g)
        return fiber.trace(fiber.mm(a, fiber.h_adjoint(b, g)))

    p = np.empty(k.shape[2:] + (3, 3), dtype=complex)
    v = np.empty(k.shape[2:] + (3,), dtype=complex)
    for i in range(3):
        v[..., i] = inner(k, gens[i])
        for j in range(3):
            p[..., i, j] = inner(gens[j], gens[i])
    c = np.linalg.solve(p, v[..., None])[..., 0]
    resid = k - sum(c[..., j] * gens[j] for j in range(3))
    return float(np.max(pointwise_norm(resid, g, "hs")))


def reduction_preservation_test(h0: MetricField, t_end: float, config: FlowConfig | None = None,
                                dt: float | None = None, image_samples: int = 0
                                ) -> float | tuple[float, list[float]]:
    """Commuting square: flow-then-induce versus induce-then-flow.

    Runs the flow with ``lam = 0`` on ``E`` from ``h0`` and on the adjoint
    bundle from the induced metric, both to ``t_end`` with the same fixed
    step, and returns the sup-norm distance between the induced final metric
    and the adjoint-side final metric.  With ``image_samples > 0`` the
    ad-side run also reports :func:`ad_image_residual` at that many evenly
    spaced times.
    """
    _require_det_one(h0)
    config = config or FlowConfig()
    if dt is None:
        dt = max_stable_dt(h0.domain, config.cfl)
    h_e = flow_to_time(h0, 0.0, t_end, dt, config.scheme, dissipation=config.dissipation)
    g0 = induce_end_metric(h0)
    residuals: list[float] = []
    if image_samples:
        steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
        every = max(1, steps // image_samples)
        cfg = FlowConfig(cfl=config.cfl, scheme=config.scheme, max_steps=steps,
                         epsilon_target=1e-300, record_every=every,
                         dissipation=config.dissipation)

        def probe(state: FlowState):
            if state.step > 0:
                residuals.append(ad_image_residual(state.metric))

        g_t, _ = run(g0, 0.0, cfg, callback=probe, dt=t_end / steps)
    else:
        g_t = flow_to_time(g0, 0.0, t_end, dt, config.scheme, dissipation=config.dissipation)
    dev = float(np.max(np.abs(induce_end_metric(h_e, target=g0.bundle).values - g_t.values)))
    return (dev, residuals) if image_samples else dev


def center_constant(g: GroupDescriptor, bundle: FactorSystem, n: int = 32) -> float:
    """The central element ``lam``: zero for SL(2), ``2 pi mu / vol`` for C^*."""
    if g.name == "SL2":
        return 0.0
    if bundle.rank != 1:
        raise ValueError("torus_factor expects a line bundle")
    dom = make_torus(bundle.tau, n)
    return degree(bundle, canonical_metric(bundle, dom)).einstein_constant


def _require_det_one(h: MetricField, tol: float = 1e-8) -> None:
    if h.rank != 2:
        raise ValueError("expected a rank-2 metric")
    d = np.abs(fiber.det(h.values) - 1.0)
    if np.max(d) > tol:
        raise ValueError(f"det h deviates from 1 by {np.max(d):.2e}")
