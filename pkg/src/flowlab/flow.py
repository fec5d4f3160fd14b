"""Donaldson heat flow ``h^{-1} dh/dt = -(K(h) - lam Id)`` on a torus grid.

Every update has the form ``h <- h exp(-dt X)`` with ``X`` an ``h``-Hermitian
endomorphism, so ``h`` stays Hermitian positive definite without clipping.
``X`` is exactly ``h``-Hermitian only up to rounding; the result is
re-Hermitized after each step.
"""

from __future__ import annotations

import csv
import logging
import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels, fiber
from .metrics import MetricField, flow_terms, pointwise_norm
from .torus import integrate

log = logging.getLogger(__name__)

SCHEMES = ("euler_mult", "rk2_mult")
MAX_CFL = 0.5
CSV_COLUMNS = ("step", "time", "sup_dev", "l2_dev", "det_drift", "trace_residual",
               "min_eig", "cond", "energy")


@dataclass(frozen=True)
class FlowConfig:
    cfl: float = 0.2
    scheme: str = "euler_mult"
    max_steps: int = 10_000
    epsilon_target: float = 1e-3
    record_every: int = 50
    det_constrained: bool = False
    dissipation: float = 1.0

    def __post_init__(self):
        if not 0 < self.cfl <= MAX_CFL:
            raise ValueError(f"cfl must lie in (0, {MAX_CFL}], got {self.cfl}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.epsilon_target > 0:
            raise ValueError("epsilon_target must be positive")
        if not self.dissipation >= 0:
            raise ValueError("dissipation must be >= 0")
        if self.max_steps < 0 or self.record_every < 1:
            raise ValueError("max_steps must be >= 0 and record_every >= 1")


@dataclass
class FlowDiagnostics:
    """Time series sampled every ``record_every`` steps (plus first and last)."""

    lam: float
    config: FlowConfig
    records: list[dict] = field(default_factory=list)
    terminated_by: str = "running"
    wall_time: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_sup_dev(self) -> float:
        return self.records[-1]["sup_dev"] if self.records else math.nan

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            for r in self.records:
                w.writerow({k: r[k] for k in CSV_COLUMNS})


@dataclass(frozen=True)
class FlowState:
    """What a callback sees at a recorded step."""

    step: int
    time: float
    metric: MetricField
    curvature: np.ndarray


class FlowBreakdown(RuntimeError):
    """Raised when the metric stops being finite and positive."""

    def __init__(self, message: str, diagnostics: FlowDiagnostics, last_good: MetricField):
        super().__init__(message)
        self.diagnostics = diagnostics
        self.last_good = last_good


# ---------------------------------------------------------------- stepping

def max_stable_dt(domain, cfl: float = MAX_CFL) -> float:
    return cfl * domain.min_spacing ** 2


def _exponent(h: np.ndarray, k: np.ndarray, lam: float, det_constrained: bool) -> np.ndarray:
    r = h.shape[0]
    if det_constrained:
        # drop the pointwise trace so det(h) cannot move
        return k - (fiber.trace(k) / r) * fiber.eye(r, k.shape[2:])
    return k - lam * fiber.eye(r, k.shape[2:])


def _h_hermitian(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    return 0.5 * (x + fiber.h_adjoint(x, h))


def _update(h: np.ndarray, x: np.ndarray, dt: float) -> np.ndarray:
    return fiber.hermitian_part(fiber.mm(h, fiber.expm(-dt * x)))


def _compiled_rank2(h: np.ndarray) -> bool:
    return _kernels.AVAILABLE and h.shape[0] == 2


def _advance(h: MetricField, gen: np.ndarray, lam: float, dt: float, scheme: str,
             det_constrained: bool, dissipation: float) -> np.ndarray:
    """One step driven by the generator ``gen`` (curvature plus damping)."""
    if scheme == "euler_mult" and _kernels.AVAILABLE:
        if h.rank == 2:
            return _kernels.euler_update_rank2(h.values, gen, float(lam), float(dt),
                                               det_constrained, gen)[0]
        return _kernels.euler_update_generic(h.values, gen, float(lam), float(dt), det_constrained)
    x = _exponent(h.values, gen, lam, det_constrained)
    if scheme == "euler_mult":
        return _update(h.values, x, dt)
    half = _update(h.values, x, 0.5 * dt)
    _, gen_mid = flow_terms(h.bundle, h.domain, half, dissipation)
    x_mid = _h_hermitian(_exponent(h.values, gen_mid, lam, det_constrained), h.values)
    return _update(h.values, x_mid, dt)


def step(h: MetricField, lam: float, dt: float, scheme: str = "euler_mult",
         det_constrained: bool = False, dissipation: float = 1.0) -> MetricField:
    """One multiplicative step ``h' = h exp(-dt (K(h) + D(h) - lam Id))``.

    ``D`` is the sawtooth damping of :func:`flowlab.metrics.flow_terms`.
    ``rk2_mult`` evaluates the generator at the half step and uses its
    ``h``-Hermitian part for the full step (explicit midpoint rule).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    limit = max_stable_dt(h.domain)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} outside the stability bound (0, {limit:g}]")
    _, gen = flow_terms(h.bundle, h.domain, h.values, dissipation)
    return h.with_values(_advance(h, gen, lam, dt, scheme, det_constrained, dissipation),
                         "flow-evolved")


# ---------------------------------------------------------------- diagnostics

def _relative_eigs(h: np.ndarray, h0: np.ndarray) -> np.ndarray:
    return fiber.generalized_eigvalsh(h, h0)


def sample(h: MetricField, h0: MetricField, k: np.ndarray, lam: float, step_no: int,
           t: float) -> dict:
    dev = k - lam * fiber.eye(h.rank, k.shape[2:])
    op = pointwise_norm(dev, h.values, "op")
    hs2 = fiber.hs_norm_sq(dev, h.values)
    rel = _relative_eigs(h.values, h0.values)
    det_rel = np.real(fiber.det(h.values) / fiber.det(h0.values))
    lo, hi = float(np.min(rel)), float(np.max(rel))
    return {
        "step": step_no,
        "time": t,
        "sup_dev": float(np.max(op)),
        "l2_dev": float(math.sqrt(max(integrate(op ** 2, h.domain).real, 0.0))),
        "det_drift": float(np.max(np.abs(det_rel - 1.0))),
        "trace_residual": float(np.max(np.abs(fiber.trace(dev)))),
        "min_eig": lo,
        "cond": hi / lo if lo > 0 else math.inf,
        "energy": float(integrate(hs2, h.domain).real),
    }


def _fast_sup(dev: np.ndarray, h: np.ndarray) -> float:
    """Sup of the operator norm; closed form for ranks 1 and 2."""
    r = dev.shape[0]
    if r == 1:
        return float(np.max(np.abs(dev[0, 0])))
    if r == 2:
        m = 0.5 * (dev[0, 0] + dev[1, 1]).real
        s2 = (0.25 * (dev[0, 0] - dev[1, 1]) ** 2 + dev[0, 1] * dev[1, 0]).real
        return float(np.max(np.abs(m) + np.sqrt(np.maximum(s2, 0.0))))
    return float(np.max(pointwise_norm(dev, h, "op")))


# ---------------------------------------------------------------- driver

def run(h0: MetricField, lam: float, config: FlowConfig | None = None,
        callback: Callable[[FlowState], None] | None = None,
        dt: float | None = None) -> tuple[MetricField, FlowDiagnostics]:
    """Integrate until ``sup|K - lam| < epsilon_target`` or ``max_steps``.

    Diagnostics are recorded at step 0, every ``record_every`` steps, and at
    the final step.  For rank >= 3 the stopping test is evaluated only on
    recorded steps.  ``callback`` (if given) sees the state at the same steps.
    Raises :class:`FlowBreakdown` (carrying the diagnostics so far) if the
    metric becomes non-finite or loses positivity.
    """
    config = config or FlowConfig()
    dt = max_stable_dt(h0.domain, config.cfl) if dt is None else dt
    if not 0 < dt <= max_stable_dt(h0.domain) * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} outside the stability bound")
    diag = FlowDiagnostics(lam=lam, config=config)
    start = _time.perf_counter()
    h = h0
    n = 0

    def record(k):
        try:
            rec = sample(h, h0, k, lam, n, n * dt)
        except np.linalg.LinAlgError:
            rec = {"sup_dev": math.nan, "min_eig": -1.0}
        if not (math.isfinite(rec["sup_dev"]) and rec["min_eig"] > 0):
            diag.terminated_by = "breakdown"
            diag.wall_time = _time.perf_counter() - start
            raise FlowBreakdown(f"metric lost positivity at step {n}", diag, last_good)
        diag.records.append(rec)
        if callback is not None:
            callback(FlowState(n, n * dt, h, k))

    last_good = h0
    while True:
        try:
            k, gen = flow_terms(h.bundle, h.domain, h.values, config.dissipation)
        except (np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError) as exc:
            diag.terminated_by = "breakdown"
            raise FlowBreakdown(f"curvature evaluation failed at step {n}: {exc}", diag, last_good)
        fused = config.scheme == "euler_mult" and _compiled_rank2(h.values)
        if fused:
            h_next, sup = _kernels.euler_update_rank2(h.values, gen, float(lam), float(dt),
                                                      config.det_constrained, k)
        elif h.rank <= 2 or n % config.record_every == 0 or n >= config.max_steps:
            sup = _fast_sup(k - lam * fiber.eye(h.rank, k.shape[2:]), h.values)
        else:
            # rank >= 3 needs eigenvalues for the operator norm; the stopping
            # test then runs only on recorded steps, finiteness on every step
            sup = math.inf if not np.all(np.isfinite(k)) else None
        if sup is None:
            pass
        elif not math.isfinite(sup):
            diag.terminated_by = "breakdown"
            diag.wall_time = _time.perf_counter() - start
            raise FlowBreakdown(f"non-finite curvature at step {n}", diag, last_good)
        done = sup is not None and sup < config.epsilon_target
        out_of_steps = n >= config.max_steps
        if n % config.record_every == 0 or done or out_of_steps:
            record(k)
        if done or out_of_steps:
            diag.terminated_by = "epsilon" if done else "max_steps"
            break
        last_good = h
        if not fused:
            h_next = _advance(h, gen, lam, dt, config.scheme, config.det_constrained,
                              config.dissipation)
        h = h.with_values(h_next, "flow-evolved")
        n += 1
    diag.wall_time = _time.perf_counter() - start
    log.info("flow stopped by %s after %d steps (t=%.4g, sup_dev=%.3e)",
             diag.terminated_by, n, n * dt, diag.final_sup_dev)
    return h, diag


def flow_to_time(h0: MetricField, lam: float, t_end: float, dt: float,
                 scheme: str = "euler_mult", det_constrained: bool = False,
                 dissipation: float = 1.0) -> MetricField:
    """Fixed-step integration to ``t_end`` (``dt`` is shrunk to divide it evenly)."""
    steps = max(1, math.ceil(t_end / dt - 1e-9))
    dt = t_end / steps
    h = h0
    for _ in range(steps):
        h = step(h, lam, dt, scheme, det_constrained, dissipation)
    return h


# ---------------------------------------------------------------- classification

def classify_limit(diag: FlowDiagnostics, predicted_inf: float,
                   epsilon: float | None = None) -> str:
    """``'approx_HE'``, ``'obstructed'`` or ``'undecided'`` from a sampled run."""
    if len(diag) < 50:
        return "undecided"
    eps = diag.config.epsilon_target if epsilon is None else epsilon
    sup = diag.column("sup_dev")
    if sup[-1] < eps and sup[-1] <= sup[0]:
        return "approx_HE"
    if predicted_inf > 0:
        tail = sup[len(sup) - len(sup) // 3:]
        if np.all(np.abs(tail - predicted_inf) <= 0.1 * predicted_inf):
            return "obstructed"
    return "undecided"
