import numpy as np
import pytest

from flowlab import (FlowBreakdown, FlowConfig, atiyah_F2, canonical_metric, classify_limit,
                     direct_sum, flow_to_time, line_bundle, make_torus, max_stable_dt, perturb,
                     run, step)
from flowlab import fiber
from flowlab.flow import CSV_COLUMNS, FlowDiagnostics
from flowlab.metrics import MetricField


@pytest.mark.parametrize("kwargs", [{"cfl": 0.0}, {"cfl": 0.6}, {"epsilon_target": 0.0},
                                    {"scheme": "leapfrog"}, {"record_every": 0},
                                    {"dissipation": -1.0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        FlowConfig(**kwargs)


def test_step_rejects_unstable_dt():
    dom = make_torus(1j, 16)
    h = canonical_metric(line_bundle(1), dom)
    with pytest.raises(ValueError):
        step(h, 2 * np.pi, 2 * max_stable_dt(dom))


def test_trivial_bundle_is_exact_fixed_point():
    dom = make_torus(1j, 16)
    h = canonical_metric(line_bundle(0), dom)
    assert np.array_equal(step(h, 0.0, max_stable_dt(dom)).values, h.values)


def test_he_metric_is_nearly_fixed():
    dom = make_torus(1j, 32)
    h = canonical_metric(line_bundle(2), dom)
    h2 = step(h, 4 * np.pi, max_stable_dt(dom))
    assert np.max(np.abs(h2.values / h.values - 1)) < 1e-6


def test_single_mode_decay():
    dom = make_torus(1j, 64)
    x, _ = dom.lattice_coords()
    a = 0.01
    h_he = canonical_metric(line_bundle(1), dom)
    h = h_he.with_values(h_he.values * np.exp(a * np.cos(2 * np.pi * x)))
    t = 0.05
    out = flow_to_time(h, 2 * np.pi, t, max_stable_dt(dom, 0.5))
    phi = np.log((out.values / h_he.values).real)[0, 0]
    amp = 2 * np.mean(phi * np.cos(2 * np.pi * x))
    # explicit Euler adds a relative time error of about (2 pi^2)^2 dt t / 2 = 1.2e-3
    assert amp / a == pytest.approx(np.exp(-2 * np.pi ** 2 * t), rel=3e-3)


def test_det_invariant_for_trace_free_curvature():
    dom = make_torus(1j, 32)
    h = canonical_metric(atiyah_F2(), dom)
    h2 = step(h, 0.0, max_stable_dt(dom, 0.5))
    assert np.max(np.abs(fiber.det(h2.values) / fiber.det(h.values) - 1)) < 1e-10


def test_schemes_agree_to_first_order():
    dom = make_torus(1j, 32)
    h0 = perturb(canonical_metric(line_bundle(1), dom), 3, 0.3)
    t = 0.02
    ref = flow_to_time(h0, 2 * np.pi, t, max_stable_dt(dom, 0.05), "rk2_mult")
    errs = []
    for cfl in (0.4, 0.2):
        e = flow_to_time(h0, 2 * np.pi, t, max_stable_dt(dom, cfl), "euler_mult")
        errs.append(np.max(np.abs(e.values - ref.values)))
    assert errs[1] < errs[0] / 1.6


def test_run_records_and_terminates():
    dom = make_torus(1j, 32)
    h0 = perturb(canonical_metric(line_bundle(1), dom), 2, 0.2)
    cfg = FlowConfig(cfl=0.5, max_steps=300, epsilon_target=1e-12, record_every=100)
    h, diag = run(h0, 2 * np.pi, cfg)
    assert diag.terminated_by == "max_steps"
    steps = diag.column("step")
    assert list(steps) == [0, 100, 200, 300]
    assert np.all(np.diff(diag.column("time")) > 0)
    for name in ("sup_dev", "l2_dev", "det_drift", "min_eig", "energy"):
        assert np.all(diag.column(name) >= 0)
    assert np.all(np.diff(diag.column("sup_dev")) < 0)


def test_run_callback_and_csv(tmp_path):
    dom = make_torus(1j, 16)
    h0 = perturb(canonical_metric(line_bundle(-1), dom), 2, 0.2)
    seen = []
    _, diag = run(h0, -2 * np.pi, FlowConfig(max_steps=40, record_every=10),
                  callback=lambda s: seen.append(s.step))
    assert seen == [0, 10, 20, 30, 40]
    diag.to_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS) and len(lines) == 6


def test_run_is_deterministic():
    dom = make_torus(1j, 16)
    h0 = perturb(canonical_metric(direct_sum(line_bundle(1), line_bundle(-1)), dom), 2, 0.2)
    cfg = FlowConfig(max_steps=50, record_every=10)
    _, d1 = run(h0, 0.0, cfg)
    _, d2 = run(h0, 0.0, cfg)
    assert [r["sup_dev"] for r in d1.records] == [r["sup_dev"] for r in d2.records]


def test_breakdown_is_reported():
    dom = make_torus(1j, 16)
    b = line_bundle(1)
    bad = MetricField(b, dom, canonical_metric(b, dom).values.copy())
    bad.values[0, 0, 3, 3] = -1.0
    with pytest.raises(FlowBreakdown) as info:
        run(bad, 2 * np.pi, FlowConfig(max_steps=10, record_every=1))
    assert info.value.diagnostics.terminated_by == "breakdown"


def test_classify_undecided_on_short_series():
    diag = FlowDiagnostics(lam=0.0, config=FlowConfig())
    diag.records = [{"sup_dev": 1e-6} for _ in range(10)]
    assert classify_limit(diag, 0.0) == "undecided"


def test_classify_synthetic_series():
    cfg = FlowConfig(epsilon_target=0.05)
    plateau = FlowDiagnostics(lam=0.0, config=cfg,
                              records=[{"sup_dev": 2 * np.pi + 1 / (1 + i)} for i in range(60)])
    assert classify_limit(plateau, 2 * np.pi) == "obstructed"
    decay = FlowDiagnostics(lam=0.0, config=cfg,
                            records=[{"sup_dev": 0.5 / (1 + i)} for i in range(60)])
    assert classify_limit(decay, 0.0) == "approx_HE"
    stuck = FlowDiagnostics(lam=0.0, config=cfg, records=[{"sup_dev": 1.0}] * 60)
    assert classify_limit(stuck, 0.0) == "undecided"
