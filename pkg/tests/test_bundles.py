import numpy as np
import pytest

from flowlab import (atiyah_F2, bundle_class, canonical_metric, degree, direct_sum, dual,
                     end0_bundle, end_bundle, from_descriptor, line_bundle, make_torus,
                     perturb_multiplier, tensor, validate_cocycle)
from flowlab.bundles import pad, sample_points, transport
from flowlab.torus import periodic_pad


def test_trivial_line_bundle():
    b = line_bundle(0)
    z = sample_points(b.tau)
    assert np.allclose(b.multiplier("tau", z), 1.0)
    assert np.allclose(b.multiplier("1", z), 1.0)


@pytest.mark.parametrize("d", [-2, -1, 1, 2, 3])
def test_line_cocycle(d):
    assert validate_cocycle(line_bundle(d)) < 1e-12


def test_line_degree_three():
    b = line_bundle(3)
    assert degree(b, canonical_metric(b, make_torus(1j, 64))).degree == pytest.approx(3, abs=1e-6)


def test_atiyah():
    b = atiyah_F2()
    assert validate_cocycle(b) < 1e-14
    assert b.det_trivial
    z = sample_points(b.tau)
    assert np.allclose(np.linalg.det(np.moveaxis(b.multiplier("tau", z), -1, 0)), 1.0)
    assert degree(b, canonical_metric(b, make_torus(1j, 32))).degree == pytest.approx(0, abs=1e-6)


def test_perturbed_multiplier_breaks_cocycle():
    assert validate_cocycle(perturb_multiplier(line_bundle(1), 0.01)) > 1e-3
    assert validate_cocycle(perturb_multiplier(line_bundle(1), 0.0)) < 1e-12


def test_dual_line_bundle():
    assert bundle_class(dual(line_bundle(2)).descriptor).degrees == (-2,)
    b = dual(line_bundle(2))
    assert validate_cocycle(b) < 1e-12
    h = canonical_metric(b, make_torus(1j, 32))
    assert degree(b, h).degree == pytest.approx(-2, abs=1e-6)


def test_end0_of_split_sum():
    b = end0_bundle(direct_sum(line_bundle(1), line_bundle(-1)))
    assert b.rank == 3
    assert validate_cocycle(b) < 1e-10
    assert sorted(bundle_class(b.descriptor).summand_degrees()) == [-2, 0, 2]
    assert degree(b, canonical_metric(b, make_torus(1j, 32))).degree == pytest.approx(0, abs=1e-6)


def test_end0_of_atiyah():
    b = end0_bundle(atiyah_F2())
    assert b.rank == 3 and b.det_trivial
    assert degree(b, canonical_metric(b, make_torus(1j, 32))).degree == pytest.approx(0, abs=1e-6)


def test_end0_rejects_non_det_trivial():
    with pytest.raises(ValueError):
        end0_bundle(direct_sum(line_bundle(1), line_bundle(0)))


def test_mismatched_tau():
    with pytest.raises(ValueError):
        direct_sum(line_bundle(1, 1j), line_bundle(1, 2j))


def test_tensor_and_end_degrees():
    dom = make_torus(1j, 32)
    t = tensor(line_bundle(1), line_bundle(2))
    assert degree(t, canonical_metric(t, dom)).degree == pytest.approx(3, abs=1e-6)
    e = end_bundle(direct_sum(line_bundle(1), line_bundle(-1)))
    assert e.rank == 4
    assert validate_cocycle(e) < 1e-10
    assert degree(e, canonical_metric(e, dom)).degree == pytest.approx(0, abs=1e-6)


def test_descriptor_round_trip():
    b = end0_bundle(direct_sum(line_bundle(2), line_bundle(-2)))
    again = from_descriptor(b.descriptor, b.tau)
    z = sample_points(b.tau)
    assert np.allclose(again.multiplier("tau", z), b.multiplier("tau", z))


def test_transport_trivial_is_wrap():
    dom = make_torus(1j, 8)
    b = line_bundle(0)
    vals = np.random.default_rng(0).standard_normal((1, 1, 8, 8)) + 0j
    assert np.allclose(pad(b, dom, vals, 2, "metric"), periodic_pad(vals, 2))


def test_transport_line_metric_closed_form():
    d = 2
    b = line_bundle(d)
    dom = make_torus(1j, 16)
    z = dom.points()
    y = z.imag
    h = np.exp(-2 * np.pi * d * y ** 2)[None, None].astype(complex)
    up = transport(b, "tau", h, z, "metric")
    a = b.multiplier("tau", z)
    assert np.allclose(up, h / np.abs(a) ** 2)
    assert np.allclose(up[0, 0], np.exp(-2 * np.pi * d * (y + 1) ** 2))


def test_transport_identity_endomorphism():
    b = atiyah_F2()
    z = sample_points(b.tau)
    eye = np.broadcast_to(np.eye(2)[:, :, None], (2, 2, z.size)).astype(complex)
    for direction in ("1", "tau"):
        for side in ("+", "-"):
            assert np.allclose(transport(b, direction, eye, z, "endomorphism", side), eye)


def test_transport_unknown_kind():
    b = line_bundle(1)
    with pytest.raises(ValueError):
        transport(b, "tau", np.ones((1, 1, 3)), sample_points(b.tau, 3), "spinor")
