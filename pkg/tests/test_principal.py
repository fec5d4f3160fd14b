import numpy as np
import pytest

from flowlab import (FlowConfig, ad_image_residual, atiyah_F2, c0_constant, canonical_metric,
                     curvature_relation_residual, direct_sum, end0_bundle, induce_end_metric,
                     line_bundle, make_torus, norm_comparison_check, perturb,
                     reduction_preservation_test, sl2)
from flowlab.bundles import SL2_BASIS
from flowlab.principal import LieStructure, ad_map, center_constant, group

E, F, H = SL2_BASIS


def test_lie_structure_sanity():
    lie = sl2()
    assert lie.jacobi_residual() < 1e-14
    assert abs(np.linalg.det(lie.killing)) > 1e-8
    assert lie.homomorphism_residual() < 1e-10


def test_ad_examples():
    assert np.allclose(ad_map(H), np.diag([2, -2, 0]))
    assert np.all(ad_map(np.zeros((2, 2))) == 0)
    # [E, F] = H: the F column of ad(E) is the H coordinate vector
    assert np.allclose(ad_map(E)[:, 1], [0, 0, 1])


def test_ad_rejects_trace():
    with pytest.raises(ValueError):
        ad_map(np.eye(2))


def test_c0_values():
    assert c0_constant(sl2()) == pytest.approx(2.0, abs=1e-12)
    assert c0_constant(sl2(4.0)) == pytest.approx(1.0, abs=1e-12)


def test_c0_rejects_degenerate_metric():
    lie = sl2()
    bad = LieStructure(lie.basis, lie.structure_constants, np.diag([1.0, 0.0, 2.0]), lie.killing)
    with pytest.raises(ValueError):
        c0_constant(bad)


def test_flat_trivial_checks():
    # the constant multipliers of F_2 still admit no flat compatible metric,
    # so use the identity metric on the trivial rank-2 bundle
    dom = make_torus(1j, 16)
    triv = direct_sum(line_bundle(0), line_bundle(0))
    h = canonical_metric(triv, dom)
    assert norm_comparison_check(h) < 1e-12
    assert curvature_relation_residual(h) < 1e-12
    assert ad_image_residual(induce_end_metric(h)) < 1e-12
    assert reduction_preservation_test(h, 0.05) < 1e-12


@pytest.mark.parametrize("bundle", [direct_sum(line_bundle(1), line_bundle(-1)), atiyah_F2()],
                         ids=["L1+L-1", "F2"])
def test_norm_comparison(bundle):
    errs = [norm_comparison_check(canonical_metric(bundle, make_torus(1j, n))) for n in (32, 64)]
    assert errs[1] < 1e-3
    assert errs[1] <= max(errs[0], 1e-12)


def test_norm_comparison_needs_det_one():
    dom = make_torus(1j, 16)
    h = canonical_metric(atiyah_F2(), dom)
    with pytest.raises(ValueError):
        norm_comparison_check(h.with_values(2 * h.values))


def test_ad_image_residual_generic_metric():
    dom = make_torus(1j, 64)
    b = end0_bundle(direct_sum(line_bundle(1), line_bundle(-1)))
    h_ad = induce_end_metric(canonical_metric(direct_sum(line_bundle(1), line_bundle(-1)), dom),
                             target=b)
    assert ad_image_residual(h_ad) < 1e-3
    generic = perturb(canonical_metric(b, dom), 3, 0.5)
    assert ad_image_residual(generic) > 0.1


def test_center_constant():
    dom_n = 32
    assert center_constant(group("SL2"), atiyah_F2(), dom_n) == 0.0
    assert center_constant(group("torus_factor"), line_bundle(3), dom_n) == pytest.approx(6 * np.pi, abs=1e-6)
    assert center_constant(group("torus_factor"), line_bundle(0), dom_n) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        group("E8")


def test_reduction_preservation_short():
    dom = make_torus(1j, 32)
    h0 = perturb(canonical_metric(atiyah_F2(), dom), 4, 0.2, det_constrained=True)
    dev, res = reduction_preservation_test(h0, 0.02, FlowConfig(cfl=0.5), image_samples=2)
    assert dev < 1e-3
    assert len(res) >= 2 and max(res) < 1e-2
