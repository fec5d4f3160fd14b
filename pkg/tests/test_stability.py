import numpy as np
import pytest

from flowlab import (atiyah, bundle_class, end0_of, hn_slopes, is_polystable, is_semistable,
                     line_sum, predicted_flow_infimum)
from flowlab.stability import BundleClass


def test_semistable_examples():
    v = is_semistable(line_sum(1, -1))
    assert not v and v.certificate == "sub-line-bundle of degree 1 > mu = 0"
    assert is_semistable(atiyah(2))
    assert is_semistable(end0_of(atiyah(2)))
    assert not is_semistable(end0_of(line_sum(1, -1)))


def test_polystable_examples():
    assert is_polystable(line_sum(2, 2))
    assert not is_polystable(atiyah(2))
    assert is_polystable(line_sum(0))


def test_hn_slopes():
    assert hn_slopes(line_sum(1, -1)) == [1.0, -1.0]
    assert hn_slopes(line_sum(2, 0, -2)) == [2.0, 0.0, -2.0]
    assert hn_slopes(atiyah(2)) == [0.0]


def test_predicted_infimum():
    assert predicted_flow_infimum(line_sum(1, -1)) == pytest.approx(2 * np.pi)
    assert predicted_flow_infimum(line_sum(2, 0, -2)) == pytest.approx(4 * np.pi)
    assert predicted_flow_infimum(line_sum(1, -1), vol=2.0) == pytest.approx(np.pi)
    assert predicted_flow_infimum(end0_of(line_sum(1, -1))) == pytest.approx(4 * np.pi)
    assert predicted_flow_infimum(atiyah(2)) == 0.0


def test_class_degrees():
    assert line_sum(2, -1, 3).degree == 4
    assert atiyah(2).degree == 0 and end0_of(line_sum(1, -1)).degree == 0
    assert end0_of(atiyah(2)).rank == 3


def test_unsupported_classes_rejected():
    with pytest.raises(ValueError):
        BundleClass("Grassmannian")
    with pytest.raises(ValueError):
        bundle_class({"kind": "perturbed_multiplier", "of": {"kind": "line", "degree": 1},
                      "epsilon": 0.1})


def test_descriptor_classification():
    desc = {"kind": "end0", "of": {"kind": "sum", "summands": [{"kind": "line", "degree": 1},
                                                               {"kind": "line", "degree": -1}]}}
    c = bundle_class(desc)
    assert c.tag == "End0Of" and sorted(c.summand_degrees()) == [-2, 0, 2]
    assert bundle_class({"kind": "dual", "of": {"kind": "atiyah"}}).tag == "Atiyah"
