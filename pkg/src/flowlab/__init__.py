"""Numerical Hermitian-Einstein flow on holomorphic bundles over a flat torus."""

from .bundles import (FactorSystem, atiyah_F2, direct_sum, dual, end0_bundle, end_bundle,
                      from_descriptor, line_bundle, perturb_multiplier, tensor, validate_cocycle)
from .flow import (FlowBreakdown, FlowConfig, FlowDiagnostics, classify_limit, flow_to_time,
                   max_stable_dt, run, step)
from .metrics import (MetricField, canonical_metric, degree, induce_end_metric, load_snapshot,
                      mean_curvature, perturb, save_snapshot, sup_deviation)
from .principal import (ad_image_residual, c0_constant, curvature_relation_residual,
                        norm_comparison_check, reduction_preservation_test, sl2)
from .stability import (atiyah, bundle_class, end0_of, hn_slopes, is_polystable, is_semistable,
                        line_sum, predicted_flow_infimum)
from .torus import TorusDomain, integrate, make_torus

__version__ = "0.1.0"
