"""Dyadic hypersingular maximal, sparse and Bergman-type operators on the unit disc."""

__version__ = "0.1.0"

from .dyadic import (COMMON_BOX_CONSTANT, SHIFTED, STANDARD, CarlesonBox, DyadicArc, DyadicSystem,
                     arcs_containing, box_membership, carleson_box, find_common_box)
from .grids import AnnulusGrid, CubeGrid, GridFunction, PolarGrid, make_polar_grid
from .sparse import (DyadicCube, GradedSparseFamily, degree, family_carleson, family_counterexample,
                     family_full_tree, layer_decomposition, sparseness_witness, validate)
from .operators import (OperatorSpec, apply_bergman, apply_bergman_positive, apply_maximal, apply_sparse,
                        apply_sparse_layer, bergman_at, level_set_decomposition, sparse_domination_check)
from .norms import lorentz_p1_norm, lp_norm, op_norm_corner, restricted_probe, weak_norm, weak_opnorm_from_constant
from .regions import (BoundClass, ExponentPoint, bourgain_combine, classify, critical_slope,
                      fit_layer_exponent, region_samples)
from .weights import (RadialWeight, bekolle_bonami, endpoint_strong_condition, endpoint_weak_condition,
                      extremal_fk, extremal_fN)
