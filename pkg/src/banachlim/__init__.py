"""Computational toolkit for finite-dimensional Banach spaces, inverse
limits, and determining-property diagnostics."""

from . import curves, determining, linalg, scalar, simplex  # noqa: F401
from .scalar import Q, format_scalar, parse_scalar, to_float  # noqa: F401
from .space import (NormedSpace, ball_extreme_points, dual_space,  # noqa: F401
                    hpoly_space, lp_space, norm_eval, vpoly_space)
from .linmap import (adjoint, is_isometric_embedding,  # noqa: F401
                     is_one_lipschitz, is_quotient_map, linear_map,
                     min_norm_preimage, operator_norm, quotient_norm)
from .systems import (CompatibleVector, DirectSystem,  # noqa: F401
                      InverseSystem, SubspaceGenerator,
                      compatible_from_tail, diagonal_subsequence,
                      direct_limit_norm, dualize, generator_from_tail,
                      invlim_convergence, l1_drop_system, l2_drop_system,
                      lift_min_norm, linf_drop_system, linf_padding_system,
                      pairing, pairing_isometry_check, project,
                      random_quotient_system, stage_norms, system_from_json,
                      system_to_json, validate_standard)
from .determining import (CertifyConfig, DeterminingQuery,  # noqa: F401
                          RhoSchedule, SearchConfig, anp_diagnostic,
                          dp_diagnostic, eps_determining_certify,
                          eps_determining_search, equivalence_witness,
                          gfda_check, prefix_obstruction_query,
                          rescaled_image_presentation, verify_pair)
from .curves import (CoordinateCurve, canonical_c0_curve,  # noqa: F401
                     canonical_grid, canonical_l1_curve,
                     difference_quotient, differentiability_scan)

__version__ = "0.1.0"
