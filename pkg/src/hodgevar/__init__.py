"""Beltrami-driven variations of Hodge structure on finite-dimensional
models: period matrices, extensions of (p,p)-classes, Kahler-cone
transport with positivity certificates, stability radii, density criteria
and Hodge loci.  Complex tori are the exactly solvable built-in case."""

__version__ = "0.1.0"

from .errors import DomainError, IllConditionedError, ScenarioError, ShapeError
from .series import ArraySeries, TruncatedSeries, trust_radius
from .model import (AdaptedBasis, DeformationComplex, FormModel,
                    ValidationReport, adapted_basis, contraction_at,
                    harmonic_coefficients, harmonic_project, load_model,
                    save_model, validate)
from .torus import (RationalStructure, SubtorusModel, TorusSpec,
                    build_torus_model, poincare_dual, rational_structure)
from .kuranishi import (BeltramiSeries, ObstructionSeries,
                        maurer_cartan_residual, obstruction, sample_base,
                        solve_phi)
from .period import (PeriodMatrixSeries, PeriodMatrixValue, PurityResult,
                     contraction_series, evaluate_and_check_purity,
                     neumann_consistency_residual, period_blocks,
                     strengthened_degree_residual, transversality_residual)
from .hodgemap import (BetaCoefficients, HodgeClassVector, alpha0_weight2,
                       beta_closed_form, beta_coefficients,
                       extension_residual, membership_residual,
                       operator_norm_A, solve_hodge_map)
from .cone import (ConeCertificate, HermitianMetricModel, StabilityReport,
                   deformed_metric, extend_kahler_class, stability_radii,
                   sup_operator_norm)
from .locus import (LocusIdeal, VhcReport, locus_generators,
                    locus_membership, locus_tangent_space, vhc_check)
from .approx import (CriterionReport, green_rank_weight2,
                     nontriviality_h20_one, pp_criterion, rationality_scan)
