"""Expansion exponents, upper capacity and entropy of measures on finite models of compact metric spaces."""
from .capacity import CapacityReport, capacity_estimate, greedy_cover_count
from .entropy import (BlockEntropyReport, EntropyReport, block_entropy, block_entropy_report,
                      katok_entropy_estimate, spanning_count)
from .errors import ExpanseError, PreconditionError, StructuralError
from .exponents import (EpsilonProfile, ExponentCertificate, exponent_estimate, map_expansion_profile,
                        measure_expansion_profile, positive_exponent_certificate, witness_measure)
from .maps import (ConstantMap, Contraction, LookupTable, PiecewiseLinear, Rotation, Shift, Tent, TimesM,
                   bowen_distance, orbit)
from .measures import (AtomicMeasure, convex_combine, dirac, invariance_defect, pushforward, restrict,
                       sample_measure, uniform)
from .spaces import Circle, PointCloud, Product, SymbolSpace, UnitInterval, distance, grid_cloud
from .verify import (PhiMassCurve, TheoremReport, check_contraction_chain, check_convex_law,
                     check_monotone_law, check_theorem_A, check_theorem_B, check_theorem_C, phi_mass_curve)

__version__ = "0.1.0"
