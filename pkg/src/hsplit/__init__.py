"""Backward-backward proximal splitting in Hadamard spaces."""
from . import kernels
from .errors import (InconsistencyError, InvalidInputError, InvalidReferenceError,
                     NoMinimumError)
from .functions import (Ball, Box, DistanceToPoint, HalfSquaredDistance, Indicator,
                        ProductSet, ProxFunction, Subtree, Zero, distance_to_point,
                        firm_nonexpansiveness_residual, half_squared_distance, indicator,
                        prox_characterization_residual, zero_function)
from .spaces import (Euclidean, MetricTree, PoincareBall, Product, ProductPoint, TreePoint,
                     cat0_quadrilateral_residual, distance, geodesic_convexity_residual,
                     geodesic_point, space_from_descriptor)
from .splitting import (ErrorSchedule, IterateTrace, SplitProblem, StoppingRule, exact_step,
                        phi, run, run_diagnostics)

__version__ = "0.1.0"
BACKEND = kernels.BACKEND

__all__ = [
    "BACKEND", "Ball", "Box", "DistanceToPoint", "ErrorSchedule", "Euclidean",
    "HalfSquaredDistance", "InconsistencyError", "Indicator", "InvalidInputError",
    "InvalidReferenceError", "IterateTrace", "MetricTree", "NoMinimumError", "PoincareBall",
    "Product", "ProductPoint", "ProductSet", "ProxFunction", "SplitProblem", "StoppingRule",
    "Subtree", "TreePoint", "Zero", "cat0_quadrilateral_residual", "distance",
    "distance_to_point", "exact_step", "firm_nonexpansiveness_residual",
    "geodesic_convexity_residual", "geodesic_point", "half_squared_distance", "indicator",
    "phi", "prox_characterization_residual", "run", "run_diagnostics",
    "space_from_descriptor", "zero_function",
]
