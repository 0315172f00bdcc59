"""Small-time heat-kernel expansions of gradient diffusions and their Borel sums."""

__version__ = "0.1.0"

from .exceptions import BorelHeatError, InputError, NumericalError  # noqa: E402
from .fields import DriftField, ScalarField  # noqa: E402
from .model import (ModelSpec, SymmetricMeasure, build_free_model,  # noqa: E402
                    build_ou_shifted_model, regularity_certificate)
from .coeffs import (CoefficientTable, PolynomialRep, approximate_potential,  # noqa: E402
                     coefficient_at, expansion_coefficients, gevrey_fit)
from .borel import (FormalSeries, borel_sum, borel_transform, laplace_sum,  # noqa: E402
                    pade_continue)
from .kernels import (assemble_k, assemble_u, consistency_suite, mehler_exact,  # noqa: E402
                      model_table, modified_kernel, ou_exact, solve_pde_forward)
from .lamperti import (DiffusionCoefficient, build_map, check_hypotheses,  # noqa: E402
                       pullback_density, transformed_drift)
from .estimators import BorelPadeLaplace, LampertiTransformer, SmallTimeKernel  # noqa: E402

__all__ = [
    "BorelHeatError", "InputError", "NumericalError",
    "ScalarField", "DriftField",
    "ModelSpec", "SymmetricMeasure", "build_free_model", "build_ou_shifted_model",
    "regularity_certificate",
    "CoefficientTable", "PolynomialRep", "approximate_potential", "coefficient_at",
    "expansion_coefficients", "gevrey_fit",
    "FormalSeries", "borel_sum", "borel_transform", "laplace_sum", "pade_continue",
    "assemble_k", "assemble_u", "consistency_suite", "mehler_exact", "model_table",
    "modified_kernel", "ou_exact", "solve_pde_forward",
    "DiffusionCoefficient", "build_map", "check_hypotheses", "pullback_density",
    "transformed_drift",
    "BorelPadeLaplace", "LampertiTransformer", "SmallTimeKernel",
]
