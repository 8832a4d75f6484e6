"""Heavy rigid bodies with a gyroscope in R^n: models, Lax pairs, integrals and their numerical certification."""

from .models import ModelError, ModelSpec, validate
from .poisson import PhasePoint, ScalarField, IntegralFamily

__version__ = "0.1.0"

__all__ = ["ModelError", "ModelSpec", "PhasePoint", "ScalarField", "IntegralFamily", "validate", "__version__"]
