"""Rice-formula expectations, variances and Monte Carlo checks for specular
points, level curves and wave dislocations of Gaussian random fields."""

from .errors import ConsistencyError, DegeneracyError, DomainError, QuadratureError, RiceError
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate_adaptive
from .spectral_models import (CovarianceModel1D, SpecularGeometry, Spectrum1D, Spectrum2D,
                              Spectrum3D, builtin_covariance_gaussian,
                              builtin_covariance_wendland, gaussian_abs_moment,
                              moments_from_covariance)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError", "DegeneracyError", "DomainError", "QuadratureError", "RiceError",
    "DEFAULT_QUAD", "QuadratureSpec", "integrate_adaptive",
    "CovarianceModel1D", "SpecularGeometry", "Spectrum1D", "Spectrum2D", "Spectrum3D",
    "builtin_covariance_gaussian", "builtin_covariance_wendland", "gaussian_abs_moment",
    "moments_from_covariance", "__version__",
]
