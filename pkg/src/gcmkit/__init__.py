"""gcmkit: climate-model ranking and neural downscaling toolkit."""

__version__ = "0.1.0"

from .errors import GcmkitError, NumericFault, ValidationError

__all__ = ["GcmkitError", "NumericFault", "ValidationError", "__version__"]
