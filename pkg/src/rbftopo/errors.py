"""Exception hierarchy shared by all modules."""


class RbfTopoError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(RbfTopoError, ValueError):
    """A kernel or model parameter is out of its admissible range."""


class InvalidArgumentError(RbfTopoError, ValueError):
    """A function argument (distance, point, order) is out of range."""


class ValidationError(RbfTopoError, ValueError):
    """Input data (landmarks, images, files) failed validation."""


class SingularSystemError(RbfTopoError, ArithmeticError):
    """The interpolation matrix is numerically singular."""


class SingularGradientError(RbfTopoError, ArithmeticError):
    """A Jacobian was requested where the kernel is not differentiable."""


class DegenerateConfigurationError(RbfTopoError, ArithmeticError):
    """Closed-form denominators vanish for the requested configuration."""


class ConsistencyError(RbfTopoError, RuntimeError):
    """Two independent computations of the same quantity disagree."""
