"""Landmark registration with radial basis functions and topology checks."""
from .errors import (ConsistencyError, DegenerateConfigurationError, InvalidArgumentError,
                     InvalidParameterError, RbfTopoError, SingularGradientError,
                     SingularSystemError, ValidationError)
from .kernels import HalfIntegerOrder, KernelFamily, KernelSpec
from .registration import (Jacobian2, LandmarkPairs, Point2, SolveDiagnostics, Transformation,
                           displace, fit, invert_roles, jacobian, map_point)
from .topology import (JacobianScanReport, SupportBound, check_one_landmark, min_support_ratio,
                       scan_jacobian)

__version__ = "0.1.0"
