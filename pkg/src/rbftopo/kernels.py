"""
Radial basis function profiles used for landmark registration.

Six families are supported. With ``s = r / locality``:

==========  ==========================================  ==========
family      profile                                     support
==========  ==========================================  ==========
gaussian    exp(-s**2)   (locality is sigma)            global
wendland31  (1 - s)_+**4 * (4 s + 1)                    s < 1
wu12        (1 - s)_+**4 * (1 + 4 s + 3 s**2 + 3/4 s**3)  s < 1
matern12    exp(-s)                                     global
matern32    (1 + s) exp(-s)                             global
matern52    (1 + s + s**2 / 3) exp(-s)                  global
==========  ==========================================  ==========

All profiles equal 1 at the origin. The unit profiles accept either numpy
input or ``mpmath.mpf`` scalars; the latter path is used where double
precision cancels catastrophically (large locality, see ``rhombus``).

The half-integer Matern forms are also available through the modified
Bessel function of the second kind (:func:`matern_via_bessel`), which
serves as an independent check of the closed forms above.
"""
import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, NamedTuple

import mpmath
import numpy as np

from .errors import InvalidArgumentError, InvalidParameterError

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "HalfIntegerOrder",
    "DerivativeMinimum",
    "evaluate",
    "radial_derivative",
    "is_smooth_at_origin",
    "unit_profile",
    "unit_profile_derivative",
    "unit_derivative_min",
    "golden_section",
    "bessel_k_half",
    "matern_via_bessel",
]


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    WENDLAND31 = "wendland31"
    WU12 = "wu12"
    MATERN12 = "matern12"
    MATERN32 = "matern32"
    MATERN52 = "matern52"

    @property
    def compact(self) -> bool:
        return self in (KernelFamily.WENDLAND31, KernelFamily.WU12)

    @property
    def matern(self) -> bool:
        return self in (KernelFamily.MATERN12, KernelFamily.MATERN32, KernelFamily.MATERN52)

    @property
    def locality_symbol(self) -> str:
        return "sigma" if self is KernelFamily.GAUSSIAN else "c"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family together with its locality parameter (c, or sigma)."""

    family: KernelFamily
    locality: float

    def __post_init__(self):
        try:
            family = KernelFamily(self.family)
        except ValueError:
            names = ", ".join(f.value for f in KernelFamily)
            raise InvalidParameterError(
                f"unknown kernel family {self.family!r} (expected one of {names})") from None
        locality = float(self.locality)
        if not math.isfinite(locality) or locality <= 0.0:
            raise InvalidParameterError(f"locality must be positive and finite, got {self.locality!r}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "locality", locality)

    def __str__(self):
        return f"{self.family.value}({self.family.locality_symbol}={self.locality:g})"


# --- unit profiles -----------------------------------------------------------

def _backend(s):
    if isinstance(s, mpmath.mpf):
        return mpmath.exp, min
    return np.exp, np.minimum


def _wu_poly(s):
    return 1 + 4 * s + 3 * s**2 + 0.75 * s**3


def _profile(family, s, exp, minimum):
    if family is KernelFamily.GAUSSIAN:
        return exp(-s * s)
    if family is KernelFamily.WENDLAND31:
        # min(s, 1) makes the leading factor exactly zero outside the support
        u = 1 - minimum(s, 1)
        return u**4 * (4 * s + 1)
    if family is KernelFamily.WU12:
        u = 1 - minimum(s, 1)
        return u**4 * _wu_poly(s)
    if family is KernelFamily.MATERN12:
        return exp(-s)
    if family is KernelFamily.MATERN32:
        return (1 + s) * exp(-s)
    if family is KernelFamily.MATERN52:
        return (1 + s + s * s / 3) * exp(-s)
    raise InvalidParameterError(f"unsupported family {family!r}")


def _profile_derivative(family, s, exp, minimum):
    if family is KernelFamily.GAUSSIAN:
        return -2 * s * exp(-s * s)
    if family is KernelFamily.WENDLAND31:
        u = 1 - minimum(s, 1)
        return -20 * s * u**3
    if family is KernelFamily.WU12:
        u = 1 - minimum(s, 1)
        return -1.75 * s * u**3 * (8 + 9 * s + 3 * s * s)
    if family is KernelFamily.MATERN12:
        return -exp(-s)
    if family is KernelFamily.MATERN32:
        return -s * exp(-s)
    if family is KernelFamily.MATERN52:
        return -(s + s * s) / 3 * exp(-s)
    raise InvalidParameterError(f"unsupported family {family!r}")


def unit_profile(family, s):
    """Profile of `family` at scaled distance `s` (locality 1)."""
    family = KernelFamily(family)
    return _profile(family, s, *_backend(s))


def unit_profile_derivative(family, s):
    """d(profile)/ds at scaled distance `s`; the radial limit at ``s = 0``."""
    family = KernelFamily(family)
    return _profile_derivative(family, s, *_backend(s))


def _as_distances(r):
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise InvalidArgumentError("distances must be nonnegative")
    return arr


def evaluate(spec: KernelSpec, r):
    """Kernel value at distance(s) `r`.

    Accepts a scalar or an array and returns the same shape. Compactly
    supported families return exactly 0 for ``r >= c``.
    """
    s = _as_distances(r) / spec.locality
    out = _profile(spec.family, s, np.exp, np.minimum)
    return out[()] if out.ndim == 0 else out


def radial_derivative(spec: KernelSpec, r):
    """Analytic derivative of the kernel with respect to distance.

    At ``r = 0`` the radial limit is returned: 0 for every family except
    matern12, whose profile has a kink there and yields ``-1/c``; use
    :func:`is_smooth_at_origin` to detect that case.
    """
    s = _as_distances(r) / spec.locality
    out = _profile_derivative(spec.family, s, np.exp, np.minimum) / spec.locality
    return out[()] if out.ndim == 0 else out


def is_smooth_at_origin(family) -> bool:
    return KernelFamily(family) is not KernelFamily.MATERN12


# --- derivative minimum ------------------------------------------------------

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                   max_iter: int = 500):
    """Minimize a unimodal scalar function on [lo, hi].

    Returns ``(x, f(x))`` once the bracket is narrower than `tol`.
    """
    a, b = float(lo), float(hi)
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    fx = f(x)
    # the midpoint can lose to an interior probe by rounding on very flat minima
    for xc, fc in ((x1, f1), (x2, f2)):
        if fc < fx:
            x, fx = xc, fc
    return x, fx


class DerivativeMinimum(NamedTuple):
    r_star: float
    value: float
    at_limit: bool  # True when the infimum is only approached as r -> 0


def unit_derivative_min(family, scan_points: int = 10_000) -> DerivativeMinimum:
    """Most negative radial derivative of the unit-locality profile.

    The range (0, R] with R = 1 for compact families and R = 10 otherwise is
    scanned on a uniform grid, the best cell is refined by golden-section
    search. If the scan is lowest at its first point and the radial limit at
    0 is lower still, the infimum is attained as r -> 0 (matern12).
    """
    family = KernelFamily(family)
    R = 1.0 if family.compact else 10.0
    grid = R * np.arange(1, scan_points + 1) / scan_points
    values = _profile_derivative(family, grid, np.exp, np.minimum)
    i = int(np.argmin(values))
    if i == 0:
        at_zero = float(_profile_derivative(family, 0.0, np.exp, np.minimum))
        if at_zero <= values[0]:
            return DerivativeMinimum(0.0, at_zero, True)
    lo = grid[i - 1] if i > 0 else 0.0
    hi = grid[min(i + 1, scan_points - 1)]

    def f(x):
        return float(_profile_derivative(family, x, np.exp, np.minimum))

    x, fx = golden_section(f, lo, hi, tol=1e-12)
    return DerivativeMinimum(x, fx, False)


# --- Bessel route for the half-integer Matern kernels ----------------------------

class HalfIntegerOrder(IntEnum):
    """Matern order v = numerator / 2."""

    HALF = 1
    THREE_HALVES = 3
    FIVE_HALVES = 5

    @property
    def nu(self) -> float:
        return self.value / 2.0


def _order(order) -> HalfIntegerOrder:
    try:
        return HalfIntegerOrder(order)
    except ValueError:
        raise InvalidArgumentError(
            f"only orders 1/2, 3/2, 5/2 are supported (numerators 1, 3, 5), got {order!r}") from None


def bessel_k_half(order, z):
    """Modified Bessel function of the second kind at half-integer order."""
    order = _order(order)
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise InvalidArgumentError("bessel_k_half requires z > 0")
    base = np.sqrt(np.pi / (2 * z)) * np.exp(-z)
    if order is HalfIntegerOrder.HALF:
        out = base
    elif order is HalfIntegerOrder.THREE_HALVES:
        out = base * (1 + 1 / z)
    else:
        out = base * (1 + 3 / z + 3 / z**2)
    return out[()] if out.ndim == 0 else out


def matern_via_bessel(order, c, r):
    """Matern kernel 2**(1-v)/Gamma(v) * (r/c)**v * K_v(r/c).

    Undefined at r = 0 (the Bessel factor diverges); use :func:`evaluate` there.
    """
    order = _order(order)
    if not c > 0:
        raise InvalidParameterError("c must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise InvalidArgumentError("matern_via_bessel requires r > 0")
    nu = order.nu
    z = r / c
    out = 2.0 ** (1 - nu) / math.gamma(nu) * z**nu * bessel_k_half(order, z)
    return out[()] if np.ndim(out) == 0 else out


MATERN_ORDERS = {
    KernelFamily.MATERN12: HalfIntegerOrder.HALF,
    KernelFamily.MATERN32: HalfIntegerOrder.THREE_HALVES,
    KernelFamily.MATERN52: HalfIntegerOrder.FIVE_HALVES,
}
