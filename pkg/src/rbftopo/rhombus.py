"""
Four landmarks on the unit rhombus with the lower vertex pulled down.

Source ``P = (0,1), (-1,0), (0,-1), (1,0)``; target ``Q`` equals ``P`` except the
third point, which moves to ``(0, -1 - delta)``. By symmetry the x-coefficients
vanish and the y-coefficients have closed forms in ``a = phi(sqrt 2)`` and
``b = phi(2)``::

    c1 = delta (b^2 + b - 2a^2) / ((1 - b) ((1 + b)^2 - 4a^2))
    c2 = c4 = delta a / ((1 + b)^2 - 4a^2)
    c3 = -delta (1 + b - 2a^2) / ((1 - b) ((1 + b)^2 - 4a^2))

For large locality the denominators shrink like a power of 1/c while the
coefficients grow, and det J = 1 + sum c_i dphi_i/dy is an O(1) residue of
large cancelling terms. Everything here is therefore evaluated with mpmath
at :data:`WORKING_DPS` digits and only the results are rounded to float.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np

from . import kernels
from .errors import (ConsistencyError, DegenerateConfigurationError, InvalidArgumentError,
                     InvalidParameterError, SingularSystemError)
from .kernels import KernelFamily, KernelSpec
from .registration import LandmarkPairs, Transformation, fit, kernel_matrix

__all__ = [
    "SOURCE",
    "WORKING_DPS",
    "RhombusModel",
    "DetProfile",
    "target_points",
    "build_rhombus",
    "solve_rhombus_system",
    "det_j_exact",
    "det_j_approx",
    "fig2_profile",
    "profiles_to_csv",
]

SOURCE = ((0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0))
WORKING_DPS = 50
# denominators must keep >= 20 significant digits at WORKING_DPS
DEGENERATE_TOL = mpmath.mpf("1e-30")
CONSISTENCY_TOL = 1e-8
# float64 refit is compared only when its error bound (cond * eps) is tiny
FLOAT_CHECK_COND = 1e6

APPROX_COEFFICIENT = {
    KernelFamily.MATERN12: 2.4142,
    KernelFamily.MATERN32: 1.7071,
    KernelFamily.MATERN52: 2.5607,
}


def target_points(delta: float):
    return (SOURCE[0], SOURCE[1], (0.0, -1.0 - delta), SOURCE[3])


def _mp_profile(kernel, r):
    return kernels.unit_profile(kernel.family, mpmath.mpf(r) / mpmath.mpf(kernel.locality))


def _mp_dprofile(kernel, r):
    c = mpmath.mpf(kernel.locality)
    return kernels.unit_profile_derivative(kernel.family, mpmath.mpf(r) / c) / c


def solve_rhombus_system(kernel: KernelSpec, delta: float):
    """Brute-force 4x4 solve of both coefficient systems at high precision.

    Returns ``(c_x, c_y)`` as lists of ``mpf``.
    """
    with mpmath.workdps(WORKING_DPS):
        A = mpmath.matrix(4, 4)
        for i, (xi, yi) in enumerate(SOURCE):
            for j, (xj, yj) in enumerate(SOURCE):
                A[i, j] = _mp_profile(kernel, mpmath.sqrt(mpmath.mpf(xi - xj) ** 2
                                                          + mpmath.mpf(yi - yj) ** 2))
        Q = target_points(mpmath.mpf(delta))
        bx = mpmath.matrix([mpmath.mpf(q[0]) - p[0] for p, q in zip(SOURCE, Q)])
        by = mpmath.matrix([mpmath.mpf(q[1]) - p[1] for p, q in zip(SOURCE, Q)])
        try:
            cx = mpmath.lu_solve(A, bx)
            cy = mpmath.lu_solve(A, by)
        except ZeroDivisionError:
            raise SingularSystemError(f"rhombus system is singular for {kernel}") from None
        return [+v for v in cx], [+v for v in cy]


@dataclass(frozen=True, eq=False)
class RhombusModel:
    kernel: KernelSpec
    delta: float
    alpha_adj: float
    beta_opp: float
    c2: tuple
    fitted: Transformation
    c2_exact: tuple = field(repr=False)
    float_fit_checked: bool = False


def build_rhombus(kernel: KernelSpec, delta: float) -> RhombusModel:
    """Closed-form rhombus coefficients, cross-checked against a direct solve.

    Raises
    ------
    DegenerateConfigurationError
        if a closed-form denominator is too small to resolve.
    ConsistencyError
        if the closed form disagrees with the brute-force solution.
    """
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0:
        raise InvalidParameterError(f"delta must be nonnegative, got {delta!r}")
    with mpmath.workdps(WORKING_DPS):
        D = mpmath.mpf(delta)
        a = _mp_profile(kernel, mpmath.sqrt(2))
        b = _mp_profile(kernel, 2)
        one_minus_b = 1 - b
        # (1+b)^2 - 4a^2 factored to keep the cancellation inside one difference
        opposite = (1 + b - 2 * a) * (1 + b + 2 * a)
        for name, den in (("1 - beta", one_minus_b), ("(1 + beta)^2 - 4 alpha^2", opposite)):
            if abs(den) < DEGENERATE_TOL:
                raise DegenerateConfigurationError(
                    f"denominator {name} = {mpmath.nstr(den, 3)} vanishes for {kernel}")
        c1 = D * (b * b + b - 2 * a * a) / (one_minus_b * opposite)
        c2 = D * a / opposite
        c3 = -D * (1 + b - 2 * a * a) / (one_minus_b * opposite)
        exact = (c1, c2, c3, c2)

        cx, cy = solve_rhombus_system(kernel, delta)
        scale = max(mpmath.mpf(1), max(abs(v) for v in exact))
        mismatch = max(abs(u - v) for u, v in zip(exact, cy))
        if mismatch > CONSISTENCY_TOL * scale or max(abs(v) for v in cx) > CONSISTENCY_TOL:
            raise ConsistencyError(
                f"closed-form rhombus coefficients disagree with the direct solve for {kernel} "
                f"(mismatch {mpmath.nstr(mismatch, 3)})")
        alpha_adj, beta_opp = float(a), float(b)
        c2_float = tuple(float(v) for v in exact)
        oracle = np.column_stack([[float(v) for v in cx], [float(v) for v in cy]])

    fitted = Transformation(kernel, np.array(SOURCE), oracle)
    checked = _check_float_fit(kernel, delta, c2_float)
    return RhombusModel(kernel, delta, alpha_adj, beta_opp, c2_float, fitted, exact, checked)


def _check_float_fit(kernel, delta, c2) -> bool:
    pairs = LandmarkPairs(np.array(SOURCE), np.array(target_points(delta)))
    if np.linalg.cond(kernel_matrix(kernel, pairs.source)) > FLOAT_CHECK_COND:
        return False
    try:
        t, diag = fit(pairs, kernel)
    except SingularSystemError:
        return False
    if diag.condition_estimate > FLOAT_CHECK_COND:
        return False
    scale = max(1.0, max(abs(v) for v in c2))
    err = np.abs(t.coefficients[:, 1] - np.array(c2)).max()
    if err > CONSISTENCY_TOL * scale or np.abs(t.coefficients[:, 0]).max() > CONSISTENCY_TOL:
        raise ConsistencyError(
            f"double-precision fit disagrees with the closed form for {kernel} (error {err:.3g})")
    return True


def det_j_exact(m: RhombusModel, y: float) -> float:
    """det J at ``(0, y)``, ``y > 1``, from the closed-form coefficients.

    Only the y-component carries displacement, so det J = 1 + d(F_2)/dy.
    """
    if not y > 1:
        raise InvalidArgumentError(f"det_j_exact requires y > 1, got {y!r}")
    with mpmath.workdps(WORKING_DPS):
        Y = mpmath.mpf(y)
        side = mpmath.sqrt(1 + Y * Y)
        # d(phi_i)/dy = phi'(r_i) * (y - p_iy) / r_i
        d1 = _mp_dprofile(m.kernel, Y - 1)
        d2 = _mp_dprofile(m.kernel, side) * Y / side
        d3 = _mp_dprofile(m.kernel, Y + 1)
        c1, c2, c3, c4 = m.c2_exact
        return float(1 + c1 * d1 + (c2 + c4) * d2 + c3 * d3)


def det_j_approx(family, delta: float, y: float) -> float:
    """Published leading-order det J(0, y) for the three Matern families."""
    try:
        family = KernelFamily(family)
    except ValueError:
        raise InvalidArgumentError(f"unknown kernel family {family!r}") from None
    if family not in APPROX_COEFFICIENT:
        raise InvalidArgumentError(f"no approximation is available for {family}")
    if not y >= 1:
        raise InvalidArgumentError(f"det_j_approx requires y >= 1, got {y!r}")
    k = APPROX_COEFFICIENT[family]
    h = math.hypot(1.0, y)
    if family is KernelFamily.MATERN12:
        # -1 + y/h, written without cancellation
        return 1.0 - k * delta * (-1.0 / (h * (h + y)))
    # y^2 + 1 - y h = h (h - y) = h / (h + y)
    return 1.0 - k * delta * (h / (h + y))


@dataclass(frozen=True)
class DetProfile:
    kernel: KernelSpec
    y_values: tuple
    exact: tuple
    approx: Optional[tuple] = None

    def __post_init__(self):
        if len(self.exact) != len(self.y_values) or (
                self.approx is not None and len(self.approx) != len(self.y_values)):
            raise InvalidArgumentError("profile sequences must have equal lengths")

    @property
    def minimum(self) -> float:
        return min(self.exact)


def fig2_profile(kernel_specs: Sequence[KernelSpec], delta: float, y_max: float = 5.0,
                 samples: int = 400):
    """Exact (and, for Matern kernels, approximate) det J(0, y) on ``(1, y_max]``."""
    if not y_max > 1:
        raise InvalidArgumentError("y_max must exceed 1")
    if samples < 2:
        raise InvalidArgumentError("at least two samples are required")
    ys = tuple(1.0 + (y_max - 1.0) * i / samples for i in range(1, samples + 1))
    profiles = []
    for spec in kernel_specs:
        model = build_rhombus(spec, delta)
        exact = tuple(det_j_exact(model, y) for y in ys)
        approx = None
        if spec.family in APPROX_COEFFICIENT:
            approx = tuple(det_j_approx(spec.family, delta, y) for y in ys)
        profiles.append(DetProfile(spec, ys, exact, approx))
    return profiles


def profiles_to_csv(profiles) -> bytes:
    lines = ["y,kernel,exact,approx"]
    for prof in profiles:
        approx = prof.approx or ("",) * len(prof.y_values)
        for y, e, a in zip(prof.y_values, prof.exact, approx):
            a_txt = "" if a == "" else f"{a:.9g}"
            lines.append(f"{y:.9g},{prof.kernel.family.value},{e:.9g},{a_txt}")
    return ("\n".join(lines) + "\n").encode("ascii")
