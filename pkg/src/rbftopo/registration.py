"""
Landmark interpolation with radial basis functions.

A fitted :class:`Transformation` is ``f(x) = x + F(x)`` where each displacement
component is ``F_k(x) = sum_j alpha_jk * phi(|x - x_j|)``. The coefficients
solve ``A alpha_k = t_k - x_k`` with ``A_ij = phi(|x_i - x_j|)``; no polynomial
term is appended since all supported kernels are strictly positive definite.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import kernels
from .errors import SingularGradientError, SingularSystemError, ValidationError
from .kernels import KernelSpec

logger = logging.getLogger(__name__)

__all__ = [
    "Point2",
    "LandmarkPairs",
    "SolveDiagnostics",
    "Transformation",
    "Jacobian2",
    "parse_landmarks",
    "read_landmarks",
    "format_landmarks",
    "invert_roles",
    "kernel_matrix",
    "fit",
    "displace",
    "map_point",
    "jacobian",
    "jacobian_field",
    "jacobian_determinant",
    "identity_transformation",
]

MIN_SEPARATION = 1e-12
PIVOT_TOL = 1e-14
ILL_CONDITIONED = 1e12
INTERPOLATION_TOL = 1e-9
NODE_RADIUS = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


def _as_points(points, name):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f"{name} must be a sequence of 2D points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite coordinates")
    return arr


def _check_distinct(points, name):
    if len(points) < 2:
        return
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    if d[i, j] <= MIN_SEPARATION:
        i, j = sorted((int(i), int(j)))
        raise ValidationError(
            f"{name} landmarks {i} and {j} coincide at ({points[i, 0]:g}, {points[i, 1]:g})")


@dataclass(frozen=True, eq=False)
class LandmarkPairs:
    """Matched source and target landmarks, stored as ``(N, 2)`` arrays."""

    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        source = _as_points(self.source, "source")
        target = _as_points(self.target, "target")
        if len(source) != len(target):
            raise ValidationError(
                f"source has {len(source)} landmarks but target has {len(target)}")
        if len(source) == 0:
            raise ValidationError("at least one landmark pair is required")
        _check_distinct(source, "source")
        source.setflags(write=False)
        target.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)

    def __len__(self):
        return len(self.source)

    def __eq__(self, other):
        if not isinstance(other, LandmarkPairs):
            return NotImplemented
        return (np.array_equal(self.source, other.source)
                and np.array_equal(self.target, other.target))

    @property
    def displacements(self):
        return self.target - self.source


def parse_landmarks(text: str) -> LandmarkPairs:
    """Parse ``sx sy tx ty`` lines; blank lines and ``#`` comments are ignored."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 4:
            raise ValidationError(f"line {lineno}: expected 4 numbers, got {len(fields)}")
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            raise ValidationError(f"line {lineno}: could not parse {stripped!r}") from None
    if not rows:
        raise ValidationError("no landmark pairs found")
    data = np.array(rows)
    return LandmarkPairs(data[:, :2], data[:, 2:])


def read_landmarks(path) -> LandmarkPairs:
    with open(path, encoding="utf-8") as fh:
        return parse_landmarks(fh.read())


def format_landmarks(pairs: LandmarkPairs) -> str:
    lines = [f"{sx!r} {sy!r} {tx!r} {ty!r}"
             for (sx, sy), (tx, ty) in zip(pairs.source.tolist(), pairs.target.tolist())]
    return "\n".join(lines) + "\n"


def invert_roles(pairs: LandmarkPairs) -> LandmarkPairs:
    """Swap source and target; used for backward image warping."""
    try:
        return LandmarkPairs(pairs.target, pairs.source)
    except ValidationError as exc:
        raise ValidationError(f"cannot invert landmark roles: {exc}") from None


@dataclass(frozen=True)
class SolveDiagnostics:
    method: str  # "cholesky" or "pivoted-elimination"
    condition_estimate: float
    max_residual: float


@dataclass(frozen=True, eq=False)
class Transformation:
    """Fitted deformation ``x -> x + sum_j alpha_j phi(|x - x_j|)``."""

    kernel: KernelSpec
    nodes: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        coefficients = np.array(self.coefficients, dtype=float).reshape(-1, 2)
        if len(nodes) != len(coefficients):
            raise ValidationError("coefficient rows must match node count")
        nodes.setflags(write=False)
        coefficients.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coefficients", coefficients)

    def __call__(self, p):
        return map_point(self, p)


@dataclass(frozen=True)
class Jacobian2:
    j11: float
    j12: float
    j21: float
    j22: float

    @property
    def det(self) -> float:
        return self.j11 * self.j22 - self.j12 * self.j21

    def as_array(self):
        return np.array([[self.j11, self.j12], [self.j21, self.j22]])


def identity_transformation(kernel: KernelSpec, nodes=((0.0, 0.0),)) -> Transformation:
    nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
    return Transformation(kernel, nodes, np.zeros_like(nodes))


def _pairwise_distances(a, b):
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def kernel_matrix(kernel: KernelSpec, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return kernels.evaluate(kernel, _pairwise_distances(points, points))


def _singular(points, k):
    d = np.linalg.norm(points - points[k], axis=1)
    d[k] = np.inf
    j = int(np.argmin(d)) if len(points) > 1 else k
    return SingularSystemError(
        f"interpolation matrix is singular at landmark {k}: it cannot be separated from "
        f"landmark {j} (distance {d[j]:.3g}); increase the separation or reduce the locality")


def _factorize(A, points):
    scale = np.abs(A).max()
    tol = PIVOT_TOL * scale
    try:
        c, lower = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
        pivots = np.diag(c) ** 2
        if pivots.min() > tol:
            cond = float(pivots.max() / pivots.min())
            return "cholesky", cond, lambda b: scipy.linalg.cho_solve((c, lower), b,
                                                                       check_finite=False)
    except np.linalg.LinAlgError:
        pass
    with warnings.catch_warnings():
        # exact zero pivots are reported below with landmark context
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    small = np.flatnonzero(np.abs(np.diag(lu)) <= tol)
    if small.size:
        raise _singular(points, int(small[0]))
    anorm = np.abs(A).sum(axis=0).max()
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    cond = float(1.0 / rcond) if rcond > 0 else float("inf")
    return "pivoted-elimination", cond, lambda b: scipy.linalg.lu_solve((lu, piv), b,
                                                                         check_finite=False)


def fit(pairs: LandmarkPairs, kernel: KernelSpec):
    """Fit the interpolating deformation.

    Tries a Cholesky factorization first and falls back to partially pivoted
    elimination. Returns ``(Transformation, SolveDiagnostics)``.

    Raises
    ------
    SingularSystemError
        if a pivot falls below ``1e-14 * max|A|``.
    """
    x = pairs.source
    rhs = pairs.displacements
    A = kernel_matrix(kernel, x)
    method, cond, solve = _factorize(A, x)
    alpha = solve(rhs)
    res = rhs - A @ alpha
    # a few steps of iterative refinement; keep only improving updates
    for _ in range(3):
        err = np.abs(res).max()
        if err == 0.0:
            break
        candidate = alpha + solve(res)
        cand_res = rhs - A @ candidate
        if np.abs(cand_res).max() >= err:
            break
        alpha, res = candidate, cand_res

    t = Transformation(kernel, x, alpha)
    max_residual = float(np.abs(map_point(t, x) - pairs.target).max())
    if cond > ILL_CONDITIONED:
        logger.warning("interpolation matrix is ill-conditioned (estimate %.3g) for %s",
                       cond, kernel)
    if max_residual > INTERPOLATION_TOL:
        logger.warning("landmark residual %.3g exceeds %g for %s", max_residual,
                       INTERPOLATION_TOL, kernel)
    return t, SolveDiagnostics(method, cond, max_residual)


def displace(t: Transformation, p):
    """Displacement ``F(p)``; a tuple for one point, an ``(M, 2)`` array for many."""
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    phi = kernels.evaluate(t.kernel, _pairwise_distances(pts, t.nodes))
    out = phi @ t.coefficients
    if single:
        return float(out[0, 0]), float(out[0, 1])
    return out


def map_point(t: Transformation, p):
    """``p + F(p)``; a :class:`Point2` for one point, an ``(M, 2)`` array for many."""
    pts = np.asarray(p, dtype=float)
    if pts.ndim == 1:
        dx, dy = displace(t, pts)
        return Point2(float(pts[0] + dx), float(pts[1] + dy))
    return pts + displace(t, pts)


def jacobian_field(t: Transformation, points) -> np.ndarray:
    """Jacobian matrices of the deformation at each point, shape ``(M, 2, 2)``.

    ``J[m, k, l] = delta_kl + sum_j alpha_jk * dphi/dx_l``. For matern12 the
    gradient is undefined at a node and :class:`SingularGradientError` is
    raised; for the other families it is zero there.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    diff = pts[:, None, :] - t.nodes[None, :, :]
    r = np.sqrt(np.einsum("mjk,mjk->mj", diff, diff))
    at_node = r <= NODE_RADIUS
    if np.any(at_node) and not kernels.is_smooth_at_origin(t.kernel.family):
        m, j = np.argwhere(at_node)[0]
        raise SingularGradientError(
            f"{t.kernel.family} is not differentiable at node {j} "
            f"({t.nodes[j, 0]:g}, {t.nodes[j, 1]:g})")
    dphi = kernels.radial_derivative(t.kernel, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        weight = np.where(at_node, 0.0, dphi / r)
    grad = weight[:, :, None] * diff  # (M, N, 2)
    J = np.einsum("jk,mjl->mkl", t.coefficients, grad)
    J[:, 0, 0] += 1.0
    J[:, 1, 1] += 1.0
    return J


def jacobian_determinant(t: Transformation, points) -> np.ndarray:
    J = jacobian_field(t, points)
    return J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]


def jacobian(t: Transformation, p) -> Jacobian2:
    """Analytic Jacobian of the deformation at a single point."""
    J = jacobian_field(t, np.asarray(p, dtype=float).reshape(1, 2))[0]
    return Jacobian2(float(J[0, 0]), float(J[0, 1]), float(J[1, 0]), float(J[1, 1]))
