"""
Topology preservation checks.

For a single landmark shifted by ``(dx, dy)`` the deformation is
``x + (dx, dy) * phi(|x - p|)`` and its Jacobian determinant is
``1 + phi'(r) * (dx cos(theta) + dy sin(theta))``. With ``delta = max(dx, dy)``
the worst direction gives the sufficient condition

    delta * phi'(r) > -1 / sqrt(2)   for all r,

so the locality must exceed ``sqrt(2) * |min phi'_unit| * delta``. The ratio
locality/delta is reported in two modes:

* ``paper``: the published closed forms, including the matern12 entry that
  places the derivative minimum at r = c/4;
* ``strict``: the numerical minimum of the unit derivative. It agrees with
  ``paper`` for every family except matern12, whose derivative infimum is
  the limit -1/c as r -> 0, giving sqrt(2).
"""
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import InvalidParameterError
from .kernels import KernelFamily, KernelSpec
from .registration import Point2, Transformation, jacobian_determinant

__all__ = [
    "SupportMode",
    "SupportBound",
    "JacobianScanReport",
    "min_support_ratio",
    "check_one_landmark",
    "lattice",
    "scan_jacobian",
]

SKIP_RADIUS = 1e-9
_CHUNK = 8192


class SupportMode(str, Enum):
    PAPER = "paper"
    STRICT = "strict"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SupportBound:
    family: KernelFamily
    mode: SupportMode
    ratio: float

    def min_locality(self, delta: float) -> float:
        return self.ratio * delta


def _wu_ratio() -> float:
    # phi'(s) = -(7/4) s (1-s)^3 (8 + 9s + 3s^2); its minimum is the root in (0, 1)
    # of the derivative of that polynomial
    P = np.polynomial.Polynomial
    s = P([0.0, 1.0])
    g = 1.75 * s * (1 - s) ** 3 * (8 + 9 * s + 3 * s**2)
    roots = g.deriv().roots()
    inner = [z.real for z in roots if abs(z.imag) < 1e-12 and 0.0 < z.real < 1.0]
    return math.sqrt(2.0) * max(g(z) for z in inner)


_PAPER_RATIO = {
    KernelFamily.GAUSSIAN: 2.0 / math.sqrt(math.e),
    KernelFamily.WENDLAND31: math.sqrt(2.0) * 135.0 / 64.0,
    KernelFamily.WU12: _wu_ratio(),
    KernelFamily.MATERN12: math.sqrt(2.0) / math.exp(0.25),
    KernelFamily.MATERN32: math.sqrt(2.0) / math.e,
    KernelFamily.MATERN52: (2 * math.sqrt(2.0) + math.sqrt(10.0))
    / (3 * math.exp((math.sqrt(5.0) + 1) / 2)),
}


@lru_cache(maxsize=None)
def _strict_minimum(family: KernelFamily) -> kernels.DerivativeMinimum:
    return kernels.unit_derivative_min(family)


def min_support_ratio(family, mode="paper") -> SupportBound:
    """Minimum locality / delta ratio guaranteeing a positive Jacobian."""
    family = KernelFamily(family)
    try:
        mode = SupportMode(mode)
    except ValueError:
        raise InvalidParameterError(f"mode must be 'paper' or 'strict', got {mode!r}") from None
    if mode is SupportMode.PAPER:
        ratio = _PAPER_RATIO[family]
    else:
        ratio = math.sqrt(2.0) * abs(_strict_minimum(family).value)
    return SupportBound(family, mode, ratio)


def check_one_landmark(delta: float, kernel: KernelSpec) -> bool:
    """True iff a single landmark shift of size `delta` cannot fold the map.

    Uses the strict derivative minimum, so the answer is a guarantee for
    every direction of the shift (delta is the larger shift component).
    """
    delta = float(delta)
    if delta < 0 or not math.isfinite(delta):
        raise InvalidParameterError(f"delta must be nonnegative, got {delta!r}")
    m = _strict_minimum(kernel.family).value
    return delta * abs(m) / kernel.locality < 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class JacobianScanReport:
    grid_rows: int
    grid_cols: int
    min_det: float
    argmin: Point2
    negative_count: int
    skipped_nodes: int

    def format(self) -> str:
        return "\n".join([
            f"grid_rows {self.grid_rows}",
            f"grid_cols {self.grid_cols}",
            f"min_det {self.min_det:.9g}",
            f"argmin {self.argmin.x:.9g} {self.argmin.y:.9g}",
            f"negative_count {self.negative_count}",
            f"skipped_nodes {self.skipped_nodes}",
        ])


def lattice(origin, extent, rows: int, cols: int) -> np.ndarray:
    """Row-major ``(rows*cols, 2)`` lattice covering the closed rectangle."""
    if rows < 2 or cols < 2:
        raise InvalidParameterError("lattice needs at least 2 rows and 2 columns")
    ox, oy = origin
    w, h = extent
    xs = ox + w * np.arange(cols) / (cols - 1)
    ys = oy + h * np.arange(rows) / (rows - 1)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


def node_mask(t: Transformation, points, radius: float = SKIP_RADIUS) -> np.ndarray:
    """Points where the Jacobian is undefined (matern12 nodes); all False otherwise."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if kernels.is_smooth_at_origin(t.kernel.family):
        return np.zeros(len(points), dtype=bool)
    d = np.linalg.norm(points[:, None, :] - t.nodes[None, :, :], axis=-1)
    return np.any(d <= radius, axis=1)


def determinant_on(t: Transformation, points) -> np.ndarray:
    """det J at each point, NaN where the Jacobian is undefined."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    skip = node_mask(t, points)
    det = np.full(len(points), np.nan)
    keep = np.flatnonzero(~skip)
    for start in range(0, len(keep), _CHUNK):
        idx = keep[start:start + _CHUNK]
        det[idx] = jacobian_determinant(t, points[idx])
    return det


def scan_jacobian(t: Transformation, origin=(0.0, 0.0), extent=(1.0, 1.0),
                  rows: int = 101, cols: int = 101) -> JacobianScanReport:
    """Evaluate det J on a uniform lattice and summarize it."""
    pts = lattice(origin, extent, rows, cols)
    det = determinant_on(t, pts)
    valid = ~np.isnan(det)
    skipped = int(np.count_nonzero(~valid))
    if not valid.any():
        return JacobianScanReport(rows, cols, float("nan"), Point2(float("nan"), float("nan")),
                                  0, skipped)
    i = int(np.nanargmin(det))
    return JacobianScanReport(
        grid_rows=rows,
        grid_cols=cols,
        min_det=float(det[i]),
        argmin=Point2(float(pts[i, 0]), float(pts[i, 1])),
        negative_count=int(np.count_nonzero(det[valid] < 0)),
        skipped_nodes=skipped,
    )
