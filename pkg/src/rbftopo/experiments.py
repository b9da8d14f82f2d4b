"""
Grid deformation, field export and the reproduction presets.

Presets
-------
``fig1``   one landmark (0.5, 0.5) -> (0.6, 0.7) on [0, 1]^2, each kernel at the
           smallest locality that keeps the map topology preserving.
``fig2``   det J(0, y) along the rhombus axis for the six kernels.
``fig3``   four rhombus landmarks in [0, 1]^2 with the lower one pulled down,
           gaussian sigma = 50 and c = 100 for the other kernels.
``table1`` minimum locality / shift ratios, published and strict.
"""
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rhombus, svg, topology
from .errors import InvalidParameterError
from .kernels import KernelFamily, KernelSpec
from .registration import LandmarkPairs, Point2, Transformation, displace, fit, map_point

__all__ = [
    "GridSpec",
    "DeformedGrid",
    "deform_grid",
    "render_svg",
    "export_field_csv",
    "PRESETS",
    "preset",
    "run_preset",
    "table1_rows",
    "format_table1",
    "write_atomic",
]

FIG1_LOCALITY = {
    KernelFamily.WENDLAND31: 0.6,
    KernelFamily.WU12: 0.58,
    KernelFamily.GAUSSIAN: 0.25,
    KernelFamily.MATERN12: 0.22,
    KernelFamily.MATERN32: 0.105,
    KernelFamily.MATERN52: 0.08,
}
FIG3_SOURCE = ((0.5, 0.65), (0.35, 0.5), (0.65, 0.5), (0.5, 0.35))
FIG3_TARGET = ((0.5, 0.65), (0.35, 0.5), (0.65, 0.5), (0.5, 0.25))
FIG3_SIGMA = 50.0
FIG3_C = 100.0
# fig3 rescaled to the unit rhombus: half-diagonal 0.15, shift 0.1
FIG2_SCALE = 0.15
FIG2_DELTA = 0.1 / FIG2_SCALE
TABLE1_PUBLISHED = {
    KernelFamily.GAUSSIAN: 1.21,
    KernelFamily.WENDLAND31: 2.98,
    KernelFamily.WU12: 2.80,
    KernelFamily.MATERN12: 1.10,
    KernelFamily.MATERN32: 0.52,
    KernelFamily.MATERN52: 0.3960,
}
FAMILY_ORDER = (KernelFamily.WENDLAND31, KernelFamily.WU12, KernelFamily.GAUSSIAN,
                KernelFamily.MATERN12, KernelFamily.MATERN32, KernelFamily.MATERN52)
PRESETS = ("fig1", "fig2", "fig3", "table1")


@dataclass(frozen=True)
class GridSpec:
    origin: Point2 = Point2(0.0, 0.0)
    extent: tuple = (1.0, 1.0)
    lines: int = 21
    samples_per_line: int = 200

    def __post_init__(self):
        object.__setattr__(self, "origin", Point2(*map(float, self.origin)))
        w, h = map(float, self.extent)
        if not (w > 0 and h > 0):
            raise InvalidParameterError("grid extent must be positive")
        if self.lines < 2 or self.samples_per_line < 2:
            raise InvalidParameterError("grids need at least 2 lines and 2 samples per line")
        object.__setattr__(self, "extent", (w, h))

    def lattice(self) -> np.ndarray:
        return topology.lattice(self.origin, self.extent, self.lines, self.lines)


@dataclass(frozen=True, eq=False)
class DeformedGrid:
    polylines: tuple  # of (samples_per_line, 2) arrays
    source_landmarks: np.ndarray
    target_landmarks: np.ndarray


def grid_lines(g: GridSpec):
    ox, oy = g.origin
    w, h = g.extent
    ticks = np.arange(g.lines) / (g.lines - 1)
    along = np.arange(g.samples_per_line) / (g.samples_per_line - 1)
    lines = []
    for v in ticks:  # horizontal
        lines.append(np.column_stack([ox + w * along, np.full_like(along, oy + h * v)]))
    for u in ticks:  # vertical
        lines.append(np.column_stack([np.full_like(along, ox + w * u), oy + h * along]))
    return lines


def deform_grid(t: Transformation, g: GridSpec, pairs: LandmarkPairs = None) -> DeformedGrid:
    """Images of the horizontal and vertical grid lines under the deformation."""
    lines = tuple(map_point(t, line) for line in grid_lines(g))
    if pairs is None:
        src = tgt = np.empty((0, 2))
    else:
        src, tgt = pairs.source, pairs.target
    return DeformedGrid(lines, np.asarray(src), np.asarray(tgt))


def render_svg(d: DeformedGrid, title=None) -> bytes:
    return svg.render_deformed_grid(d.polylines, d.source_landmarks, d.target_landmarks, title)


def _g9(v) -> str:
    return f"{float(v) + 0.0:.9g}"


def export_field_csv(t: Transformation, g: GridSpec, what: str = "displacement") -> bytes:
    """Displacement (``x,y,dx,dy``) or determinant (``x,y,det``) on the grid lattice.

    Determinants undefined at matern12 nodes are written as empty cells.
    """
    pts = g.lattice()
    if what == "displacement":
        vals = displace(t, pts)
        lines = ["x,y,dx,dy"]
        lines += [f"{_g9(x)},{_g9(y)},{_g9(u)},{_g9(v)}" for (x, y), (u, v) in zip(pts, vals)]
    elif what == "det":
        det = topology.determinant_on(t, pts)
        lines = ["x,y,det"]
        lines += [f"{_g9(x)},{_g9(y)},{'' if math.isnan(d) else _g9(d)}"
                  for (x, y), d in zip(pts, det)]
    else:
        raise InvalidParameterError(f"unknown field {what!r} (expected displacement or det)")
    return ("\n".join(lines) + "\n").encode("ascii")


# --- presets ------------------------------------------------------------------

def _kernel_entry(spec: KernelSpec):
    return {"family": spec.family.value, "locality": spec.locality}


def _fig2_kernels():
    return [KernelSpec(f, (FIG3_SIGMA if f is KernelFamily.GAUSSIAN else FIG3_C) / FIG2_SCALE)
            for f in FAMILY_ORDER]


def preset(name: str) -> dict:
    """Configuration manifest of a named reproduction preset."""
    if name == "fig1":
        return {
            "name": "fig1",
            "source": [[0.5, 0.5]],
            "target": [[0.6, 0.7]],
            "delta": 0.2,
            "domain": {"origin": [0.0, 0.0], "extent": [1.0, 1.0]},
            "grid": {"lines": 21, "samples_per_line": 200},
            "scan": {"rows": 101, "cols": 101},
            "kernels": [_kernel_entry(KernelSpec(f, FIG1_LOCALITY[f])) for f in FAMILY_ORDER],
        }
    if name == "fig3":
        return {
            "name": "fig3",
            "source": [list(p) for p in FIG3_SOURCE],
            "target": [list(p) for p in FIG3_TARGET],
            "domain": {"origin": [0.0, 0.0], "extent": [1.0, 1.0]},
            "grid": {"lines": 21, "samples_per_line": 200},
            "scan": {"rows": 101, "cols": 101},
            "kernels": [_kernel_entry(KernelSpec(f, FIG3_SIGMA if f is KernelFamily.GAUSSIAN
                                                 else FIG3_C)) for f in FAMILY_ORDER],
        }
    if name == "fig2":
        return {
            "name": "fig2",
            "delta": FIG2_DELTA,
            "y_max": 5.0,
            "samples": 400,
            "kernels": [_kernel_entry(k) for k in _fig2_kernels()],
        }
    if name == "table1":
        return {
            "name": "table1",
            "rows": [{"family": f.value, "mode": m.value}
                     for f in FAMILY_ORDER for m in topology.SupportMode],
        }
    raise InvalidParameterError(f"unknown preset {name!r} (expected one of {', '.join(PRESETS)})")


def table1_rows():
    rows = []
    for f in FAMILY_ORDER:
        paper = topology.min_support_ratio(f, "paper").ratio
        strict = topology.min_support_ratio(f, "strict").ratio
        rows.append((f, paper, strict, TABLE1_PUBLISHED[f]))
    return rows


def format_table1(rows=None) -> str:
    rows = table1_rows() if rows is None else rows
    out = ["family,parameter,paper_ratio,strict_ratio,published"]
    for f, paper, strict, published in rows:
        out.append(f"{f.value},{f.locality_symbol},{paper:.4f},{strict:.4f},{published:g}")
    return "\n".join(out) + "\n"


def write_atomic(path, data: bytes):
    """Write bytes through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _landmark_figure(manifest, outdir, prefix):
    pairs = LandmarkPairs(np.array(manifest["source"]), np.array(manifest["target"]))
    g = GridSpec(tuple(manifest["domain"]["origin"]), tuple(manifest["domain"]["extent"]),
                 **manifest["grid"])
    written = []
    summary = ["kernel,locality,condition_estimate,max_residual,min_det,negative_count,"
               "skipped_nodes"]
    for entry in manifest["kernels"]:
        spec = KernelSpec(entry["family"], entry["locality"])
        t, diag = fit(pairs, spec)
        title = f"{prefix}: {spec}"
        path = Path(outdir) / f"{prefix}_{spec.family.value}.svg"
        write_atomic(path, render_svg(deform_grid(t, g, pairs), title))
        written.append(path)
        rep = topology.scan_jacobian(t, g.origin, g.extent, manifest["scan"]["rows"],
                                     manifest["scan"]["cols"])
        summary.append(f"{spec.family.value},{_g9(spec.locality)},"
                       f"{_g9(diag.condition_estimate)},{_g9(diag.max_residual)},"
                       f"{_g9(rep.min_det)},{rep.negative_count},{rep.skipped_nodes}")
    path = Path(outdir) / f"{prefix}_summary.csv"
    write_atomic(path, ("\n".join(summary) + "\n").encode("ascii"))
    written.append(path)
    return written


def _fig2(manifest, outdir):
    specs = [KernelSpec(k["family"], k["locality"]) for k in manifest["kernels"]]
    profiles = rhombus.fig2_profile(specs, manifest["delta"], manifest["y_max"],
                                    manifest["samples"])
    csv_path = Path(outdir) / "fig2_profiles.csv"
    write_atomic(csv_path, rhombus.profiles_to_csv(profiles))
    series = []
    for k, prof in enumerate(profiles):
        series.append((f"{prof.kernel} exact", prof.y_values, prof.exact, k, False))
        if prof.approx is not None:
            series.append((f"{prof.kernel} approx", prof.y_values, prof.approx, k, True))
    svg_path = Path(outdir) / "fig2.svg"
    write_atomic(svg_path, svg.render_profiles(
        series, title=f"det J(0, y), delta = {manifest['delta']:.6g}"))
    return [csv_path, svg_path]


def run_preset(name: str, outdir) -> list:
    """Write every output file of a preset; returns the written paths."""
    manifest = preset(name)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if name in ("fig1", "fig3"):
        written = _landmark_figure(manifest, outdir, name)
    elif name == "fig2":
        written = _fig2(manifest, outdir)
    else:
        path = outdir / "table1.csv"
        write_atomic(path, format_table1().encode("ascii"))
        written = [path]
    path = outdir / f"{name}_manifest.json"
    write_atomic(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("ascii"))
    return written + [path]
