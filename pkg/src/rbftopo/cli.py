"""Command-line interface.

Exit codes: 0 success, 1 I/O error, 2 validation or usage error,
3 topology guarantee not met (``check``), 4 numerical failure.
"""
import argparse
import logging
import sys

from . import experiments, imaging, kernels, rhombus, topology
from .errors import (ConsistencyError, DegenerateConfigurationError, InvalidArgumentError,
                     InvalidParameterError, SingularGradientError, SingularSystemError,
                     ValidationError)
from .kernels import KernelFamily, KernelSpec
from .registration import fit, read_landmarks

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_TOPOLOGY, EXIT_NUMERIC = 0, 1, 2, 3, 4
FAMILIES = [f.value for f in KernelFamily]


def g9(v) -> str:
    return f"{float(v) + 0.0:.9g}"


def _add_kernel(p):
    p.add_argument("--kernel", required=True, choices=FAMILIES)
    p.add_argument("--locality", required=True, type=float,
                   help="support size c (sigma for the gaussian kernel)")


def _add_landmarks(p):
    p.add_argument("--landmarks", required=True,
                   help="text file with one 'sx sy tx ty' pair per line")
    _add_kernel(p)


def _add_domain(p):
    p.add_argument("--origin", nargs=2, type=float, default=(0.0, 0.0), metavar=("X", "Y"))
    p.add_argument("--extent", nargs=2, type=float, default=(1.0, 1.0), metavar=("W", "H"))


def _spec(args):
    return KernelSpec(args.kernel, args.locality)


def cmd_kernel_eval(args, out):
    spec = _spec(args)
    out.write(f"value {g9(kernels.evaluate(spec, args.r))}\n")
    out.write(f"derivative {g9(kernels.radial_derivative(spec, args.r))}\n")
    if args.r == 0 and not kernels.is_smooth_at_origin(spec.family):
        print("note: derivative at r = 0 is the one-sided radial limit", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args, out):
    t, diag = fit(read_landmarks(args.landmarks), _spec(args))
    out.write(f"kernel {t.kernel}\n")
    out.write(f"method {diag.method}\n")
    out.write(f"condition_estimate {g9(diag.condition_estimate)}\n")
    out.write(f"max_residual {g9(diag.max_residual)}\n")
    out.write("# node_x node_y alpha_x alpha_y\n")
    for (x, y), (a, b) in zip(t.nodes, t.coefficients):
        out.write(f"{g9(x)} {g9(y)} {g9(a)} {g9(b)}\n")
    return EXIT_OK


def cmd_warp_grid(args, out):
    pairs = read_landmarks(args.landmarks)
    t, _ = fit(pairs, _spec(args))
    g = experiments.GridSpec(tuple(args.origin), tuple(args.extent), args.lines, args.samples)
    if args.out.lower().endswith(".svg"):
        data = experiments.render_svg(experiments.deform_grid(t, g, pairs))
    elif args.out.lower().endswith(".csv"):
        data = experiments.export_field_csv(t, g, args.field)
    else:
        raise ValidationError("--out must end in .svg or .csv")
    experiments.write_atomic(args.out, data)
    return EXIT_OK


def cmd_warp_image(args, out):
    img = imaging.read_pgm(args.input)
    warped = imaging.warp_image(img, read_landmarks(args.landmarks), _spec(args))
    experiments.write_atomic(args.out, imaging.encode_pgm(warped, binary=not args.ascii))
    return EXIT_OK


def cmd_jacobian_scan(args, out):
    t, _ = fit(read_landmarks(args.landmarks), _spec(args))
    rep = topology.scan_jacobian(t, tuple(args.origin), tuple(args.extent), args.grid, args.grid)
    out.write(rep.format() + "\n")
    return EXIT_OK


def cmd_min_support(args, out):
    bound = topology.min_support_ratio(args.kernel, args.mode)
    sym = KernelFamily(args.kernel).locality_symbol
    out.write(f"ratio {g9(bound.ratio)}\n")
    out.write(f"{sym}_min {g9(bound.min_locality(args.delta))}\n")
    return EXIT_OK


def cmd_check(args, out):
    spec = _spec(args)
    ok = topology.check_one_landmark(args.delta, spec)
    need = topology.min_support_ratio(spec.family, "strict").min_locality(args.delta)
    verdict = "preserved" if ok else "not guaranteed"
    out.write(f"{verdict}: {spec}, delta {g9(args.delta)}, strict minimum {g9(need)}\n")
    return EXIT_OK if ok else EXIT_TOPOLOGY


def cmd_rhombus(args, out):
    spec = _spec(args)
    model = rhombus.build_rhombus(spec, args.delta)
    out.write(f"alpha {g9(model.alpha_adj)}\nbeta {g9(model.beta_opp)}\n")
    out.write("c2 " + " ".join(g9(v) for v in model.c2) + "\n")
    if args.out:
        prof = rhombus.fig2_profile([spec], args.delta, args.y_max, args.samples)
        experiments.write_atomic(args.out, rhombus.profiles_to_csv(prof))
    return EXIT_OK


def cmd_reproduce(args, out):
    for path in experiments.run_preset(args.name, args.outdir):
        out.write(f"wrote {path}\n")
    if args.name == "table1":
        out.write(experiments.format_table1())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rbftopo",
        description="Landmark RBF registration with topology-preservation analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-eval", help="kernel value and radial derivative at r")
    _add_kernel(p)
    p.add_argument("--r", required=True, type=float)
    p.set_defaults(func=cmd_kernel_eval)

    p = sub.add_parser("fit", help="fit coefficients and print diagnostics")
    _add_landmarks(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("warp-grid", help="deformed grid as SVG or a field as CSV")
    _add_landmarks(p)
    _add_domain(p)
    p.add_argument("--lines", type=int, default=21)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--field", choices=("displacement", "det"), default="displacement",
                   help="CSV content (ignored for SVG)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_warp_grid)

    p = sub.add_parser("warp-image", help="backward-warp a PGM image")
    _add_landmarks(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ascii", action="store_true", help="write P2 instead of P5")
    p.set_defaults(func=cmd_warp_image)

    p = sub.add_parser("jacobian-scan", help="det J over a lattice")
    _add_landmarks(p)
    _add_domain(p)
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=cmd_jacobian_scan)

    p = sub.add_parser("min-support", help="minimum locality for a one-landmark shift")
    p.add_argument("--kernel", required=True, choices=FAMILIES)
    p.add_argument("--delta", required=True, type=float)
    p.add_argument("--mode", choices=("paper", "strict"), default="paper")
    p.set_defaults(func=cmd_min_support)

    p = sub.add_parser(
        "check", help="exit 0 if a one-landmark shift cannot fold the map, 3 otherwise",
        description="Uses the strict bound (true derivative minimum), which is a guarantee "
                    "for every shift direction; delta is the larger shift component.")
    _add_kernel(p)
    p.add_argument("--delta", required=True, type=float)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rhombus", help="four-landmark rhombus coefficients and det profile")
    _add_kernel(p)
    p.add_argument("--delta", required=True, type=float)
    p.add_argument("--y-max", type=float, default=5.0)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--out", help="CSV file for the det J(0, y) profile")
    p.set_defaults(func=cmd_rhombus)

    p = sub.add_parser("reproduce", help="write all outputs of a preset")
    p.add_argument("name", choices=experiments.PRESETS)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s",
                        stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except (ValidationError, InvalidParameterError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularSystemError, SingularGradientError, DegenerateConfigurationError,
            ConsistencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
