"""Command-line front end.

One binary with subcommands; all configuration comes from flags so a run is
reproducible from the command line alone. Exit codes: 0 success, 1 usage
error, 2 data error, 3 infeasible compression target.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _formatter(prog):
    return argparse.ArgumentDefaultsHelpFormatter(prog, width=96)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shic", formatter_class=_formatter,
                     description="Greyscale image compression with isotropic "
                                 "and anisotropic Shepard inpainting.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    enc = sub.add_parser("encode", formatter_class=_formatter,
                         help="compress a PGM image into a .shic container")
    enc.add_argument("-i", "--input", required=True, help="input PGM path")
    enc.add_argument("-o", "--output", required=True, help="output .shic path")
    enc.add_argument("--codec", default="rjip",
                     choices=["rjip", "rjip-a", "tree-iso", "tree-aniso"],
                     help="codec to use")
    enc.add_argument("--ratio", type=float, default=None,
                     help="target compression ratio (searched)")
    enc.add_argument("--split-error", type=float, default=None,
                     help="target splitting error (tree codecs, fixed)")
    enc.add_argument("--grid", type=int, default=None,
                     help="fixed grid spacing r (regular codecs, skips search)")
    enc.add_argument("--levels", type=int, default=32,
                     help="quantisation levels q when --grid is given")
    enc.add_argument("--seed", type=int, default=0, help="random seed")

    dec = sub.add_parser("decode", formatter_class=_formatter,
                         help="decompress a .shic container into a PGM image")
    dec.add_argument("-i", "--input", required=True, help="input .shic path")
    dec.add_argument("-o", "--output", required=True, help="output PGM path")

    inp = sub.add_parser("inpaint", formatter_class=_formatter,
                         help="inpaint from a regular mask without coding")
    inp.add_argument("-i", "--input", required=True, help="input PGM path")
    inp.add_argument("-o", "--output", required=True, help="output PGM path")
    inp.add_argument("--mask-grid", type=int, default=4,
                     help="regular mask spacing r")
    inp.add_argument("--mode", default="iso", choices=["iso", "aniso", "hom"],
                     help="inpainting operator")
    inp.add_argument("--contrast", type=float, default=8.0,
                     help="contrast parameter lambda (aniso)")
    inp.add_argument("--sigma-scale", type=float, default=1.0,
                     help="kernel width scale (aniso)")
    inp.add_argument("--tolerance", type=float, default=1e-6,
                     help="relative residual tolerance (hom)")

    rd = sub.add_parser("rd", formatter_class=_formatter,
                        help="rate-distortion sweep, CSV output")
    rd.add_argument("-i", "--input", required=True, help="input PGM path")
    rd.add_argument("-o", "--output", required=True, help="output CSV path")
    rd.add_argument("--codec", default="rjip",
                    choices=["rjip", "rjip-a", "tree-iso", "tree-aniso"],
                    help="codec to sweep")
    rd.add_argument("--ratios", default="20,40,80,160",
                    help="comma-separated target ratios")
    rd.add_argument("--seed", type=int, default=0, help="random seed")

    disk = sub.add_parser("disk-bench", formatter_class=_formatter,
                          help="synthetic-disk inpainting comparison")
    disk.add_argument("--seed", type=int, default=0, help="random seed")

    scale = sub.add_parser("scale-bench", formatter_class=_formatter,
                           help="encode-cost scaling over downsampled sizes")
    scale.add_argument("-i", "--input", required=True, help="input PGM path")
    scale.add_argument("-o", "--output", required=True,
                       help="output CSV path")
    scale.add_argument("--levels", type=int, default=4,
                       help="number of scales")
    scale.add_argument("--seed", type=int, default=0, help="random seed")
    scale.add_argument("--skip-hom", action="store_true",
                       help="skip the slow diffusion comparator")
    return parser


def _read_image(path):
    from .image import read_pgm
    return read_pgm(path)


def _cmd_encode(args) -> int:
    from . import container
    from .evaluate import encode_with_target
    from .rjip import rjip_a_encode_fixed, rjip_encode_fixed
    from .subdivision import subdivide_encode

    img = _read_image(args.input)
    feasible = True
    if args.grid is not None:
        if args.codec == "rjip":
            result = rjip_encode_fixed(img, args.grid, args.levels)
        elif args.codec == "rjip-a":
            result = rjip_a_encode_fixed(img, args.grid, args.levels,
                                         seed=args.seed)
        else:
            raise _UsageError("--grid applies to regular-grid codecs only")
    elif args.split_error is not None:
        if args.codec not in ("tree-iso", "tree-aniso"):
            raise _UsageError("--split-error applies to tree codecs only")
        mode = "isotropic" if args.codec == "tree-iso" else "anisotropic"
        result = subdivide_encode(img, args.split_error, mode, args.seed)
    elif args.ratio is not None:
        result, feasible = encode_with_target(img, args.codec, args.ratio,
                                              args.seed)
    else:
        raise _UsageError("encode needs --ratio, --split-error, or --grid")
    with open(args.output, "wb") as f:
        f.write(result.blob)
    print(f"codec={args.codec} bytes={len(result.blob)} "
          f"ratio={result.ratio:.2f} mse={result.mse:.2f}")
    if not feasible:
        print("target ratio infeasible; emitted best effort",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_decode(args) -> int:
    from .evaluate import decode_any
    from .image import write_pgm
    with open(args.input, "rb") as f:
        blob = f.read()
    rec = decode_any(blob)
    write_pgm(args.output, rec)
    print(f"decoded {rec.shape[1]}x{rec.shape[0]} -> {args.output}")
    return EXIT_OK


def _cmd_inpaint(args) -> int:
    from .homdiff import SolverConfig, inpaint_hom
    from .image import make_regular_mask, sample_values, write_pgm
    from .shepard_aniso import inpaint_aniso
    from .shepard_iso import compute_sigma, inpaint_iso

    img = _read_image(args.input)
    height, width = img.shape
    mask = make_regular_mask(width, height, args.mask_grid)
    values = sample_values(img, mask)
    if args.mode == "iso":
        rec = inpaint_iso(mask, values, compute_sigma(mask.size, width,
                                                      height), width, height)
    elif args.mode == "aniso":
        sigma = args.sigma_scale * compute_sigma(mask.size, width, height)
        rec = inpaint_aniso(mask, values, np.full(mask.size, sigma),
                            args.contrast, width, height)
    else:
        rec = inpaint_hom(mask, values, width, height,
                          SolverConfig(tolerance=args.tolerance))
    write_pgm(args.output, rec)
    from .image import mse
    print(f"mode={args.mode} mse={mse(rec, img):.2f}")
    return EXIT_OK


def _cmd_rd(args) -> int:
    from .evaluate import rd_sweep, write_csv
    img = _read_image(args.input)
    try:
        targets = [float(t) for t in args.ratios.split(",") if t]
    except ValueError:
        raise _UsageError(f"bad --ratios list: {args.ratios!r}") from None
    if not targets or sorted(targets) != targets:
        raise _UsageError("--ratios must be ascending and non-empty")
    points = rd_sweep(img, args.codec, targets, args.seed)
    with open(args.output, "w", newline="\n") as f:
        write_csv(points, f)
    for p in points:
        print(p.csv_row())
    return EXIT_OK if all(p.feasible for p in points) else EXIT_INFEASIBLE


def _cmd_disk_bench(args) -> int:
    from .evaluate import disk_experiment
    report = disk_experiment(seed=args.seed, verbose=True)
    print(f"mask: {report['mask_points']} points "
          f"({100 * report['density']:.1f}% density)")
    for name in ("isotropic", "anisotropic", "homogeneous"):
        print(f"{name}: MSE {report[f'{name}_mse']:.2f} "
              f"({report[f'{name}_s']:.1f}s)")
    return EXIT_OK


def _cmd_scale_bench(args) -> int:
    from .evaluate import scaling_csv, scaling_study
    img = _read_image(args.input)
    report = scaling_study(img, levels=args.levels, seed=args.seed,
                           include_hom=not args.skip_hom, verbose=True)
    with open(args.output, "w", newline="\n") as f:
        f.write(scaling_csv(report))
    print(f"rjip op-count slope: {report['rjip_op_slope']:.3f}")
    return EXIT_OK


_COMMANDS = {
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "inpaint": _cmd_inpaint,
    "rd": _cmd_rd,
    "disk-bench": _cmd_disk_bench,
    "scale-bench": _cmd_scale_bench,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    from .container import ContainerError
    from .image import PgmError
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PgmError, ContainerError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
