"""Command-line entry point: ``hrst enhance|mmi|calibrate|metrics``."""
import argparse
import csv
import logging
import sys

import numpy as np

from .complexity import ComplexityConfig, fit_scale_model, mmi, read_calibration_csv
from .exceptions import HRSTError
from .image import merge_patches, read_image, split_patches, to_luma, write_image
from .metrics import psnr, ssim
from .pipeline import HRSTEnhancer, default_thread_count

log = logging.getLogger("hrst")


def _parse_layers(text):
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


def build_parser():
    parser = argparse.ArgumentParser(prog="hrst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="super-resolve an image with texture enhancement")
    p.add_argument("--input", required=True, help="low-resolution image")
    p.add_argument("--initial-hr", help="initial HR image from an external SR method")
    p.add_argument("--weights", required=True, help="HRSTNET1 weight file")
    p.add_argument("--arch", choices=["vgg16", "tiny"], default="vgg16")
    p.add_argument("--pooling", choices=["max", "avg"], default="max")
    p.add_argument("--output", required=True)
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--alpha-beta-ratio", type=float, default=1e4)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--style-layers", type=_parse_layers, default=(1, 3, 5, 8, 11))
    p.add_argument("--content-layers", type=_parse_layers, default=(7, 10, 13))
    p.add_argument("--phi", type=float, help="override the estimated scale factor")
    p.add_argument("--slope", type=float, default=-4.626)
    p.add_argument("--intercept", type=float, default=0.792)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--4k", dest="patch_mode", action="store_true", help="process in overlapping patches")
    p.add_argument("--patch", type=int, default=240)
    p.add_argument("--overlap", type=float, default=0.3)
    p.add_argument("--threads", type=int, default=None,
                   help="patch workers (default: $HRST_THREADS or 1)")
    p.add_argument("--dump-style", help="also write the generated style image here")
    p.add_argument("--trace", help="write the loss trace as CSV")
    p.add_argument("--verbose", "-v", action="store_true")

    p = sub.add_parser("mmi", help="print the MMI complexity of an image")
    p.add_argument("--input", required=True)
    p.add_argument("--bins", type=int, default=16)

    p = sub.add_parser("calibrate", help="fit slope/intercept from delta,phi samples")
    p.add_argument("--samples", required=True)

    p = sub.add_parser("metrics", help="print PSNR and SSIM between two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    return parser


def _write_trace(path, diags):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if len(diags) == 1:
            writer.writerow(["iteration", "loss"])
            writer.writerows((i, repr(v)) for i, v in enumerate(diags[0].loss_trace))
        else:
            writer.writerow(["patch", "iteration", "loss"])
            for k, d in enumerate(diags):
                writer.writerows((k, i, repr(v)) for i, v in enumerate(d.loss_trace))


def _style_image(shape, diags, patch_size, overlap):
    if len(diags) == 1:
        return diags[0].style
    grid = split_patches(np.zeros(shape), patch_size, overlap)
    grid.patches = [(ox, oy, d.style) for (ox, oy, _), d in zip(grid.patches, diags)]
    return merge_patches(grid)


def cmd_enhance(args):
    lr = read_image(args.input)
    initial = read_image(args.initial_hr) if args.initial_hr else None
    est = HRSTEnhancer(
        weights=args.weights, arch=args.arch, pooling=args.pooling, factor=args.factor,
        alpha=args.alpha_beta_ratio, beta=1.0, iterations=args.iterations,
        style_layers=args.style_layers, content_layers=args.content_layers,
        slope=args.slope, intercept=args.intercept, num_bins=args.bins, phi=args.phi,
        patch_mode=args.patch_mode, patch_size=args.patch, overlap=args.overlap,
        n_jobs=args.threads or default_thread_count(),
    ).fit()
    out = est.transform(lr, initial_hr=initial)
    write_image(args.output, out)
    diags = est.diagnostics_ if isinstance(est.diagnostics_, list) else [est.diagnostics_]
    if args.dump_style:
        write_image(args.dump_style, _style_image(out.shape, diags, args.patch, args.overlap))
    if args.trace:
        _write_trace(args.trace, diags)
    if args.verbose:
        for k, d in enumerate(diags):
            print(
                f"patch {k}: delta={d.delta:.6f} phi={d.phi:.4f} phi_hat={d.phi_hat:.3f} "
                f"iterations={d.iterations} loss={d.loss_trace[0]:.6g}->{d.loss_trace[-1]:.6g} "
                f"reason={d.termination_reason} time={d.seconds:.2f}s",
                file=sys.stderr,
            )
        log.info("network checksum %s", est.network_.checksum)
    return 0


def cmd_mmi(args):
    img = read_image(args.input)
    print(f"{mmi(to_luma(img), ComplexityConfig(args.bins)):.6f}")
    return 0


def cmd_calibrate(args):
    model = fit_scale_model(read_calibration_csv(args.samples))
    print(f"slope {model.slope:.6f}")
    print(f"intercept {model.intercept:.6f}")
    return 0


def cmd_metrics(args):
    a, b = read_image(args.a), read_image(args.b)
    print(f"psnr {psnr(a, b):.4f}")
    print(f"ssim {ssim(a, b):.6f}")
    return 0


COMMANDS = {"enhance": cmd_enhance, "mmi": cmd_mmi, "calibrate": cmd_calibrate, "metrics": cmd_metrics}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except HRSTError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
