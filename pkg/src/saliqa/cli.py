"""Command-line entry point: ``saliqa <subcommand> ...``.

Exit status is 0 on success, 1 for invalid input (bad manifest, missing
files, bad parameters) and 2 for runtime failures, including per-record
metric errors in a batch run.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import check_map
from .exceptions import SaliqaError
from .explanation import gradcam_combine, read_tensor, svd_first_component
from .harness import (
    METRICS,
    load_manifest,
    read_report,
    run_correlate,
    run_metrics,
    write_correlations,
    write_report,
)
from .image_core import RasterImage, load_image, resize_array, save_image
from .masking import MaskingSpec, aopc, masked_name, masking_series, read_curve
from .saliency import cc, center_prior, kld, load_fixations, nss, sim
from .subjective import bradley_terry, filter_sessions, load_votes, write_scores

logger = logging.getLogger("saliqa")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
MAP_SUFFIXES = (".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _metric_list(text):
    names = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METRICS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown metric(s) {bad}; choose from {','.join(METRICS)}")
    return names


def load_map(path):
    """First channel of an image file as a raw saliency field."""
    return check_map(load_image(path).data[:, :, 0])


def save_map(values, path):
    """Write a nonnegative field as an 8-bit PNG, scaled so its max is white."""
    v = np.asarray(values, dtype=np.float64)
    peak = v.max()
    scaled = v / peak if peak > 0 else np.zeros_like(v)
    save_image(RasterImage(np.clip(scaled, 0.0, 1.0)), path, bit_depth=8)


def cmd_metrics(args):
    records = load_manifest(args.manifest)
    report = run_metrics(records, args.metrics, workers=args.workers)
    write_report(report, args.out)
    return EXIT_RUNTIME if report.has_errors else EXIT_OK


def _stem_index(directory, suffixes):
    out = {}
    for p in sorted(Path(directory).iterdir()):
        if p.suffix.lower() in suffixes:
            out.setdefault(p.stem, p)
    return out


def cmd_salmetrics(args):
    preds = _stem_index(args.pred_dir, MAP_SUFFIXES)
    gts = _stem_index(args.gt_dir, MAP_SUFFIXES)
    fixations = _stem_index(args.fixations_dir, (".csv",)) if args.fixations_dir else {}
    rows, failed = [], False
    for stem, pred_path in preds.items():
        if stem not in gts:
            logger.warning("no ground-truth map for %s", stem)
            failed = True
            continue
        gt = load_map(gts[stem])
        pred = resize_array(load_map(pred_path), gt.shape[1], gt.shape[0])
        row = {"name": stem}
        try:
            if stem in fixations:
                fix = load_fixations(fixations[stem], gt.shape[1], gt.shape[0])
                row["nss"] = nss(pred, fix)
            row["sim"] = sim(pred, gt)
            row["cc"] = cc(pred, gt)
            row["kld"] = kld(pred, gt)
        except SaliqaError as exc:
            logger.warning("%s: %s", stem, exc)
            failed = True
        rows.append(row)
    with open(args.out, "w") as fh:
        fh.write("name,nss,sim,cc,kld\n")
        for row in rows:
            cells = [f"{row[k]:.6f}" if k in row else "" for k in ("nss", "sim", "cc", "kld")]
            fh.write(",".join([row["name"], *cells]) + "\n")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_center_prior(args):
    prior = center_prior(args.width, args.height, args.sigma_frac)
    save_map(prior.values, args.out)
    return EXIT_OK


def cmd_gradcam(args):
    features = read_tensor(args.features)
    gradients = read_tensor(args.gradients)
    cam = gradcam_combine(features, gradients, mode=args.mode)
    save_map(cam.values, args.out)
    return EXIT_OK


def cmd_svd_map(args):
    save_map(svd_first_component(read_tensor(args.features)).values, args.out)
    return EXIT_OK


def cmd_mask(args):
    img = load_image(args.image)
    smap = load_map(args.map)
    if smap.shape != (img.height, img.width):
        smap = resize_array(smap, img.width, img.height)
    spec = MaskingSpec(
        strategy=args.strategy,
        fill=args.fill,
        fill_values=tuple(args.mean_values),
        quantiles=tuple(sorted(set(args.fractions))),
        blur_kernel=args.blur_kernel,
        blur_sigma=args.blur_sigma,
    )
    names = [masked_name(Path(args.image).stem, spec.strategy, f, spec.fill) for f in spec.quantiles]
    if len(set(names)) != len(names):
        raise SaliqaError("fractions collide after rounding to whole percents")
    os.makedirs(args.out_dir, exist_ok=True)
    for name, item in zip(names, masking_series(img, smap, spec)):
        save_image(item.image, os.path.join(args.out_dir, name))
        logger.info("%s: requested %.4f, masked %.4f", name, item.fraction, item.actual_fraction)
    return EXIT_OK


def cmd_aopc(args):
    curve = read_curve(args.curve)
    result = {"aopc": aopc(curve), "baseline": curve.baseline, "points": len(curve.scores)}
    with open(args.out, "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_aggregate(args):
    kept, rejected = filter_sessions(load_votes(args.votes))
    if rejected:
        logger.info("rejected %d session(s): %s", len(rejected), ", ".join(rejected))
    result = bradley_terry(kept, tol=args.tol, max_iter=args.max_iter)
    write_scores(result, args.out)
    if result.degenerate:
        logger.warning("unbounded scores clamped for: %s", ", ".join(result.degenerate))
    return EXIT_OK if result.converged else EXIT_RUNTIME


def cmd_correlate(args):
    table = run_correlate(read_report(args.report), load_manifest(args.manifest))
    write_correlations(table, args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="saliqa", description="Saliency-aware image quality evaluation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="full-reference metrics over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--metrics", type=_metric_list, default=list(METRICS))
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("salmetrics", help="NSS/SIM/CC/KLD for predicted vs ground-truth maps")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--fixations-dir")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_salmetrics)

    p = sub.add_parser("center-prior", help="write a center-prior saliency map")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--sigma-frac", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_center_prior)

    p = sub.add_parser("gradcam", help="combine exported features and gradients")
    p.add_argument("--features", required=True)
    p.add_argument("--gradients", required=True)
    p.add_argument("--mode", choices=("weighted", "elementwise"), default="weighted")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gradcam)

    p = sub.add_parser("svd-map", help="first SVD component of exported features")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_svd_map)

    p = sub.add_parser("mask", help="MoRF/LeRF masking series of one image")
    p.add_argument("--image", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--strategy", choices=("morf", "lerf"), required=True)
    p.add_argument("--fill", choices=("black", "mean"), default="black")
    p.add_argument("--mean-values", type=_floats, default=[0.485, 0.456, 0.406])
    p.add_argument("--fractions", type=_floats, required=True)
    p.add_argument("--blur-kernel", type=int, default=101)
    p.add_argument("--blur-sigma", type=float, default=5.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("aopc", help="area over a perturbation curve")
    p.add_argument("--curve", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aopc)

    p = sub.add_parser("aggregate", help="pairwise votes to Bradley-Terry scores")
    p.add_argument("--votes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10000)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("correlate", help="SROCC/PLCC/FracCP of a report against MOS")
    p.add_argument("--report", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (SaliqaError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
