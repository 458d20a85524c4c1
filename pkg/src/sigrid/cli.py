"""Command-line interface.

Subcommands: build, batch, backproject, eval, render, inspect.
Exit codes: 0 success, 1 partial failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import SigridError
from .imaging import load_image, load_mask
from .metrics import evaluate_file, format_csv, format_table
from .pipeline import (
    PipelineConfig,
    build_one,
    make_config,
    parse_config_file,
    run_batch,
)
from .render import RENDER_MODES, render_boundaries, render_labels, render_occupancy
from .sgrd import read_sgpd, read_sgrd

__all__ = ["main"]


def _add_pipeline_flags(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="key = value settings file; flags override it")
    ap.add_argument("--segments", type=int, help="target superpixel count (default 1500)")
    ap.add_argument("--compactness", type=float, help="SLIC compactness weight (default 20)")
    ap.add_argument("--max-iterations", type=int, dest="max_iterations")
    ap.add_argument("--grid", help="cell grid size: N or WxH (default 80)")
    ap.add_argument("--auto-grid", action="store_const", const=True, dest="auto_grid",
                    help="smallest collision-free square grid per image")
    ap.add_argument("--max-cells", type=int, dest="max_cells", help="auto-grid upper bound")
    ap.add_argument("--descriptors", help="comma list from {ac,a,w,h,c,s,e,hu} (default ac,hu)")
    ap.add_argument("--workers", type=int, help="parallel workers for batch mode")
    ap.add_argument("--beta", type=float, help="F-beta parameter (default 0.3)")
    ap.add_argument("--augment", action="store_const", const=True,
                    help="expand the corpus with rotations/flips before building")
    ap.add_argument("--input-dir", dest="input_dir")
    ap.add_argument("--mask-dir", dest="mask_dir")
    ap.add_argument("--output-dir", dest="output_dir")


def _config_from_args(args) -> PipelineConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    keys = PipelineConfig.__dataclass_fields__
    overrides = {k: getattr(args, k, None) for k in keys}
    return make_config(file_values, overrides)


def cmd_build(args) -> int:
    cfg = _config_from_args(args)
    image = Path(args.image)
    out = Path(args.output) if args.output else image.with_suffix(".sgrd")
    stats = build_one(image, args.mask, out, cfg)
    print(
        f"{stats.stem}: regions={stats.regions} retained={stats.retained} "
        f"collisions={stats.collision_rate:.4%} "
        + (f"max_iou={stats.max_iou:.4f} " if stats.max_iou is not None else "")
        + f"wrote {stats.sgrd_path} ({stats.file_bytes} bytes) in {stats.seconds:.3f}s"
    )
    return 0


def cmd_batch(args) -> int:
    cfg = _config_from_args(args)
    result = run_batch(cfg, log=lambda line: print(line, file=sys.stderr))
    print(result.summary_text(), end="")
    return 1 if result.failures else 0


def cmd_backproject(args) -> int:
    f = read_sgrd(args.sgrd)
    pred = read_sgpd(args.prediction)
    if pred.grid != f.grid:
        raise SigridError(
            f"prediction grid {pred.grid.grid_width}x{pred.grid.grid_height} does not "
            f"match file grid {f.grid.grid_width}x{f.grid.grid_height}"
        )
    from .sgrd import backproject_file

    labels = backproject_file(f, pred.labels.astype(np.int32))
    out = Path(args.output) if args.output else Path(args.sgrd).with_suffix(".mask.png")
    from .imaging import Mask, save_mask

    save_mask(out, Mask(labels))
    print(f"wrote {out}")
    return 0


def cmd_eval(args) -> int:
    pred_dir, gt_dir, sgrd_dir = Path(args.pred_dir), Path(args.gt_dir), Path(args.sgrd_dir)
    sgrds = {p.stem: p for p in sorted(sgrd_dir.glob("*.sgrd"))}
    preds = {p.stem: p for p in sorted(pred_dir.glob("*.sgpd"))}
    gts = {p.stem: p for p in sorted(gt_dir.iterdir()) if p.suffix.lower() in (".png", ".ppm", ".pgm")}
    common = sorted(set(sgrds) & set(preds) & set(gts))
    missing = sorted((set(sgrds) | set(preds) | set(gts)) - set(common))
    if not common:
        raise SigridError("no matching stems across the three directories")
    for stem in missing:
        print(f"warning: {stem} not present in every directory, skipped", file=sys.stderr)

    rows = []
    for stem in common:
        f = read_sgrd(sgrds[stem])
        pred = read_sgpd(preds[stem])
        gt = load_mask(gts[stem])
        rows.append((stem, evaluate_file(f, pred, gt, beta=args.beta)))

    table = format_table(rows)
    csv = format_csv(rows)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(table)
        (out / "report.csv").write_text(csv)
        print(f"wrote {out / 'report.txt'} and {out / 'report.csv'}")
    else:
        print(table, end="")
    return 1 if missing else 0


def cmd_render(args) -> int:
    f = read_sgrd(args.sgrd)
    out = Path(args.output) if args.output else Path(args.sgrd).with_suffix(f".{args.mode}.png")
    if args.mode == "boundaries":
        if not args.image:
            raise SigridError("boundaries mode needs --image (the source photo)")
        render_boundaries(f, load_image(args.image), out)
    elif args.mode == "occupancy":
        render_occupancy(f, out, scale=args.scale)
    else:
        render_labels(f, out, scale=args.scale)
    print(f"wrote {out}")
    return 0


def cmd_inspect(args) -> int:
    f = read_sgrd(args.sgrd)
    occ = f.retained_count / f.grid.cells
    print(f"image      {f.image_width}x{f.image_height}")
    print(f"grid       {f.grid.grid_width}x{f.grid.grid_height}")
    print(f"channels   {f.channels}")
    print(f"descriptors 0x{f.config_bitmask:02x}")
    print(f"retained   {f.retained_count} cells ({occ:.1%} of the grid)")
    print(f"labels     {'present' if f.labels is not None else 'absent'}")
    discarded_px = int((f.map_ids == 0).sum())
    print(f"map        {f.map_ids.max()} region ids, {discarded_px} discarded pixels")
    print(f"file       {Path(args.sgrd).stat().st_size} bytes")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigrid",
        description="Encode images as sparse superpixel-descriptor grids and back.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="encode one image into an SGRD file")
    p.add_argument("image")
    p.add_argument("--mask", help="binary ground-truth mask (adds the label section)")
    p.add_argument("--output", help="output path (default: alongside the image)")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("batch", help="encode a directory of images")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("backproject", help="expand a cell prediction to a pixel mask")
    p.add_argument("sgrd")
    p.add_argument("prediction", help="SGPD cell-prediction file")
    p.add_argument("--output", help="output PNG (default: alongside the SGRD)")
    p.set_defaults(func=cmd_backproject)

    p = sub.add_parser("eval", help="score cell predictions against ground truth")
    p.add_argument("--pred-dir", required=True, dest="pred_dir")
    p.add_argument("--gt-dir", required=True, dest="gt_dir")
    p.add_argument("--sgrd-dir", required=True, dest="sgrd_dir")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--beta", type=float, default=0.3)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="visualize SGRD contents as PNG")
    p.add_argument("sgrd")
    p.add_argument("--mode", choices=RENDER_MODES, required=True)
    p.add_argument("--image", help="source photo (boundaries mode)")
    p.add_argument("--output")
    p.add_argument("--scale", type=int, default=8)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("inspect", help="dump SGRD header fields and stats")
    p.add_argument("sgrd")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SigridError, FileNotFoundError, NotADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
