"""Deterministic synthetic desk corpus: one salient blob per image.

Benchmarks in this problem space use object-centric photographs around
310x375 px with binary masks. This generator produces stand-ins with the
properties that matter to the pipeline: a smooth textured background, one
high-contrast star-convex object with a wavy boundary, mild noise, and an
exact mask. Everything is seeded, so corpora are reproducible.

Run directly to write a corpus:

    python -m sigrid.synthetic out/ --count 25 --seed 7
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter
from PIL import Image as PILImage

__all__ = ["synthesize_pair", "generate_corpus"]


def _smooth_field(rng, w, h, scale):
    """Low-frequency field in [-1, 1]: a couple of random plane cosines."""
    xs, ys = np.meshgrid(np.arange(w), np.arange(h))
    field = np.zeros((h, w))
    for _ in range(3):
        fx, fy = rng.uniform(-1, 1, size=2) * 2 * np.pi / scale
        phase = rng.uniform(0, 2 * np.pi)
        field += rng.uniform(0.3, 1.0) * np.cos(fx * xs + fy * ys + phase)
    return field / 3.0


def _distinct_colors(rng):
    """Two colors far apart in RGB (and therefore in Lab for these ranges)."""
    while True:
        bg = rng.uniform(0.15, 0.85, size=3)
        fg = rng.uniform(0.15, 0.85, size=3)
        if np.abs(fg - bg).sum() > 1.0:
            return bg, fg


def _blob_mask(rng, width, height, cx, cy, r0):
    """Star-convex blob support: radius as a cosine series over the angle."""
    ks = np.arange(2, 6)
    amps = rng.uniform(0.0, 0.12, size=len(ks))
    phases = rng.uniform(0, 2 * np.pi, size=len(ks))
    xs, ys = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
    theta = np.arctan2(ys - cy, xs - cx)
    radius = r0 * (1.0 + sum(a * np.cos(k * theta + p) for a, k, p in zip(amps, ks, phases)))
    return np.hypot(xs - cx, ys - cy) <= radius


def synthesize_pair(seed: int, width: int = 310, height: int = 375):
    """One (image, mask) pair as uint8 arrays: (h, w, 3) and (h, w).

    The salient object is high-contrast but the whole frame is softened
    with a small blur (photographic edges are never step functions), and
    one or two mid-contrast distractor blobs sit in the background, so
    superpixel boundaries track the object imperfectly - as they do on
    real photographs.
    """
    rng = np.random.default_rng(seed)
    bg_color, fg_color = _distinct_colors(rng)

    mask = _blob_mask(
        rng,
        width,
        height,
        cx=width * rng.uniform(0.35, 0.65),
        cy=height * rng.uniform(0.35, 0.65),
        r0=min(width, height) * rng.uniform(0.20, 0.32),
    )

    img = np.empty((height, width, 3))
    bg_shade = _smooth_field(rng, width, height, scale=max(width, height) / 2)
    fg_shade = _smooth_field(rng, width, height, scale=max(width, height) / 3)
    for c in range(3):
        img[..., c] = bg_color[c] * (1.0 + 0.12 * bg_shade)

    # background distractors: blobs between the two colors, not in the mask
    for _ in range(int(rng.integers(1, 3))):
        mix = rng.uniform(0.25, 0.6)
        d_color = bg_color * (1 - mix) + fg_color * mix
        d_mask = _blob_mask(
            rng,
            width,
            height,
            cx=width * rng.uniform(0.1, 0.9),
            cy=height * rng.uniform(0.1, 0.9),
            r0=min(width, height) * rng.uniform(0.06, 0.14),
        )
        d_mask &= ~mask
        for c in range(3):
            img[..., c][d_mask] = d_color[c]

    for c in range(3):
        img[..., c][mask] = (fg_color[c] * (1.0 + 0.10 * fg_shade))[mask]

    # soften edges like optics would, then add sensor-ish noise
    img = gaussian_filter(img, sigma=(1.6, 1.6, 0.0))
    img += rng.normal(0.0, 0.02, size=img.shape)
    img = np.clip(img, 0.0, 1.0)

    return (img * 255).round().astype(np.uint8), mask.astype(np.uint8)


def generate_corpus(
    out_dir,
    count: int = 25,
    seed: int = 0,
    width: int = 310,
    height: int = 375,
) -> tuple[Path, Path]:
    """Write ``count`` image/mask pairs under out_dir/{images,masks}."""
    out = Path(out_dir)
    img_dir = out / "images"
    mask_dir = out / "masks"
    img_dir.mkdir(parents=True, exist_ok=True)
    mask_dir.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        img, mask = synthesize_pair(seed * 10_000 + i, width=width, height=height)
        stem = f"img{i:04d}"
        PILImage.fromarray(img).save(img_dir / f"{stem}.png", format="PNG")
        PILImage.fromarray(mask * 255).save(mask_dir / f"{stem}.png", format="PNG")
    return img_dir, mask_dir


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("out_dir")
    ap.add_argument("--count", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--width", type=int, default=310)
    ap.add_argument("--height", type=int, default=375)
    args = ap.parse_args(argv)
    img_dir, mask_dir = generate_corpus(
        args.out_dir, count=args.count, seed=args.seed, width=args.width, height=args.height
    )
    print(f"wrote {args.count} pairs to {img_dir} and {mask_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
