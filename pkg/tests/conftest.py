import numpy as np
import pytest

from sigrid.imaging import Image, Superpixelation, compact_ids


def make_image(arr) -> Image:
    """Image from an (h, w) gray or (h, w, 3) color float array."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        return Image(arr[None])
    return Image(arr.transpose(2, 0, 1))


def random_partition(w: int, h: int, k: int, seed: int) -> Superpixelation:
    """Voronoi-style partition with k seed points (regions may merge when
    seeds coincide, so the realized count can be lower)."""
    rng = np.random.default_rng(seed)
    px = rng.uniform(0, w, size=k)
    py = rng.uniform(0, h, size=k)
    xs, ys = np.meshgrid(np.arange(w), np.arange(h))
    d2 = (xs[..., None] - px) ** 2 + (ys[..., None] - py) ** 2
    ids, count = compact_ids(np.argmin(d2, axis=2))
    return Superpixelation(ids, count)


def random_image(w: int, h: int, seed: int) -> Image:
    rng = np.random.default_rng(seed)
    return Image(rng.uniform(0, 1, size=(3, h, w)))


def random_blob(seed: int, size: int = 24) -> list[tuple[int, int]]:
    """Connected random blob as a pixel list (grown from a seed pixel)."""
    rng = np.random.default_rng(seed)
    grid = np.zeros((size, size), dtype=bool)
    frontier = [(size // 2, size // 2)]
    grid[size // 2, size // 2] = True
    target = int(rng.integers(size, size * size // 3))
    while frontier and grid.sum() < target:
        idx = int(rng.integers(len(frontier)))
        x, y = frontier.pop(idx)
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < size and 0 <= ny < size and not grid[ny, nx] and rng.random() < 0.7:
                grid[ny, nx] = True
                frontier.append((nx, ny))
    ys, xs = np.nonzero(grid)
    return list(zip(xs.tolist(), ys.tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
