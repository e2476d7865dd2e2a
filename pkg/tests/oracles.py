"""Independent reference computations used by the tests.

Nothing here imports famdyn: each oracle re-derives its answer from
scratch with plain numpy so that it can disagree with the library.
"""
import math

import numpy as np


def escape_time_julia(c: complex, window, pixels: int, max_iter: int = 500,
                      radius: float = 1e3) -> np.ndarray:
    """Boundary pixels of the filled Julia set of z^2 + c.

    Row 0 is the top of the window (largest imaginary part), matching the
    PGM orientation.  A pixel is on J when its escape/bounded status
    differs from one of its 8 neighbours or among its 3x3 sub-samples.
    """
    x0, y0, x1, y1 = window
    sub = 3
    n = pixels * sub
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y1 - (np.arange(n) + 0.5) * (y1 - y0) / n
    z = xs[None, :] + 1j * ys[:, None]
    alive = np.ones(z.shape, dtype=bool)
    for _ in range(max_iter):
        z[alive] = z[alive] ** 2 + c
        alive &= np.abs(z) < radius
    blocks = alive.reshape(pixels, sub, pixels, sub)
    any_in = blocks.any(axis=(1, 3))
    all_in = blocks.all(axis=(1, 3))
    mixed = any_in & ~all_in
    status = all_in
    edge = np.zeros_like(status)
    padded = np.pad(status, 1, mode="edge")
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            shifted = padded[1 + di:1 + di + pixels, 1 + dj:1 + dj + pixels]
            edge |= shifted != status
    return mixed | (edge & status)


def unit_circle_distance_px(window, pixels: int) -> np.ndarray:
    """Distance in pixels from each pixel centre to the unit circle."""
    x0, y0, x1, y1 = window
    h = (x1 - x0) / pixels
    xs = x0 + (np.arange(pixels) + 0.5) * h
    ys = y1 - (np.arange(pixels) + 0.5) * h
    z = xs[None, :] + 1j * ys[:, None]
    return np.abs(np.abs(z) - 1.0) / h


def marty_sup_powers(r: float, nmax: int, samples: int = 20001) -> float:
    """sup over n <= nmax and |z| <= r of n|z|^(n-1)/(1+|z|^(2n))."""
    t = np.linspace(0, r, samples)
    best = 0.0
    for n in range(1, nmax + 1):
        vals = n * t ** (n - 1) / (1 + t ** (2 * n))
        best = max(best, float(vals.max()))
    return best


def marty_sup_square_iterates(r: float, m: int, samples: int = 20001) -> float:
    """sup over |z| <= r of the spherical derivative of z^(2^m)."""
    k = 2 ** m
    t = np.linspace(0, r, samples)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        vals = k * t ** (k - 1) / (1 + t ** (2 * k))
    return float(np.nanmax(vals))


def covering_radius(points: np.ndarray, targets: np.ndarray) -> float:
    """max over targets of the distance to the nearest point (Euclidean)."""
    d = np.abs(targets[:, None] - points[None, :])
    return float(d.min(axis=1).max())


def spiral_lattice(h: float, count: int) -> list:
    """First ``count`` points of h(Z + iZ) in square-spiral order."""
    out = [0j]
    x = y = 0
    dx, dy = 1, 0
    run = 1
    while len(out) < count:
        for _ in range(2):
            for _ in range(run):
                x, y = x + dx, y + dy
                out.append(complex(x * h, y * h))
                if len(out) == count:
                    return out
            dx, dy = -dy, dx
        run += 1
    return out


def chordal(a: complex, b: complex) -> float:
    if math.isinf(abs(a)) and math.isinf(abs(b)):
        return 0.0
    if math.isinf(abs(a)):
        return 2 / math.sqrt(1 + abs(b) ** 2)
    if math.isinf(abs(b)):
        return 2 / math.sqrt(1 + abs(a) ** 2)
    return 2 * abs(a - b) / (math.sqrt(1 + abs(a) ** 2) * math.sqrt(1 + abs(b) ** 2))
