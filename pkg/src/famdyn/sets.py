"""Regions, their ε-nets, point sets and marked cell sets.

A Region discretises a rectangle, disk or annulus into square grid cells
whose half-diagonal is at most ε (only cells whose centre lies in the
shape are kept), and a circle into equal arcs whose half-chord is at most ε.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .sphere import as_point, chordal_distance, format_point, inf_mask, is_inf

SHAPES = ("rect", "disk", "annulus", "circle")


@dataclass(frozen=True)
class Region:
    shape: str
    params: tuple
    eps: float

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown region shape {self.shape!r}")
        want = {"rect": 4, "disk": 3, "annulus": 4, "circle": 3}[self.shape]
        if len(self.params) != want:
            raise ValueError(f"{self.shape} region needs {want} numbers")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if not self.eps > 0:
            raise ValueError("resolution eps must be positive")
        if self.shape == "rect":
            x0, y0, x1, y1 = self.params
            if not (x1 > x0 and y1 > y0):
                raise ValueError("rect needs x0 < x1 and y0 < y1")
        elif self.shape == "annulus":
            if not 0 <= self.params[2] < self.params[3]:
                raise ValueError("annulus needs 0 <= r_in < r_out")
        elif self.params[2] <= 0:
            raise ValueError("radius must be positive")

    # construction helpers
    @classmethod
    def rect(cls, x0, y0, x1, y1, eps):
        return cls("rect", (x0, y0, x1, y1), eps)

    @classmethod
    def disk(cls, center, r, eps):
        c = complex(center)
        return cls("disk", (c.real, c.imag, r), eps)

    @classmethod
    def annulus(cls, center, r_in, r_out, eps):
        c = complex(center)
        return cls("annulus", (c.real, c.imag, r_in, r_out), eps)

    @classmethod
    def circle(cls, center, r, eps):
        c = complex(center)
        return cls("circle", (c.real, c.imag, r), eps)

    @classmethod
    def parse(cls, text: str, eps: float) -> "Region":
        """``rect:x0,y0,x1,y1 | disk:cx,cy,r | annulus:cx,cy,r0,r1 | circle:cx,cy,r``."""
        try:
            shape, rest = text.split(":", 1)
            nums = tuple(float(x) for x in rest.split(","))
        except ValueError:
            raise ValueError(f"bad region {text!r}") from None
        return cls(shape.strip(), nums, eps)

    def describe(self) -> str:
        return f"{self.shape}:" + ",".join(repr(p) for p in self.params)

    def to_json(self) -> dict:
        return {"shape": self.shape, "params": list(self.params), "eps": self.eps}

    @classmethod
    def from_json(cls, d: dict) -> "Region":
        return cls(d["shape"], tuple(d["params"]), d["eps"])

    # geometry
    @property
    def is_grid(self) -> bool:
        return self.shape != "circle"

    def bbox(self):
        if self.shape == "rect":
            return self.params
        cx, cy, r = self.params[0], self.params[1], self.params[-1]
        return (cx - r, cy - r, cx + r, cy + r)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        finite = ~inf_mask(z)
        zz = np.where(finite, z, 0)
        if self.shape == "rect":
            x0, y0, x1, y1 = self.params
            inside = (zz.real >= x0) & (zz.real <= x1) & (zz.imag >= y0) & (zz.imag <= y1)
        elif self.shape == "disk":
            cx, cy, r = self.params
            inside = np.abs(zz - complex(cx, cy)) <= r
        elif self.shape == "annulus":
            cx, cy, r0, r1 = self.params
            d = np.abs(zz - complex(cx, cy))
            inside = (d >= r0) & (d <= r1)
        else:
            cx, cy, r = self.params
            inside = np.abs(np.abs(zz - complex(cx, cy)) - r) <= self.cell_radius
        return inside & finite

    def distance(self, z) -> np.ndarray:
        """Euclidean distance from each point to the shape (0 inside)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        finite = ~inf_mask(z)
        zz = np.where(finite, z, 0)
        if self.shape == "rect":
            x0, y0, x1, y1 = self.params
            dx = np.maximum(np.maximum(x0 - zz.real, zz.real - x1), 0)
            dy = np.maximum(np.maximum(y0 - zz.imag, zz.imag - y1), 0)
            d = np.hypot(dx, dy)
        else:
            c = complex(self.params[0], self.params[1])
            rho = np.abs(zz - c)
            if self.shape == "disk":
                d = np.maximum(rho - self.params[2], 0)
            elif self.shape == "annulus":
                d = np.maximum(np.maximum(self.params[2] - rho, rho - self.params[3]), 0)
            else:
                d = np.abs(rho - self.params[2])
        return np.where(finite, d, np.inf)

    @cached_property
    def _grid(self):
        if self.shape == "circle":
            cx, cy, r = self.params
            n = max(8, math.ceil(math.pi / math.asin(min(1.0, self.eps / r))))
            ang = 2 * np.pi * np.arange(n) / n
            centers = complex(cx, cy) + r * np.exp(1j * ang)
            return dict(nx=n, ny=1, ij=np.stack([np.arange(n), np.zeros(n, int)], 1),
                        centers=centers, radius=r * math.sin(math.pi / n), step=None)
        x0, y0, x1, y1 = self.bbox()
        side = math.sqrt(2.0) * self.eps
        nx = max(1, math.ceil((x1 - x0) / side - 1e-9))
        ny = max(1, math.ceil((y1 - y0) / side - 1e-9))
        hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
        ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        cx = x0 + (ii + 0.5) * hx
        cy = y0 + (jj + 0.5) * hy
        centers = (cx + 1j * cy).reshape(-1)
        ij = np.stack([ii.reshape(-1), jj.reshape(-1)], 1)
        radius = 0.5 * math.hypot(hx, hy)
        # keep every cell whose disk meets the shape, so the centres cover it
        keep = self.distance(centers) < radius if self.shape != "rect" else np.ones(centers.size, bool)
        return dict(nx=nx, ny=ny, ij=ij[keep], centers=centers[keep],
                    radius=radius, step=(hx, hy))

    @property
    def centers(self) -> np.ndarray:
        return self._grid["centers"]

    @property
    def cell_radius(self) -> float:
        return self._grid["radius"]

    @property
    def shape_px(self) -> tuple[int, int]:
        return self._grid["nx"], self._grid["ny"]

    @property
    def cell_ij(self) -> np.ndarray:
        return self._grid["ij"]

    def __len__(self) -> int:
        return self.centers.size

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        """Indices of grid neighbours (8-neighbourhood; cyclic for circles)."""
        n = len(self)
        if self.shape == "circle":
            idx = np.arange(n)
            return [np.array([(i - 1) % n, (i + 1) % n]) for i in idx]
        nx, ny = self.shape_px
        lookup = -np.ones((ny, nx), dtype=int)
        ij = self.cell_ij
        lookup[ij[:, 1], ij[:, 0]] = np.arange(n)
        out = []
        for i, j in ij:
            nb = []
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == dj == 0:
                        continue
                    a, b = i + di, j + dj
                    if 0 <= a < nx and 0 <= b < ny and lookup[b, a] >= 0:
                        nb.append(lookup[b, a])
            out.append(np.array(nb, dtype=int))
        return out

    def cell_of(self, z) -> np.ndarray:
        """Index of the cell containing each point, -1 when outside."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = -np.ones(z.shape, dtype=int)
        finite = ~inf_mask(z)
        if self.shape == "circle":
            cx, cy, r = self.params
            n = len(self)
            zz = np.where(finite, z, 0) - complex(cx, cy)
            k = np.rint(np.angle(zz) / (2 * np.pi) * n).astype(int) % n
            ok = finite & (np.abs(np.abs(zz) - r) <= self.cell_radius)
            out[ok] = k[ok]
            return out
        x0, y0, _, _ = self.bbox()
        hx, hy = self._grid["step"]
        nx, ny = self.shape_px
        zz = np.where(finite, z, x0 - 1)
        i = np.floor((zz.real - x0) / hx).astype(int)
        j = np.floor((zz.imag - y0) / hy).astype(int)
        ok = finite & (i >= 0) & (i < nx) & (j >= 0) & (j < ny)
        lookup = -np.ones((ny, nx), dtype=int)
        ij = self.cell_ij
        lookup[ij[:, 1], ij[:, 0]] = np.arange(len(self))
        out[ok] = lookup[j[ok], i[ok]]
        return out


# ---------------------------------------------------------------- point sets


class PointSet:
    """Finite set of extended-complex points with source labels.

    Points within ``merge_tol`` chordal distance of an existing point are
    merged into it (the first label is kept).
    """

    def __init__(self, points=(), labels=(), merge_tol: float = 1e-12):
        self.merge_tol = merge_tol
        self._pts: list[complex] = []
        self._labels: list[str] = []
        labels = list(labels) or [""] * len(list(points))
        for p, lab in zip(points, labels):
            self.add(p, lab)

    def add(self, point, label: str = "") -> bool:
        z = as_point(point)
        if self._pts and np.min(chordal_distance(np.array(self._pts), z)) <= self.merge_tol:
            return False
        self._pts.append(z)
        self._labels.append(str(label))
        return True

    @property
    def points(self) -> np.ndarray:
        return np.array(self._pts, dtype=complex)

    @property
    def labels(self) -> list[str]:
        return list(self._labels)

    def __len__(self):
        return len(self._pts)

    def __iter__(self):
        return iter(zip(self._pts, self._labels))

    def distance_to(self, z) -> float:
        if not self._pts:
            return math.inf
        return float(np.min(chordal_distance(self.points, as_point(z))))

    def to_csv(self) -> str:
        lines = []
        for z, lab in self:
            if is_inf(z):
                lines.append(f"inf,inf,{lab}")
            else:
                lines.append(f"{z.real!r},{z.imag!r},{lab}")
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json(self) -> list:
        return [format_point(z) for z in self._pts]

    def rasterize(self, eps: float) -> "CellSet":
        """Mark the cells of an ε-grid over the finite points' bounding box."""
        pts = self.points[~inf_mask(self.points)] if len(self) else np.zeros(0, complex)
        if pts.size == 0:
            region = Region.rect(-eps, -eps, eps, eps, eps)
            return CellSet(region, np.zeros(len(region), bool))
        pad = 2 * eps
        region = Region.rect(pts.real.min() - pad, pts.imag.min() - pad,
                             pts.real.max() + pad, pts.imag.max() + pad, eps)
        marks = np.zeros(len(region), bool)
        idx = region.cell_of(pts)
        marks[idx[idx >= 0]] = True
        return CellSet(region, marks)


# ---------------------------------------------------------------- cell sets


@dataclass
class CellSet:
    region: Region
    marks: np.ndarray
    scalar: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.marks = np.asarray(self.marks, dtype=bool)
        if self.marks.shape != (len(self.region),):
            raise ValueError("mark count must equal the region's cell count")
        if self.scalar is not None:
            self.scalar = np.asarray(self.scalar, dtype=float)
            if self.scalar.shape != self.marks.shape:
                raise ValueError("scalar must have one value per cell")

    @property
    def marked_count(self) -> int:
        return int(self.marks.sum())

    @property
    def marked_centers(self) -> np.ndarray:
        return self.region.centers[self.marks]

    def grid_closure(self) -> np.ndarray:
        """Marks plus every unmarked cell all of whose in-region neighbours
        are marked (out-of-region neighbours count as satisfied)."""
        out = self.marks.copy()
        for k, nb in enumerate(self.region.neighbors):
            if not self.marks[k] and nb.size and self.marks[nb].all():
                out[k] = True
        return out

    def is_grid_closed(self) -> bool:
        return bool(np.array_equal(self.grid_closure(), self.marks))

    def closure_violations(self) -> list[int]:
        return np.nonzero(self.grid_closure() & ~self.marks)[0].tolist()

    # output
    def image(self, use_scalar: bool = False) -> np.ndarray:
        """Row-major uint8 raster (top row = largest imaginary part)."""
        nx, ny = self.region.shape_px
        img = np.zeros((ny, nx), dtype=np.uint8)
        ij = self.region.cell_ij
        if use_scalar and self.scalar is not None:
            s = self.scalar.copy()
            finite = np.isfinite(s)
            if finite.any():
                lo, hi = s[finite].min(), s[finite].max()
                span = hi - lo if hi > lo else 1.0
                vals = np.where(finite, (s - lo) / span, 1.0)
            else:
                vals = np.ones_like(s)
            img[ij[:, 1], ij[:, 0]] = np.rint(vals * 255).astype(np.uint8)
        else:
            img[ij[:, 1], ij[:, 0]] = np.where(self.marks, 255, 0).astype(np.uint8)
        return img[::-1]

    def to_pgm(self, use_scalar: bool = False) -> bytes:
        img = self.image(use_scalar)
        h, w = img.shape
        return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()

    def to_json(self) -> dict:
        return {
            "region": self.region.describe(),
            "eps": self.region.eps,
            "marked_count": self.marked_count,
            "cells": np.nonzero(self.marks)[0].tolist(),
            **self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=False)


def read_pgm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
