"""Shared raster plumbing: windows, pixel-center grids, basin and
occupancy rasters.

Raster storage is row-major with row 0 at the top of the window (ymax),
matching image output order.  Pixel (row, col) has center
(xmin + (col+0.5)*dx, ymax - (row+0.5)*dy).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Window",
    "BasinRaster",
    "OccupancyRaster",
    "CODE_CYCLE",
    "CODE_ESCAPED",
    "CODE_SINGULAR",
    "CODE_UNDECIDED",
]

# Sentinel codes for non-root outcomes in a BasinRaster.
CODE_CYCLE = -1
CODE_ESCAPED = -2
CODE_SINGULAR = -3
CODE_UNDECIDED = -4


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle in the plane."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("window must have positive width and height")

    @classmethod
    def from_sequence(cls, seq):
        if isinstance(seq, cls):
            return seq
        xmin, xmax, ymin, ymax = (float(v) for v in seq)
        return cls(xmin, xmax, ymin, ymax)

    def as_tuple(self):
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    def pixel_centers(self, width, height):
        """Meshgrid of pixel centers, shape (height, width), row 0 on top."""
        dx = (self.xmax - self.xmin) / width
        dy = (self.ymax - self.ymin) / height
        xs = self.xmin + (np.arange(width) + 0.5) * dx
        ys = self.ymax - (np.arange(height) + 0.5) * dy
        return np.meshgrid(xs, ys)

    def pixel_of(self, x, y, width, height):
        """Integer (row, col) arrays; points outside get index -1."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx = (self.xmax - self.xmin) / width
        dy = (self.ymax - self.ymin) / height
        col = np.floor((x - self.xmin) / dx).astype(np.int64)
        row = np.floor((self.ymax - y) / dy).astype(np.int64)
        ok = (col >= 0) & (col < width) & (row >= 0) & (row < height)
        ok &= np.isfinite(x) & np.isfinite(y)
        return np.where(ok, row, -1), np.where(ok, col, -1)


@dataclass
class BasinRaster:
    """Per-pixel outcome codes over a window.

    codes holds root indices >= 0 or the CODE_* sentinels; iterations holds
    the per-pixel iteration count at decision time; legend maps each code
    present to a short description.
    """

    window: Window
    width: int
    height: int
    codes: np.ndarray
    iterations: np.ndarray
    legend: dict = field(default_factory=dict)

    def fractions(self):
        """Fraction of pixels per code, keyed like legend."""
        total = self.codes.size
        vals, counts = np.unique(self.codes, return_counts=True)
        return {int(v): float(c) / total for v, c in zip(vals, counts)}

    def fraction_of(self, code):
        return float(np.count_nonzero(self.codes == code)) / self.codes.size


@dataclass
class OccupancyRaster:
    """Bitmask raster of a point set over a window."""

    window: Window
    width: int
    height: int
    bits: np.ndarray
    partial: bool = False

    @property
    def count(self):
        return int(np.count_nonzero(self.bits))

    @classmethod
    def empty(cls, window, width, height):
        return cls(window, width, height, np.zeros((height, width), dtype=bool))

    @classmethod
    def from_points(cls, points_x, points_y, window, width, height, partial=False):
        """Rasterize points; those outside the window are dropped."""
        bits = np.zeros((height, width), dtype=bool)
        row, col = window.pixel_of(np.asarray(points_x), np.asarray(points_y),
                                   width, height)
        keep = row >= 0
        bits[row[keep], col[keep]] = True
        return cls(window, width, height, bits, partial=partial)

    def set_pixel_centers(self):
        """Centers of the set pixels, as (x_array, y_array)."""
        rows, cols = np.nonzero(self.bits)
        dx = (self.window.xmax - self.window.xmin) / self.width
        dy = (self.window.ymax - self.window.ymin) / self.height
        return (self.window.xmin + (cols + 0.5) * dx,
                self.window.ymax - (rows + 0.5) * dy)
