"""
Raster images of depth-m approximations, written as binary PPM.

Pixel column px covers x in [px/W, (px+1)/W]. Rows are stored top-down, so
image row 0 holds the largest y. A cell owns its closed box and is painted
with outward rounding: [floor(a*W/N), ceil((a+1)*W/N)) on each axis, where
N = n_k**m.
"""
import logging
from fractions import Fraction

import attr
import numpy as np

from .errors import InvalidSystemError
from .system import approximation_cells

logger = logging.getLogger(__name__)

# Grey levels: occupied pixels are black on white.
OCCUPIED = 0
EMPTY = 255


@attr.s(frozen=True, eq=False)
class Raster:
    # pixels[row, column], True where occupied
    pixels = attr.ib()

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def count(self):
        return int(self.pixels.sum())

    def __eq__(self, other):
        return isinstance(other, Raster) and np.array_equal(self.pixels, other.pixels)


def _span(a, size, count):
    # floor(a*size/count) .. ceil((a+1)*size/count)
    lo = (a * size) // count
    hi = -((-(a + 1) * size) // count)
    return lo, hi


def _size(pixels):
    if isinstance(pixels, int):
        return pixels, pixels
    width, height = pixels
    return width, height


def raster_slice(ifs, m, pixels, axes=(0, 1), at=None):
    """
    Render the plane spanned by `axes`, through the point whose remaining
    coordinates are given by `at` (axis -> rational coordinate).
    """
    x_axis, y_axis = axes
    if x_axis == y_axis or not {x_axis, y_axis} <= set(range(ifs.d)):
        raise InvalidSystemError(f"bad slice axes {axes} for d={ifs.d}")
    at = {axis: Fraction(value) for axis, value in (at or {}).items()}
    others = [axis for axis in range(ifs.d) if axis not in axes]
    if sorted(at) != others:
        raise InvalidSystemError(f"slice needs coordinates for axes {others}, got {sorted(at)}")
    width, height = _size(pixels)
    if width < 1 or height < 1:
        raise ValueError(f"raster size must be positive, got {width}x{height}")
    counts = [nk**m for nk in ifs.n]
    grid = np.zeros((height, width), dtype=bool)
    for cell in approximation_cells(ifs, 1, m):
        if any(not cell.corner[axis] <= at[axis] * counts[axis] <= cell.corner[axis] + 1 for axis in others):
            continue
        x0, x1 = _span(cell.corner[x_axis], width, counts[x_axis])
        y0, y1 = _span(cell.corner[y_axis], height, counts[y_axis])
        grid[height - y1 : height - y0, x0:x1] = True
    logger.debug("rendered depth %d at %dx%d: %d pixels set", m, width, height, int(grid.sum()))
    return Raster(grid)


def raster_2d(ifs, m, pixels):
    if ifs.d != 2:
        raise InvalidSystemError(f"raster_2d needs d=2, got d={ifs.d}; use raster_slice to pick a plane")
    return raster_slice(ifs, m, pixels)


def ppm_bytes(raster):
    header = f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii")
    shade = np.where(raster.pixels, OCCUPIED, EMPTY).astype(np.uint8)
    body = np.repeat(shade[..., np.newaxis], 3, axis=2)
    return header + body.tobytes()


def write_ppm(raster, path):
    with open(path, "wb") as f:
        f.write(ppm_bytes(raster))
    return path
