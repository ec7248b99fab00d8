"""Domain types and geometry shared by the matcher.

Descriptor grids live in numpy arrays rather than wrapper classes:

* float templates: ``descriptors`` is ``(n, C, 8, 8)`` float32 (already
  modulated by the record's own mask), ``masks`` is ``(n, 8, 8)`` float32 in
  [0, 1].
* packed binary templates: ``descriptors`` is ``(n, C, 8)`` uint8, one byte
  per grid row with the leftmost column in the most significant bit, and
  ``masks`` is ``(n, 8)`` uint8 with the same row/bit layout.

Image coordinates are raster-style (x right, y down); an orientation theta
is measured clockwise from +x on screen, which is the usual counterclockwise
rotation in (x, y) arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
GRID = 8
PATCH_SIZE = 128
CELL_SIZE = 16
DEFAULT_CHANNELS = 12


class Flavor(enum.IntEnum):
    FLOAT32 = 0
    PACKED_BINARY = 1


class TemplateError(ValueError):
    """Raised for malformed templates or incompatible template pairs."""


def normalize_angle(theta):
    """Wrap an angle (scalar or array) into [0, 2*pi)."""
    wrapped = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def angle_diff(a, b):
    """Signed difference ``a - b`` wrapped into (-pi, pi].

    Works elementwise on arrays.
    """
    d = np.mod(np.subtract(a, b), TWO_PI)
    d = np.where(d > math.pi, d - TWO_PI, d)
    if np.ndim(d) == 0:
        return float(d)
    return d


@dataclass(frozen=True)
class Minutia:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError("minutia fields must be finite")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))


@dataclass(frozen=True)
class PatchFrame:
    """Minutia-centred, orientation-aligned 128x128 px patch."""

    origin: Minutia
    patch_size: int = PATCH_SIZE
    cell_size: int = CELL_SIZE

    def __post_init__(self):
        if self.patch_size != GRID * self.cell_size:
            raise ValueError("patch_size must equal 8 * cell_size")

    @property
    def center(self) -> float:
        return self.patch_size / 2.0


def patch_to_image(frame: PatchFrame, u: float, v: float) -> tuple[float, float]:
    o = frame.origin
    du, dv = u - frame.center, v - frame.center
    c, s = math.cos(o.theta), math.sin(o.theta)
    return o.x + c * du - s * dv, o.y + s * du + c * dv


def image_to_patch(frame: PatchFrame, x: float, y: float) -> tuple[float, float]:
    o = frame.origin
    dx, dy = x - o.x, y - o.y
    c, s = math.cos(o.theta), math.sin(o.theta)
    return frame.center + c * dx + s * dy, frame.center - s * dx + c * dy


def cell_center(frame: PatchFrame, row: int, col: int) -> tuple[float, float]:
    """Image position of the centre of descriptor cell ``(row, col)``."""
    if not (0 <= row < GRID and 0 <= col < GRID):
        raise IndexError(f"cell ({row}, {col}) outside the {GRID}x{GRID} grid")
    half = frame.cell_size / 2.0
    return patch_to_image(frame, frame.cell_size * col + half, frame.cell_size * row + half)


@dataclass(frozen=True, eq=False)
class Template:
    """All descriptor records extracted from one fingerprint.

    ``minutiae`` is an ``(n, 3)`` float64 array of ``x, y, theta``.
    See the module docstring for the descriptor and mask layouts.
    """

    minutiae: np.ndarray
    descriptors: np.ndarray
    masks: np.ndarray
    flavor: Flavor = Flavor.FLOAT32
    channels: int = DEFAULT_CHANNELS
    source_tag: str = ""

    def __post_init__(self):
        flavor = Flavor(self.flavor)
        object.__setattr__(self, "flavor", flavor)
        mnt = np.array(self.minutiae, dtype=np.float64).reshape(-1, 3)
        n = len(mnt)
        if not np.all(np.isfinite(mnt)):
            raise TemplateError("minutiae must be finite")
        mnt[:, 2] = normalize_angle(mnt[:, 2])
        c = int(self.channels)
        if not 0 < c < 256:
            raise TemplateError(f"channel count {c} out of range")
        if flavor is Flavor.FLOAT32:
            desc = np.array(self.descriptors, dtype=np.float32).reshape(n, c, GRID, GRID)
            masks = np.array(self.masks, dtype=np.float32).reshape(n, GRID, GRID)
            if not np.all(np.isfinite(desc)):
                raise TemplateError("descriptor values must be finite")
            if masks.size and (masks.min() < 0.0 or masks.max() > 1.0):
                raise TemplateError("mask values must lie in [0, 1]")
        else:
            desc = np.array(self.descriptors, dtype=np.uint8).reshape(n, c, GRID)
            masks = np.array(self.masks, dtype=np.uint8).reshape(n, GRID)
        for arr in (mnt, desc, masks):
            arr.setflags(write=False)
        object.__setattr__(self, "minutiae", mnt)
        object.__setattr__(self, "descriptors", desc)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "channels", c)

    def __len__(self) -> int:
        return len(self.minutiae)

    @property
    def records(self):
        for m, d, h in zip(self.minutiae, self.descriptors, self.masks):
            yield Minutia(*m), d, h

    def minutia(self, i: int) -> Minutia:
        return Minutia(*self.minutiae[i])

    def with_minutiae(self, minutiae: np.ndarray) -> "Template":
        return Template(minutiae, self.descriptors, self.masks, self.flavor,
                        self.channels, self.source_tag)

    def equals(self, other: "Template") -> bool:
        """Bitwise equality of every field."""
        return (
            self.flavor == other.flavor
            and self.channels == other.channels
            and self.source_tag == other.source_tag
            and self.minutiae.shape == other.minutiae.shape
            and self.minutiae.tobytes() == other.minutiae.tobytes()
            and self.descriptors.tobytes() == other.descriptors.tobytes()
            and self.masks.tobytes() == other.masks.tobytes()
        )


def rigid_transform(template: Template, rotation: float, tx: float, ty: float) -> Template:
    """Rotate every minutia about the image origin, then translate."""
    mnt = template.minutiae.copy()
    c, s = math.cos(rotation), math.sin(rotation)
    x, y = mnt[:, 0].copy(), mnt[:, 1].copy()
    mnt[:, 0] = c * x - s * y + tx
    mnt[:, 1] = s * x + c * y + ty
    mnt[:, 2] = mnt[:, 2] + rotation
    return template.with_minutiae(mnt)


def check_compatible(t_q: Template, t_g: Template) -> None:
    if len(t_q) == 0 or len(t_g) == 0:
        raise TemplateError("cannot match an empty template")
    if t_q.flavor != t_g.flavor:
        raise TemplateError(
            f"flavor mismatch: {t_q.flavor.name} vs {t_g.flavor.name}")
    if t_q.channels != t_g.channels:
        raise TemplateError(
            f"channel mismatch: {t_q.channels} vs {t_g.channels}")
