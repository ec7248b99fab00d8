"""Float -> packed binary template conversion."""

from __future__ import annotations

import numpy as np

from .core import Flavor, Template, TemplateError

DESCRIPTOR_THRESHOLD = 0.0
MASK_THRESHOLD = 0.5


def pack_grid(bits: np.ndarray) -> np.ndarray:
    """Pack ``(..., 8, 8)`` booleans to ``(..., 8)`` bytes, MSB = column 0."""
    return np.packbits(np.asarray(bits, dtype=bool), axis=-1, bitorder="big")[..., 0]


def unpack_grid(packed: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack_grid`."""
    packed = np.asarray(packed, dtype=np.uint8)[..., None]
    return np.unpackbits(packed, axis=-1, bitorder="big").astype(bool)


def binarize_template(t: Template) -> Template:
    # strict inequalities at both thresholds
    if t.flavor is not Flavor.FLOAT32:
        raise TemplateError("template is already binary")
    desc = pack_grid(t.descriptors > DESCRIPTOR_THRESHOLD)
    masks = pack_grid(t.masks > MASK_THRESHOLD)
    return Template(t.minutiae, desc, masks, Flavor.PACKED_BINARY, t.channels, t.source_tag)
