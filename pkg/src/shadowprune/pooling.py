"""Patch pooling that shrinks a binary image by an integer factor.

Each p x p patch collapses to one output pixel: a patch whose summed
pixel values fall below a small cutoff becomes black (0), any other
patch white (255).  On {0, 255} images the cutoff of 5 makes this a
max-pool, since a single white pixel already pushes the sum to 255.
Trailing rows/columns that do not fill a whole patch are dropped
(floor edges).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImageTooSmall
from .imgcore import BinaryImage

DEFAULT_POOL_FACTOR = 3

# Patch value sums below this collapse to black.  Any constant in
# (0, 255] behaves identically on strict binary input, so the cutoff is
# not exposed as configuration.
_BLACK_SUM_CUTOFF = 5


@dataclass(frozen=True)
class PoolConfig:
    """Patch edge length p, and a bypass flag for the optional stage."""

    p: int = DEFAULT_POOL_FACTOR
    enabled: bool = True

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"pool factor must be >= 1, got {self.p}")


def pool(img: BinaryImage, cfg: PoolConfig = PoolConfig()) -> BinaryImage:
    """Downscale by cfg.p, keeping a patch white iff any pixel is white.

    A disabled config (or p=1) passes the image through unchanged.
    Raises ImageTooSmall when the image cannot supply one full patch.
    """
    if not cfg.enabled:
        return img
    factor = cfg.p
    out_h = img.height // factor
    out_w = img.width // factor
    if out_h == 0 or out_w == 0:
        raise ImageTooSmall(
            f"{img.height}x{img.width} image has no full {factor}x{factor} patch"
        )
    trimmed = img.pixels[: out_h * factor, : out_w * factor]
    patches = trimmed.reshape(out_h, factor, out_w, factor)
    # uint8 sums wrap past 255; accumulate in int64.
    sums = patches.astype(np.int64).sum(axis=(1, 3))
    return BinaryImage(np.where(sums < _BLACK_SUM_CUTOFF, 0, 255))
