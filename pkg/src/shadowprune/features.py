"""Per-image features and min-max normalization.

Two numbers summarize a binarized canopy shadow image:

* black_pixel_rate, the fraction of shadow pixels, a proxy for how much
  sunlight the canopy blocks;
* uniformity, the population standard deviation of white-pixel counts
  over disjoint square grids, low when light comes through evenly.

Columns are min-max scaled onto the training range before classification.
Feature order is fixed: index 0 = black_pixel_rate, index 1 = uniformity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstantFeature, EmptyImage, EmptyList, ImageTooSmall, InsufficientData
from .imgcore import BinaryImage

DEFAULT_GRID_EDGE = 100

FEATURE_NAMES = ("black_pixel_rate", "uniformity")
N_FEATURES = 2


@dataclass(frozen=True)
class GridConfig:
    """Side length of the square counting grid, in pixels."""

    grid_edge: int = DEFAULT_GRID_EDGE

    def __post_init__(self):
        if self.grid_edge < 1:
            raise ValueError(f"grid_edge must be >= 1, got {self.grid_edge}")


@dataclass(frozen=True)
class FeatureVector:
    """Raw (unnormalized) per-image features."""

    black_pixel_rate: float
    uniformity: float

    def __post_init__(self):
        if not (math.isfinite(self.black_pixel_rate) and math.isfinite(self.uniformity)):
            raise ValueError("features must be finite")
        if not 0.0 <= self.black_pixel_rate <= 1.0:
            raise ValueError(f"black_pixel_rate {self.black_pixel_rate} outside [0, 1]")
        if self.uniformity < 0.0:
            raise ValueError(f"uniformity {self.uniformity} is negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.black_pixel_rate, self.uniformity], dtype=np.float64)


@dataclass(frozen=True)
class NormalizedFeatureVector:
    """Features after min-max scaling.

    Training rows land in [0, 1] by construction; rows outside the
    training range map outside [0, 1] and are deliberately not clamped.
    """

    black_pixel_rate: float
    uniformity: float

    def __post_init__(self):
        if not (math.isfinite(self.black_pixel_rate) and math.isfinite(self.uniformity)):
            raise ValueError("features must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.black_pixel_rate, self.uniformity], dtype=np.float64)


@dataclass(frozen=True)
class Normalizer:
    """Per-feature training range; maps x to (x - min) / (max - min).

    A zero-span column is tolerated at fit time (see constant_features)
    but rejected on application, where it would divide by zero.
    """

    mins: tuple[float, float]
    maxs: tuple[float, float]

    def __post_init__(self):
        if len(self.mins) != N_FEATURES or len(self.maxs) != N_FEATURES:
            raise ValueError("normalizer needs one min and one max per feature")
        for i, (lo, hi) in enumerate(zip(self.mins, self.maxs)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError("normalizer bounds must be finite")
            if hi < lo:
                raise ValueError(f"feature {FEATURE_NAMES[i]}: max {hi} < min {lo}")

    @property
    def constant_features(self) -> tuple[int, ...]:
        """Indices of features whose training column had zero span."""
        return tuple(i for i in range(N_FEATURES) if self.maxs[i] == self.mins[i])


def black_pixel_rate(img: BinaryImage) -> float:
    """Fraction of pixels that are black (0)."""
    if img.pixel_count == 0:
        raise EmptyImage("cannot compute a pixel rate on an empty image")
    return int(np.count_nonzero(img.pixels == 0)) / img.pixel_count


def white_pixel_rate(img: BinaryImage) -> float:
    """Fraction of pixels that are white (255); complement of the black rate."""
    if img.pixel_count == 0:
        raise EmptyImage("cannot compute a pixel rate on an empty image")
    return int(np.count_nonzero(img.pixels == 255)) / img.pixel_count


def grid_white_counts(img: BinaryImage, cfg: GridConfig) -> list[int]:
    """White-pixel count per disjoint grid tile, row-major.

    Partial tiles at the right/bottom edges are dropped, mirroring the
    pooling module's floor semantics.
    """
    edge = cfg.grid_edge
    rows = img.height // edge
    cols = img.width // edge
    if rows == 0 or cols == 0:
        raise ImageTooSmall(
            f"{img.height}x{img.width} image holds no full {edge}x{edge} grid"
        )
    trimmed = img.pixels[: rows * edge, : cols * edge]
    tiles = trimmed.reshape(rows, edge, cols, edge)
    counts = (tiles == 255).astype(np.int64).sum(axis=(1, 3))
    return [int(c) for c in counts.reshape(-1)]


def uniformity(counts: Sequence[int]) -> float:
    """Population standard deviation of the per-grid white counts."""
    if len(counts) == 0:
        raise EmptyList("uniformity needs at least one grid count")
    return float(np.std(np.asarray(counts, dtype=np.float64)))


def extract_features(img: BinaryImage, cfg: GridConfig) -> FeatureVector:
    """Both features of one binarized image."""
    return FeatureVector(
        black_pixel_rate=black_pixel_rate(img),
        uniformity=uniformity(grid_white_counts(img, cfg)),
    )


def fit_normalizer(rows: Iterable[FeatureVector]) -> Normalizer:
    """Learn per-feature min/max from a training collection.

    Needs at least two rows.  A constant column does not fail here; it
    is exposed via Normalizer.constant_features and only becomes an
    error if the normalizer is applied.
    """
    matrix = np.array([r.as_array() for r in rows], dtype=np.float64)
    if matrix.shape[0] < 2:
        raise InsufficientData(
            f"normalizer needs >= 2 rows, got {matrix.shape[0]}"
        )
    mins = matrix.min(axis=0)
    maxs = matrix.max(axis=0)
    return Normalizer(
        mins=(float(mins[0]), float(mins[1])),
        maxs=(float(maxs[0]), float(maxs[1])),
    )


def apply_normalizer(nz: Normalizer, v: FeatureVector) -> NormalizedFeatureVector:
    """Scale one row by the fitted training range, without clamping."""
    constant = nz.constant_features
    if constant:
        names = ", ".join(FEATURE_NAMES[i] for i in constant)
        raise ConstantFeature(f"zero training span for feature(s): {names}")
    raw = v.as_array()
    lo = np.asarray(nz.mins, dtype=np.float64)
    hi = np.asarray(nz.maxs, dtype=np.float64)
    scaled = (raw - lo) / (hi - lo)
    return NormalizedFeatureVector(float(scaled[0]), float(scaled[1]))
