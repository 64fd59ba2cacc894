"""Dual-branch feature extraction.

The visual branch summarizes the input image's color statistics; the color
branch summarizes the probe's difference map.  Both produce fixed-length,
versioned vectors that are concatenated (visual first) before classification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import colorstats
from .image import validate_image
from .probe import DifferenceMap

__all__ = [
    "FeatureVector",
    "COLOR_SPEC_ID",
    "VISUAL_SPEC_ID",
    "FUSED_SPEC_ID",
    "EMPTY",
    "extract_color_features",
    "extract_visual_features",
    "fuse",
    "color_feature_names",
    "visual_feature_names",
]

COLOR_SPEC_ID = "delta-stats-48-v1"
VISUAL_SPEC_ID = "image-stats-84-v1"
FUSED_SPEC_ID = VISUAL_SPEC_ID + "+" + COLOR_SPEC_ID

SPEC_DIMS = {
    COLOR_SPEC_ID: 48,
    VISUAL_SPEC_ID: 84,
    FUSED_SPEC_ID: 132,
    "empty": 0,
}

ABS_DELTA_HIST_BINS = 16  # |delta| histogram over [0, 16] levels, 1-level bins
BLOCK_GRID = 4  # 4x4 spatial blocks


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    spec_id: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        expected = SPEC_DIMS.get(self.spec_id)
        if expected is not None and v.size != expected:
            raise ValueError(
                f"spec {self.spec_id} expects {expected} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")

    def __len__(self) -> int:
        return self.values.size


EMPTY = FeatureVector(np.zeros(0), "empty")


def extract_color_features(delta: DifferenceMap | np.ndarray) -> FeatureVector:
    """48 statistics of the difference map.

    Layout: per-channel mean, std, mean|d| and central skew (12); a 16-bin
    |d| histogram over [0, 16] levels (16); 4x4 spatial block means of |d|
    in row-major order (16) and their mean/std/max/min (4).
    """
    data = delta.data if isinstance(delta, DifferenceMap) else np.asarray(delta)
    if data.ndim != 3 or data.shape[2] != 3 or data.size == 0:
        raise ValueError("expected a non-empty (H, W, 3) difference map")
    h, w = data.shape[:2]
    if h < BLOCK_GRID or w < BLOCK_GRID:
        raise ValueError(f"difference map must be at least {BLOCK_GRID}x{BLOCK_GRID}")

    mean = data.mean(axis=(0, 1))
    std = data.std(axis=(0, 1))
    absd = np.abs(data)
    mean_abs = absd.mean(axis=(0, 1))
    centered = data - mean
    skew = (centered**3).mean(axis=(0, 1)) / (std**3 + 1e-12)

    bins = np.clip(absd.reshape(-1).astype(np.int64), 0, ABS_DELTA_HIST_BINS - 1)
    hist = np.bincount(bins, minlength=ABS_DELTA_HIST_BINS) / data.size

    flat_abs = absd.mean(axis=2)
    blocks = np.empty(BLOCK_GRID * BLOCK_GRID)
    row_parts = np.array_split(np.arange(h), BLOCK_GRID)
    col_parts = np.array_split(np.arange(w), BLOCK_GRID)
    k = 0
    for rows in row_parts:
        for cols in col_parts:
            blocks[k] = flat_abs[np.ix_(rows, cols)].mean()
            k += 1

    vec = np.concatenate([
        mean, std, mean_abs, skew, hist, blocks,
        [blocks.mean(), blocks.std(), blocks.max(), blocks.min()],
    ])
    return FeatureVector(vec, COLOR_SPEC_ID)


def extract_visual_features(image: np.ndarray) -> FeatureVector:
    """84 statistics of the input image's color distribution.

    Layout: RGB histogram entropy (3) and smoothness (3); hue entropy,
    smoothness and excluded fraction (3); the 64-bin hue histogram (64);
    per-channel mean and std (6); RGB histogram peak mass (3), hue peak
    mass (1) and mean RGB bin occupancy (1).
    """
    image = validate_image(image)
    hs = colorstats.histogram_set(image)
    summ = colorstats.summarize(hs)
    levels = image.astype(np.float64)
    vec = np.concatenate([
        summ.rgb_entropy,
        summ.rgb_smoothness,
        [summ.hue_entropy, summ.hue_smoothness, summ.hue_excluded_fraction],
        hs.hue,
        levels.mean(axis=(0, 1)),
        levels.std(axis=(0, 1)),
        hs.rgb.max(axis=1),
        [hs.hue.max(), (hs.rgb > 0).mean()],
    ])
    return FeatureVector(vec, VISUAL_SPEC_ID)


def fuse(fv: FeatureVector, fc: FeatureVector) -> FeatureVector:
    """Concatenate visual features ahead of color features."""
    if fc.spec_id == "empty":
        return fv
    if fv.spec_id == "empty":
        return fc
    if fv.spec_id == fc.spec_id:
        raise ValueError("cannot fuse two vectors of the same spec")
    return FeatureVector(
        np.concatenate([fv.values, fc.values]), fv.spec_id + "+" + fc.spec_id)


def color_feature_names() -> list[str]:
    names = [f"delta_mean_{c}" for c in "rgb"]
    names += [f"delta_std_{c}" for c in "rgb"]
    names += [f"delta_meanabs_{c}" for c in "rgb"]
    names += [f"delta_skew_{c}" for c in "rgb"]
    names += [f"absdelta_hist_{i}" for i in range(ABS_DELTA_HIST_BINS)]
    names += [f"block_meanabs_{i}" for i in range(BLOCK_GRID * BLOCK_GRID)]
    names += ["block_mean", "block_std", "block_max", "block_min"]
    return names


def visual_feature_names() -> list[str]:
    names = [f"rgb_entropy_{c}" for c in "rgb"]
    names += [f"rgb_smoothness_{c}" for c in "rgb"]
    names += ["hue_entropy", "hue_smoothness", "hue_excluded_fraction"]
    names += [f"hue_hist_{i}" for i in range(colorstats.HUE_BINS)]
    names += [f"level_mean_{c}" for c in "rgb"]
    names += [f"level_std_{c}" for c in "rgb"]
    names += [f"rgb_peak_{c}" for c in "rgb"]
    names += ["hue_peak", "rgb_bin_occupancy"]
    return names
