"""Color-distribution statistics: RGB and hue histograms, entropy, smoothness.

Synthetic imagery tends to concentrate intensity mass in narrow ranges; these
statistics quantify that as lower histogram entropy and a larger adjacent-bin
smoothness penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import LEVELS, is_integer_mode, validate_image

__all__ = [
    "HistogramSet",
    "StatsSummary",
    "CorpusSummary",
    "rgb_histograms",
    "hue_histogram",
    "histogram_set",
    "histogram_entropy",
    "smoothness_penalty",
    "summarize",
    "corpus_summary",
]

HUE_BINS = 64
DEFAULT_SATURATION_FLOOR = 0.05


@dataclass(frozen=True)
class HistogramSet:
    rgb: np.ndarray  # (3, 256), each row sums to 1
    hue: np.ndarray  # (64,), sums to 1 or all-zero when no pixel qualifies
    pixel_count: int
    hue_excluded_fraction: float


@dataclass(frozen=True)
class StatsSummary:
    rgb_entropy: np.ndarray  # (3,) bits
    rgb_smoothness: np.ndarray  # (3,)
    hue_entropy: float
    hue_smoothness: float
    hue_excluded_fraction: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([
            self.rgb_entropy, self.rgb_smoothness,
            [self.hue_entropy, self.hue_smoothness, self.hue_excluded_fraction],
        ])

    def to_dict(self) -> dict:
        return {
            "rgb_entropy_bits": [float(v) for v in self.rgb_entropy],
            "rgb_smoothness": [float(v) for v in self.rgb_smoothness],
            "hue_entropy_bits": float(self.hue_entropy),
            "hue_smoothness": float(self.hue_smoothness),
            "hue_excluded_fraction": float(self.hue_excluded_fraction),
        }


def _as_levels(image: np.ndarray) -> np.ndarray:
    image = validate_image(image)
    if not is_integer_mode(image):
        image = np.floor(image).astype(np.int64)  # fractional inputs floored to levels
    return image


def rgb_histograms(image: np.ndarray) -> np.ndarray:
    """Per-channel normalized 256-bin level histograms, shape (3, 256)."""
    image = _as_levels(image)
    n = image.shape[0] * image.shape[1]
    out = np.empty((3, LEVELS))
    for c in range(3):
        out[c] = np.bincount(image[:, :, c].reshape(-1), minlength=LEVELS) / n
    return out


def hue_histogram(image: np.ndarray,
                  saturation_floor: float = DEFAULT_SATURATION_FLOOR,
                  ) -> tuple[np.ndarray, float]:
    """Normalized 64-bin hue histogram over [0, 360) plus the excluded fraction.

    Hue comes from the hexcone formula; pixels with saturation below the floor
    (hue numerically unstable) and pixels on the gray axis (hue undefined) are
    excluded and counted in the returned fraction.
    """
    image = _as_levels(image).astype(np.float64)
    r, g, b = image[:, :, 0], image[:, :, 1], image[:, :, 2]
    mx = np.max(image, axis=2)
    mn = np.min(image, axis=2)
    spread = mx - mn
    sat = np.where(mx > 0, spread / np.where(mx > 0, mx, 1.0), 0.0)
    keep = (sat >= saturation_floor) & (spread > 0)

    n = image.shape[0] * image.shape[1]
    excluded = 1.0 - keep.sum() / n
    if not np.any(keep):
        return np.zeros(HUE_BINS), 1.0

    safe = np.where(spread > 0, spread, 1.0)
    hue = np.where(
        mx == r, (g - b) / safe % 6.0,
        np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    ) * 60.0
    bins = np.clip((hue[keep] / 360.0 * HUE_BINS).astype(np.int64), 0, HUE_BINS - 1)
    hist = np.bincount(bins, minlength=HUE_BINS).astype(np.float64)
    return hist / hist.sum(), float(excluded)


def histogram_set(image: np.ndarray,
                  saturation_floor: float = DEFAULT_SATURATION_FLOOR) -> HistogramSet:
    image = _as_levels(image)
    hue, excluded = hue_histogram(image, saturation_floor)
    return HistogramSet(
        rgb=rgb_histograms(image),
        hue=hue,
        pixel_count=image.shape[0] * image.shape[1],
        hue_excluded_fraction=excluded,
    )


def histogram_entropy(hist: np.ndarray) -> float:
    """Shannon entropy in bits; an all-zero histogram scores 0."""
    hist = np.asarray(hist, dtype=np.float64)
    if np.any(hist < 0):
        raise ValueError("histogram mass must be nonnegative")
    p = hist[hist > 0]
    if p.size == 0:
        return 0.0
    return float(-(p * np.log2(p)).sum())


def smoothness_penalty(hist: np.ndarray) -> float:
    """l2 norm of adjacent-bin differences; spiky histograms score high."""
    hist = np.asarray(hist, dtype=np.float64)
    if hist.size < 2:
        raise ValueError("smoothness needs at least 2 bins")
    if np.any(hist < 0):
        raise ValueError("histogram mass must be nonnegative")
    return float(np.sqrt((np.diff(hist) ** 2).sum()))


def summarize(image_or_hists: np.ndarray | HistogramSet,
              saturation_floor: float = DEFAULT_SATURATION_FLOOR) -> StatsSummary:
    if isinstance(image_or_hists, HistogramSet):
        hs = image_or_hists
    else:
        hs = histogram_set(image_or_hists, saturation_floor)
    return StatsSummary(
        rgb_entropy=np.array([histogram_entropy(h) for h in hs.rgb]),
        rgb_smoothness=np.array([smoothness_penalty(h) for h in hs.rgb]),
        hue_entropy=histogram_entropy(hs.hue),
        hue_smoothness=smoothness_penalty(hs.hue),
        hue_excluded_fraction=hs.hue_excluded_fraction,
    )


@dataclass(frozen=True)
class CorpusSummary:
    summaries: list[StatsSummary]
    mean: StatsSummary
    std: StatsSummary
    pooled: HistogramSet

    def to_dict(self) -> dict:
        return {
            "images": len(self.summaries),
            "mean": self.mean.to_dict(),
            "std": self.std.to_dict(),
            "per_image": [s.to_dict() for s in self.summaries],
        }


def corpus_summary(images, saturation_floor: float = DEFAULT_SATURATION_FLOOR,
                   ) -> CorpusSummary:
    """Per-image summaries plus corpus mean/std and mass-weighted pooled histograms."""
    sets = [histogram_set(img, saturation_floor) for img in images]
    if not sets:
        raise ValueError("empty corpus")
    summaries = [summarize(hs) for hs in sets]

    mat = np.stack([s.as_vector() for s in summaries])
    mean_v, std_v = mat.mean(axis=0), mat.std(axis=0)

    def unpack(v):
        return StatsSummary(
            rgb_entropy=v[0:3], rgb_smoothness=v[3:6],
            hue_entropy=float(v[6]), hue_smoothness=float(v[7]),
            hue_excluded_fraction=float(v[8]),
        )

    rgb_w = np.array([hs.pixel_count for hs in sets], dtype=np.float64)
    pooled_rgb = np.tensordot(rgb_w / rgb_w.sum(), np.stack([hs.rgb for hs in sets]), axes=1)
    hue_w = np.array(
        [hs.pixel_count * (1.0 - hs.hue_excluded_fraction) for hs in sets])
    if hue_w.sum() > 0:
        pooled_hue = np.tensordot(hue_w / hue_w.sum(), np.stack([hs.hue for hs in sets]), axes=1)
    else:
        pooled_hue = np.zeros(HUE_BINS)
    pooled = HistogramSet(
        rgb=pooled_rgb,
        hue=pooled_hue,
        pixel_count=int(rgb_w.sum()),
        hue_excluded_fraction=float(1.0 - hue_w.sum() / rgb_w.sum()),
    )
    return CorpusSummary(summaries=summaries, mean=unpack(mean_v), std=unpack(std_v),
                         pooled=pooled)
