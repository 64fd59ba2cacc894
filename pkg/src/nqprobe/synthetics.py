"""Synthetic corpora with controlled color distributions.

Two labeled families: "smooth" images (broad, high-entropy palettes, standing
in for photographs) and "peaked" images (few dominant colors with region
structure, standing in for generator output).  Two fractional-mode families
drive the bias theory directly: constant sub-level offsets and a sinusoidal
sweep of all fractional phases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RectBivariateSpline

from ._rng import GOLDEN, canonical_seed, mix64
from .classifier import FAKE, REAL, LabeledDataset

__all__ = [
    "SynthSpec",
    "gen_smooth",
    "gen_peaked",
    "gen_fractional",
    "generate",
    "gen_dataset",
]

KINDS = ("smooth", "peaked", "fractional_constant", "fractional_sine")


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    width: int = 128
    height: int = 128
    seed: int = 0
    # smooth
    knots: int = 5
    noise_sigma: float = 4.0
    # peaked
    palette_size: int = 6
    concentration: float = 1.0
    jitter: float = 2.0
    sites: int = 32
    # fractional
    offset: float = 0.25
    base_level: int = 100
    period: float = 64.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.width < 8 or self.height < 8:
            raise ValueError("dimensions must be at least 8")
        if self.kind == "peaked" and self.palette_size < 2:
            raise ValueError("peaked palettes need at least 2 colors")
        if self.kind == "smooth" and self.knots < 4:
            raise ValueError("smooth fields need at least 4 spline knots")
        if not (0.0 <= self.offset < 1.0):
            raise ValueError("offset must lie in [0, 1)")
        if self.kind.startswith("fractional") and not (0 <= self.base_level <= 253):
            raise ValueError("base_level + 1 must stay in [1, 254]")


def gen_smooth(spec: SynthSpec) -> np.ndarray:
    """Low-frequency random spline fields per channel, spanned to [0, 255]."""
    if spec.kind != "smooth":
        raise ValueError("spec.kind must be 'smooth'")
    rng = np.random.default_rng(canonical_seed(spec.seed))
    h, w, k = spec.height, spec.width, spec.knots
    ky = np.linspace(0.0, h - 1.0, k)
    kx = np.linspace(0.0, w - 1.0, k)
    yy = np.arange(h, dtype=np.float64)
    xx = np.arange(w, dtype=np.float64)
    img = np.empty((h, w, 3))
    for c in range(3):
        surface = RectBivariateSpline(ky, kx, rng.normal(size=(k, k)), kx=3, ky=3)(yy, xx)
        scale = surface.std() + 1e-9
        surface = surface + rng.normal(scale=spec.noise_sigma / 255.0, size=(h, w)) * scale
        lo, hi = surface.min(), surface.max()
        img[:, :, c] = (surface - lo) / (hi - lo) * 255.0
    return np.clip(np.floor(img), 0, 255).astype(np.uint8)


def gen_peaked(spec: SynthSpec) -> np.ndarray:
    """K palette colors painted over nearest-site regions, with level jitter.

    Palette levels are drawn without replacement per channel, so jitter=0
    yields exactly K distinct levels per channel; the Dirichlet concentration
    controls how unevenly mass spreads over the palette.
    """
    if spec.kind != "peaked":
        raise ValueError("spec.kind must be 'peaked'")
    rng = np.random.default_rng(canonical_seed(spec.seed))
    h, w, k = spec.height, spec.width, spec.palette_size
    palette = np.stack([rng.choice(256, size=k, replace=False) for _ in range(3)], axis=1)
    weights = rng.dirichlet(np.full(k, spec.concentration))
    sites = max(spec.sites, k)  # every palette color must be expressible
    site_color = rng.choice(k, size=sites, p=weights)
    sy = rng.uniform(0, h, sites)
    sx = rng.uniform(0, w, sites)
    yy, xx = np.mgrid[0:h, 0:w]
    d2 = (yy[..., None] - sy) ** 2 + (xx[..., None] - sx) ** 2
    img = palette[site_color[d2.argmin(axis=2)]].astype(np.float64)
    if spec.jitter > 0:
        img = img + rng.normal(scale=spec.jitter, size=img.shape)
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def gen_fractional(spec: SynthSpec) -> np.ndarray:
    """Fractional-mode calibration fields for the bias theory."""
    h, w = spec.height, spec.width
    if spec.kind == "fractional_constant":
        return np.full((h, w, 3), spec.base_level + spec.offset, dtype=np.float64)
    if spec.kind == "fractional_sine":
        cols = np.arange(w, dtype=np.float64)
        values = spec.base_level + 0.5 + 0.5 * np.sin(2.0 * np.pi * cols / spec.period)
        return np.broadcast_to(values[None, :, None], (h, w, 3)).copy()
    raise ValueError("spec.kind must be a fractional kind")


def generate(spec: SynthSpec) -> np.ndarray:
    if spec.kind == "smooth":
        return gen_smooth(spec)
    if spec.kind == "peaked":
        return gen_peaked(spec)
    return gen_fractional(spec)


def gen_dataset(count_per_class: int,
                smooth_template: SynthSpec | None = None,
                peaked_template: SynthSpec | None = None,
                seed: int = 0) -> LabeledDataset:
    """count smooth images labeled real plus count peaked images labeled fake.

    Item seeds are derived from ``seed`` so generation order (or parallel
    generation) cannot change any image.
    """
    if count_per_class < 1:
        raise ValueError("count_per_class must be >= 1")
    smooth = smooth_template or SynthSpec(kind="smooth")
    peaked = peaked_template or SynthSpec(kind="peaked")
    if smooth.kind != "smooth" or peaked.kind != "peaked":
        raise ValueError("templates must have their matching kinds")

    idx = np.arange(1, 2 * count_per_class + 1, dtype=np.uint64)
    item_seeds = mix64(np.uint64(canonical_seed(seed)) + idx * GOLDEN)

    images, labels, tags = [], [], []
    for i in range(count_per_class):
        images.append(gen_smooth(replace(smooth, seed=int(item_seeds[i]))))
        labels.append(REAL)
        tags.append(f"smooth-{i:05d}")
    for i in range(count_per_class):
        images.append(gen_peaked(replace(peaked, seed=int(item_seeds[count_per_class + i]))))
        labels.append(FAKE)
        tags.append(f"peaked-{i:05d}")
    return LabeledDataset(images=images, labels=np.asarray(labels), tags=tags)
