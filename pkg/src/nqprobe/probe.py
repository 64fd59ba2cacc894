"""The noise-quantization probe.

Three steps: add Gaussian noise (standard deviation ``sigma_levels``, in
units of one quantization level), round to integer levels (half away from
zero, optionally clamped to [0, 255]), and average R independent replicas.
The difference map ``delta = image - restored`` is the probe's signal: its
expectation over noise equals minus the quantization bias of the underlying
intensity values (module :mod:`nqprobe.bias`).

Determinism: replica r uses seed ``mix64(master_seed + r * GOLDEN)`` and the
noise at flat pixel index i within a replica is a pure function of
(replica seed, i).  Replica outputs are integers, so their int64 sum is exact
and independent of accumulation order; results are bit-identical for any
worker count.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from . import _kernels, _rng
from .image import LEVELS, is_integer_mode, save_png, validate_image

__all__ = [
    "ProbeConfig",
    "DifferenceMap",
    "DeltaStats",
    "add_noise_quantize",
    "run_probe",
    "probe_statistics",
    "round_half_away",
    "write_dmap",
    "read_dmap",
    "render_delta",
    "save_delta_png",
]

DMAP_VERSION = 1

# Difference-value histogram layout: 65 equal bins spanning [-32, +32] levels
# (the middle bin is centered on zero) plus one underflow and one overflow bin.
DELTA_HIST_BINS = 65
DELTA_HIST_RANGE = (-32.0, 32.0)


@dataclass(frozen=True)
class ProbeConfig:
    """Probe hyperparameters; sigma is expressed in quantization-level units."""

    sigma_levels: float
    replicas: int = 50
    master_seed: int = 0
    clip: bool = True

    def __post_init__(self):
        if not (self.sigma_levels > 0):
            raise ValueError("sigma_levels must be positive")
        if int(self.replicas) < 1:
            raise ValueError("replicas must be >= 1")

    def to_dict(self) -> dict:
        return {
            "sigma_levels": float(self.sigma_levels),
            "replicas": int(self.replicas),
            "seed": int(self.master_seed),
            "clip": bool(self.clip),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeConfig":
        return cls(
            sigma_levels=float(d["sigma_levels"]),
            replicas=int(d["replicas"]),
            master_seed=int(d.get("seed", d.get("master_seed", 0))),
            clip=bool(d["clip"]),
        )


@dataclass(frozen=True)
class DifferenceMap:
    """delta = image - restored, in level units, with the config that made it."""

    data: np.ndarray  # (H, W, 3) float64
    config: ProbeConfig

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DeltaStats:
    channel_mean: np.ndarray  # (3,)
    channel_std: np.ndarray  # (3,)
    mean_abs: float
    mean: float
    histogram: np.ndarray  # (67,) counts: [underflow, 65 bins, overflow]

    def to_dict(self) -> dict:
        return {
            "channel_mean": [float(v) for v in self.channel_mean],
            "channel_std": [float(v) for v in self.channel_std],
            "mean_abs": float(self.mean_abs),
            "mean": float(self.mean),
            "histogram_bins": DELTA_HIST_BINS,
            "histogram_range": list(DELTA_HIST_RANGE),
            "histogram": [int(v) for v in self.histogram],
        }


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero (the probe's rule)."""
    x = np.asarray(x, dtype=np.float64)
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


# --- replica sampling -------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _increment_alias_table(sigma: float):
    """Alias table for d = round(sigma * N), N standard normal.

    Support is truncated at +-(ceil(10 sigma) + 2) with the end atoms
    absorbing the Gaussian tails (total absorbed mass < 1e-22).  Cutoffs are
    stored as integers against the low bits of the mixed word, so sampling
    uses one 64-bit hash, one compare and two table reads per value.
    """
    width = int(math.ceil(10.0 * sigma)) + 2
    d = np.arange(-width, width + 1, dtype=np.int64)
    hi = ndtr((d + 0.5) / sigma)
    lo = ndtr((d - 0.5) / sigma)
    p = hi - lo
    p[0] = hi[0]
    p[-1] = 1.0 - lo[-1]
    p = p / p.sum()

    size = 1 << max(1, int(math.ceil(math.log2(p.size))))
    prob = np.zeros(size)
    prob[: p.size] = p
    vals = np.zeros(size, dtype=np.int64)
    vals[: p.size] = d

    # Vose alias construction.
    scaled = prob * size
    cutoff = np.ones(size, dtype=np.float64)
    alias = np.arange(size, dtype=np.int64)
    small = [j for j in range(size) if scaled[j] < 1.0]
    large = [j for j in range(size) if scaled[j] >= 1.0]
    while small and large:
        s = small.pop()
        l = large[-1]
        cutoff[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            large.pop()
            small.append(l)

    bits = int(math.log2(size))
    rem = 64 - bits
    # construction dust can leave cutoffs at -1e-17 or 1+1e-17; a negative
    # value would wrap when cast to uint64, so clamp before quantizing
    np.clip(cutoff, 0.0, 1.0, out=cutoff)
    cut_int = np.minimum(np.floor(cutoff * float(1 << rem)), float(1 << rem) - 1)
    return (
        np.uint64(bits),
        cut_int.astype(np.uint64),
        vals,
        vals[alias],
    )


def _sample_increments_numpy(u64: np.ndarray, table) -> np.ndarray:
    bits, cutoff, vals, alias_vals = table
    shift = np.uint64(64) - bits
    mask = (np.uint64(1) << shift) - np.uint64(1)
    j = (u64 >> shift).astype(np.int64)
    take_main = (u64 & mask) < cutoff[j]
    return np.where(take_main, vals[j], alias_vals[j])


def _accumulate_numpy(flat: np.ndarray, seeds: np.ndarray, sigma: float,
                      clip: bool, integer_mode: bool) -> np.ndarray:
    """Reference engine: same streams and tables as the numba kernels."""
    n = flat.size
    idx = np.arange(1, n + 1, dtype=np.uint64) * _rng.GOLDEN
    acc = np.zeros(n, dtype=np.int64)
    if integer_mode:
        table = _increment_alias_table(float(sigma))
        base = flat.astype(np.int64)
        for s in seeds:
            u64 = _rng.mix64(np.uint64(s) + idx)
            y = base + _sample_increments_numpy(u64, table)
            if clip:
                np.clip(y, 0, LEVELS - 1, out=y)
            acc += y
    else:
        for s in seeds:
            u64 = _rng.mix64(np.uint64(s) + idx)
            u = (np.float64(u64 >> np.uint64(12)) + 0.5) * 2.220446049250313e-16
            y = round_half_away(flat + sigma * _rng.normal_quantile(u))
            if clip:
                np.clip(y, 0, LEVELS - 1, out=y)
            acc += y.astype(np.int64)
    return acc


def _accumulate(image: np.ndarray, seeds: np.ndarray, sigma: float, clip: bool,
                engine: str = "auto") -> np.ndarray:
    """Sum of quantized replicas as int64, shaped like the image."""
    integer_mode = is_integer_mode(image)
    flat = image.reshape(-1)
    if engine not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "numpy":
        acc = _accumulate_numpy(flat.astype(np.float64) if not integer_mode else flat,
                                seeds, sigma, clip, integer_mode)
        return acc.reshape(image.shape)
    out = np.empty(flat.size, dtype=np.int64)
    if integer_mode:
        bits, cutoff, vals, alias_vals = _increment_alias_table(float(sigma))
        _kernels.accumulate_integer(
            flat.astype(np.int64), seeds, bits, cutoff, vals, alias_vals,
            bool(clip), np.int64(0), np.int64(LEVELS - 1), out)
    else:
        _kernels.accumulate_fractional(
            flat.astype(np.float64), seeds, float(sigma),
            bool(clip), np.int64(0), np.int64(LEVELS - 1), out)
    return out.reshape(image.shape)


# --- public operations ------------------------------------------------------


def add_noise_quantize(image: np.ndarray, sigma_levels: float, replica_seed: int,
                       clip: bool = True, engine: str = "auto") -> np.ndarray:
    """One probe replica: round(image + noise), optionally clamped to [0, 255].

    The replica seed fully determines the noise field.  Output is an int64
    array; without clipping, values may leave [0, 255].
    """
    image = validate_image(image)
    if not (sigma_levels > 0):
        raise ValueError("sigma_levels must be positive")
    seeds = np.array([_rng.canonical_seed(replica_seed)], dtype=np.uint64)
    return _accumulate(image, seeds, float(sigma_levels), clip, engine)


def run_probe(image: np.ndarray, config: ProbeConfig, threads: int | None = None,
              engine: str = "auto") -> tuple[np.ndarray, DifferenceMap]:
    """Full probe: returns (restored image, difference map).

    restored = mean over replicas of round(image + noise_r); replica sums are
    integers accumulated exactly in int64, so the result does not depend on
    the evaluation schedule or ``threads``.
    """
    image = validate_image(image)
    seeds = _rng.replica_seeds(config.master_seed, config.replicas)
    prev = None
    if threads is not None:
        prev = _kernels.set_threads(threads)
    try:
        acc = _accumulate(image, seeds, config.sigma_levels, config.clip, engine)
    finally:
        if prev is not None:
            _kernels.set_threads(prev)
    restored = acc / float(config.replicas)
    delta = image.astype(np.float64) - restored
    return restored, DifferenceMap(data=delta, config=config)


def probe_statistics(delta: DifferenceMap | np.ndarray) -> DeltaStats:
    """Per-channel moments, global moments and the banded value histogram."""
    data = delta.data if isinstance(delta, DifferenceMap) else np.asarray(delta)
    if data.ndim != 3 or data.shape[2] != 3 or data.size == 0:
        raise ValueError("expected a non-empty (H, W, 3) difference map")
    lo, hi = DELTA_HIST_RANGE
    width = (hi - lo) / DELTA_HIST_BINS
    core = np.floor((data.reshape(-1) - lo) / width).astype(np.int64)
    core = np.clip(core, -1, DELTA_HIST_BINS) + 1  # 0 underflow, 66 overflow
    hist = np.bincount(core, minlength=DELTA_HIST_BINS + 2)
    return DeltaStats(
        channel_mean=data.mean(axis=(0, 1)),
        channel_std=data.std(axis=(0, 1)),
        mean_abs=float(np.abs(data).mean()),
        mean=float(data.mean()),
        histogram=hist,
    )


# --- on-disk formats --------------------------------------------------------


def write_dmap(path, dmap: DifferenceMap) -> None:
    """One JSON header line, then raw little-endian float32, row-major HxWx3."""
    header = {
        "height": dmap.height,
        "width": dmap.width,
        "sigma_levels": float(dmap.config.sigma_levels),
        "replicas": int(dmap.config.replicas),
        "seed": int(dmap.config.master_seed),
        "clip": bool(dmap.config.clip),
        "version": DMAP_VERSION,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(dmap.data, dtype="<f4").tobytes())


def read_dmap(path) -> DifferenceMap:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    h, w = int(header["height"]), int(header["width"])
    data = np.frombuffer(raw, dtype="<f4").reshape(h, w, 3).astype(np.float64)
    cfg = ProbeConfig(
        sigma_levels=header["sigma_levels"],
        replicas=header["replicas"],
        master_seed=header["seed"],
        clip=header["clip"],
    )
    return DifferenceMap(data=data, config=cfg)


def render_delta(delta: DifferenceMap | np.ndarray, gain: float = 20.0) -> np.ndarray:
    """8-bit visualization 128 + gain * delta, clamped to [0, 255]."""
    data = delta.data if isinstance(delta, DifferenceMap) else np.asarray(delta)
    return np.clip(np.round(128.0 + gain * data), 0, 255).astype(np.uint8)


def save_delta_png(path, delta: DifferenceMap | np.ndarray, gain: float = 20.0) -> None:
    save_png(path, render_delta(delta, gain))


def with_seed(config: ProbeConfig, seed: int) -> ProbeConfig:
    return replace(config, master_seed=seed)
