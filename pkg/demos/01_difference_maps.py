#!/usr/bin/env python3
"""Difference maps reveal color-distribution structure.

Probes one broad-palette image and one peaked-palette image with identical
settings, then saves the inputs, the 20x-amplified difference maps, and the
per-image delta statistics.  The peaked image leaves a visibly structured,
larger-magnitude residual.

Run:  python demos/01_difference_maps.py
"""

import json
import os

import numpy as np

from nqprobe import (ProbeConfig, SynthSpec, gen_peaked, gen_smooth,
                     probe_statistics, run_probe, save_delta_png, save_png,
                     write_dmap)

OUT = os.path.join(os.path.dirname(__file__), "output", "difference_maps")
os.makedirs(OUT, exist_ok=True)

config = ProbeConfig(sigma_levels=0.10 * 256, replicas=50, master_seed=42)
print(f"probe config: sigma={config.sigma_levels} levels, R={config.replicas}")

images = {
    "smooth": gen_smooth(SynthSpec(kind="smooth", width=256, height=256, seed=7)),
    "peaked": gen_peaked(SynthSpec(kind="peaked", width=256, height=256, seed=7,
                                   palette_size=5, jitter=1.0)),
}

for name, img in images.items():
    restored, delta = run_probe(img, config)
    stats = probe_statistics(delta)

    save_png(os.path.join(OUT, f"{name}_input.png"), img)
    save_delta_png(os.path.join(OUT, f"{name}_delta_x20.png"), delta, gain=20.0)
    write_dmap(os.path.join(OUT, f"{name}.dmap"), delta)
    with open(os.path.join(OUT, f"{name}_stats.json"), "w") as fh:
        json.dump(stats.to_dict(), fh, indent=2)

    print(f"\n{name} image:")
    print(f"  mean delta        {stats.mean:+.4f} levels")
    print(f"  mean |delta|      {stats.mean_abs:.4f} levels")
    print(f"  channel means     {np.round(stats.channel_mean, 4)}")
    print(f"  channel stds      {np.round(stats.channel_std, 4)}")

print(f"\nwrote inputs, x20 visualizations, .dmap files and stats to {OUT}/")
print("the peaked image's residual is larger and spatially structured: its")
print("intensity mass sits at a few sub-level phases whose quantization bias")
print("does not cancel when the noisy replicas are averaged.")
