"""Noise-quantization probing of color distributions.

A library for measuring how stable an image is under dithered re-quantization
(add Gaussian noise, round to integer levels, average replicas), verifying the
closed-form quantization-bias theory behind that signal, and training a
lightweight dual-branch detector on probe-derived features.
"""

from .bias import (BiasProfile, DistributionSpec, bias_profile,
                   exact_bias_clipped, exact_bias_unclipped,
                   first_harmonic_amplitude, fourier_bias, fourier_order,
                   monte_carlo_bias, nonuniformity_score, predicted_delta_mean,
                   quantized_moments, run_verification)
from .classifier import (ClassifierModel, EvalMetrics, LabeledDataset,
                         TrainConfig, TrainingDivergenceError,
                         average_precision, evaluate, evaluate_scores,
                         extract_fused, gradient_check, load_dataset,
                         load_model, predict, predict_features, roc_auc,
                         save_dataset, save_model, train, train_on_features)
from .colorstats import (CorpusSummary, HistogramSet, StatsSummary,
                         corpus_summary, histogram_entropy, histogram_set,
                         hue_histogram, rgb_histograms, smoothness_penalty,
                         summarize)
from .features import (COLOR_SPEC_ID, VISUAL_SPEC_ID, FeatureVector,
                       extract_color_features, extract_visual_features, fuse)
from .image import load_png, save_png, validate_image
from .probe import (DeltaStats, DifferenceMap, ProbeConfig, add_noise_quantize,
                    probe_statistics, read_dmap, render_delta, run_probe,
                    save_delta_png, write_dmap)
from .synthetics import (SynthSpec, gen_dataset, gen_fractional, gen_peaked,
                         gen_smooth, generate)

__version__ = "0.1.0"
