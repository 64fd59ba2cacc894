"""Shallow trainable head over fused probe features, with evaluation metrics.

The detector follows the dual-branch layout: visual features of the image and
color features of its difference map are concatenated, z-normalized with
training statistics, and classified by a logistic head (linear, or with one
tanh hidden layer).  Training is plain mini-batch gradient descent whose
learning rate is halved whenever the full-dataset loss would increase, so the
recorded loss trajectory is non-increasing by construction.

Scores are P(fake); a score of exactly 0.5 classifies as fake.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import features as ft
from .image import load_png, save_png
from .probe import ProbeConfig, run_probe

__all__ = [
    "LabeledDataset",
    "TrainConfig",
    "ClassifierModel",
    "TrainingDivergenceError",
    "extract_fused",
    "extract_feature_matrix",
    "train",
    "train_on_features",
    "predict",
    "predict_features",
    "gradient_check",
    "evaluate",
    "evaluate_scores",
    "average_precision",
    "roc_auc",
    "save_model",
    "load_model",
    "save_dataset",
    "load_dataset",
]

MODEL_VERSION = 1
REAL, FAKE = 0, 1
_LABEL_NAMES = {REAL: "real", FAKE: "fake"}
_LABEL_CODES = {"real": REAL, "fake": FAKE}
BRANCHES = ("full", "visual", "color")


class TrainingDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    images: list
    labels: np.ndarray  # int, 0 real / 1 fake
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if len(self.images) != labels.size:
            raise ValueError("images and labels must have equal length")
        if not self.tags:
            object.__setattr__(self, "tags", [f"item-{i}" for i in range(labels.size)])

    def __len__(self) -> int:
        return len(self.images)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            images=[self.images[i] for i in idx],
            labels=self.labels[idx],
            tags=[self.tags[i] for i in idx],
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    epochs: int = 200
    batch_size: int = 64
    hidden_width: int = 0  # 0 = linear head
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.hidden_width < 0 or self.l2_penalty < 0:
            raise ValueError("hidden_width and l2_penalty must be nonnegative")


@dataclass
class ClassifierModel:
    feature_spec_id: str
    probe_config: ProbeConfig
    branches: str
    norm_mean: np.ndarray
    norm_scale: np.ndarray  # strictly positive
    params: dict  # linear: {w, b}; hidden adds {w1, b1}
    hidden_width: int
    loss_trajectory: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.norm_mean.size


# --- feature plumbing -------------------------------------------------------


def extract_fused(image: np.ndarray, config: ProbeConfig, branches: str = "full",
                  threads: int | None = None) -> ft.FeatureVector:
    """Extract the branch combination used by a model from one image."""
    if branches not in BRANCHES:
        raise ValueError(f"branches must be one of {BRANCHES}")
    fv = ft.extract_visual_features(image) if branches in ("full", "visual") else ft.EMPTY
    if branches in ("full", "color"):
        _, delta = run_probe(image, config, threads=threads)
        fc = ft.extract_color_features(delta)
    else:
        fc = ft.EMPTY
    return ft.fuse(fv, fc)


def extract_feature_matrix(dataset: LabeledDataset, config: ProbeConfig,
                           branches: str = "full", threads: int | None = None,
                           ) -> tuple[np.ndarray, np.ndarray, str]:
    """(X, y, spec_id) for a whole dataset."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    vecs = [extract_fused(img, config, branches, threads) for img in dataset.images]
    return np.stack([v.values for v in vecs]), dataset.labels.copy(), vecs[0].spec_id


# --- logistic head ----------------------------------------------------------


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _logits(params: dict, x: np.ndarray) -> np.ndarray:
    if "w1" in params:
        a = np.tanh(x @ params["w1"] + params["b1"])
        return a @ params["w"] + params["b"]
    return x @ params["w"] + params["b"]


def _loss(params: dict, x: np.ndarray, y: np.ndarray, l2: float) -> float:
    # diverging parameters overflow to inf here; that is the detection signal
    with np.errstate(over="ignore", invalid="ignore"):
        t = _logits(params, x)
        bce = float(np.mean(np.logaddexp(0.0, t) - y * t))
        reg = float(np.sum(params["w"] ** 2))
        if "w1" in params:
            reg += float(np.sum(params["w1"] ** 2))
        return bce + 0.5 * l2 * reg


def _gradients(params: dict, x: np.ndarray, y: np.ndarray, l2: float) -> dict:
    n = x.shape[0]
    if "w1" in params:
        z = x @ params["w1"] + params["b1"]
        a = np.tanh(z)
        t = a @ params["w"] + params["b"]
        dt = (_sigmoid(t) - y) / n
        da = np.outer(dt, params["w"]) * (1.0 - a * a)
        return {
            "w": a.T @ dt + l2 * params["w"],
            "b": dt.sum(),
            "w1": x.T @ da + l2 * params["w1"],
            "b1": da.sum(axis=0),
        }
    t = x @ params["w"] + params["b"]
    dt = (_sigmoid(t) - y) / n
    return {"w": x.T @ dt + l2 * params["w"], "b": dt.sum()}


def _init_params(rng: np.random.Generator, n_features: int, hidden: int) -> dict:
    if hidden > 0:
        return {
            "w1": rng.normal(scale=0.01, size=(n_features, hidden)),
            "b1": np.zeros(hidden),
            "w": rng.normal(scale=0.01, size=hidden),
            "b": 0.0,
        }
    return {"w": rng.normal(scale=0.01, size=n_features), "b": 0.0}


def _copy_params(params: dict) -> dict:
    return {k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in params.items()}


def train_on_features(x: np.ndarray, y: np.ndarray, hyper: TrainConfig,
                      feature_spec_id: str, probe_config: ProbeConfig,
                      branches: str = "full", initial: dict | None = None,
                      ) -> ClassifierModel:
    """Fit the head on precomputed feature rows."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.size or x.shape[0] == 0:
        raise ValueError("need a non-empty (n, d) feature matrix with matching labels")
    if np.unique(y).size < 2:
        raise ValueError("training requires both classes present")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std < 1e-8, 1.0, std)
    xn = (x - mean) / scale

    rng = np.random.default_rng(hyper.seed)
    params = _copy_params(initial) if initial is not None else _init_params(
        rng, x.shape[1], hyper.hidden_width)

    lr = hyper.learning_rate
    trajectory = [_loss(params, xn, y, hyper.l2_penalty)]
    best = _copy_params(params)
    n = x.shape[0]
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start:start + hyper.batch_size]
            grads = _gradients(params, xn[batch], y[batch], hyper.l2_penalty)
            for k, g in grads.items():
                params[k] = params[k] - lr * g
        loss = _loss(params, xn, y, hyper.l2_penalty)
        if not np.isfinite(loss):
            raise TrainingDivergenceError(f"loss became non-finite at epoch {epoch}")
        if loss > trajectory[-1]:
            # reject the epoch: restore the last accepted state, halve the rate
            params = _copy_params(best)
            lr *= 0.5
            trajectory.append(trajectory[-1])
        else:
            best = _copy_params(params)
            trajectory.append(loss)

    return ClassifierModel(
        feature_spec_id=feature_spec_id,
        probe_config=probe_config,
        branches=branches,
        norm_mean=mean,
        norm_scale=scale,
        params=best,
        hidden_width=hyper.hidden_width,
        loss_trajectory=[float(v) for v in trajectory],
    )


def train(dataset: LabeledDataset, probe_config: ProbeConfig, hyper: TrainConfig,
          branches: str = "full", threads: int | None = None,
          initial: dict | None = None) -> ClassifierModel:
    """Probe every image, extract and fuse features, fit the head."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if np.unique(dataset.labels).size < 2:
        raise ValueError("training requires both classes present")
    x, y, spec = extract_feature_matrix(dataset, probe_config, branches, threads)
    return train_on_features(x, y, hyper, spec, probe_config, branches, initial)


def predict_features(model: ClassifierModel, x: np.ndarray) -> np.ndarray:
    """Scores in (0, 1) for normalized-on-the-fly feature rows."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, got {x.shape[1]}")
    xn = (x - model.norm_mean) / model.norm_scale
    return _sigmoid(_logits(model.params, xn))


def predict(model: ClassifierModel, image: np.ndarray,
            probe_config: ProbeConfig | None = None,
            threads: int | None = None) -> float:
    """Detection score P(fake) for one image."""
    config = probe_config if probe_config is not None else model.probe_config
    vec = extract_fused(image, config, model.branches, threads)
    if vec.spec_id != model.feature_spec_id:
        raise ValueError(
            f"feature spec mismatch: model {model.feature_spec_id}, got {vec.spec_id}")
    return float(predict_features(model, vec.values[None, :])[0])


# --- gradient verification --------------------------------------------------


def _pack(params: dict) -> tuple[np.ndarray, list]:
    layout = []
    chunks = []
    for k in sorted(params):
        v = np.atleast_1d(np.asarray(params[k], dtype=np.float64))
        layout.append((k, v.shape))
        chunks.append(v.reshape(-1))
    return np.concatenate(chunks), layout


def _unpack(vec: np.ndarray, layout: list) -> dict:
    out = {}
    pos = 0
    for k, shape in layout:
        size = int(np.prod(shape))
        v = vec[pos:pos + size].reshape(shape)
        out[k] = float(v[0]) if shape == (1,) and k in ("b",) else v
        pos += size
    return out


def gradient_check(model: ClassifierModel, x: np.ndarray, y: np.ndarray,
                   epsilon: float = 1e-5, l2: float | None = None) -> float:
    """Max relative error between analytic and central-difference gradients."""
    if not (1e-7 <= epsilon <= 1e-3):
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if l2 is None:
        l2 = 1e-4
    xn = (x - model.norm_mean) / model.norm_scale

    analytic, layout = _pack(_gradients(model.params, xn, y, l2))
    theta0, _ = _pack(model.params)
    numeric = np.empty_like(theta0)
    for i in range(theta0.size):
        plus = theta0.copy()
        plus[i] += epsilon
        minus = theta0.copy()
        minus[i] -= epsilon
        numeric[i] = (
            _loss(_unpack(plus, layout), xn, y, l2)
            - _loss(_unpack(minus, layout), xn, y, l2)
        ) / (2.0 * epsilon)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / denom))


# --- evaluation -------------------------------------------------------------


def average_precision(labels: np.ndarray, scores: np.ndarray) -> float:
    """Area under the precision-recall curve by step interpolation.

    Scores are sorted descending; tied scores form one step.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == FAKE).sum())
    if n_pos == 0 or n_pos == labels.size:
        raise ValueError("average precision needs both classes")
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    boundaries = np.nonzero(np.diff(s))[0]
    ends = np.concatenate([boundaries, [y.size - 1]])
    tp = np.cumsum(y == FAKE)[ends]
    fp = np.cumsum(y == REAL)[ends]
    precision = tp / (tp + fp)
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-statistic AUC with ties averaged (Mann-Whitney)."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == FAKE).sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(scores, method="average")
    pos_rank_sum = ranks[labels == FAKE].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    average_precision: float | None
    roc_auc: float | None
    n_real: int
    n_fake: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "average_precision": self.average_precision,
            "roc_auc": self.roc_auc,
            "n_real": self.n_real,
            "n_fake": self.n_fake,
        }


def evaluate_scores(labels: np.ndarray, scores: np.ndarray) -> EvalMetrics:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    predicted = (scores >= 0.5).astype(np.int64)  # ties classify as fake
    acc = float((predicted == labels).mean())
    n_fake = int((labels == FAKE).sum())
    n_real = labels.size - n_fake
    if n_fake == 0 or n_real == 0:
        return EvalMetrics(acc, None, None, n_real, n_fake)
    return EvalMetrics(acc, average_precision(labels, scores),
                       roc_auc(labels, scores), n_real, n_fake)


def evaluate(model: ClassifierModel, dataset: LabeledDataset,
             probe_config: ProbeConfig | None = None,
             threads: int | None = None) -> EvalMetrics:
    config = probe_config if probe_config is not None else model.probe_config
    x, y, spec = extract_feature_matrix(dataset, config, model.branches, threads)
    if spec != model.feature_spec_id:
        raise ValueError(
            f"feature spec mismatch: model {model.feature_spec_id}, got {spec}")
    return evaluate_scores(y, predict_features(model, x))


# --- model and dataset files ------------------------------------------------


def save_model(path, model: ClassifierModel) -> None:
    hidden = None
    if "w1" in model.params:
        hidden = {
            "width": model.hidden_width,
            "w1": model.params["w1"].tolist(),
            "b1": model.params["b1"].tolist(),
        }
    doc = {
        "version": MODEL_VERSION,
        "feature_spec_id": model.feature_spec_id,
        "branches": model.branches,
        "probe_config": model.probe_config.to_dict(),
        "normalization": {
            "mean": model.norm_mean.tolist(),
            "scale": model.norm_scale.tolist(),
        },
        "weights": {"w": np.asarray(model.params["w"]).tolist(),
                    "b": float(model.params["b"])},
        "hidden": hidden,
        "loss_trajectory": model.loss_trajectory,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> ClassifierModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    params = {
        "w": np.asarray(doc["weights"]["w"], dtype=np.float64),
        "b": float(doc["weights"]["b"]),
    }
    hidden_width = 0
    if doc.get("hidden"):
        params["w1"] = np.asarray(doc["hidden"]["w1"], dtype=np.float64)
        params["b1"] = np.asarray(doc["hidden"]["b1"], dtype=np.float64)
        hidden_width = int(doc["hidden"]["width"])
    return ClassifierModel(
        feature_spec_id=doc["feature_spec_id"],
        probe_config=ProbeConfig.from_dict(doc["probe_config"]),
        branches=doc.get("branches", "full"),
        norm_mean=np.asarray(doc["normalization"]["mean"], dtype=np.float64),
        norm_scale=np.asarray(doc["normalization"]["scale"], dtype=np.float64),
        params=params,
        hidden_width=hidden_width,
        loss_trajectory=list(doc.get("loss_trajectory", [])),
    )


def save_dataset(directory, dataset: LabeledDataset, prefix: str = "img") -> str:
    """Write PNGs plus a JSON-lines manifest; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    manifest = os.path.join(directory, "manifest.jsonl")
    with open(manifest, "w", encoding="utf-8") as fh:
        for i, (img, label, tag) in enumerate(
                zip(dataset.images, dataset.labels, dataset.tags)):
            name = f"{prefix}_{i:05d}.png"
            save_png(os.path.join(directory, name), np.asarray(img).astype(np.uint8))
            fh.write(json.dumps(
                {"path": name, "label": _LABEL_NAMES[int(label)], "tag": tag}) + "\n")
    return manifest


def load_dataset(manifest_path) -> LabeledDataset:
    base = os.path.dirname(os.path.abspath(manifest_path))
    images, labels, tags = [], [], []
    with open(manifest_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            path = rec["path"]
            if not os.path.isabs(path):
                path = os.path.join(base, path)
            images.append(load_png(path))
            labels.append(_LABEL_CODES[rec["label"]])
            tags.append(rec.get("tag", rec["path"]))
    return LabeledDataset(images=images, labels=np.asarray(labels), tags=tags)
