"""Binary logistic regression over the 13 metadata features, trained by
deterministic full-batch gradient descent and evaluated under the
split-and-repeat protocol (70/30, averaged over 10 runs).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateTrainingError, SplitRedrawError
from .features import FeatureVector
from .screening import ClassLabel

MODEL_FORMAT_VERSION = 1

METRIC_NAMES: tuple[str, ...] = (
    "accuracy",
    "average_precision",
    "f1_score",
    "precision",
    "recall",
    "zero_one_loss",
)

GRAD_TOLERANCE = 1e-8
MAX_ITERATIONS = 10_000


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray  # (13,)
    bias: float
    standardization: tuple[tuple[float, float], ...]  # per-feature (mean, stddev)
    l2_lambda: float
    seed: int

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        for mean, std in self.standardization:
            if std <= 0:
                raise ValueError("standardization stddevs must be positive")


@dataclass(frozen=True)
class RunMetrics:
    accuracy: float
    average_precision: float
    f1_score: float
    precision: float
    recall: float
    zero_one_loss: float
    precision_defined: bool = True
    recall_defined: bool = True
    f1_defined: bool = True

    def value(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class EvalReport:
    runs: tuple[RunMetrics, ...]
    split_fraction: float
    redraws: int = 0

    @property
    def run_count(self) -> int:
        return len(self.runs)

    def mean(self, name: str) -> float:
        return float(np.mean([run.value(name) for run in self.runs]))

    def means(self) -> dict[str, float]:
        return {name: self.mean(name) for name in METRIC_NAMES}


def _design_matrix(data: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([v.values() for v in data])
    labels = []
    for v in data:
        if v.label is None:
            raise DegenerateTrainingError(f"unlabeled vector {v.tweet_id}")
        labels.append(1.0 if v.label is ClassLabel.ROGUE else 0.0)
    return x, np.array(labels)


def _fit_standardization(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Z-score parameters from training data; constant columns pass through."""
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    constant = stds == 0.0
    means = np.where(constant, 0.0, means)
    stds = np.where(constant, 1.0, stds)
    return means, stds


def _loss_and_gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2_lambda: float
) -> tuple[float, np.ndarray, float]:
    """Mean negative log-likelihood plus (lambda/2)||w||^2; bias unpenalized."""
    n = x.shape[0]
    scores = x @ w + b
    # log(1 + e^s) - y s, evaluated stably
    loss = float(np.mean(np.logaddexp(0.0, scores) - y * scores))
    loss += 0.5 * l2_lambda * float(w @ w)
    p = _sigmoid(scores)
    residual = p - y
    grad_w = x.T @ residual / n + l2_lambda * w
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    # e^{-|z|} never overflows; both branches reduce to it
    t = np.exp(-np.abs(z))
    return np.where(np.asarray(z) >= 0, 1.0 / (1.0 + t), t / (1.0 + t))


def train(
    data: Sequence[FeatureVector],
    l2_lambda: float = 1.0,
    seed: int = 0,
    loss_history: list[float] | None = None,
) -> LogRegModel:
    """Fit weights by full-batch gradient descent with backtracking.

    Standardization is fitted on the training data only.  Descent runs
    until the gradient infinity-norm drops below 1e-8 or 10,000 iterations;
    the Armijo backtracking step guarantees a non-increasing loss.
    """
    if len(data) < 2:
        raise DegenerateTrainingError("need at least 2 examples")
    if l2_lambda < 0:
        raise ValueError("l2_lambda must be nonnegative")
    x_raw, y = _design_matrix(data)
    if len(np.unique(y)) < 2:
        raise DegenerateTrainingError("training data must contain both classes")
    means, stds = _fit_standardization(x_raw)
    x = (x_raw - means) / stds

    w = np.zeros(x.shape[1])
    b = 0.0
    loss, grad_w, grad_b = _loss_and_gradient(w, b, x, y, l2_lambda)
    if loss_history is not None:
        loss_history.append(loss)
    step = 1.0
    armijo = 1e-4
    for _ in range(MAX_ITERATIONS):
        grad_norm = max(float(np.max(np.abs(grad_w))), abs(grad_b))
        if grad_norm < GRAD_TOLERANCE:
            break
        grad_sq = float(grad_w @ grad_w) + grad_b * grad_b
        step = min(step * 2.0, 1e4)  # warm-started, then backtracked
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            loss_new, grad_w_new, grad_b_new = _loss_and_gradient(w_new, b_new, x, y, l2_lambda)
            if loss_new <= loss - armijo * step * grad_sq or step < 1e-16:
                break
            step *= 0.5
        w, b, loss, grad_w, grad_b = w_new, b_new, loss_new, grad_w_new, grad_b_new
        if loss_history is not None:
            loss_history.append(loss)

    return LogRegModel(
        weights=w,
        bias=b,
        standardization=tuple((float(m), float(s)) for m, s in zip(means, stds)),
        l2_lambda=l2_lambda,
        seed=seed,
    )


def _standardize(model: LogRegModel, x: np.ndarray) -> np.ndarray:
    means = np.array([m for m, _ in model.standardization])
    stds = np.array([s for _, s in model.standardization])
    return (x - means) / stds


def predict_proba(model: LogRegModel, vector: FeatureVector) -> float:
    """P(rogue) for one tweet; class Rogue iff >= 0.5."""
    x = _standardize(model, vector.values())
    return float(_sigmoid(float(x @ model.weights + model.bias)))


def predict_proba_many(model: LogRegModel, data: Sequence[FeatureVector]) -> np.ndarray:
    x = _standardize(model, np.stack([v.values() for v in data]))
    return np.asarray(_sigmoid(x @ model.weights + model.bias), dtype=float)


def average_precision(y_true: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based step sum: AP = sum_n (R_n - R_{n-1}) P_n.

    Items are ranked by descending score with a stable tie-break on the
    original order.
    """
    order = np.argsort(-scores, kind="stable")
    ranked = y_true[order]
    total_positive = float(ranked.sum())
    if total_positive == 0:
        return 0.0
    tp = 0.0
    ap = 0.0
    prev_recall = 0.0
    for i, is_positive in enumerate(ranked, start=1):
        if is_positive:
            tp += 1.0
            recall = tp / total_positive
            precision = tp / i
            ap += (recall - prev_recall) * precision
            prev_recall = recall
    return ap


def compute_metrics(y_true: np.ndarray, proba: np.ndarray, threshold: float = 0.5) -> RunMetrics:
    """All six metrics for one evaluation run.

    zero_one_loss is the complement of accuracy (exactly, by construction).
    Undefined precision/recall (zero denominators) report 0.0 and clear
    the corresponding defined-flag rather than propagating NaN.
    """
    y_true = np.asarray(y_true, dtype=float)
    predicted = (np.asarray(proba) >= threshold).astype(float)
    correct = float((predicted == y_true).sum())
    accuracy = correct / len(y_true)
    tp = float(((predicted == 1) & (y_true == 1)).sum())
    fp = float(((predicted == 1) & (y_true == 0)).sum())
    fn = float(((predicted == 0) & (y_true == 1)).sum())

    precision_defined = (tp + fp) > 0
    recall_defined = (tp + fn) > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if recall_defined else 0.0
    f1_defined = (precision + recall) > 0
    f1 = 2 * precision * recall / (precision + recall) if f1_defined else 0.0

    return RunMetrics(
        accuracy=accuracy,
        average_precision=average_precision(y_true, np.asarray(proba, dtype=float)),
        f1_score=f1,
        precision=precision,
        recall=recall,
        zero_one_loss=1.0 - accuracy,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
        f1_defined=f1_defined,
    )


def evaluate(
    data: Sequence[FeatureVector],
    split_fraction: float = 0.7,
    runs: int = 10,
    seed: int = 0,
    l2_lambda: float = 1.0,
) -> EvalReport:
    """Split-and-repeat evaluation: per-run metrics plus their means.

    Each run splits with its own derived seed, trains on the training
    fraction, and scores the held-out fraction.  A split whose test side
    lacks a class is flagged and redrawn (at most 100 redraws per run).
    """
    if not 0.0 < split_fraction < 1.0:
        raise ValueError(f"split_fraction must be in (0, 1), got {split_fraction}")
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    _, y_all = _design_matrix(data)
    if len(np.unique(y_all)) < 2:
        raise DegenerateTrainingError("evaluation data must contain both classes")
    n = len(data)
    n_train = min(max(int(round(split_fraction * n)), 1), n - 1)

    results: list[RunMetrics] = []
    total_redraws = 0
    for run in range(runs):
        rng = np.random.default_rng([seed, run])
        for attempt in range(101):
            order = rng.permutation(n)
            train_idx, test_idx = order[:n_train], order[n_train:]
            train_labels = y_all[train_idx]
            test_labels = y_all[test_idx]
            if len(np.unique(train_labels)) == 2 and len(np.unique(test_labels)) == 2:
                break
            total_redraws += 1
        else:
            raise SplitRedrawError(f"run {run}: no two-class split after 100 redraws")
        train_data = [data[i] for i in train_idx]
        test_data = [data[i] for i in test_idx]
        model = train(train_data, l2_lambda=l2_lambda, seed=seed)
        proba = predict_proba_many(model, test_data)
        results.append(compute_metrics(test_labels, proba))
    return EvalReport(runs=tuple(results), split_fraction=split_fraction, redraws=total_redraws)


def save_model(model: LogRegModel, path: str | Path) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "logreg",
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "standardization": [list(pair) for pair in model.standardization],
        "l2_lambda": model.l2_lambda,
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), "utf-8")


def load_model(path: str | Path) -> LogRegModel:
    payload = json.loads(Path(path).read_text("utf-8"))
    if payload.get("format_version") != MODEL_FORMAT_VERSION or payload.get("kind") != "logreg":
        raise ValueError(f"unsupported model file: {path}")
    return LogRegModel(
        weights=np.array(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        standardization=tuple((float(m), float(s)) for m, s in payload["standardization"]),
        l2_lambda=float(payload["l2_lambda"]),
        seed=int(payload["seed"]),
    )


def export_eval_csv(reports: dict[str, EvalReport], path: str | Path) -> None:
    """Long-format CSV: one row per (drug, run) plus a mean row per drug."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["drug", "run", *METRIC_NAMES])
        for drug in sorted(reports):
            report = reports[drug]
            for index, run in enumerate(report.runs, start=1):
                writer.writerow([drug, index, *[repr(run.value(m)) for m in METRIC_NAMES]])
            writer.writerow([drug, "mean", *[repr(report.mean(m)) for m in METRIC_NAMES]])


def eval_report_text(reports: dict[str, EvalReport]) -> str:
    """Aligned text table: metric rows, one column per drug (means only)."""
    drugs = sorted(reports)
    header = f"{'metric':<20s}" + "".join(f"{d:>14s}" for d in drugs)
    lines = [header]
    for metric in METRIC_NAMES:
        row = f"{metric:<20s}" + "".join(f"{reports[d].mean(metric):>14.4f}" for d in drugs)
        lines.append(row)
    return "\n".join(lines)
