"""Ranking/classification metrics and twofold cross-validated grid search."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from .errors import DataError
from .model import CorpusExample, Hyperparameters, discriminant, predict_label
from .solver import TrainData, train

# Grid searched by twofold cross-validation, in selection order
# (lam-major, then gamma, then C).
DEFAULT_GRID = {
    "lam": (0.0, 0.5, 1.0, 2.0),
    "gamma": (0.1, 0.5, 1.0, 2.0),
    "C": (1.0, 2.0, 5.0, 10.0),
}


@dataclass
class EvalReport:
    error_rate: float
    ap: float
    auc: float
    per_class: dict[str, float] = field(default_factory=dict)

    def as_text(self) -> str:
        lines = [
            f"error_rate {self.error_rate!r}",
            f"ap {self.ap!r}",
            f"auc {self.auc!r}",
        ]
        for key in sorted(self.per_class):
            lines.append(f"{key} {self.per_class[key]!r}")
        return "\n".join(lines)


def error_rate(predictions, truth) -> float:
    """Fraction of label mismatches."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.size == 0:
        raise DataError("predictions and truth must be equal-length, non-empty")
    return float(np.mean(predictions != truth))


def average_precision(scores, truth) -> float:
    """Mean precision at the rank of each positive, scores sorted descending.

    Ties keep input order (stable sort), so the result is deterministic.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth)
    if scores.shape != truth.shape or scores.size == 0:
        raise DataError("scores and truth must be equal-length, non-empty")
    pos = truth == 1
    if not np.any(pos):
        raise DataError("average precision is undefined without positives")
    order = np.argsort(-scores, kind="stable")
    hits = pos[order]
    ranks = np.arange(1, scores.size + 1)
    precisions = np.cumsum(hits) / ranks
    return float(np.mean(precisions[hits]))


def auc(scores, truth) -> float:
    """Probability a random positive outscores a random negative, ties as 1/2."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise DataError("scores and truth must have equal length")
    pos = truth == 1
    n_pos = int(np.sum(pos))
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores)  # average ranks handle ties as 1/2
    u = float(np.sum(ranks[pos])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def mean_ap(per_class_aps) -> float:
    """Arithmetic mean of per-class average precisions."""
    per_class_aps = list(per_class_aps)
    if not per_class_aps:
        raise DataError("mean AP of an empty collection is undefined")
    return float(np.mean(per_class_aps))


def evaluate_model(model, test_images: list[CorpusExample]) -> EvalReport:
    """Score labeled test images with a binary model and report all metrics."""
    scores = np.array([discriminant(model, ex.features) for ex in test_images])
    preds = np.where(scores > 0, 1, -1)
    truth = np.array([int(ex.label) for ex in test_images])
    return EvalReport(
        error_rate=error_rate(preds, truth),
        ap=average_precision(scores, truth),
        auc=auc(scores, truth),
    )


def _stratified_folds(images: list[CorpusExample], seed: int):
    """Two label-stratified folds of image indices, deterministic in seed."""
    rng = np.random.default_rng(seed)
    by_label: dict = {}
    for idx, ex in enumerate(images):
        by_label.setdefault(ex.label, []).append(idx)
    folds = ([], [])
    for label in sorted(by_label, key=str):
        idxs = np.array(by_label[label])
        rng.shuffle(idxs)
        for k, idx in enumerate(idxs):
            folds[k % 2].append(int(idx))
    return sorted(folds[0]), sorted(folds[1])


def crossval_select(
    data: TrainData,
    base: Hyperparameters | None = None,
    grid: dict | None = None,
    seed: int = 0,
) -> Hyperparameters:
    """Pick (lam, gamma, C) by twofold cross-validation on the labeled images.

    Ties go to the first candidate in deterministic grid order. Other
    hyperparameters come from `base` unchanged.
    """
    if base is None:
        base = Hyperparameters()
    if grid is None:
        grid = DEFAULT_GRID
    if len(data.train_images) < 2:
        raise DataError("twofold cross-validation needs at least 2 labeled images")
    fold_a, fold_b = _stratified_folds(data.train_images, seed)
    splits = [(fold_a, fold_b), (fold_b, fold_a)]

    best = None
    best_err = np.inf
    for lam, gamma, C in itertools.product(grid["lam"], grid["gamma"], grid["C"]):
        cand = replace(base, lam=lam, gamma=gamma, C=C)
        errs = []
        for train_idx, val_idx in splits:
            if not train_idx or not val_idx:
                continue
            fold_data = TrainData(
                source_texts=data.source_texts,
                train_images=[data.train_images[i] for i in train_idx],
                pairs=data.pairs,
                p=data.p,
                q=data.q,
            )
            model, _ = train(fold_data, cand)
            preds = [predict_label(model, data.train_images[i].features) for i in val_idx]
            truth = [int(data.train_images[i].label) for i in val_idx]
            errs.append(error_rate(preds, truth))
        mean_err = float(np.mean(errs)) if errs else np.inf
        if mean_err < best_err:
            best_err = mean_err
            best = cand
    if best is None:
        raise DataError("empty hyperparameter grid")
    return best
