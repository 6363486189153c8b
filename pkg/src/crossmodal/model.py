"""Domain types plus the transfer function, discriminants, and image kernel."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass
class CorpusExample:
    """One labeled example in either modality.

    label is +1/-1 in binary mode, a class-id string in multi-class mode, or
    None for unlabeled query images.
    """

    id: str
    features: np.ndarray
    label: int | str | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)


@dataclass
class CooccurrencePair:
    """A text vector and an image vector describing the same entity."""

    text_features: np.ndarray
    image_features: np.ndarray
    class_id: str | None = None

    def __post_init__(self):
        self.text_features = np.asarray(self.text_features, dtype=float)
        self.image_features = np.asarray(self.image_features, dtype=float)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    # None means "resolve by the median heuristic at training time".
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


@dataclass
class Hyperparameters:
    """Everything the solver needs beyond the data."""

    gamma: float = 1.0
    lam: float = 1.0
    C: float = 1.0
    kernel: KernelSpec = field(default_factory=KernelSpec)
    max_iter: int = 500
    tol: float = 1e-6        # relative objective decrease
    L0: float = 1.0          # initial curvature estimate for the prox step
    eta: float = 2.0         # backtracking multiplier
    eps_alpha0: float = 0.1  # initial step for the alpha update
    normalize: bool = False  # L2-normalize feature vectors before training

    def __post_init__(self):
        if self.gamma < 0 or self.lam < 0:
            raise ValueError("gamma and lam must be >= 0")
        if self.C <= 0:
            raise ValueError("C must be > 0")
        if self.max_iter < 1 or self.tol <= 0 or self.L0 <= 0:
            raise ValueError("bad stopping/step parameters")
        if self.eta <= 1 or self.eps_alpha0 <= 0:
            raise ValueError("eta must exceed 1 and eps_alpha0 must be positive")


@dataclass
class TrainedModel:
    """Everything prediction needs: the transfer matrix, the alpha coefficients,
    and the embedded corpora they sum over."""

    S: np.ndarray
    alpha: np.ndarray
    source_texts: list[CorpusExample]
    train_images: list[CorpusExample]
    kernel: KernelSpec
    hyper: Hyperparameters
    normalize: bool = False
    final_objective: float | None = None

    def __post_init__(self):
        self.S = np.asarray(self.S, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.shape != (len(self.train_images),):
            raise DataError("alpha length must match the number of training images")


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    return v if norm == 0 else v / norm


def _check_dim(v: np.ndarray, dim: int, name: str):
    if v.shape != (dim,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({dim},)")


def transfer_score(x: np.ndarray, S: np.ndarray, z: np.ndarray) -> float:
    """Alignment of a text vector and an image vector: tanh(x' S z)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    p, q = S.shape
    _check_dim(x, p, "text features")
    _check_dim(z, q, "image features")
    t = float(np.tanh(x @ S @ z))
    # tanh saturates to +/-1.0 in double precision around |arg| ~ 19; keep the
    # advertised open interval.
    bound = np.nextafter(1.0, 0.0)
    return min(max(t, -bound), bound)


def f_inter(S: np.ndarray, source_texts: list[CorpusExample], z: np.ndarray) -> float:
    """Intermodal discriminant: sum_i y_i * tanh(x_i' S z) over the text corpus."""
    z = np.asarray(z, dtype=float)
    p, q = S.shape
    _check_dim(z, q, "image features")
    if not source_texts:
        return 0.0
    X = np.stack([t.features for t in source_texts])
    if X.shape[1] != p:
        raise ValueError(f"text corpus dimension {X.shape[1]} != {p}")
    y = np.array([float(t.label) for t in source_texts])
    return float(y @ np.tanh(X @ (S @ z)))


def kernel_eval(kernel: KernelSpec, z1: np.ndarray, z2: np.ndarray) -> float:
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if z1.shape != z2.shape:
        raise ValueError(f"kernel arguments have shapes {z1.shape} vs {z2.shape}")
    if kernel.kind == "linear":
        return float(z1 @ z2)
    if kernel.bandwidth is None:
        raise ValueError("gaussian kernel bandwidth not resolved")
    d2 = float(np.sum((z1 - z2) ** 2))
    return float(np.exp(-d2 / (2.0 * kernel.bandwidth**2)))


def kernel_matrix(kernel: KernelSpec, Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
    """Kernel Gram matrix between the rows of Z1 and the rows of Z2."""
    if kernel.kind == "linear":
        return Z1 @ Z2.T
    if kernel.bandwidth is None:
        raise ValueError("gaussian kernel bandwidth not resolved")
    d2 = (
        np.sum(Z1**2, axis=1)[:, None]
        + np.sum(Z2**2, axis=1)[None, :]
        - 2.0 * Z1 @ Z2.T
    )
    return np.exp(-np.maximum(d2, 0.0) / (2.0 * kernel.bandwidth**2))


def median_bandwidth(images: list[np.ndarray], max_pairs: int = 10_000) -> float:
    """Median pairwise Euclidean distance, subsampled above `max_pairs` pairs."""
    if len(images) < 2:
        raise ValueError("median bandwidth needs at least 2 images")
    Z = np.stack([np.asarray(z, dtype=float) for z in images])
    n = Z.shape[0]
    n_pairs = n * (n - 1) // 2
    if n_pairs <= max_pairs:
        i, j = np.triu_indices(n, k=1)
    else:
        # Deterministic subsample; the heuristic does not need exact quantiles.
        rng = np.random.default_rng(0)
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n - 1, size=max_pairs)
        j = np.where(j >= i, j + 1, j)
    dists = np.linalg.norm(Z[i] - Z[j], axis=1)
    med = float(np.median(dists))
    if med == 0.0:
        raise ValueError(
            "all image features are identical; pass an explicit bandwidth"
        )
    return med


def f_intra(model: TrainedModel, z: np.ndarray) -> float:
    """Intramodal discriminant: sum_j y_j alpha_j K(z_j, z) over training images."""
    z = np.asarray(z, dtype=float)
    if not model.train_images:
        return 0.0
    total = 0.0
    for ex, a in zip(model.train_images, model.alpha):
        total += float(ex.label) * a * kernel_eval(model.kernel, ex.features, z)
    return total


def discriminant(model: TrainedModel, z: np.ndarray) -> float:
    """Joint discriminant f_inter + f_intra for a query image."""
    z = np.asarray(z, dtype=float)
    if model.normalize:
        z = l2_normalize(z)
    return f_inter(model.S, model.source_texts, z) + f_intra(model, z)


def predict_label(model: TrainedModel, z: np.ndarray) -> int:
    """sign of the discriminant; exactly zero maps to -1 for determinism."""
    return 1 if discriminant(model, z) > 0 else -1
