"""Alternating optimizer for the joint objective: singular-value-thresholding
prox steps on the transfer matrix S and projected-gradient steps on the box
constrained alpha coefficients, both with backtracking so the objective never
increases."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DataError, NumericalError
from .losses import hinge, hinge_subgrad, misalign, misalign_deriv
from .model import (
    CooccurrencePair,
    CorpusExample,
    Hyperparameters,
    KernelSpec,
    TrainedModel,
    kernel_matrix,
    l2_normalize,
    median_bandwidth,
)

_MAX_BACKTRACKS = 100
_ACCEPT_SLACK = 1e-12


@dataclass
class TrainData:
    """Labeled text corpus, labeled image set, and co-occurrence pairs.

    p and q are inferred from the data when omitted; pass them explicitly when a
    side is empty (e.g. the intramodal-only baseline with no texts and no pairs).
    """

    source_texts: list[CorpusExample] = field(default_factory=list)
    train_images: list[CorpusExample] = field(default_factory=list)
    pairs: list[CooccurrencePair] = field(default_factory=list)
    p: int | None = None
    q: int | None = None

    def text_dim(self) -> int:
        if self.source_texts:
            return self.source_texts[0].features.shape[0]
        if self.pairs:
            return self.pairs[0].text_features.shape[0]
        if self.p is not None:
            return self.p
        raise DataError("text dimension p cannot be inferred; set TrainData.p")

    def image_dim(self) -> int:
        if self.train_images:
            return self.train_images[0].features.shape[0]
        if self.pairs:
            return self.pairs[0].image_features.shape[0]
        if self.q is not None:
            return self.q
        raise DataError("image dimension q cannot be inferred; set TrainData.q")


@dataclass
class TrainReport:
    converged: bool
    iterations: int
    final_objective: float
    final_rank: int
    objective_trace: list[float]


@dataclass
class _Problem:
    """Array form of the smooth objective part.

    The hinge term supports several one-vs-rest labelings ("blocks") sharing one
    S over the same texts and images; ordinary binary training is the single
    block case. Alpha, when enabled, attaches to the first block.
    """

    text_X: np.ndarray   # (n, p)
    text_Y: np.ndarray   # (n, B) labels per block
    img_Z: np.ndarray    # (m, q)
    img_Y: np.ndarray    # (m, B)
    pair_X: np.ndarray   # (l, p)
    pair_Z: np.ndarray   # (l, q)
    K: np.ndarray | None  # (m, m) kernel Gram matrix; None disables alpha
    p: int
    q: int

    @property
    def n(self) -> int:
        return self.text_X.shape[0]

    @property
    def m(self) -> int:
        return self.img_Z.shape[0]

    @property
    def use_alpha(self) -> bool:
        return self.K is not None and self.m > 0


def _stack(examples: list[CorpusExample], dim: int, what: str):
    if not examples:
        return np.zeros((0, dim)), np.zeros(0)
    X = np.stack([e.features for e in examples])
    if X.shape[1] != dim:
        raise DataError(f"{what} dimension {X.shape[1]} != expected {dim}")
    y = np.array([float(e.label) for e in examples])
    return X, y


def _build_problem(data: TrainData, hyper: Hyperparameters) -> _Problem:
    p, q = data.text_dim(), data.image_dim()
    text_X, text_y = _stack(data.source_texts, p, "source text")
    img_Z, img_y = _stack(data.train_images, q, "training image")
    if data.pairs:
        pair_X = np.stack([c.text_features for c in data.pairs])
        pair_Z = np.stack([c.image_features for c in data.pairs])
        if pair_X.shape[1] != p or pair_Z.shape[1] != q:
            raise DataError("pair dimensions do not match the corpora")
    else:
        pair_X, pair_Z = np.zeros((0, p)), np.zeros((0, q))
    kernel = resolve_kernel(hyper.kernel, img_Z)
    K = kernel_matrix(kernel, img_Z, img_Z) if img_Z.shape[0] > 0 else None
    return _Problem(
        text_X=text_X,
        text_Y=text_y[:, None],
        img_Z=img_Z,
        img_Y=img_y[:, None],
        pair_X=pair_X,
        pair_Z=pair_Z,
        K=K,
        p=p,
        q=q,
    )


def resolve_kernel(kernel: KernelSpec, img_Z: np.ndarray) -> KernelSpec:
    """Fill in a gaussian bandwidth by the median heuristic when unset."""
    if kernel.kind != "gaussian" or kernel.bandwidth is not None:
        return kernel
    if img_Z.shape[0] < 2:
        # A single training image gives K(z, z) = 1 for any bandwidth.
        return KernelSpec(kind="gaussian", bandwidth=1.0)
    return KernelSpec(kind="gaussian", bandwidth=median_bandwidth(list(img_Z)))


def _margins(S, alpha, pb: _Problem):
    """Per-block discriminant values f_b(z_j), shape (B, m); also the tanh
    matrix T = tanh(X S Z') reused by the gradient."""
    B = pb.text_Y.shape[1]
    if pb.n > 0 and pb.m > 0:
        T = np.tanh(pb.text_X @ S @ pb.img_Z.T)
        F = pb.text_Y.T @ T
    else:
        T = None
        F = np.zeros((B, pb.m))
    if pb.use_alpha and alpha is not None and alpha.size:
        F[0] += pb.K @ (alpha * pb.img_Y[:, 0])
    return F, T


def _pair_scores(S, pb: _Problem) -> np.ndarray:
    if pb.pair_X.shape[0] == 0:
        return np.zeros(0)
    return np.einsum("ij,ij->i", pb.pair_X @ S, pb.pair_Z)


def _smooth(S, alpha, pb: _Problem, hyper: Hyperparameters) -> float:
    F, _ = _margins(S, alpha, pb)
    yf = pb.img_Y.T * F
    total = hyper.gamma * float(np.sum(hinge(yf)))
    a = _pair_scores(S, pb)
    total += hyper.lam * float(np.sum(misalign(a)))
    if not np.isfinite(total):
        raise NumericalError("smooth objective is non-finite")
    return total


def _grad_S_arrays(S, alpha, pb: _Problem, hyper: Hyperparameters) -> np.ndarray:
    grad = np.zeros((pb.p, pb.q))
    if hyper.gamma > 0 and pb.n > 0 and pb.m > 0:
        F, T = _margins(S, alpha, pb)
        yf = pb.img_Y.T * F                       # (B, m)
        G = hyper.gamma * hinge_subgrad(yf) * pb.img_Y.T
        M = pb.text_Y @ G                         # (n, m)
        grad += pb.text_X.T @ (M * (1.0 - T**2)) @ pb.img_Z
    if hyper.lam > 0 and pb.pair_X.shape[0] > 0:
        d = misalign_deriv(_pair_scores(S, pb))
        grad += hyper.lam * pb.pair_X.T @ (d[:, None] * pb.pair_Z)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("gradient in S is non-finite")
    return grad


def _grad_alpha_arrays(S, alpha, pb: _Problem, hyper: Hyperparameters) -> np.ndarray:
    if not pb.use_alpha:
        return np.zeros(0)
    F, _ = _margins(S, alpha, pb)
    y = pb.img_Y[:, 0]
    c = hyper.gamma * np.asarray(hinge_subgrad(y * F[0])) * y
    grad = y * (pb.K @ c)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("gradient in alpha is non-finite")
    return grad


# Public single-block wrappers -------------------------------------------------

def objective(S, alpha, data: TrainData, hyper: Hyperparameters) -> float:
    """Full training objective: hinge + misalignment + trace norm of S."""
    return smooth_value(S, alpha, data, hyper) + linalg.trace_norm(S)


def smooth_value(S, alpha, data: TrainData, hyper: Hyperparameters) -> float:
    """The objective minus the trace norm: the (sub)differentiable part."""
    pb = _build_problem(data, hyper)
    return _smooth(np.asarray(S, dtype=float), np.asarray(alpha, dtype=float), pb, hyper)


def grad_S(S, alpha, data: TrainData, hyper: Hyperparameters) -> np.ndarray:
    """Subgradient of the smooth part with respect to S."""
    pb = _build_problem(data, hyper)
    return _grad_S_arrays(np.asarray(S, dtype=float), np.asarray(alpha, dtype=float), pb, hyper)


def grad_alpha(S, alpha, data: TrainData, hyper: Hyperparameters) -> np.ndarray:
    """Subgradient of the smooth part with respect to alpha."""
    pb = _build_problem(data, hyper)
    return _grad_alpha_arrays(np.asarray(S, dtype=float), np.asarray(alpha, dtype=float), pb, hyper)


def prox_step(S_tau: np.ndarray, grad: np.ndarray, L: float) -> np.ndarray:
    """Minimize the quadratic majorizer plus trace norm: svt(S - grad/L, 1/L)."""
    if L <= 0:
        raise ValueError("L must be positive")
    return linalg.svt(S_tau - grad / L, 1.0 / L)


def project_alpha(alpha, C: float) -> np.ndarray:
    """Clamp each coefficient into [0, C]."""
    if C <= 0:
        raise ValueError("C must be positive")
    return np.clip(np.asarray(alpha, dtype=float), 0.0, C)


# Training loop ----------------------------------------------------------------

def _train_loop(
    pb: _Problem,
    hyper: Hyperparameters,
    verbose=False,
    log=None,
    init_S=None,
    init_alpha=None,
):
    """Alternating prox/projected-gradient loop over the array problem."""
    if log is None:
        log = print
    S = np.zeros((pb.p, pb.q)) if init_S is None else np.array(init_S, dtype=float)
    if init_alpha is None:
        alpha = np.zeros(pb.m) if pb.use_alpha else np.zeros(0)
    else:
        alpha = project_alpha(init_alpha, hyper.C)
    L = hyper.L0
    eps = hyper.eps_alpha0
    trace = [_smooth(S, alpha, pb, hyper) + linalg.trace_norm(S)]
    converged = False
    iterations = 0

    for it in range(1, hyper.max_iter + 1):
        iterations = it
        if it > 1:
            L = max(L / 2.0, 1e-12)       # recovery probe: try a bolder step
            eps = min(eps * 2.0, 1e12)

        # S step: backtrack on L until the quadratic majorizer holds.
        g = _grad_S_arrays(S, alpha, pb, hyper)
        F_cur = _smooth(S, alpha, pb, hyper)
        S_new = S
        for _ in range(_MAX_BACKTRACKS):
            cand = prox_step(S, g, L)
            delta = cand - S
            bound = F_cur + float(np.vdot(g, delta)) + 0.5 * L * float(np.vdot(delta, delta))
            if _smooth(cand, alpha, pb, hyper) <= bound + _ACCEPT_SLACK:
                S_new = cand
                break
            L *= hyper.eta
        S = S_new

        # alpha step: projected gradient with its own backtracking.
        if alpha.size:
            ga = _grad_alpha_arrays(S, alpha, pb, hyper)
            F_cur = _smooth(S, alpha, pb, hyper)
            for _ in range(_MAX_BACKTRACKS):
                cand = project_alpha(alpha - eps * ga, hyper.C)
                delta = cand - alpha
                bound = F_cur + float(ga @ delta) + float(delta @ delta) / (2.0 * eps)
                if _smooth(S, cand, pb, hyper) <= bound + _ACCEPT_SLACK:
                    alpha = cand
                    break
                eps /= hyper.eta

        obj = _smooth(S, alpha, pb, hyper) + linalg.trace_norm(S)
        if not np.isfinite(obj):
            raise NumericalError(f"objective became non-finite at iteration {it}")
        trace.append(obj)
        if verbose:
            log(f"{it},{obj:.12g},{linalg.numerical_rank(S)},{L:.6g},{eps:.6g}")
        if abs(trace[-2] - trace[-1]) / max(1.0, abs(trace[-2])) < hyper.tol:
            converged = True
            break

    report = TrainReport(
        converged=converged,
        iterations=iterations,
        final_objective=trace[-1],
        final_rank=linalg.numerical_rank(S),
        objective_trace=trace,
    )
    return S, alpha, report


def normalize_data(data: TrainData) -> TrainData:
    """L2-normalize every feature vector, returning a new TrainData."""
    return TrainData(
        source_texts=[
            CorpusExample(e.id, l2_normalize(e.features), e.label)
            for e in data.source_texts
        ],
        train_images=[
            CorpusExample(e.id, l2_normalize(e.features), e.label)
            for e in data.train_images
        ],
        pairs=[
            CooccurrencePair(
                l2_normalize(c.text_features), l2_normalize(c.image_features), c.class_id
            )
            for c in data.pairs
        ],
        p=data.p,
        q=data.q,
    )


def train(
    data: TrainData,
    hyper: Hyperparameters,
    verbose=False,
    log=None,
    init_S=None,
    init_alpha=None,
):
    """Run the alternating optimization, by default from S = 0, alpha = 0.

    Returns (TrainedModel, TrainReport). The objective trace is non-increasing
    up to floating-point slack; convergence means the relative decrease dropped
    below hyper.tol before max_iter.
    """
    if hyper.normalize:
        data = normalize_data(data)
    pb = _build_problem(data, hyper)
    kernel = resolve_kernel(hyper.kernel, pb.img_Z)
    S, alpha, report = _train_loop(
        pb, hyper, verbose=verbose, log=log, init_S=init_S, init_alpha=init_alpha
    )
    model = TrainedModel(
        S=S,
        alpha=alpha if alpha.size else np.zeros(len(data.train_images)),
        source_texts=data.source_texts,
        train_images=data.train_images,
        kernel=kernel,
        hyper=hyper,
        normalize=hyper.normalize,
        final_objective=report.final_objective,
    )
    return model, report
