"""Shared independent oracles: finite differences, brute-force ranking metrics,
and random small training instances."""
import itertools

import numpy as np

from crossmodal.model import CorpusExample, CooccurrencePair, Hyperparameters, KernelSpec
from crossmodal.solver import TrainData, smooth_value


def random_instance(rng, p=3, q=4, n=2, m=2, l=3):
    """Small random training instance plus a random (S, alpha) evaluation point,
    resampled so no training margin sits on the hinge kink."""
    for _ in range(200):
        texts = [
            CorpusExample(f"t{i}", rng.standard_normal(p), int(rng.choice([-1, 1])))
            for i in range(n)
        ]
        images = [
            CorpusExample(f"i{j}", rng.standard_normal(q), int(rng.choice([-1, 1])))
            for j in range(m)
        ]
        pairs = [
            CooccurrencePair(rng.standard_normal(p), rng.standard_normal(q))
            for _ in range(l)
        ]
        data = TrainData(source_texts=texts, train_images=images, pairs=pairs, p=p, q=q)
        hyper = Hyperparameters(
            gamma=float(rng.uniform(0.2, 2.0)),
            lam=float(rng.uniform(0.2, 2.0)),
            C=float(rng.uniform(0.5, 3.0)),
            kernel=KernelSpec(bandwidth=float(rng.uniform(0.5, 2.0))),
        )
        S = rng.standard_normal((p, q)) * 0.5
        alpha = rng.uniform(0.05, hyper.C * 0.95, m)
        if not _near_kink(S, alpha, data, hyper):
            return data, hyper, S, alpha
    raise AssertionError("could not sample a kink-free instance")


def _near_kink(S, alpha, data, hyper, margin_tol=1e-4):
    from crossmodal.model import TrainedModel, discriminant

    model = TrainedModel(
        S=S,
        alpha=alpha,
        source_texts=data.source_texts,
        train_images=data.train_images,
        kernel=hyper.kernel,
        hyper=hyper,
    )
    for img in data.train_images:
        yf = float(img.label) * discriminant(model, img.features)
        if abs(yf - 1.0) < margin_tol:
            return True
    return False


def fd_grad_S(S, alpha, data, hyper, h=1e-6):
    grad = np.zeros_like(S)
    for i in range(S.shape[0]):
        for j in range(S.shape[1]):
            Sp, Sm = S.copy(), S.copy()
            Sp[i, j] += h
            Sm[i, j] -= h
            grad[i, j] = (
                smooth_value(Sp, alpha, data, hyper)
                - smooth_value(Sm, alpha, data, hyper)
            ) / (2 * h)
    return grad


def fd_grad_alpha(S, alpha, data, hyper, h=1e-6):
    grad = np.zeros_like(alpha)
    for j in range(alpha.size):
        ap, am = alpha.copy(), alpha.copy()
        ap[j] += h
        am[j] -= h
        grad[j] = (
            smooth_value(S, ap, data, hyper) - smooth_value(S, am, data, hyper)
        ) / (2 * h)
    return grad


def brute_force_average_precision(scores, truth):
    """Direct definition: precision at the rank of each positive under a stable
    descending sort, averaged over positives."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ranked = [truth[i] for i in order]
    precisions = []
    hits = 0
    for rank, label in enumerate(ranked, start=1):
        if label == 1:
            hits += 1
            precisions.append(hits / rank)
    return sum(precisions) / len(precisions)


def brute_force_auc(scores, truth):
    """Enumerate every positive/negative pair; ties count one half."""
    pos = [s for s, t in zip(scores, truth) if t == 1]
    neg = [s for s, t in zip(scores, truth) if t != 1]
    wins = 0.0
    for sp, sn in itertools.product(pos, neg):
        if sp > sn:
            wins += 1.0
        elif sp == sn:
            wins += 0.5
    return wins / (len(pos) * len(neg))
