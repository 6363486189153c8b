"""Loss functions of the training objective: hinge on labeled images, logistic
misalignment on co-occurring text/image pairs. All functions accept scalars or
numpy arrays elementwise."""
from __future__ import annotations

import numpy as np


def hinge(tau):
    """max(1 - tau, 0)."""
    return np.maximum(1.0 - np.asarray(tau, dtype=float), 0.0)


def hinge_subgrad(tau):
    """Chosen subgradient of the hinge: -1 below the kink, 0 at and above it.

    At tau == 1 any value in [-1, 0] is valid; 0 keeps points exactly on the
    margin inert, so optimization traces are deterministic.
    """
    return np.where(np.asarray(tau, dtype=float) < 1.0, -1.0, 0.0)


def misalign(a):
    """Misalignment loss log(1 + exp(-2a)) == -log(0.5 * (1 + tanh(a))).

    logaddexp keeps the evaluation stable for large |a|; the naive form
    overflows below a ~ -355.
    """
    return np.logaddexp(0.0, -2.0 * np.asarray(a, dtype=float))


def misalign_deriv(a):
    """Derivative of misalign: tanh(a) - 1, always in (-2, 0)."""
    return np.tanh(np.asarray(a, dtype=float)) - 1.0
