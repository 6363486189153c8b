"""Dense SVD, the trace norm, and the singular-value-thresholding prox operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

# Relative cutoff below which a singular value counts as zero when reporting rank.
RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD: M = U @ diag(sigma) @ V.T with column-orthonormal U, V."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


def check_finite(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NumericalError(f"{name} contains non-finite entries")
    return M


def svd(M: np.ndarray) -> SvdResult:
    """Thin SVD with singular values sorted non-increasing.

    Raises NumericalError if the underlying iterative routine fails to converge.
    """
    M = check_finite(M)
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return SvdResult(U=U, sigma=s, V=Vt.T)


def trace_norm(M: np.ndarray) -> float:
    """Sum of singular values of M."""
    return float(np.sum(svd(M).sigma))


def svt(M: np.ndarray, threshold: float) -> np.ndarray:
    """Soft-threshold the singular values of M by `threshold`.

    Returns the unique minimizer of 1/2 ||X - M||_F^2 + threshold * ||X||_tr.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    res = svd(M)
    shrunk = np.maximum(res.sigma - threshold, 0.0)
    return (res.U * shrunk) @ res.V.T


def numerical_rank(M: np.ndarray, rel_cutoff: float = RANK_CUTOFF) -> int:
    """Number of singular values above rel_cutoff times the largest one."""
    s = svd(M).sigma
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_cutoff * s[0]))
