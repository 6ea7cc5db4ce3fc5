"""Frobenius-optimal orthogonal Procrustes alignment and its residual bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ArgumentError, matrix_norm, svd, two_to_inf_norm, RANK_RTOL
from .subspace import check_pair, sin_theta_norms

__all__ = [
    "AlignmentResult",
    "align",
    "align_bruteforce",
    "residual_sandwich",
    "spectral_residual_bounds",
    "procrustes_rotation",
]


@dataclass(frozen=True)
class AlignmentResult:
    """Orthogonal ``w`` aligning ``U @ w`` to ``Uhat`` and the residual norms.

    ``non_unique`` is set when ``U.T @ Uhat`` is (numerically) singular, in
    which case ``w`` is one of several Frobenius minimizers.
    """

    w: np.ndarray
    gram: np.ndarray
    residual_frobenius: float
    residual_spectral: float
    residual_two_to_inf: float
    non_unique: bool = False


def procrustes_rotation(gram):
    """``W1 @ W2.T`` from the SVD ``gram = W1 S W2.T``, plus a singularity flag."""
    f = svd(gram)
    s = f.singular_values
    singular = bool(s[-1] <= RANK_RTOL * max(1.0, s[0]))
    return f.left @ f.right.T, singular


def _result(u, uhat, w, gram, non_unique=False):
    resid = uhat - u @ w
    return AlignmentResult(
        w=w,
        gram=gram,
        residual_frobenius=matrix_norm(resid, "frobenius"),
        residual_spectral=matrix_norm(resid, "spectral"),
        residual_two_to_inf=two_to_inf_norm(resid),
        non_unique=non_unique,
    )


def align(u, uhat):
    """Solve ``min_W |Uhat - U W|_F`` over orthogonal ``W``.

    Examples
    --------
    >>> u = np.eye(3)[:, :2]
    >>> res = align(u, u)
    >>> np.allclose(res.w, np.eye(2)), res.residual_frobenius
    (True, 0.0)
    """
    u, uhat = check_pair(u, uhat)
    gram = u.T @ uhat
    w, singular = procrustes_rotation(gram)
    return _result(u, uhat, w, gram, non_unique=singular)


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def align_bruteforce(u, uhat, grid_size=100_000):
    """Exhaustive Procrustes search for r in {1, 2}.

    For r = 1 the candidates are {-1, +1}. For r = 2 every rotation on a
    uniform angle grid of ``grid_size`` points and every reflection
    (rotation times diag(1, -1)) is scored; the best grid angle is then
    polished by golden-section search inside its grid cell.
    """
    u, uhat = check_pair(u, uhat)
    r = u.shape[1]
    gram = u.T @ uhat
    if r == 1:
        # |Uhat - U w|_F^2 = 2 - 2 w * gram for w = +-1
        w = np.array([[1.0]]) if gram[0, 0] >= 0 else np.array([[-1.0]])
        return _result(u, uhat, w, gram)
    if r != 2:
        raise ArgumentError(f"brute-force alignment supports r in {{1, 2}}, got r={r}")
    if grid_size < 4:
        raise ArgumentError("grid_size must be at least 4")

    # |Uhat - U W|_F^2 = 2r - 2 tr(W^T gram); maximize tr(W^T gram) on the grid
    thetas = np.linspace(0.0, 2.0 * np.pi, grid_size, endpoint=False)
    c, s = np.cos(thetas), np.sin(thetas)
    g = gram
    best = None
    for reflect in (1.0, -1.0):
        # W = R(theta) @ diag(1, reflect)
        trace = c * g[0, 0] + s * g[1, 0] + reflect * (-s * g[0, 1] + c * g[1, 1])
        i = int(np.argmax(trace))
        cand = (float(trace[i]), thetas[i], reflect)
        if best is None or cand[0] > best[0]:
            best = cand
    _, theta0, reflect = best
    flip = np.diag([1.0, reflect])

    def score(t):
        return np.trace((_rotation(t) @ flip).T @ g)

    step = 2.0 * np.pi / grid_size
    lo, hi = theta0 - step, theta0 + step
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(60):
        m1 = hi - ratio * (hi - lo)
        m2 = lo + ratio * (hi - lo)
        if score(m1) < score(m2):
            lo = m1
        else:
            hi = m2
    theta = 0.5 * (lo + hi)
    if score(theta0) > score(theta):
        theta = theta0
    w = _rotation(theta) @ flip
    return _result(u, uhat, w, gram)


def residual_sandwich(u, uhat):
    """``(|sinT|_2^2 / 2, |U^T Uhat - W_U|_2, |sinT|_2^2)`` for the pair."""
    u, uhat = check_pair(u, uhat)
    sin2, _ = sin_theta_norms(u, uhat, verify=False)
    gram = u.T @ uhat
    w, _ = procrustes_rotation(gram)
    mid = matrix_norm(gram - w, "spectral")
    return 0.5 * sin2**2, mid, sin2**2


def spectral_residual_bounds(u, uhat):
    """``(|sinT|_2, |Uhat - U W_U|_2, min(1 + |sinT|_2, sqrt 2) |sinT|_2)``."""
    u, uhat = check_pair(u, uhat)
    sin2, _ = sin_theta_norms(u, uhat, verify=False)
    res = align(u, uhat)
    return sin2, res.residual_spectral, min(1.0 + sin2, np.sqrt(2.0)) * sin2
