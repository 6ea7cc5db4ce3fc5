"""Dense matrix validation, matrix norms, and the SVD contract.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Every public
function validates its input through :func:`as_matrix`, so NaN/Inf entries
and empty shapes are rejected at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "ArgumentError",
    "SvdConvergenceError",
    "RankError",
    "SvdFactors",
    "RANK_RTOL",
    "as_matrix",
    "two_to_inf_norm",
    "matrix_norm",
    "svd",
    "truncate",
    "numerical_rank",
    "sym_eig",
    "read_matrix",
    "write_matrix",
    "format_matrix",
    "parse_matrix",
]

# singular values at or below RANK_RTOL * sigma_1 count as zero
RANK_RTOL = 1e-12

NORM_KINDS = ("spectral", "frobenius", "one", "infinity", "max")


class ArgumentError(ValueError):
    """Raised when an argument has the wrong shape, range or content."""


class RankError(ArgumentError):
    """Raised when a matrix lacks the rank an operation needs."""


class SvdConvergenceError(np.linalg.LinAlgError):
    """Raised when every LAPACK SVD driver fails to converge.

    ``budget`` names the drivers tried; LAPACK uses its internal iteration
    limit for each of them.
    """

    def __init__(self, msg, budget):
        super().__init__(msg)
        self.budget = budget


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array with at least one entry."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ArgumentError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains NaN or Inf entries")
    return arr


def two_to_inf_norm(a):
    """Maximum Euclidean row norm, i.e. ``sup_{|x|_2=1} |A x|_inf``."""
    a = as_matrix(a)
    return float(np.max(np.sqrt(np.einsum("ij,ij->i", a, a))))


def matrix_norm(a, kind="spectral"):
    """Standard matrix norms.

    Parameters
    ----------
    a : array-like, (p1, p2)
    kind : {"spectral", "frobenius", "one", "infinity", "max"}
        ``one`` is the maximum absolute column sum, ``infinity`` the maximum
        absolute row sum, ``max`` the largest absolute entry. ``spectral`` is
        the leading singular value from :func:`svd`.
    """
    a = as_matrix(a)
    if kind == "spectral":
        return float(scipy.linalg.svdvals(a)[0])
    if kind == "frobenius":
        return float(np.sqrt(np.sum(a * a)))
    if kind == "one":
        return float(np.max(np.sum(np.abs(a), axis=0)))
    if kind == "infinity":
        return float(np.max(np.sum(np.abs(a), axis=1)))
    if kind == "max":
        return float(np.max(np.abs(a)))
    raise ArgumentError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def k(self):
        return self.singular_values.shape[0]

    def reconstruct(self):
        return (self.left * self.singular_values) @ self.right.T


def svd(a):
    """Thin singular value decomposition with k = min(p1, p2) triplets.

    Uses LAPACK ``gesdd`` and falls back to ``gesvd`` if the divide and
    conquer driver does not converge. Output is a deterministic function of
    the input bits; column signs are whatever LAPACK returns.
    """
    a = as_matrix(a)
    tried = []
    for driver in ("gesdd", "gesvd"):
        tried.append(driver)
        try:
            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver=driver, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        return SvdFactors(left=u, singular_values=s, right=vt.T)
    raise SvdConvergenceError(f"SVD did not converge for a {a.shape} matrix", budget=tuple(tried))


def numerical_rank(s, rtol=RANK_RTOL):
    """Count singular values above ``rtol * s[0]``."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def truncate(factors, r, require_invertible=False):
    """Leading ``r`` singular triplets ``(U, sigma, V)`` of ``factors``.

    With ``require_invertible`` a :class:`RankError` is raised when
    ``sigma_r`` is at or below the relative rank threshold.
    """
    k = factors.k
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= k:
        raise ArgumentError(f"r must be an integer in [1, {k}], got {r!r}")
    s = factors.singular_values[:r]
    if require_invertible and numerical_rank(factors.singular_values) < r:
        raise RankError(f"sigma_{r} = {s[-1]:.3e} is below the rank threshold; cannot invert")
    return factors.left[:, :r], s, factors.right[:, :r]


def sym_eig(a, order="abs", sym_tol=1e-12, top=None):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    order : {"abs", "desc"}
        ``abs`` sorts by decreasing absolute eigenvalue, ``desc`` by
        decreasing signed eigenvalue. Ties keep LAPACK's ascending order
        reversed, so the output is deterministic.
    top : int, optional
        With ``order="desc"``, compute only the ``top`` largest eigenpairs.

    Returns
    -------
    values : (p,) eigenvalues in the requested order
    vectors : (p, p) matching orthonormal eigenvectors as columns
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ArgumentError(f"matrix must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ArgumentError("matrix is not symmetric")
    p = a.shape[0]
    if top is not None:
        if order != "desc" or not 1 <= top <= p:
            raise ArgumentError("top requires order='desc' and 1 <= top <= p")
        w, q = scipy.linalg.eigh(a, check_finite=False, subset_by_index=[p - top, p - 1])
        return w[::-1], q[:, ::-1]
    w, q = scipy.linalg.eigh(a, check_finite=False)
    if order == "desc":
        idx = np.arange(w.size)[::-1]
    elif order == "abs":
        idx = np.argsort(-np.abs(w[::-1]), kind="stable")
        idx = w.size - 1 - idx
    else:
        raise ArgumentError(f"unknown eigenvalue order {order!r}")
    return w[idx], q[:, idx]


# fixture text format: "rows cols" header, then whitespace separated rows


def format_matrix(a):
    a = as_matrix(a)
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines.extend(" ".join(f"{x:.17g}" for x in row) for row in a)
    return "\n".join(lines) + "\n"


def parse_matrix(text):
    tokens = text.split()
    if len(tokens) < 2:
        raise ArgumentError("matrix text is missing the 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise ArgumentError(f"bad matrix header {tokens[:2]!r}") from exc
    body = tokens[2:]
    if rows < 1 or cols < 1 or len(body) != rows * cols:
        raise ArgumentError(f"header says {rows}x{cols} but found {len(body)} entries")
    try:
        values = np.array([float(t) for t in body], dtype=np.float64)
    except ValueError as exc:
        raise ArgumentError(f"non-numeric matrix entry: {exc}") from exc
    return as_matrix(values.reshape(rows, cols))


def read_matrix(path):
    return parse_matrix(Path(path).read_text())


def write_matrix(a, path):
    Path(path).write_text(format_matrix(a))
