"""Exact Procrustean decomposition of ``Uhat - U W_U``.

For ``Xhat = X + E`` with rank-r truncations ``X ~ U S V^T`` and
``Xhat ~ Uhat Shat Vhat^T`` the residual ``Uhat - U W_U`` splits into a first
order term ``(I - U U^T) E V W_V Shat^-1`` plus three remainders. Four
regroupings of the same identity are offered (``VARIANTS``); the right-side
version swaps the roles of the left and right singular frames and uses
``E^T`` and ``X^T``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ArgumentError,
    RANK_RTOL,
    RankError,
    as_matrix,
    matrix_norm,
    numerical_rank,
    svd,
    sym_eig,
    two_to_inf_norm,
)
from .procrustes import procrustes_rotation

__all__ = [
    "VARIANTS",
    "SIDES",
    "PerturbationInstance",
    "SpectralPair",
    "DecompositionTerms",
    "make_instance",
    "spectral_pair",
    "decompose",
    "reconstruction_error",
    "term_norms",
    "terms_to_csv",
    "TERM_CSV_COLUMNS",
]

VARIANTS = ("rect4", "symmetric4", "rewritten3", "expanded5")
SIDES = ("left", "right")
SYM_TOL = 1e-12
TERM_CSV_COLUMNS = ("variant", "side", "term_label", "two_to_inf", "spectral", "frobenius")


@dataclass(frozen=True)
class PerturbationInstance:
    """Signal ``x``, perturbation ``e`` and observation ``xhat = x + e``."""

    x: np.ndarray
    e: np.ndarray
    xhat: np.ndarray
    r: int

    def __post_init__(self):
        if not (self.x.shape == self.e.shape == self.xhat.shape):
            raise ArgumentError(f"shape mismatch: x{self.x.shape}, e{self.e.shape}, xhat{self.xhat.shape}")
        if not np.array_equal(self.xhat, self.x + self.e):
            raise ArgumentError("xhat must equal x + e entrywise")
        if not 1 <= self.r <= min(self.x.shape):
            raise ArgumentError(f"r={self.r} out of range for shape {self.x.shape}")

    @property
    def shape(self):
        return self.x.shape

    @property
    def is_symmetric(self):
        p1, p2 = self.shape
        if p1 != p2:
            return False
        return _is_symmetric(self.x) and _is_symmetric(self.e)


def _is_symmetric(a, tol=SYM_TOL):
    return bool(np.max(np.abs(a - a.T)) <= tol * max(1.0, float(np.max(np.abs(a)))))


def make_instance(x, e, r):
    """Build an instance, computing ``xhat = x + e``."""
    x = as_matrix(x, "x")
    e = as_matrix(e, "e")
    if x.shape != e.shape:
        raise ArgumentError(f"shape mismatch: x{x.shape}, e{e.shape}")
    return PerturbationInstance(x=x, e=e, xhat=x + e, r=int(r))


@dataclass(frozen=True)
class SpectralPair:
    """Rank-r factors of ``x`` and ``xhat`` shared by decompositions and bounds.

    For ``mode="svd"`` the ``values`` are singular values. For
    ``mode="eig"`` they are signed eigenvalues ordered by decreasing
    magnitude, and ``v is u``.
    """

    mode: str
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    uhat: np.ndarray
    shat: np.ndarray
    vhat: np.ndarray
    x_values: np.ndarray
    xhat_values: np.ndarray


def spectral_pair(inst, mode="svd", eig_order="abs", partial=False):
    """Truncated factorizations of ``inst.x`` and ``inst.xhat``.

    ``mode="eig"`` uses symmetric eigendecompositions ordered by
    ``eig_order`` ("abs" or "desc"). ``partial`` (desc order only) computes
    just the leading r + 1 eigenpairs, which is what large graph instances
    need. Raises :class:`RankError` when the r-th singular value (or
    eigenvalue magnitude) of ``xhat`` is below the rank threshold.
    """
    r = inst.r
    if mode == "svd":
        fx, fh = svd(inst.x), svd(inst.xhat)
        if numerical_rank(fh.singular_values) < r:
            raise RankError(f"xhat has numerical rank below r={r}; Shat is not invertible")
        return SpectralPair(
            mode, fx.left[:, :r], fx.singular_values[:r], fx.right[:, :r],
            fh.left[:, :r], fh.singular_values[:r], fh.right[:, :r],
            fx.singular_values, fh.singular_values,
        )
    if mode == "eig":
        if not inst.is_symmetric:
            raise ArgumentError("symmetric decomposition needs symmetric x and e")
        if partial:
            if eig_order != "desc":
                raise ArgumentError("partial eigendecomposition supports eig_order='desc' only")
            k = min(r + 1, inst.shape[0])
            lx, qx = sym_eig(inst.x, order="desc", top=k)
            lh, qh = sym_eig(inst.xhat, order="desc", top=k)
        else:
            lx, qx = sym_eig(inst.x, order=eig_order)
            lh, qh = sym_eig(inst.xhat, order=eig_order)
        if np.min(np.abs(lh[:r])) <= RANK_RTOL * np.max(np.abs(lh)):
            raise RankError(f"xhat has numerical rank below r={r}; Lambdahat is not invertible")
        u, uhat = qx[:, :r], qh[:, :r]
        return SpectralPair(mode, u, lx[:r], u, uhat, lh[:r], uhat, lx, lh)
    raise ArgumentError(f"unknown factorization mode {mode!r}")


@dataclass(frozen=True)
class DecompositionTerms:
    """Labelled terms whose sum reproduces ``lhs`` exactly."""

    variant: str
    side: str
    labels: tuple
    terms: tuple
    lhs: np.ndarray
    w_u: np.ndarray
    w_v: np.ndarray
    meta: dict = field(default_factory=dict)

    def total(self):
        out = np.zeros_like(self.lhs)
        for t in self.terms:
            out = out + t
        return out

    def as_dict(self):
        return dict(zip(self.labels, self.terms))


def decompose(inst, variant="rect4", side="left", pair=None, t1=None, t2=None):
    """Decompose ``Uhat - U W_U`` (or ``Vhat - V W_V`` for ``side="right"``).

    Parameters
    ----------
    inst : PerturbationInstance
    variant : {"rect4", "symmetric4", "rewritten3", "expanded5"}
    side : {"left", "right"}
    pair : SpectralPair, optional
        Precomputed factors; must use ``mode="eig"`` for ``symmetric4``.
    t1, t2 : (r, r) arrays, optional
        Replace ``W_U`` and ``W_V``. The identity holds for any square
        matrices here; by default both are the Frobenius-optimal rotations.

    Returns
    -------
    DecompositionTerms
    """
    if variant not in VARIANTS:
        raise ArgumentError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if side not in SIDES:
        raise ArgumentError(f"unknown side {side!r}; expected one of {SIDES}")
    mode = "eig" if variant == "symmetric4" else "svd"
    if pair is None:
        pair = spectral_pair(inst, mode)
    elif pair.mode != mode:
        raise ArgumentError(f"variant {variant} needs a pair computed with mode={mode!r}")

    if side == "left" or mode == "eig":
        a, ahat, b, bhat = pair.u, pair.uhat, pair.v, pair.vhat
        e, x = inst.e, inst.x
    else:
        a, ahat, b, bhat = pair.v, pair.vhat, pair.u, pair.uhat
        e, x = inst.e.T, inst.x.T

    w_a = procrustes_rotation(a.T @ ahat)[0] if t1 is None else as_matrix(t1, "t1")
    if mode == "eig":
        w_b = w_a if t2 is None else as_matrix(t2, "t2")
    else:
        w_b = procrustes_rotation(b.T @ bhat)[0] if t2 is None else as_matrix(t2, "t2")
    shat_inv = 1.0 / pair.shat

    def perp(q, m):
        # (I - q q^T) m without forming the p x p projector
        return m - q @ (q.T @ m)

    lhs = ahat - a @ w_a
    last = a @ (a.T @ ahat - w_a)
    b_resid = bhat - b @ (b.T @ bhat)

    if variant in ("rect4", "symmetric4"):
        labels = ("T1", "T2", "T3", "T4")
        terms = (
            perp(a, e @ (b @ w_b)) * shat_inv,
            perp(a, e @ (bhat - b @ w_b)) * shat_inv,
            perp(a, x @ b_resid) * shat_inv,
            last,
        )
    elif variant == "rewritten3":
        labels = ("R1", "R2", "R3")
        bbt_b = b @ (b.T @ b)
        terms = (
            perp(a, e @ (bbt_b @ w_b)) * shat_inv,
            perp(a, (e + x) @ (bhat - b @ w_b)) * shat_inv,
            last,
        )
    else:
        bbt_b = b @ (b.T @ b)
        b_resid_perp = perp(b, b_resid)
        labels = ("X1", "X2", "X3", "X4", "X5")
        terms = (
            perp(a, e @ (bbt_b @ w_b)) * shat_inv,
            perp(a, e @ (bbt_b @ (b.T @ bhat - w_b))) * shat_inv,
            perp(a, e @ b_resid_perp) * shat_inv,
            perp(a, x @ b_resid_perp) * shat_inv,
            last,
        )
    w_u, w_v = (w_a, w_b) if side == "left" or mode == "eig" else (w_b, w_a)
    return DecompositionTerms(
        variant=variant,
        side=side,
        labels=labels,
        terms=terms,
        lhs=lhs,
        w_u=w_u,
        w_v=w_v,
        meta={"sigma_r_hat": float(np.min(np.abs(pair.shat)))},
    )


def reconstruction_error(terms):
    """``|lhs - sum(terms)|_max / max(1, |lhs|_max)``."""
    diff = terms.lhs - terms.total()
    return float(np.max(np.abs(diff)) / max(1.0, float(np.max(np.abs(terms.lhs)))))


def term_norms(terms):
    """Per-term ``{label: {"two_to_inf", "spectral", "frobenius"}}``."""
    out = {}
    for label, t in zip(terms.labels, terms.terms):
        out[label] = {
            "two_to_inf": two_to_inf_norm(t),
            "spectral": matrix_norm(t, "spectral"),
            "frobenius": matrix_norm(t, "frobenius"),
        }
    return out


def terms_to_csv(decompositions):
    """CSV dump with columns ``TERM_CSV_COLUMNS`` for one or more decompositions."""
    if isinstance(decompositions, DecompositionTerms):
        decompositions = [decompositions]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TERM_CSV_COLUMNS)
    for d in decompositions:
        for label, norms in term_norms(d).items():
            writer.writerow([d.variant, d.side, label] + [f"{norms[k]:.17g}" for k in TERM_CSV_COLUMNS[3:]])
    return buf.getvalue()
