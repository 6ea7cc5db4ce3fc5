"""Evaluators for the two-to-infinity and sin-theta perturbation bounds.

Each evaluator returns a :class:`BoundReport`. The report records whether
the bound's hypotheses hold on the instance; the inequality itself is
checked by the caller (``report.holds()``), never forced by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .decomposition import spectral_pair
from .linalg import ArgumentError, RANK_RTOL, matrix_norm, sym_eig, two_to_inf_norm
from .procrustes import align
from .subspace import sin_theta_norms

__all__ = [
    "SLACK_TOL",
    "BoundReport",
    "perturbation_constants",
    "bound_baseline",
    "bound_uniform_rect",
    "bound_low_rank",
    "bound_entrywise_symmetric",
    "davis_kahan",
    "davis_kahan_report",
    "covariance_rhs",
    "feasible_constants",
]

# floating-point allowance on slack; never a modelling tolerance
SLACK_TOL = 1e-10


@dataclass
class BoundReport:
    bound_id: str
    lhs: float
    rhs: float
    terms: dict = field(default_factory=dict)
    preconditions: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def preconditions_met(self):
        return all(self.preconditions.values())

    @property
    def failed_preconditions(self):
        return [k for k, ok in self.preconditions.items() if not ok]

    def holds(self, tol=SLACK_TOL):
        """True when the hypotheses hold and ``slack >= -tol``; None if untested."""
        if not self.preconditions_met:
            return None
        return self.slack >= -tol

    def to_dict(self):
        return {
            "bound_id": self.bound_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "preconditions": {k: bool(v) for k, v in self.preconditions.items()},
            "terms": {k: float(v) for k, v in self.terms.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(bound_id=d["bound_id"], lhs=float(d["lhs"]), rhs=float(d["rhs"]),
                   terms=dict(d.get("terms", {})), preconditions=dict(d.get("preconditions", {})))


def _perp(q, m):
    return m - q @ (q.T @ m)


def _perp_right(m, q):
    return m - (m @ q) @ q.T


def perturbation_constants(inst, pair=None):
    """Quantities shared by the rectangular bounds.

    The ``C_*`` entries are the exact infinity norms
    ``|(U_perp U_perp^T) E|_inf``, ``|(V_perp V_perp^T) E^T|_inf`` and the
    same with X, i.e. the tightest admissible constants.
    """
    if pair is None:
        pair = spectral_pair(inst, "svd")
    u, v = pair.u, pair.v
    x, e = inst.x, inst.e
    s = pair.x_values
    r = inst.r
    e2 = matrix_norm(e, "spectral")
    return {
        "pair": pair,
        "sigma_r": float(s[r - 1]),
        "sigma_r1": float(s[r]) if r < s.size else 0.0,
        "sigma_1": float(s[0]),
        "e_spectral": e2,
        "C_EU": matrix_norm(_perp(u, e), "infinity"),
        "C_EV": matrix_norm(_perp(v, e.T), "infinity"),
        "C_XU": matrix_norm(_perp(u, x), "infinity"),
        "C_XV": matrix_norm(_perp(v, x.T), "infinity"),
    }


def _rank_is_r(c):
    return c["sigma_r1"] <= RANK_RTOL * c["sigma_1"]


def bound_baseline(inst, pair=None):
    """Two-to-infinity bound on ``Uhat - U W_U`` from the expanded decomposition.

    Requires ``sigma_r(X) > sigma_{r+1}(X)`` and ``sigma_r(X) >= 2 |E|_2``.
    """
    if pair is None:
        pair = spectral_pair(inst, "svd")
    u, v, uhat, vhat = pair.u, pair.v, pair.uhat, pair.vhat
    s = pair.x_values
    r = inst.r
    sigma_r = float(s[r - 1])
    sigma_r1 = float(s[r]) if r < s.size else 0.0
    e2 = matrix_norm(inst.e, "spectral")
    pre = {"singular_gap": sigma_r > sigma_r1, "sigma_r_ge_2E": sigma_r >= 2.0 * e2}

    lhs = align(u, uhat).residual_two_to_inf
    sin_u, _ = sin_theta_norms(u, uhat, verify=False)
    sin_v, _ = sin_theta_norms(v, vhat, verify=False)
    pe = _perp(u, inst.e)
    px = _perp(u, inst.x)
    a = two_to_inf_norm((pe @ v) @ v.T)
    b = two_to_inf_norm(_perp_right(pe, v))
    c = two_to_inf_norm(_perp_right(px, v))
    terms = {
        "leading": 2.0 * a / sigma_r,
        "noise_tail": 2.0 * b / sigma_r * sin_v,
        "signal_tail": 2.0 * c / sigma_r * sin_v,
        "procrustes": sin_u**2 * two_to_inf_norm(u),
    }
    return BoundReport("baseline", lhs, float(sum(terms.values())), terms, pre)


def bound_uniform_rect(inst, alpha, alpha_p, beta=None, beta_p=None, pair=None):
    """Uniform bound ``(1 - delta) |Uhat - U W_U|_{2->inf} <= ...``.

    With ``beta``/``beta_p`` omitted the rank-r form is used:
    ``delta = alpha * alpha_p`` and the X-conditions are dropped, which
    requires ``sigma_{r+1}(X) = 0``. Otherwise
    ``delta = (alpha + beta)(alpha_p + beta_p)`` and ``sigma_{r+1}(X) > 0``.
    """
    c = perturbation_constants(inst, pair)
    pair = c["pair"]
    u, v, uhat, vhat = pair.u, pair.v, pair.uhat, pair.vhat
    sigma_r = c["sigma_r"]
    low_rank = beta is None and beta_p is None
    if low_rank:
        delta = alpha * alpha_p
        need = max(2 * c["e_spectral"], 2 / alpha * c["C_EU"], 2 / alpha_p * c["C_EV"])
        pre = {
            "rank_r": _rank_is_r(c),
            "constants_in_unit_interval": 0 < alpha < 1 and 0 < alpha_p < 1,
        }
    else:
        if beta is None or beta_p is None:
            raise ArgumentError("give both beta and beta_p or neither")
        delta = (alpha + beta) * (alpha_p + beta_p)
        need = max(
            2 * c["e_spectral"],
            2 / alpha * c["C_EU"],
            2 / alpha_p * c["C_EV"],
            2 / beta * c["C_XU"],
            2 / beta_p * c["C_XV"],
        )
        pre = {
            "singular_gap": sigma_r > c["sigma_r1"] > 0,
            "constants_in_unit_interval": all(0 < t < 1 for t in (alpha, alpha_p, beta, beta_p)),
        }
    pre["delta_lt_1"] = delta < 1
    pre["sigma_r_condition"] = sigma_r >= need

    sin_u, _ = sin_theta_norms(u, uhat, verify=False)
    sin_v, _ = sin_theta_norms(v, vhat, verify=False)
    terms = {
        "left_leading": 2.0 * two_to_inf_norm((_perp(u, inst.e) @ v) @ v.T) / sigma_r,
        "right_leading": 2.0 * two_to_inf_norm((_perp(v, inst.e.T) @ u) @ u.T) / sigma_r,
        "left_procrustes": sin_u**2 * two_to_inf_norm(u),
        "right_procrustes": sin_v**2 * two_to_inf_norm(v),
    }
    rhs = float(sum(terms.values()))
    terms["delta"] = delta
    terms["sigma_r_required"] = need
    lhs = (1.0 - delta) * align(u, uhat).residual_two_to_inf
    return BoundReport("uniform_rect_rank_r" if low_rank else "uniform_rect", lhs, rhs, terms, pre)


def bound_low_rank(inst, alpha, alpha_p, pair=None):
    """``(1 - a a') |Uhat - U W_U|_{2->inf} <= 12 max(|E|_1, |E|_inf) / sigma_r * max |Z|_{2->inf}``."""
    c = perturbation_constants(inst, pair)
    pair = c["pair"]
    sigma_r = c["sigma_r"]
    delta = alpha * alpha_p
    need = max(2 * c["e_spectral"], 2 / alpha * c["C_EU"], 2 / alpha_p * c["C_EV"])
    pre = {
        "rank_r": _rank_is_r(c),
        "constants_in_unit_interval": 0 < alpha < 1 and 0 < alpha_p < 1,
        "delta_lt_1": delta < 1,
        "sigma_r_condition": sigma_r >= need,
    }
    e_norm = max(matrix_norm(inst.e, "one"), matrix_norm(inst.e, "infinity"))
    coh = max(two_to_inf_norm(pair.u), two_to_inf_norm(pair.v))
    rhs = 12.0 * e_norm / sigma_r * coh
    lhs = (1.0 - delta) * align(pair.u, pair.uhat).residual_two_to_inf
    terms = {"e_norm_ratio": e_norm / sigma_r, "max_two_to_inf_frame": coh, "delta": delta}
    return BoundReport("low_rank", lhs, rhs, terms, pre)


def bound_entrywise_symmetric(inst, pair=None):
    """``|Uhat - U W|_{2->inf} <= 14 (|E|_inf / |lambda_r|) |U|_{2->inf}``.

    For symmetric X of rank r and symmetric E, with ``|lambda_r| >=
    4 |E|_inf``. Eigenpairs are ordered by decreasing absolute eigenvalue.
    """
    if pair is None:
        pair = spectral_pair(inst, "eig")
    elif pair.mode != "eig":
        raise ArgumentError("entrywise bound needs an eigen-mode SpectralPair")
    r = inst.r
    lam = pair.x_values
    lam_r = abs(float(lam[r - 1]))
    lam_1 = abs(float(lam[0]))
    lam_r1 = abs(float(lam[r])) if r < lam.size else 0.0
    e_inf = matrix_norm(inst.e, "infinity")
    pre = {
        "rank_r": lam_r > 0 and lam_r1 <= RANK_RTOL * lam_1,
        "lambda_r_ge_4E": lam_r >= 4.0 * e_inf,
    }
    u_tti = two_to_inf_norm(pair.u)
    rhs = 14.0 * (e_inf / lam_r) * u_tti if lam_r > 0 else math.inf
    lhs = align(pair.u, pair.uhat).residual_two_to_inf
    terms = {"e_inf": e_inf, "abs_lambda_r": lam_r, "u_two_to_inf": u_tti}
    return BoundReport("entrywise_symmetric", lhs, rhs, terms, pre)


def _block_gap(lam, r, s):
    # lam descending, block r..s is 1-based inclusive
    upper = math.inf if r == 1 else lam[r - 2] - lam[r - 1]
    lower = math.inf if s == lam.size else lam[s - 1] - lam[s]
    return min(upper, lower)


def davis_kahan(x_sym, xhat_sym, r, s):
    """``2 |E|_2 / gap`` for the eigenvalue block ``r..s`` (1-based, signed order).

    Raises ArgumentError when the block gap is not positive.
    """
    lam, _ = sym_eig(x_sym, order="desc")
    p = lam.size
    if not 1 <= r <= s <= p:
        raise ArgumentError(f"need 1 <= r <= s <= {p}, got r={r}, s={s}")
    gap = _block_gap(lam, r, s)
    if not gap > 0:
        raise ArgumentError(f"eigenvalue gap for block {r}..{s} is {gap}; bound undefined")
    e2 = matrix_norm(np.asarray(xhat_sym) - np.asarray(x_sym), "spectral")
    return 2.0 * e2 / gap


def davis_kahan_report(x_sym, xhat_sym, r, s):
    """Davis-Kahan check: ``|sinT(Vhat, V)|_2`` for the block against its bound."""
    lam, q = sym_eig(x_sym, order="desc")
    lam_hat, q_hat = sym_eig(xhat_sym, order="desc")
    gap = _block_gap(lam, r, s) if 1 <= r <= s <= lam.size else 0.0
    pre = {"positive_gap": gap > 0}
    if not gap > 0:
        return BoundReport("davis_kahan", math.nan, math.nan, {"gap": gap}, pre)
    rhs = davis_kahan(x_sym, xhat_sym, r, s)
    sin2, _ = sin_theta_norms(q[:, r - 1:s], q_hat[:, r - 1:s], verify=False)
    return BoundReport("davis_kahan", sin2, rhs, {"gap": gap}, pre)


def covariance_rhs(model, n, big_c=1.0, form="general"):
    """Right-hand side of the covariance-estimation bound with constant ``big_c``.

    ``form="general"`` evaluates the two-term bound in the effective rank,
    ``nu(Y)``, ``sigma_r`` and ``sigma_{r+1}``; ``form="spiked"`` the
    simplified spiked form ``big_c * sqrt(max(reff, log d) / n) *
    sqrt(r^3 / d)``. The constant is not known, so values are only useful
    for scaling comparisons.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    d, r = model.d, model.r
    rate = max(model.effective_rank, math.log(d)) / n
    if form == "spiked":
        return big_c * math.sqrt(rate) * math.sqrt(r**3 / d)
    if form != "general":
        raise ArgumentError(f"unknown form {form!r}")
    sigma_r = float(model.spike_values[-1])
    sigma_r1 = model.sigma_r1
    first = math.sqrt(rate) * (model.nu * r / math.sqrt(sigma_r) + sigma_r1 / sigma_r)
    second = rate * (math.sqrt(sigma_r1 / sigma_r) + math.sqrt(r / d))
    return big_c * (first + second)


def feasible_constants(inst, step=0.05, with_beta=False, pair=None):
    """Smallest grid constants satisfying the sigma_r conditions.

    Each condition ``sigma_r >= (2 / a) C`` is met by any ``a >= 2 C /
    sigma_r``, and the right-hand side does not depend on the constants, so
    the smallest admissible grid point (multiples of ``step`` in (0, 1))
    minimizes delta and maximizes slack. Returns ``(alpha, alpha_p, beta,
    beta_p)`` (betas None unless ``with_beta``) or None when no grid point
    gives delta < 1.
    """
    c = perturbation_constants(inst, pair)
    sigma_r = c["sigma_r"]
    if sigma_r <= 0:
        return None
    grid = np.round(np.arange(1, int(round(1.0 / step))) * step, 12)

    def smallest(const):
        ok = grid[grid * sigma_r >= 2.0 * const]
        return float(ok[0]) if ok.size else None

    alpha, alpha_p = smallest(c["C_EU"]), smallest(c["C_EV"])
    if alpha is None or alpha_p is None:
        return None
    if not with_beta:
        return (alpha, alpha_p, None, None) if alpha * alpha_p < 1 else None
    beta, beta_p = smallest(c["C_XU"]), smallest(c["C_XV"])
    if beta is None or beta_p is None or (alpha + beta) * (alpha_p + beta_p) >= 1:
        return None
    return alpha, alpha_p, beta, beta_p
