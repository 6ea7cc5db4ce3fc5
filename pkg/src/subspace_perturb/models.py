"""Seeded generators for the signal and noise models used in the experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import make_instance
from .linalg import ArgumentError, RankError, as_matrix, numerical_rank, svd
from .subspace import random_orthonormal

__all__ = [
    "CovarianceModel",
    "SbmModel",
    "OmnibusPair",
    "gen_gaussian_noise",
    "gen_symmetric_noise",
    "gen_low_rank",
    "gen_spiked_covariance",
    "sample_empirical_covariance",
    "balanced_sbm",
    "gen_rho_sbm_pair",
    "omnibus_instance",
]


def gen_gaussian_noise(p1, p2, stream):
    """p1 x p2 matrix of i.i.d. standard normal entries."""
    if p1 < 1 or p2 < 1:
        raise ArgumentError(f"dims must be positive, got {p1}x{p2}")
    return stream.normal((p1, p2))


def gen_symmetric_noise(p, stream):
    """Symmetric p x p matrix, N(0, 1) off the diagonal and N(0, 2) on it."""
    g = stream.normal((p, p))
    return (g + g.T) / np.sqrt(2.0)


def gen_low_rank(p1, p2, r, sigmas, stream):
    """``X = U diag(sigmas) V^T`` with Haar-random frames U, V.

    Returns ``(X, U, V)``; the frames are the population truth.
    """
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if sigmas.shape != (r,):
        raise ArgumentError(f"expected {r} singular values, got shape {sigmas.shape}")
    if np.any(sigmas <= 0) or np.any(np.diff(sigmas) > 0):
        raise ArgumentError("sigmas must be positive and non-increasing")
    u = random_orthonormal(p1, r, stream)
    v = random_orthonormal(p2, r, stream)
    return (u * sigmas) @ v.T, u, v


@dataclass(frozen=True)
class CovarianceModel:
    """Spiked covariance ``Gamma = U diag(spikes) U^T + bulk (I - U U^T)``.

    ``spike_values`` are the leading eigenvalues of Gamma, ``bulk_value`` the
    common value of the remaining ``d - r``.
    """

    d: int
    r: int
    u: np.ndarray
    spike_values: np.ndarray
    bulk_value: float

    def __post_init__(self):
        if self.u.shape != (self.d, self.r):
            raise ArgumentError(f"u must be {self.d}x{self.r}, got {self.u.shape}")
        if np.any(self.spike_values <= 0) or np.any(np.diff(self.spike_values) > 0):
            raise ArgumentError("spike values must be positive and non-increasing")
        if self.bulk_value < 0 or self.gap <= 0:
            raise ArgumentError("need spike_values[-1] > bulk_value >= 0")

    @property
    def spectrum(self):
        return np.concatenate([self.spike_values, np.full(self.d - self.r, self.bulk_value)])

    @property
    def gap(self):
        # delta_r = sigma_r - sigma_{r+1}; with d == r the bulk is empty
        if self.d == self.r:
            return float(self.spike_values[-1])
        return float(self.spike_values[-1] - self.bulk_value)

    @property
    def effective_rank(self):
        return float(np.sum(self.spectrum) / self.spike_values[0])

    @property
    def sigma_r1(self):
        return float(self.bulk_value) if self.d > self.r else 0.0

    @property
    def nu(self):
        """max_i sqrt(Var(Y_i)) = max_i sqrt(Gamma_ii)."""
        return float(np.sqrt(np.max(np.diag(self.gamma()))))

    def gamma(self):
        u = self.u
        return (u * (self.spike_values - self.bulk_value)) @ u.T + self.bulk_value * np.eye(self.d)

    def sqrt_apply(self, z):
        """Rows of ``z`` (n x d) mapped by Gamma^{1/2}."""
        root_spike = np.sqrt(self.spike_values)
        root_bulk = np.sqrt(self.bulk_value)
        return root_bulk * z + ((z @ self.u) * (root_spike - root_bulk)) @ self.u.T


def gen_spiked_covariance(d, r, lambda_values, c, stream):
    """``Gamma = U (Lambda + c^2 I) U^T + c^2 U_perp U_perp^T`` with Haar U."""
    lam = np.asarray(lambda_values, dtype=np.float64)
    if lam.shape != (r,) or np.any(lam <= 0):
        raise ArgumentError(f"need {r} positive lambda values")
    if c <= 0:
        raise ArgumentError("c must be positive")
    lam = np.sort(lam)[::-1]
    u = random_orthonormal(d, r, stream)
    return CovarianceModel(d=d, r=r, u=u, spike_values=lam + c * c, bulk_value=float(c * c))


def sample_empirical_covariance(model, n, stream, batch=4096):
    """Instance ``(Gamma, Gammahat_n - Gamma, Gammahat_n)`` from n Gaussian draws.

    Draws are generated and accumulated in row batches so that ``n x d`` is
    never held in memory at once.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    d = model.d
    acc = np.zeros((d, d))
    done = 0
    while done < n:
        m = min(batch, n - done)
        y = model.sqrt_apply(stream.normal((m, d)))
        acc += y.T @ y
        done += m
    gamma_hat = acc / n
    gamma_hat = 0.5 * (gamma_hat + gamma_hat.T)
    gamma = model.gamma()
    gamma = 0.5 * (gamma + gamma.T)
    return make_instance(gamma, gamma_hat - gamma, model.r)


@dataclass(frozen=True)
class SbmModel:
    """Two-graph rho-correlated stochastic block model."""

    lambda_block: np.ndarray
    block_sizes: tuple
    rho: float

    def __post_init__(self):
        lam = self.lambda_block
        k = len(self.block_sizes)
        if lam.shape != (k, k):
            raise ArgumentError(f"lambda_block must be {k}x{k}")
        if not np.allclose(lam, lam.T, rtol=0, atol=0) or np.any(lam < 0) or np.any(lam > 1):
            raise ArgumentError("lambda_block must be symmetric with entries in [0, 1]")
        if any(int(b) < 1 for b in self.block_sizes):
            raise ArgumentError("block sizes must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ArgumentError(f"rho must lie in [0, 1], got {self.rho}")

    @property
    def kappa(self):
        return len(self.block_sizes)

    @property
    def n(self):
        return int(sum(self.block_sizes))

    @property
    def membership(self):
        return np.repeat(np.arange(self.kappa), self.block_sizes)

    def z(self):
        """n x kappa block assignment matrix."""
        return np.eye(self.kappa)[self.membership]

    def p_matrix(self):
        b = self.membership
        return self.lambda_block[np.ix_(b, b)]

    @property
    def max_expected_degree(self):
        return float(np.max(self.p_matrix().sum(axis=1)))


def balanced_sbm(n, lambda_block, rho):
    """SbmModel with ``n`` vertices split as evenly as possible."""
    lam = as_matrix(lambda_block, "lambda_block")
    k = lam.shape[0]
    sizes = tuple(n // k + (1 if i < n % k else 0) for i in range(k))
    return SbmModel(lambda_block=lam, block_sizes=sizes, rho=float(rho))


@dataclass(frozen=True)
class OmnibusPair:
    a1: np.ndarray
    a2: np.ndarray
    p: np.ndarray

    @property
    def ohat(self):
        mid = 0.5 * (self.a1 + self.a2)
        return np.block([[self.a1, mid], [mid, self.a2]])

    @property
    def omodel(self):
        return np.kron(np.ones((2, 2)), self.p)


def gen_rho_sbm_pair(model, stream):
    """Sample two simple undirected graphs, marginally SBM, edge correlation rho.

    Upper-triangle edges of A1 are Bernoulli(P). Given A1, an edge of A2 is
    Bernoulli(P + rho (1 - P)) where A1 has an edge and Bernoulli(P (1 - rho))
    elsewhere, which keeps the Bernoulli(P) marginal and gives correlation rho.
    """
    p = model.p_matrix()
    n = p.shape[0]
    iu = np.triu_indices(n, k=1)
    pu = p[iu]
    e1 = stream.uniform(pu.shape) < pu
    p2 = np.where(e1, pu + model.rho * (1.0 - pu), pu * (1.0 - model.rho))
    e2 = stream.uniform(pu.shape) < p2
    a1 = np.zeros((n, n))
    a2 = np.zeros((n, n))
    a1[iu] = e1
    a2[iu] = e2
    return OmnibusPair(a1=a1 + a1.T, a2=a2 + a2.T, p=p)


def omnibus_instance(pair, r):
    """Instance ``(O, Ohat - O, Ohat)`` after checking ``rank(O) == r``."""
    omodel = pair.omodel
    # P = Z Lambda Z^T has the rank of its distinct-row, distinct-column core
    core = np.unique(np.unique(pair.p, axis=0), axis=1)
    rank = numerical_rank(svd(core).singular_values)
    if rank != r:
        raise RankError(f"model omnibus matrix has rank {rank}, expected {r}")
    return make_instance(omodel, pair.ohat - omodel, r)
