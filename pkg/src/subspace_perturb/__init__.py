"""Perturbation of singular subspaces and eigenspaces in the two-to-infinity norm.

Submodules
----------
linalg         dense validation, norms, SVD and symmetric eigendecompositions
subspace       canonical angles, sin-theta distances, coherence
procrustes     orthogonal Procrustes alignment and its oracle
decomposition  exact Procrustean decomposition of ``Uhat - U W_U``
bounds         evaluators for the two-to-infinity perturbation bounds
models         seeded signal and noise generators
harness        Monte Carlo experiments and report files
"""

from .decomposition import (
    DecompositionTerms,
    PerturbationInstance,
    SpectralPair,
    decompose,
    make_instance,
    reconstruction_error,
    spectral_pair,
)
from .linalg import (
    ArgumentError,
    RankError,
    SvdConvergenceError,
    matrix_norm,
    svd,
    two_to_inf_norm,
)
from .procrustes import align, align_bruteforce
from .stream import SeededStream
from .subspace import canonical_angles, coherence, sin_theta_norms

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "RankError",
    "SvdConvergenceError",
    "DecompositionTerms",
    "PerturbationInstance",
    "SpectralPair",
    "SeededStream",
    "align",
    "align_bruteforce",
    "canonical_angles",
    "coherence",
    "decompose",
    "make_instance",
    "matrix_norm",
    "reconstruction_error",
    "sin_theta_norms",
    "spectral_pair",
    "svd",
    "two_to_inf_norm",
]
