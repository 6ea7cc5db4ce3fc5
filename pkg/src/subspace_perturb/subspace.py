"""Orthonormal frames, canonical angles, sin-theta distances and coherence."""

from __future__ import annotations

import numpy as np

from .linalg import ArgumentError, as_matrix, svd, two_to_inf_norm, matrix_norm

__all__ = [
    "FRAME_TOL",
    "as_frame",
    "check_pair",
    "canonical_angles",
    "sin_theta_norms",
    "coherence",
    "random_orthonormal",
    "orthonormalize",
]

FRAME_TOL = 1e-10


def as_frame(q, name="frame", tol=FRAME_TOL):
    """Validate that ``q`` is p x r with orthonormal columns and r <= p."""
    q = as_matrix(q, name)
    p, r = q.shape
    if r > p:
        raise ArgumentError(f"{name} has more columns than rows ({p}x{r})")
    err = np.max(np.abs(q.T @ q - np.eye(r)))
    if err > tol:
        raise ArgumentError(f"{name} columns are not orthonormal (max deviation {err:.2e})")
    return q


def check_pair(u, uhat):
    u = as_frame(u, "U")
    uhat = as_frame(uhat, "Uhat")
    if u.shape != uhat.shape:
        raise ArgumentError(f"frame shapes differ: {u.shape} vs {uhat.shape}")
    return u, uhat


def canonical_angles(u, uhat):
    """Canonical angles in radians, non-decreasing, each in [0, pi/2].

    The cosines are the singular values of ``U.T @ Uhat`` clamped to [0, 1].
    Angles whose cosine exceeds 1/sqrt(2) are taken from the matching sine
    (singular values of ``Uhat - U U^T Uhat``) instead, since ``arccos`` near
    1 loses half the working precision.
    """
    u, uhat = check_pair(u, uhat)
    cosines = np.clip(svd(u.T @ uhat).singular_values, 0.0, 1.0)
    angles = np.arccos(cosines)
    sines = np.clip(svd(uhat - u @ (u.T @ uhat)).singular_values[::-1], 0.0, 1.0)
    small = cosines > np.sqrt(0.5)
    angles[small] = np.arcsin(sines[small])
    return np.maximum.accumulate(angles)


def sin_theta_norms(u, uhat, verify=True):
    """Spectral and Frobenius norms of ``sin Theta(Uhat, U)``.

    With ``verify`` the spectral value is cross-checked against the
    complement-projection route ``|(I - U U^T) Uhat|_2`` (equal to
    ``|(I - U U^T) Uhat Uhat^T|_2``) and an AssertionError is raised if the
    two disagree by more than 1e-8.
    """
    u, uhat = check_pair(u, uhat)
    sines = np.sin(canonical_angles(u, uhat))
    spectral = float(np.max(sines))
    frobenius = float(np.sqrt(np.sum(sines**2)))
    if verify:
        other = matrix_norm(uhat - u @ (u.T @ uhat), "spectral")
        if abs(other - spectral) > 1e-8:
            raise AssertionError(f"sin-theta routes disagree: {spectral!r} vs {other!r}")
    return spectral, frobenius


def coherence(u):
    """``(p / r) * |U|_{2->inf}^2``; lies in [1, p/r] for a valid frame."""
    u = as_frame(u, "U")
    p, r = u.shape
    return (p / r) * two_to_inf_norm(u) ** 2


def orthonormalize(a):
    """Orthonormal basis for the columns of a full column rank ``a``.

    Householder QR followed by one re-orthogonalization pass; column signs
    are fixed so that ``R`` has a non-negative diagonal.
    """
    a = as_matrix(a)
    q = a
    for _ in range(2):
        q, rr = np.linalg.qr(q)
        signs = np.where(np.diag(rr) < 0, -1.0, 1.0)
        q = q * signs
    return q


def random_orthonormal(p, r, stream):
    """Random p x r frame from orthonormalizing standard normal variates.

    With the sign convention of :func:`orthonormalize` the frame is Haar
    distributed on the Stiefel manifold.
    """
    if not (isinstance(p, (int, np.integer)) and isinstance(r, (int, np.integer))):
        raise ArgumentError("p and r must be integers")
    if r < 1 or r > p:
        raise ArgumentError(f"need 1 <= r <= p, got p={p}, r={r}")
    return orthonormalize(stream.normal((p, r)))
