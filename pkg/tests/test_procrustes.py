import math

import numpy as np
import pytest

from subspace_perturb.linalg import ArgumentError
from subspace_perturb.procrustes import (
    align,
    align_bruteforce,
    procrustes_rotation,
    residual_sandwich,
    spectral_residual_bounds,
)
from subspace_perturb.stream import SeededStream
from subspace_perturb.subspace import random_orthonormal


def unit(theta):
    return np.array([[math.cos(theta)], [math.sin(theta)]])


def test_identity_alignment(stream):
    u = random_orthonormal(8, 3, stream)
    res = align(u, u)
    np.testing.assert_allclose(res.w, np.eye(3), atol=1e-14)
    assert res.residual_frobenius <= 1e-14 and res.residual_two_to_inf <= 1e-14


def test_exact_rotation_recovered(stream):
    u = random_orthonormal(10, 3, stream)
    r = random_orthonormal(3, 3, stream)
    res = align(u, u @ r)
    np.testing.assert_allclose(res.w, r, atol=1e-10)
    assert res.residual_spectral <= 1e-10


def test_rank_one_sign():
    u = unit(0.0)
    for theta in (0.4, 2.5, math.pi + 0.1):
        res = align(u, unit(theta))
        assert res.w[0, 0] == np.sign(math.cos(theta))
        candidates = [np.linalg.norm(unit(theta) - s * u) for s in (-1.0, 1.0)]
        assert res.residual_frobenius == pytest.approx(min(candidates), abs=1e-15)


def test_optimality_spot_check(stream):
    u = random_orthonormal(15, 3, stream)
    uhat = random_orthonormal(15, 3, stream)
    res = align(u, uhat)
    assert np.max(np.abs(res.w.T @ res.w - np.eye(3))) <= 1e-10
    for i in range(100):
        r = random_orthonormal(3, 3, stream.child(i))
        assert res.residual_frobenius <= np.linalg.norm(uhat - u @ r) + 1e-12


def test_gauge_absorption(stream):
    u = random_orthonormal(12, 3, stream)
    uhat = random_orthonormal(12, 3, stream)
    r = random_orthonormal(3, 3, stream)
    np.testing.assert_allclose(align(u, uhat @ r).w, align(u, uhat).w @ r, atol=1e-10)


def test_singular_gram_flagged():
    u = np.eye(4)[:, :2]
    uhat = np.eye(4)[:, 1:3]
    res = align(u, uhat)
    assert res.non_unique
    assert np.max(np.abs(res.w.T @ res.w - np.eye(2))) <= 1e-12
    w, flag = procrustes_rotation(np.eye(2))
    assert not flag and np.array_equal(w, np.eye(2))


def test_bruteforce_agrees(stream):
    for i in range(10):
        s = stream.child(i)
        for r in (1, 2):
            u = random_orthonormal(9, r, s)
            uhat = random_orthonormal(9, r, s)
            a, b = align(u, uhat), align_bruteforce(u, uhat, grid_size=20_000)
            assert b.residual_frobenius >= a.residual_frobenius - 1e-12
            assert b.residual_frobenius - a.residual_frobenius <= 1e-6


def test_bruteforce_identity_and_limits(stream):
    u = random_orthonormal(6, 2, stream)
    res = align_bruteforce(u, u)
    np.testing.assert_allclose(res.w, np.eye(2), atol=1e-6)
    assert res.residual_frobenius <= 1e-6
    with pytest.raises(ArgumentError):
        align_bruteforce(random_orthonormal(6, 3, stream), random_orthonormal(6, 3, stream))


def test_sandwich_single_angle():
    for theta in (0.1, 0.7, 1.3):
        lo, mid, hi = residual_sandwich(unit(0.0), unit(theta))
        assert mid == pytest.approx(1 - math.cos(theta), abs=1e-15)
        assert lo == pytest.approx(0.5 * math.sin(theta) ** 2)
        assert lo <= mid <= hi
    assert residual_sandwich(unit(0.2), unit(0.2)) == (0.0, 0.0, 0.0)


def test_spectral_residual_single_angle():
    s, res, up = spectral_residual_bounds(unit(0.0), unit(0.5))
    assert res == pytest.approx(math.sqrt(2 - 2 * math.cos(0.5)), abs=1e-15)
    assert s <= res <= up


def test_sandwich_random_frames():
    root = SeededStream(5)
    for i in range(200):
        s = root.child(i)
        u = random_orthonormal(50, 4, s)
        uhat = random_orthonormal(50, 4, s)
        lo, mid, hi = residual_sandwich(u, uhat)
        assert lo <= mid + 1e-12 and mid <= hi + 1e-12
        st, res, up = spectral_residual_bounds(u, uhat)
        assert st <= res + 1e-12 and res <= up + 1e-12
