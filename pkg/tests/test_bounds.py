import json
import math

import numpy as np
import pytest

from subspace_perturb import bounds as bnd
from subspace_perturb.decomposition import make_instance
from subspace_perturb.linalg import ArgumentError
from subspace_perturb.models import (
    gen_gaussian_noise,
    gen_low_rank,
    gen_spiked_covariance,
    gen_symmetric_noise,
)
from subspace_perturb.stream import SeededStream
from subspace_perturb.subspace import random_orthonormal


def low_rank_instance(stream, scale):
    x, _, _ = gen_low_rank(60, 40, 5, np.linspace(20.0, 10.0, 5), stream)
    g = gen_gaussian_noise(60, 40, stream)
    return make_instance(x, g * (scale / np.linalg.norm(g, 2)), 5)


def sym_rank2(stream, p=50, lam=(10.0, -8.0)):
    u = random_orthonormal(p, 2, stream)
    x = (u * np.array(lam)) @ u.T
    return 0.5 * (x + x.T)


def test_baseline_zero_noise(stream):
    inst = low_rank_instance(stream, 0.0)
    rep = bnd.bound_baseline(inst)
    assert rep.preconditions_met
    assert rep.lhs <= 1e-12 and rep.rhs <= 1e-12
    assert rep.holds()


def test_baseline_oracle_terms(stream):
    inst = low_rank_instance(stream, 2.0)
    rep = bnd.bound_baseline(inst)
    # independent evaluation with explicit projectors
    u, s, vt = np.linalg.svd(inst.x)
    uh, _, vht = np.linalg.svd(inst.xhat)
    r = 5
    U, V = u[:, :r], vt[:r].T
    Uh, Vh = uh[:, :r], vht[:r].T
    pu = np.eye(60) - U @ U.T
    pv = np.eye(40) - V @ V.T
    tti = lambda m: np.max(np.linalg.norm(m, axis=1))
    sin_v = np.linalg.norm(pv @ Vh, 2)
    sin_u = np.linalg.norm(pu @ Uh, 2)
    expected = (2 * tti(pu @ inst.e @ V @ V.T) / s[r - 1]
                + 2 * tti(pu @ inst.e @ pv) * sin_v / s[r - 1]
                + 2 * tti(pu @ inst.x @ pv) * sin_v / s[r - 1]
                + sin_u**2 * tti(U))
    assert rep.rhs == pytest.approx(expected, rel=1e-9)
    assert rep.holds()


def test_baseline_precondition_flag(stream):
    rep = bnd.bound_baseline(low_rank_instance(stream, 10.0))
    assert not rep.preconditions_met
    assert rep.holds() is None
    assert rep.failed_preconditions


def test_uniform_rect_and_low_rank_zero(stream):
    inst = low_rank_instance(stream, 0.0)
    for rep in (bnd.bound_uniform_rect(inst, 0.5, 0.5), bnd.bound_low_rank(inst, 0.5, 0.5)):
        assert rep.preconditions_met
        assert rep.lhs <= 1e-12 and rep.rhs <= 1e-12


def test_uniform_rect_ids_and_delta(stream):
    inst = low_rank_instance(stream, 0.1)
    r1 = bnd.bound_uniform_rect(inst, 0.5, 0.4)
    assert r1.bound_id == "uniform_rect_rank_r"
    assert r1.terms["delta"] == pytest.approx(0.2)
    r2 = bnd.bound_uniform_rect(inst, 0.25, 0.25, 0.25, 0.25)
    assert r2.bound_id == "uniform_rect"
    assert r2.terms["delta"] == pytest.approx(0.25)


def test_uniform_rect_random_runs():
    root = SeededStream(8)
    checked = 0
    for i in range(40):
        s = root.child(i)
        inst = low_rank_instance(s, 0.3)
        consts = bnd.feasible_constants(inst)
        if consts is None:
            continue
        rep = bnd.bound_uniform_rect(inst, consts[0], consts[1])
        if rep.preconditions_met:
            checked += 1
            assert rep.slack >= -bnd.SLACK_TOL
    assert checked > 0


def test_low_rank_heavy_noise_flagged(stream):
    rep = bnd.bound_low_rank(low_rank_instance(stream, 50.0), 0.5, 0.5)
    assert not rep.preconditions_met


def test_low_rank_rhs_formula(stream):
    inst = low_rank_instance(stream, 0.2)
    rep = bnd.bound_low_rank(inst, 0.9, 0.9)
    u, s, vt = np.linalg.svd(inst.x)
    e = inst.e
    tti = lambda m: np.max(np.linalg.norm(m, axis=1))
    eta = max(np.abs(e).sum(axis=0).max(), np.abs(e).sum(axis=1).max())
    expected = 12 * eta / s[4] * max(tti(u[:, :5]), tti(vt[:5].T))
    assert rep.rhs == pytest.approx(expected, rel=1e-10)


def test_entrywise_examples(stream):
    x = sym_rank2(stream)
    inst = make_instance(x, np.zeros_like(x), 2)
    rep = bnd.bound_entrywise_symmetric(inst)
    assert rep.preconditions_met and rep.lhs <= 1e-12 and rep.rhs == 0
    g = gen_symmetric_noise(50, stream)
    e = g * (1.5 / np.abs(g).sum(axis=1).max())
    rep = bnd.bound_entrywise_symmetric(make_instance(x, e, 2))
    assert rep.preconditions_met and rep.slack >= 0
    e = g * (4.0 / np.abs(g).sum(axis=1).max())
    assert not bnd.bound_entrywise_symmetric(make_instance(x, e, 2)).preconditions_met


def test_davis_kahan(stream):
    q = random_orthonormal(20, 20, stream)
    lam = np.concatenate([[20.0, 18.0], np.linspace(13.0, -5.0, 18)])
    x = (q * lam) @ q.T
    x = 0.5 * (x + x.T)
    g = gen_symmetric_noise(20, stream)
    e = g / np.linalg.norm(g, 2)
    assert bnd.davis_kahan(x, x + e, 1, 2) == pytest.approx(0.4)
    rep = bnd.davis_kahan_report(x, x + e, 1, 2)
    assert rep.lhs <= 0.4 and rep.terms["gap"] == pytest.approx(5.0)
    assert bnd.davis_kahan(x, x, 1, 2) == 0
    with pytest.raises(ArgumentError):
        bnd.davis_kahan(np.eye(4), np.eye(4), 1, 2)


def test_weyl_consistency():
    root = SeededStream(4)
    for i in range(50):
        inst = low_rank_instance(root.child(i), 3.0)
        s = np.linalg.svd(inst.x, compute_uv=False)
        sh = np.linalg.svd(inst.xhat, compute_uv=False)
        assert sh[4] >= s[4] - np.linalg.norm(inst.e, 2) - 1e-10


def test_baseline_terms_monotone_in_noise(stream):
    inst = low_rank_instance(stream, 2.0)
    small = make_instance(inst.x, 0.5 * inst.e, 5)
    a, b = bnd.bound_baseline(inst).terms, bnd.bound_baseline(small).terms
    assert b["leading"] <= a["leading"] + 1e-15


def test_report_json_round_trip(stream):
    rep = bnd.bound_baseline(low_rank_instance(stream, 1.0))
    doc = json.loads(rep.to_json())
    assert set(doc) == {"bound_id", "lhs", "rhs", "slack", "preconditions", "terms"}
    back = bnd.BoundReport.from_dict(doc)
    assert back.lhs == rep.lhs and back.rhs == rep.rhs and back.preconditions == rep.preconditions


def test_covariance_rhs_scaling(stream):
    model = gen_spiked_covariance(200, 3, [60.0, 50.0, 40.0], 1.0, stream)
    a = bnd.covariance_rhs(model, 1000, form="spiked")
    b = bnd.covariance_rhs(model, 2000, form="spiked")
    assert b == pytest.approx(a / math.sqrt(2))
    expected = math.sqrt(max(model.effective_rank, math.log(200)) / 1000) * math.sqrt(27 / 200)
    assert a == pytest.approx(expected)
    assert bnd.covariance_rhs(model, 10**12) < 1e-4
    assert bnd.covariance_rhs(model, 1000, big_c=3.0) == pytest.approx(3 * bnd.covariance_rhs(model, 1000))
