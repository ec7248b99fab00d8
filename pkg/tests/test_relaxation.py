import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmdmatch.core import Minutia, Template, TemplateError, rigid_transform
from dmdmatch.relaxation import (
    PRESETS,
    MatchParams,
    adaptive_top_n,
    assign,
    compatibility_matrix,
    match_templates,
    max_compatibility,
    pair_compatibility,
    preset,
    relax,
)

from conftest import random_binary_template, random_float_template

VF = PRESETS["verifinger"]


def brute_force_total(s):
    r, p = s.shape
    if r <= p:
        return max(math.fsum(s[i, j] for i, j in zip(range(r), perm))
                   for perm in itertools.permutations(range(p), r))
    return brute_force_total(s.T)


def assignment_total(s, pairs):
    return math.fsum(s[i, j] for i, j in sorted(pairs))


def test_presets():
    assert (VF.n_min, VF.n_max, VF.tau, VF.mu) == (4, 12, 0.4, 20)
    fdd = preset("fdd")
    assert (fdd.n_min, fdd.n_max, fdd.tau, fdd.mu) == (6, 14, 0.3, 20)
    with pytest.raises(ValueError):
        preset("nope")


def test_params_validation():
    with pytest.raises(ValueError):
        MatchParams(n_min=10, n_max=4)
    with pytest.raises(ValueError):
        MatchParams(relax_weight=1.5)
    with pytest.raises(ValueError):
        MatchParams(relax_iterations=-1)


def test_adaptive_top_n():
    assert adaptive_top_n(20, 20, VF) == 8
    assert adaptive_top_n(10**6, 10**7, VF) == 12
    expect = 4 + math.floor(8 / (1 + math.exp(7.6)) + 0.5)
    assert expect == 4
    assert adaptive_top_n(1, 50, VF) == 4


def test_adaptive_top_n_monotone():
    values = [adaptive_top_n(n, n, VF) for n in range(1, 200)]
    assert values == sorted(values)
    assert values[0] == 4 and values[-1] == 12


def test_compatibility_rigid_is_maximal():
    rot, tx, ty = 0.7, 30.0, -12.0

    def move(m):
        c, s = math.cos(rot), math.sin(rot)
        return Minutia(c * m.x - s * m.y + tx, s * m.x + c * m.y + ty, m.theta + rot)

    a, b = Minutia(10, 20, 0.3), Minutia(60, 95, 2.0)
    z0 = 1 / (1 + math.exp(-6)) * (1 / (1 + math.exp(-9 * math.pi / 6))) ** 2
    assert pair_compatibility(a, b, move(a), move(b), VF) == pytest.approx(z0, abs=1e-12)
    assert max_compatibility(VF) == pytest.approx(z0, abs=1e-15)


def test_compatibility_midpoints():
    a, b = Minutia(0, 0, 0), Minutia(100, 0, 0)
    c = Minutia(0, 0, 0)
    d = Minutia(115 * math.cos(math.pi / 6), 115 * math.sin(math.pi / 6), -math.pi / 6)
    assert pair_compatibility(a, b, c, d, VF) == pytest.approx(0.125, abs=1e-12)


def test_compatibility_distance_tail():
    a, b = Minutia(0, 0, 0), Minutia(100, 0, 0)
    far = Minutia(10000, 0, 0)
    assert pair_compatibility(a, b, a, far, VF) < 1e-100


def test_assign_examples():
    s = np.full((3, 3), 0.1)
    np.fill_diagonal(s, 0.9)
    assert assign(s) == [(0, 0), (1, 1), (2, 2)]
    assert assign(np.array([[0.1, 0.9, 0.2], [0.8, 0.2, 0.1]])) == [(0, 1), (1, 0)]


def test_assign_matches_brute_force(rng):
    for _ in range(100):
        r, p = rng.integers(1, 7, size=2)
        s = rng.uniform(-1, 1, size=(r, p))
        pairs = assign(s)
        assert len(pairs) == min(r, p)
        assert len({i for i, _ in pairs}) == len({j for _, j in pairs}) == len(pairs)
        assert assignment_total(s, pairs) == brute_force_total(s)


def relax_oracle(s1, pairs, mq, mg, params):
    rho_max = max_compatibility(params)
    lam = [s1[i][j] for i, j in pairs]
    n = len(pairs)
    for _ in range(params.relax_iterations):
        new = []
        for k in range(n):
            acc = 0.0
            for l in range(n):
                if l == k:
                    continue
                rho = pair_compatibility(Minutia(*mq[pairs[k][0]]), Minutia(*mq[pairs[l][0]]),
                                         Minutia(*mg[pairs[k][1]]), Minutia(*mg[pairs[l][1]]),
                                         params)
                acc += rho / rho_max * lam[l]
            w = params.relax_weight
            new.append(w * lam[k] + (1 - w) * acc / (n - 1))
        lam = new
    return lam


def test_relax_zero_iterations_and_single_pair(rng):
    s1 = rng.uniform(0, 1, (4, 4))
    mq = rng.uniform(0, 300, (4, 3))
    pairs = [(0, 2), (1, 0), (3, 3)]
    out = relax(s1, pairs, mq, mq, MatchParams(relax_iterations=0))
    np.testing.assert_array_equal(out, [s1[0, 2], s1[1, 0], s1[3, 3]])
    out = relax(s1, [(2, 1)], mq, mq, VF)
    np.testing.assert_array_equal(out, [s1[2, 1]])


def test_relax_three_rigid_pairs():
    mq = np.array([[10.0, 10, 0.1], [80, 30, 1.0], [40, 90, 2.5]])
    rot = 0.4
    c, s = math.cos(rot), math.sin(rot)
    mg = np.column_stack([c * mq[:, 0] - s * mq[:, 1] + 5, s * mq[:, 0] + c * mq[:, 1] - 7,
                          mq[:, 2] + rot])
    s1 = np.array([[0.9, 0, 0], [0, 0.6, 0], [0, 0, 0.3]])
    pairs = [(0, 0), (1, 1), (2, 2)]
    params = MatchParams(relax_iterations=1, relax_weight=0.5)
    got = relax(s1, pairs, mq, mg, params)
    # normalised compatibility is 1 under an exact rigid motion
    expect = [0.5 * 0.9 + 0.5 * (0.6 + 0.3) / 2,
              0.5 * 0.6 + 0.5 * (0.9 + 0.3) / 2,
              0.5 * 0.3 + 0.5 * (0.9 + 0.6) / 2]
    np.testing.assert_allclose(got, expect, atol=1e-9)
    np.testing.assert_allclose(got, relax_oracle(s1, pairs, mq, mg, params), atol=1e-12)


def test_relax_matches_oracle_random(rng):
    for _ in range(10):
        n = int(rng.integers(2, 8))
        s1 = rng.uniform(0, 1, (n, n))
        mq = np.column_stack([rng.uniform(0, 200, (n, 2)), rng.uniform(0, 6, n)])
        mg = mq + rng.normal(0, [5, 5, 0.2], size=(n, 3))
        pairs = assign(s1)
        np.testing.assert_allclose(relax(s1, pairs, mq, mg, VF),
                                   relax_oracle(s1, pairs, mq, mg, VF), atol=1e-12)


def test_compatibility_matrix_zero_diagonal(rng):
    mq = rng.uniform(0, 100, (5, 3))
    rho = compatibility_matrix(mq, mq, [(k, k) for k in range(5)], VF)
    assert np.all(np.diag(rho) == 0)
    assert np.all((rho >= 0) & (rho <= 1))


def test_match_self(rng):
    t = random_float_template(rng, 25, soft_masks=False)
    res = match_templates(t, t, VF)
    assert res.score == pytest.approx(1.0, abs=1e-9)
    assert res.n_m == adaptive_top_n(25, 25, VF)
    assert len(res.pairs) == res.n_m
    assert all(i == j for i, j, _, _ in res.pairs)


def test_match_single_records(rng):
    t = random_float_template(rng, 1, soft_masks=False)
    res = match_templates(t, t, VF)
    assert res.score == pytest.approx(1.0, abs=1e-9)
    assert res.n_m == 4 and len(res.pairs) == 1


def test_match_result_ordering(rng):
    a = random_float_template(rng, 15)
    b = random_float_template(rng, 12)
    res = match_templates(a, b, VF)
    s2 = [p[3] for p in res.pairs]
    assert s2 == sorted(s2, reverse=True)
    assert len(res.pairs) == min(res.n_m, len(res.assignment))
    assert res.score == pytest.approx(np.mean(s2), abs=1e-12)
    assert -1 <= res.score <= 1


def test_match_errors(rng):
    a = random_float_template(rng, 3)
    with pytest.raises(TemplateError):
        match_templates(a, random_binary_template(rng, 3), VF)
    empty = Template(np.zeros((0, 3)), np.zeros((0, 12, 8, 8)), np.zeros((0, 8, 8)))
    with pytest.raises(TemplateError):
        match_templates(empty, a, VF)


def test_match_deterministic(rng):
    a = random_binary_template(rng, 20)
    b = random_binary_template(rng, 18)
    r1 = match_templates(a, b, VF)
    r2 = match_templates(a, b, VF)
    assert r1 == r2
    assert 0 <= r1.score <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-math.pi, math.pi), st.floats(-500, 500),
       st.floats(-500, 500))
def test_rigid_invariance(seed, rot, tx, ty):
    rng = np.random.default_rng(seed)
    a = random_float_template(rng, 12)
    b = random_float_template(rng, 10)
    base = match_templates(a, b, VF)
    moved = match_templates(a, rigid_transform(b, rot, tx, ty), VF)
    assert abs(moved.score - base.score) < 1e-6
    pairs = base.assignment
    np.testing.assert_allclose(compatibility_matrix(a.minutiae, b.minutiae, pairs, VF),
                               compatibility_matrix(a.minutiae, rigid_transform(b, rot, tx, ty).minutiae,
                                                    pairs, VF), atol=1e-9)


def test_params_file(tmp_path):
    p = tmp_path / "p.json"
    p.write_text('{"relax_iterations": 2, "tau": 0.3}')
    params = MatchParams.from_file(p, base=VF)
    assert params.relax_iterations == 2 and params.tau == 0.3 and params.n_min == 4
    p.write_text('{"bogus": 1}')
    with pytest.raises(ValueError):
        MatchParams.from_file(p)
