import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wlmp.embedding import Embedding, embed
from wlmp.geometry import generate_layout, pairwise_distances
from wlmp.matching import (
    AmbiguousAnchorError,
    align_with_anchor,
    best_anchor,
    cost_matrix,
    hungarian,
    match_with_anchor,
    match_with_orientation_search,
    orientations,
    permutation_cost,
)


def brute_force(e):
    """Lexicographically first permutation of minimum total cost."""
    n = len(e)
    best, arg = np.inf, None
    for perm in itertools.permutations(range(n)):
        c = sum(e[i][perm[i]] for i in range(n))
        if c < best:
            best, arg = c, perm
    return arg, best


def test_three_by_three():
    e = [[4, 1, 3], [2, 0, 5], [3, 2, 2]]
    assert brute_force(e) == ((1, 0, 2), 5)
    a = hungarian(e)
    assert a.pairs == (1, 0, 2)
    assert a.total_cost == 5
    assert list(a.pair_costs) == [1, 2, 2]


def test_zero_diagonal_gives_identity():
    e = np.ones((6, 6)) - np.eye(6)
    a = hungarian(e)
    assert a.pairs == tuple(range(6)) and a.total_cost == 0


@pytest.mark.parametrize("m", [7])
def test_random_7x7_against_exhaustive(m, rng):
    for _ in range(100):
        e = rng.uniform(0, 10, (m, m))
        _, best = brute_force(e)
        assert hungarian(e).total_cost == pytest.approx(best, rel=1e-12)


@pytest.mark.parametrize("m", range(2, 7))
def test_integer_ties_break_lexicographically(m, rng):
    for _ in range(60):
        e = rng.integers(0, 4, (m, m)).astype(float)
        perm, best = brute_force(e)
        a = hungarian(e)
        assert a.total_cost == best
        assert a.pairs == perm


def test_all_equal_costs_give_identity():
    assert hungarian(np.full((9, 9), 3.0)).pairs == tuple(range(9))


square_costs = st.integers(2, 30).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.floats(0, 1e3)))


@given(square_costs, st.randoms(use_true_random=False))
def test_never_worse_than_a_random_permutation(e, r):
    a = hungarian(e)
    assert sorted(a.pairs) == list(range(len(e)))
    assert a.total_cost == pytest.approx(permutation_cost(e, a.pairs))
    for _ in range(10):
        perm = r.sample(range(len(e)), len(e))
        assert a.total_cost <= permutation_cost(e, perm) + 1e-9


def test_rejects_bad_costs():
    with pytest.raises(ValueError):
        hungarian(np.ones((2, 3)))
    with pytest.raises(ValueError):
        hungarian([[0, -1], [1, 0]])
    with pytest.raises(ValueError):
        hungarian([[0, np.inf], [1, 0]])


def test_cost_matrix_sign_flip():
    n = np.array([[0.0], [1.0]])
    e = cost_matrix(n, n, (-1,))
    assert np.array_equal(e, [[0.0, 1.0], [1.0, 2.0]])


def test_cost_matrix_self_zero_diagonal(rng):
    x = rng.normal(size=(8, 3))
    assert np.all(np.diag(cost_matrix(x, x, (1, 1, 1))) == 0)


def test_joint_reflection_invariance(rng):
    n, p = rng.normal(size=(8, 2)), rng.normal(size=(8, 2))
    flip = np.array([1, -1])
    assert np.allclose(cost_matrix(n, p), cost_matrix(n * flip, p * flip))


def test_cost_matrix_shape_mismatch():
    with pytest.raises(ValueError):
        cost_matrix(np.zeros((3, 2)), np.zeros((3, 3)))


def test_anchor_identity_and_reflection():
    p = embed(pairwise_distances(generate_layout("factory")), (1, 2))
    a = best_anchor(p)
    assert align_with_anchor(p, p, a, a) == (1, 1)
    flipped = Embedding(p.coords * [1, -1], p.selected_indices, p.eigenvalues)
    assert align_with_anchor(flipped, p, a, a) == (1, -1)


def test_anchor_in_noise_floor():
    p = np.array([[1.0, 0.0], [-1.0, 1.0], [0.5, -1.0]])
    with pytest.raises(AmbiguousAnchorError) as info:
        align_with_anchor(p, p, 0, 0)
    assert info.value.column == 1
    assert "column 2" in str(info.value)


def test_orientation_count():
    assert orientations(2) == [(1, 1), (1, -1), (-1, 1), (-1, -1)]


def test_search_runs_four_matchings(monkeypatch):
    import wlmp.matching as mod

    calls = []
    real = mod.hungarian
    monkeypatch.setattr(mod, "hungarian", lambda e: calls.append(1) or real(e))
    p = embed(pairwise_distances(generate_layout("factory")), (1, 2))
    match_with_orientation_search(p, p)
    assert len(calls) == 4


@pytest.mark.parametrize("signs", orientations(2))
def test_search_recovers_any_sign_pattern(signs):
    p = embed(pairwise_distances(generate_layout("factory")), (1, 2))
    n = Embedding(p.coords * signs, p.selected_indices, p.eigenvalues)
    a = match_with_orientation_search(n, p)
    assert a.pairs == tuple(range(58))
    assert a.total_cost == pytest.approx(0.0, abs=1e-12)
    assert a.orientation == signs
    assert not a.ambiguous


def test_symmetric_lattice_is_flagged_ambiguous():
    grid = np.array([(x, y) for y in range(3) for x in range(3)], dtype=float)
    p = embed(pairwise_distances(grid), (1, 2))
    costs = {s: hungarian(cost_matrix(p, p, s)).total_cost for s in orientations(2)}
    assert sum(c < 1e-9 for c in costs.values()) >= 2
    a = match_with_orientation_search(p, p)
    assert a.ambiguous and len(a.tied_orientations) >= 2
    assert a.orientation == (1, 1)
    assert match_with_orientation_search(p, p) == a or match_with_orientation_search(p, p).pairs == a.pairs


def test_search_refuses_many_axes():
    x = np.zeros((12, 9))
    with pytest.raises(ValueError, match="anchor"):
        match_with_orientation_search(x, x)


def test_search_absorbs_global_reflection(rng):
    ps = generate_layout("random2d", seed=3)
    d = pairwise_distances(ps)
    p = embed(d, (1, 2))
    noisy = d * np.exp(rng.normal(0, 0.02, d.shape))
    noisy = np.triu(noisy, 1) + np.triu(noisy, 1).T
    n = embed(noisy, (1, 2))
    base = match_with_orientation_search(n, p)
    for flip in orientations(2):
        mirrored = Embedding(p.coords * flip, p.selected_indices, p.eigenvalues)
        r = match_with_orientation_search(n, mirrored)
        assert r.total_cost == pytest.approx(base.total_cost, rel=1e-12)
        assert r.pairs == base.pairs


def test_match_with_anchor_reports_orientation():
    p = embed(pairwise_distances(generate_layout("factory")), (1, 2))
    n = Embedding(p.coords * [-1, 1], p.selected_indices, p.eigenvalues)
    a = match_with_anchor(n, p, best_anchor(p), best_anchor(p))
    assert a.orientation == (-1, 1)
    assert a.pairs == tuple(range(58))
