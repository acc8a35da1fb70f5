import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qa_archetypes import cluster as C


def corner_points(rng, sizes=(400, 120, 60, 20), jitter=0.02):
    """The four Boolean corners with a small ratio coordinate jitter."""
    blocks = []
    for (mp, dm), n in zip([(0, 0), (0, 1), (1, 0), (1, 1)], sizes):
        ratio = 0.05 + 0.1 * (mp + dm) + jitter * rng.random(n)
        blocks.append(np.column_stack([np.full(n, mp), np.full(n, dm), ratio]))
    return np.vstack(blocks).astype(np.float64)


# -- k-means++ ---------------------------------------------------------------

def test_kmeanspp_identical_points():
    x = np.ones((5, 3))
    assert np.array_equal(C.kmeanspp_init(x, 1, seed=0), np.ones((1, 3)))


def test_kmeanspp_rejects_too_many_centres():
    x = np.array([[0.0], [0.0], [1.0]])
    with pytest.raises(ValueError, match="k exceeds distinct points"):
        C.kmeanspp_init(x, 3, seed=0)


def test_kmeanspp_deterministic(rng):
    x = rng.random((50, 3))
    assert np.array_equal(C.kmeanspp_init(x, 4, seed=7), C.kmeanspp_init(x, 4, seed=7))


def test_kmeanspp_two_groups_monte_carlo(rng):
    a = rng.normal(0.0, 0.01, size=(30, 2))
    b = rng.normal(10.0, 0.01, size=(20, 2))
    x = np.vstack([a, b])
    split = 0
    for seed in range(1000):
        c = C.kmeanspp_init(x, 2, seed=seed)
        split += (c[:, 0] < 5).sum() == 1
    assert split / 1000 >= 0.99


def test_kmeanspp_second_pick_matches_d2_probabilities():
    # 1-D points; after the first centre the second is chosen with p ~ d^2
    x = np.array([[0.0], [1.0], [3.0]])
    counts = {}
    n = 20000
    for seed in range(n):
        c = C.kmeanspp_init(x, 2, seed=seed)
        counts[tuple(c[:, 0])] = counts.get(tuple(c[:, 0]), 0) + 1
    exact = {}
    for i in range(3):
        d2 = (x[:, 0] - x[i, 0]) ** 2
        for j in range(3):
            if d2[j] > 0:
                exact[(x[i, 0], x[j, 0])] = d2[j] / d2.sum() / 3
    for key, p in exact.items():
        se = np.sqrt(p * (1 - p) / n)
        assert abs(counts.get(key, 0) / n - p) < 5 * se


def test_kmeanspp_weights_act_as_copies():
    x = np.array([[0.0], [1.0]])
    first = [C.kmeanspp_init(x, 1, seed=s, weights=[9, 1])[0, 0] for s in range(4000)]
    assert abs(np.mean(np.array(first) == 0.0) - 0.9) < 0.03


# -- Lloyd -------------------------------------------------------------------

def _brute_force_2partition(x):
    best = None
    for mask in itertools.product([0, 1], repeat=len(x)):
        if len(set(mask)) < 2:
            continue
        m = np.array(mask)
        cost = sum(((x[m == g] - x[m == g].mean()) ** 2).sum() for g in (0, 1))
        if best is None or cost < best[0]:
            best = (cost, m)
    return best


def test_lloyd_three_points():
    x = np.array([[0.0], [0.1], [2.0]])
    model = C.lloyd(x, [[0.0], [2.0]])
    assert model.labels.tolist() == [0, 0, 1]
    assert np.allclose(model.centroids[:, 0], [0.05, 2.0], atol=1e-15)
    cost, m = _brute_force_2partition(x)
    assert np.isclose(model.cost * len(x), cost)
    assert len(set(zip(m.tolist(), model.labels.tolist()))) == 2


def test_lloyd_fixed_point():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    model = C.lloyd(x, [[0.0, 0.0], [1.0, 1.0]])
    assert model.n_iter == 1
    assert model.cost == 0.0


def test_lloyd_cost_monotone_and_means(rng):
    for trial in range(30):
        x = rng.random((int(rng.integers(10, 200)), 3))
        k = int(rng.integers(2, 8))
        init = C.kmeanspp_init(x, k, seed=trial)
        model = C.lloyd(x, init)
        h = np.array(model.cost_history)
        assert (np.diff(h) <= 1e-12).all()
        for j in range(k):
            members = x[model.labels == j]
            assert len(members) > 0
            assert np.allclose(model.centroids[j], members.mean(axis=0), rtol=0, atol=1e-12)
        labels, _ = C.kernels.assign_nearest(x, model.centroids)
        assert np.array_equal(labels, model.labels)


def test_lloyd_repairs_empty_cluster():
    x = np.array([[0.0], [0.1], [0.2], [5.0]])
    # the centre at 100 attracts nothing on the first assignment
    model = C.lloyd(x, [[0.0], [100.0]])
    assert sorted(np.bincount(model.labels, minlength=2).tolist()) == [1, 3]
    assert model.cost_history[-1] <= model.cost_history[0]


def test_lloyd_weighted_equals_expanded(rng):
    x = rng.random((15, 2))
    w = rng.integers(1, 6, size=15)
    init = x[:3].copy()
    weighted = C.lloyd(x, init, weights=w)
    full = C.lloyd(np.repeat(x, w, axis=0), init)
    assert np.allclose(weighted.centroids, full.centroids, atol=1e-12)
    assert np.isclose(weighted.cost, full.cost)


# -- silhouette --------------------------------------------------------------

def test_silhouette_hand_example():
    s = C.mean_silhouette([[0.0], [0.1], [2.0]], [0, 0, 1])
    expected = ((2.0 - 0.1) / 2.0 + (1.9 - 0.1) / 1.9 + 0) / 3
    assert abs(s - expected) < 1e-12
    assert abs(s - 0.6324) < 1e-4


def test_silhouette_singletons_and_limits():
    assert C.mean_silhouette([[0.0], [1.0]], [0, 1]) == 0.0
    x = np.array([[0.0]] * 5 + [[1e6]] * 5)
    assert C.mean_silhouette(x, [0] * 5 + [1] * 5) == 1.0
    with pytest.raises(ValueError, match="k=1"):
        C.mean_silhouette([[0.0], [1.0]], [3, 3])


def test_silhouette_oracle_random_labelings(rng):
    for _ in range(100):
        n = int(rng.integers(2, 501))
        k = int(rng.integers(2, 8))
        # coarse grid forces exact duplicates
        x = np.round(rng.random((n, 3)) * 4) / 4
        labels = rng.integers(0, k, size=n)
        if len(set(labels.tolist())) < 2:
            labels[0], labels[-1] = 0, 1
        assert abs(C.mean_silhouette(x, labels) - oracles.silhouette(x.tolist(), labels.tolist())) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)), min_size=2, max_size=40))
def test_silhouette_property_vs_oracle(rows):
    x = [[float(a), float(b)] for a, b, _ in rows]
    labels = [c for *_, c in rows]
    if len(set(labels)) < 2:
        return
    s = C.mean_silhouette(x, labels)
    assert -1 - 1e-12 <= s <= 1 + 1e-12
    assert abs(s - oracles.silhouette(x, labels)) < 1e-9


def test_silhouette_label_values_irrelevant(rng):
    x = rng.random((40, 3))
    labels = rng.integers(0, 3, size=40)
    assert np.isclose(C.mean_silhouette(x, labels), C.mean_silhouette(x, labels * 7 + 11))


# -- select_k ----------------------------------------------------------------

def test_select_k_corners(rng):
    x = corner_points(rng)
    sel = C.select_k(x, seed=1)
    assert sel.k_star == 4
    assert sel.per_k[4] >= 0.9
    assert set(sel.per_k) == set(range(2, 11))
    assert all(sel.per_k[4] >= v for v in sel.per_k.values())


def test_select_k_two_blobs(rng):
    x = np.vstack([rng.normal(0, 0.05, (100, 3)), rng.normal(5, 0.05, (80, 3))])
    sel = C.select_k(x, seed=3)
    assert sel.k_star == 2
    brute = {k: oracles.silhouette(x.tolist(), C.select_k(x, k, k, seed=3).model.labels.tolist())
             for k in (2, 3, 4)}
    assert max(brute, key=brute.get) == 2


def test_select_k_tie_goes_to_smaller_k():
    assert C._argmax_k({2: 0.5, 3: 0.5 + 1e-13, 4: 0.4}) == 2
    assert C._argmax_k({2: 0.5, 3: 0.5 + 1e-9}) == 3


def test_select_k_deterministic(rng):
    x = corner_points(rng)
    a, b = C.select_k(x, seed=9), C.select_k(x, seed=9)
    assert a.per_k == b.per_k
    assert np.array_equal(a.model.labels, b.model.labels)


def test_select_k_clamps_k_max():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] * 4)
    with pytest.warns(RuntimeWarning, match="clamped"):
        sel = C.select_k(x, 2, 10, seed=0)
    assert max(sel.per_k) == 3
    with pytest.raises(ValueError):
        C.select_k(np.zeros((5, 3)))


def test_select_k_permutation_robust(rng):
    x = corner_points(rng)
    ref = C.select_k(x, seed=0).k_star
    for seed in range(50):
        perm = np.random.default_rng(seed).permutation(len(x))
        assert C.select_k(x[perm], seed=seed).k_star == ref == 4


def test_select_k_model_labels_cover_all_points(rng):
    x = corner_points(rng, sizes=(50, 20, 10, 5))
    sel = C.select_k(x, seed=2)
    assert len(sel.model.labels) == len(x)
    assert np.isclose(C.mean_silhouette(x, sel.model.labels), sel.per_k[sel.k_star])


# -- random baseline -------------------------------------------------------

def test_random_baseline_uniform_cloud(rng):
    x = rng.random((2000, 3))
    base = C.random_baseline(x, seed=5)
    assert all(-0.1 <= v <= 0.05 for v in base.per_k.values())


def test_random_baseline_far_below_clustering(rng):
    x = corner_points(rng)
    sel = C.select_k(x, seed=4)
    base = C.random_baseline(x, seed=4)
    assert sel.per_k[sel.k_star] - max(base.per_k.values()) >= 0.8


def test_random_baseline_deterministic(rng):
    x = rng.random((100, 3))
    a, b = C.random_baseline(x, seed=1), C.random_baseline(x, seed=1)
    assert a.per_k == b.per_k
    assert np.array_equal(a.model.labels, b.model.labels)


# -- PCA ---------------------------------------------------------------------

def test_pca_rank_one():
    t = np.linspace(0, 1, 20)
    x = np.column_stack([t, t, t])
    coords, frac = C.pca_project(x, 2)
    assert np.allclose(frac, [1.0, 0.0], atol=1e-12)
    assert np.allclose(coords[:, 1], 0.0, atol=1e-12)


def test_pca_rigid_for_planar_data(rng):
    x = np.column_stack([rng.random((60, 2)), np.full(60, 0.3)])
    coords, frac = C.pca_project(x, 2)
    d_in = np.linalg.norm(x[:, None] - x[None], axis=2)
    d_out = np.linalg.norm(coords[:, None] - coords[None], axis=2)
    assert np.allclose(d_in, d_out, atol=1e-9)
    assert np.isclose(frac.sum(), 1.0)


def test_pca_orthonormal_and_ordered(rng):
    x = rng.random((200, 3)) * [3.0, 1.0, 0.2]
    axes, evals, _, total = C.principal_axes(x, 3)
    assert np.allclose(axes @ axes.T, np.eye(3), atol=1e-9)
    assert (np.diff(evals) <= 0).all()
    for row in axes:
        assert row[np.argmax(np.abs(row))] > 0
    _, frac = C.pca_project(x, 3)
    assert frac.sum() <= 1 + 1e-12


def test_pca_duplicates_and_degenerate():
    x = np.array([[0.0, 1.0, 0.5], [0.0, 1.0, 0.5], [1.0, 0.0, 0.2]])
    coords, _ = C.pca_project(x)
    assert np.array_equal(coords[0], coords[1])
    with pytest.warns(RuntimeWarning):
        coords, frac = C.pca_project(np.ones((4, 3)))
    assert not coords.any() and not frac.any()
