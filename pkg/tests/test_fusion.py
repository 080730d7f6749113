import math

import numpy as np
import pytest

from fgfusion import (
    AffinityMatrix,
    SparseGraph,
    build_samplers,
    fuse_graphs,
    load_affinity,
    normalize_affinity,
    save_affinity,
)
from fgfusion.errors import EmptyRowError, InvalidConfigError, NodeCountMismatchError

# chi-square critical values at alpha = 0.01 by degrees of freedom
CHI2_CRIT = {1: 6.635, 2: 9.210, 3: 11.345, 4: 13.277, 5: 15.086}


def graph_from_rows(n, rows, name=""):
    ids = [np.array([j for j, _ in rows.get(q, [])], dtype=np.int64) for q in range(n)]
    ws = [np.array([w for _, w in rows.get(q, [])], dtype=np.float64) for q in range(n)]
    return SparseGraph(n=n, neighbor_ids=ids, weights=ws, modality_name=name)


def row_dict(graph, q):
    return dict(zip(graph.neighbor_ids[q].tolist(), graph.weights[q].tolist()))


# ---------------------------------------------------------------------------
# Graph fusion
# ---------------------------------------------------------------------------


def test_disjoint_edges_union():
    a = graph_from_rows(3, {0: [(1, 2.0)]})
    b = graph_from_rows(3, {0: [(2, 3.0)]})
    fused = fuse_graphs([a, b])
    assert row_dict(fused, 0) == {1: 2.0, 2: 3.0}


def test_overlapping_edge_combined_by_rule():
    a = graph_from_rows(2, {0: [(1, 2.0)]})
    b = graph_from_rows(2, {0: [(1, 3.0)]})
    assert row_dict(fuse_graphs([a, b], "sum"), 0) == {1: 5.0}
    assert row_dict(fuse_graphs([a, b], "max"), 0) == {1: 3.0}


def test_empty_graph_is_identity_element():
    rng = np.random.default_rng(1)
    g = graph_from_rows(4, {q: [(int(j), float(rng.random())) for j in rng.choice(
        [x for x in range(4) if x != q], size=2, replace=False)] for q in range(4)})
    empty = graph_from_rows(4, {})
    for rule in ("sum", "max"):
        fused = fuse_graphs([g, empty], rule)
        for q in range(4):
            assert row_dict(fused, q) == row_dict(g, q)


def test_node_count_mismatch():
    with pytest.raises(NodeCountMismatchError):
        fuse_graphs([graph_from_rows(3, {}), graph_from_rows(4, {})])


def test_fewer_than_two_graphs():
    with pytest.raises(InvalidConfigError):
        fuse_graphs([graph_from_rows(3, {})])


def test_fusion_order_invariance():
    rng = np.random.default_rng(2)
    graphs = []
    for _ in range(3):
        rows = {}
        for q in range(6):
            others = [x for x in range(6) if x != q]
            picks = rng.choice(others, size=3, replace=False)
            rows[q] = [(int(j), float(rng.integers(0, 5))) for j in picks]
        graphs.append(graph_from_rows(6, rows))
    for rule in ("sum", "max"):
        forward = fuse_graphs(graphs, rule)
        backward = fuse_graphs(graphs[::-1], rule)
        nested = fuse_graphs([fuse_graphs(graphs[:2], rule), graphs[2]], rule)
        for q in range(6):
            assert row_dict(forward, q) == row_dict(backward, q)
            assert row_dict(forward, q) == row_dict(nested, q)


# ---------------------------------------------------------------------------
# Affinity normalization
# ---------------------------------------------------------------------------


def test_single_neighbor_row_is_certain():
    g = graph_from_rows(2, {0: [(1, 7.0)], 1: [(0, 0.0)]})
    for mode in ("dissimilarity", "literal"):
        aff = normalize_affinity(g, mode)
        assert aff.probs[0][0] == 1.0
        assert aff.probs[1][0] == 1.0


def test_equal_weights_give_uniform_row():
    g = graph_from_rows(4, {0: [(1, 5.0), (2, 5.0), (3, 5.0)],
                            1: [(0, 0.0)], 2: [(0, 0.0)], 3: [(0, 0.0)]})
    for mode in ("dissimilarity", "literal"):
        aff = normalize_affinity(g, mode)
        np.testing.assert_allclose(aff.probs[0], 1 / 3)


def test_hand_evaluated_row():
    """Row weights {4, 2, 0}: recentered inputs {0, 2, 4}, variance 8/3."""
    g = graph_from_rows(4, {0: [(1, 4.0), (2, 2.0), (3, 0.0)],
                            1: [(0, 0.0)], 2: [(0, 0.0)], 3: [(0, 0.0)]})
    aff = normalize_affinity(g, "dissimilarity")
    var = 8.0 / 3.0
    e = [math.exp(0.0), math.exp(-2.0 / (2 * var)), math.exp(-4.0 / (2 * var))]
    expected = np.array(e) / sum(e)
    np.testing.assert_allclose(aff.probs[0], expected, rtol=1e-12)
    assert aff.sigma_sq[0] == pytest.approx(var)


def test_rows_are_stochastic_over_random_graphs():
    rng = np.random.default_rng(3)
    rows = {}
    for q in range(50):
        others = [x for x in range(50) if x != q]
        size = int(rng.integers(1, 8))
        picks = rng.choice(others, size=size, replace=False)
        rows[q] = [(int(j), float(rng.integers(0, 4))) for j in picks]
    g = graph_from_rows(50, rows)
    for mode in ("dissimilarity", "literal"):
        aff = normalize_affinity(g, mode)
        aff.validate()
        for q in range(50):
            assert abs(aff.probs[q].sum() - 1.0) <= 1e-9
            np.testing.assert_array_equal(aff.neighbor_ids[q], g.neighbor_ids[q])


def test_dissimilarity_mode_preserves_weight_order():
    g = graph_from_rows(4, {0: [(1, 3.0), (2, 1.0), (3, 2.0)],
                            1: [(0, 0.0)], 2: [(0, 0.0)], 3: [(0, 0.0)]})
    aff = normalize_affinity(g, "dissimilarity")
    p = dict(zip(aff.neighbor_ids[0].tolist(), aff.probs[0]))
    assert p[1] > p[3] > p[2]


def test_literal_mode_reverses_weight_order():
    g = graph_from_rows(4, {0: [(1, 3.0), (2, 1.0), (3, 2.0)],
                            1: [(0, 0.0)], 2: [(0, 0.0)], 3: [(0, 0.0)]})
    aff = normalize_affinity(g, "literal")
    p = dict(zip(aff.neighbor_ids[0].tolist(), aff.probs[0]))
    assert p[2] > p[3] > p[1]


def test_empty_row_rejected():
    g = graph_from_rows(3, {0: [(1, 1.0)], 1: [(0, 1.0)]})  # node 2 isolated
    with pytest.raises(EmptyRowError):
        normalize_affinity(g)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def make_affinity(rows, n):
    ids = [np.array([j for j, _ in rows[i]], dtype=np.int64) for i in range(n)]
    ps = [np.array([p for _, p in rows[i]], dtype=np.float64) for i in range(n)]
    return AffinityMatrix(n=n, neighbor_ids=ids, probs=ps, sigma_sq=np.ones(n))


def test_even_row_frequencies():
    aff = make_affinity({0: [(1, 0.5), (2, 0.5)], 1: [(0, 1.0)], 2: [(0, 1.0)]}, 3)
    table = build_samplers(aff, seed=123)
    draws = table.draw_row(0, 100_000, table.stream(0))
    freq1 = np.mean(draws == 1)
    assert 0.49 <= freq1 <= 0.51


def test_degenerate_row_always_returns_the_neighbor():
    aff = make_affinity({0: [(2, 1.0)], 1: [(0, 1.0)], 2: [(0, 1.0)]}, 3)
    table = build_samplers(aff, seed=5)
    draws = table.draw_row(0, 1000, table.stream(0))
    assert np.all(draws == 2)


def test_same_seed_emits_identical_sequences():
    aff = make_affinity({0: [(1, 0.3), (2, 0.7)], 1: [(0, 1.0)], 2: [(0, 1.0)]}, 3)
    t1 = build_samplers(aff, seed=99)
    t2 = build_samplers(aff, seed=99)
    np.testing.assert_array_equal(
        t1.draw_row(0, 500, t1.stream(0)), t2.draw_row(0, 500, t2.stream(0))
    )
    np.testing.assert_array_equal(
        t1.draw_noise(500, t1.stream(1)), t2.draw_noise(500, t2.stream(1))
    )


def test_row_sampler_chi_square():
    """Empirical frequencies match the row distribution (alpha = 0.01)."""
    rng = np.random.default_rng(31)
    for trial in range(5):
        size = int(rng.integers(2, 7))
        raw = rng.random(size) + 0.05
        p = raw / raw.sum()
        rows = {0: [(j + 1, float(p[j])) for j in range(size)]}
        for i in range(1, size + 1):
            rows[i] = [(0, 1.0)]
        aff = make_affinity(rows, size + 1)
        table = build_samplers(aff, seed=trial)
        draws = table.draw_row(0, 100_000, table.stream(trial))
        observed = np.array([(draws == j + 1).sum() for j in range(size)])
        expected = p * 100_000
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        assert chi2 < CHI2_CRIT[size - 1], f"trial {trial}: chi2={chi2:.2f}"


def test_noise_distribution_follows_in_strength_power():
    aff = make_affinity({0: [(1, 0.7), (2, 0.3)], 1: [(0, 1.0)], 2: [(0, 0.5), (1, 0.5)]}, 3)
    table = build_samplers(aff, noise_power=0.75, seed=0)
    strength = np.array([1.0 + 0.5, 0.7 + 0.5, 0.3])
    expected = strength**0.75 / (strength**0.75).sum()
    np.testing.assert_allclose(table.noise_probs, expected, rtol=1e-12)


def test_noise_draw_frequencies():
    aff = make_affinity({0: [(1, 1.0)], 1: [(0, 1.0)]}, 2)
    table = build_samplers(aff, noise_power=1.0, seed=11)
    draws = table.draw_noise(100_000, table.stream(0))
    assert abs(np.mean(draws == 0) - 0.5) < 0.01


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("fmt", ["csv", "binary"])
def test_affinity_roundtrip(tmp_path, fmt):
    g = graph_from_rows(3, {0: [(1, 2.0), (2, 1.0)], 1: [(0, 1.0)], 2: [(1, 4.0)]})
    aff = normalize_affinity(g)
    path = tmp_path / f"a.{fmt}"
    save_affinity(aff, path, fmt)
    back = load_affinity(path, fmt)
    assert back.n == aff.n
    for i in range(3):
        np.testing.assert_array_equal(back.neighbor_ids[i], aff.neighbor_ids[i])
        np.testing.assert_array_equal(back.probs[i], aff.probs[i])
    if fmt == "binary":
        np.testing.assert_array_equal(back.sigma_sq, aff.sigma_sq)
