from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peelsketch.peeling import (
    COMPLEX,
    HYPERTREE,
    UNICYCLIC,
    ConfigError,
    PreconditionError,
    WeightedHypergraph,
    census,
    classify_component,
    is_free,
    is_peeling_sequence,
    mc_nonpeelable,
    peel,
    peel_batch,
    random_hypergraph,
    read_graph,
    spreadness,
    unicyclic_break,
    write_graph,
)
from peelsketch.core import ParameterError
from peelsketch.verify import brute_force_peelable, small_random_graph


def G_of(edges, ew=None, vw=None, N=None, h=3):
    edges = np.array(edges, dtype=np.int64).reshape(-1, h)
    N = N if N is not None else (int(edges.max()) + 1 if edges.size else h)
    ew = np.ones(len(edges)) if ew is None else np.asarray(ew, float)
    vw = np.zeros(N) if vw is None else np.asarray(vw, float)
    return WeightedHypergraph(N, edges, ew, vw, h)


# five edges in a ring: consecutive edges share one vertex
RING = [[0, 1, 2], [2, 3, 4], [4, 5, 6], [6, 7, 8], [8, 9, 0]]


def test_isolated_edge_is_free():
    assert is_free(G_of([[0, 1, 2]]), 0, 2.0)


def test_direct_evaluation_of_free():
    # w_e = 10; vertex 0 has w_v = 2 and one other edge of weight 3 -> 10 >= 2 * 5
    G = G_of([[0, 1, 2], [0, 3, 4], [1, 3, 5], [2, 4, 5]], ew=[10, 3, 30, 30], vw=[2, 100, 100, 0, 0, 0])
    assert is_free(G, 0, 2.0)
    assert not is_free(G, 0, 2.01)


def test_unit_weights_free_iff_degree_one_vertex():
    rng = np.random.default_rng(0)
    for _ in range(50):
        G = random_hypergraph(12, 6, 3, seed=rng.integers(1 << 30))
        deg = np.bincount(G.edges.ravel(), minlength=G.N)
        for e in range(G.M):
            assert is_free(G, e, 1.5) == bool(np.any(deg[G.edges[e]] == 1))


def test_hypertree_peels_completely():
    path = [[0, 1, 2], [2, 3, 4], [4, 5, 6], [1, 7, 8]]
    res = peel(G_of(path), 2.0)
    assert res.peelable == frozenset(range(4)) and not res.survivors
    assert is_peeling_sequence(G_of(path), 2.0, res.sequence)


def test_heavy_vertices_block_edge():
    G = G_of([[0, 1, 2]], ew=[1.0], vw=[1.5, 2.0, 1.5])
    assert peel(G, 1.0).survivors == frozenset({0})
    # the free test is inclusive, so equality at rho = 1 still frees the edge
    assert peel(G_of([[0, 1, 2]], ew=[1.0], vw=[1.0, 2.0, 1.0]), 1.0).peelable == frozenset({0})


def test_ring_peels_but_double_edge_is_stuck():
    # the ring's odd vertices have degree 1; the doubled edge has none
    assert peel(G_of(RING), 2.0).peelable == frozenset(range(5))
    assert peel(G_of([[0, 1, 2], [0, 1, 2]]), 1.5).peelable == frozenset()
    assert peel(G_of([[0, 1, 2], [0, 1, 2]], ew=[1.0, 3.0]), 1.5).peelable == frozenset({0, 1})


def test_spreadness_examples():
    rho = 3.0
    assert spreadness(G_of([[0, 1, 2]]), 0, rho) == rho
    assert spreadness(G_of([[0, 1, 2], [2, 3, 4]]), 0, rho) == 2 * rho
    path = G_of([[0, 1, 2], [2, 3, 4], [4, 5, 6]])
    assert spreadness(path, 0, rho) == rho + rho + rho**2
    assert spreadness(path, 1, rho) == 3 * rho


def bfs_distance_oracle(G, e, rho):
    """Edge distances from a Floyd-Warshall over the edge adjacency."""
    M = G.M
    inf = 10**9
    d = np.full((M, M), inf)
    for a in range(M):
        for b in range(M):
            if a == b or set(G.edges[a]) & set(G.edges[b]):
                d[a, b] = 1
    np.fill_diagonal(d, 0)
    for m in range(M):
        d = np.minimum(d, d[:, [m]] + d[[m], :])
    total = 0.0
    for f in range(M):
        if d[e, f] < inf:
            hop = max(0, d[e, f] - 1)  # sharing a vertex is distance 0
            total += rho ** (1 + hop)
    return total


@given(st.integers(0, 2**31))
@settings(max_examples=40)
def test_spreadness_matches_distance_oracle(seed):
    G = random_hypergraph(25, 8, 3, seed=seed)
    for e in range(G.M):
        got = spreadness(G, e, 4.0)
        assert got == pytest.approx(bfs_distance_oracle(G, e, 4.0), rel=1e-12)
        assert got >= 4.0


def test_spreadness_ignores_vertex_weights():
    G = random_hypergraph(30, 9, 3, seed=1)
    H = WeightedHypergraph(G.N, G.edges, G.edge_weights, np.arange(G.N, dtype=float), 3)
    assert [spreadness(G, e, 2.0) for e in range(G.M)] == [spreadness(H, e, 2.0) for e in range(H.M)]


def test_component_classes():
    assert classify_component(G_of([[0, 1, 2]]), 0) == HYPERTREE
    assert classify_component(G_of([[0, 1, 2], [0, 1, 3]]), 0) == UNICYCLIC
    assert classify_component(G_of(RING), 2) == UNICYCLIC
    assert classify_component(G_of([[0, 1, 2], [0, 1, 2], [0, 1, 2]]), 0) == COMPLEX
    c = census(G_of([[0, 1, 2], [0, 1, 3], [5, 6, 7]], N=9))
    assert sorted(c.classes.tolist()) == [HYPERTREE, HYPERTREE, HYPERTREE, UNICYCLIC]
    assert c.all_sparse


def test_unicyclic_break_examples():
    G = G_of([[0, 1, 2], [0, 1, 3]])
    v = unicyclic_break(G, 0)
    assert v in (0, 1, 2)
    for e in range(5):
        v = unicyclic_break(G_of(RING), e)
        rest = G_of(RING).without_edges([e])
        # v's component in the ring minus e is a path, hence a hypertree
        assert v in RING[e]
        sub = [f for f in range(rest.M) if v in rest.edges[f]]
        assert all(classify_component(rest, f) == HYPERTREE for f in sub)
    with pytest.raises(PreconditionError):
        unicyclic_break(G_of([[0, 1, 2]]), 0)


@given(st.integers(0, 2**31))
@settings(max_examples=40)
def test_unicyclic_break_on_random_instances(seed):
    G = random_hypergraph(40, 12, 3, seed=seed)
    cls = census(G).edge_classes(G)
    for e in np.flatnonzero(cls == UNICYCLIC).tolist():
        v = unicyclic_break(G, e)
        rest = G.without_edges([e])
        comp = census(rest)
        lab = comp.labels[v]
        assert comp.classes[lab] == HYPERTREE


@given(st.integers(0, 2**31))
def test_greedy_equals_exhaustive_search(seed):
    G, rho = small_random_graph(np.random.default_rng(seed))
    assert set(peel(G, rho).peelable) == brute_force_peelable(G, rho)


@given(st.integers(0, 2**31))
@settings(max_examples=30)
def test_order_independence_and_valid_sequences(seed):
    rng = np.random.default_rng(seed)
    G0 = random_hypergraph(120, 40, 3, seed=seed)
    G = WeightedHypergraph(120, G0.edges, rng.exponential(size=40), rng.exponential(size=120) * 0.1, 3)
    ref = peel(G, 2.0)
    assert is_peeling_sequence(G, 2.0, ref.sequence)
    assert ref.peelable | ref.survivors == frozenset(range(40)) and not ref.peelable & ref.survivors
    for o in range(5):
        res = peel(G, 2.0, rng=np.random.default_rng([seed, o]))
        assert res.peelable == ref.peelable
        assert is_peeling_sequence(G, 2.0, res.sequence)


@given(st.integers(0, 2**31))
@settings(max_examples=30)
def test_monotonicity(seed):
    rng = np.random.default_rng(seed)
    G0 = random_hypergraph(60, 20, 3, seed=seed)
    vw = rng.exponential(size=60) * 0.2
    G = WeightedHypergraph(60, G0.edges, rng.exponential(size=20), vw, 3)
    base = peel(G, 1.5).peelable
    heavier = WeightedHypergraph(60, G0.edges, G.edge_weights, vw + rng.exponential(size=60) * 0.3, 3)
    assert peel(heavier, 1.5).peelable <= base
    drop = int(rng.integers(20))
    fewer = G.without_edges([drop])
    kept = [e for e in range(20) if e != drop]
    assert {kept[e] for e in peel(fewer, 1.5).peelable} >= base - {drop}


@given(st.integers(0, 2**31))
@settings(max_examples=30)
def test_batch_peeler_matches_greedy(seed):
    rng = np.random.default_rng(seed)
    G0 = random_hypergraph(80, 25, 3, seed=seed)
    G = WeightedHypergraph(80, G0.edges, rng.exponential(size=25), np.zeros(80), 3)
    W = rng.exponential(size=(4, 80)) * 0.1
    mask = peel_batch(G, W, 3.0)
    for t in range(4):
        Gt = WeightedHypergraph(80, G.edges, G.edge_weights, W[t], 3)
        assert set(np.flatnonzero(mask[t]).tolist()) == set(peel(Gt, 3.0).peelable)


def test_mc_zero_weights_and_config_error():
    G = random_hypergraph(40, 5, 3, seed=3)
    rep = mc_nonpeelable(G, lambda r, T, N: np.zeros((T, N)), 0.0, 4.0, 200, seed=0)
    assert rep.frequency.tolist() == [0.0] * 5
    with pytest.raises(ConfigError):
        mc_nonpeelable(G, lambda r, T, N: r.exponential(2.0, size=(T, N)), 1.0, 4.0, 500, seed=0)


def test_mc_bound_with_correlated_weights():
    G0 = random_hypergraph(40, 8, 3, seed=5)
    assert census(G0).all_sparse
    G = WeightedHypergraph(40, G0.edges, np.linspace(8, 60, 8), np.zeros(40), 3)

    def shared(r, T, N):
        return np.repeat(r.exponential(1.0, size=(T, 1)), N, axis=1)

    rep = mc_nonpeelable(G, shared, 1.0, 4.0, 4000, seed=1)
    assert rep.violations(3.0).size == 0


def test_graph_io(tmp_path):
    G = WeightedHypergraph(7, [[0, 1, 2], [2, 3, 6]], [1.5, 2.0], np.arange(7) / 3, 3)
    write_graph(tmp_path / "g.txt", G)
    H = read_graph(tmp_path / "g.txt")
    assert H.N == 7 and H.edges.tolist() == G.edges.tolist()
    assert H.edge_weights.tolist() == G.edge_weights.tolist()
    assert H.vertex_weights.tolist() == G.vertex_weights.tolist()
    (tmp_path / "bad.txt").write_text("3 1 3\n0 1\n")
    with pytest.raises(ParameterError):
        read_graph(tmp_path / "bad.txt")


def test_graph_validation():
    with pytest.raises(ParameterError):
        WeightedHypergraph(3, [[0, 0, 1]], [1.0], np.zeros(3), 3)
    with pytest.raises(ParameterError):
        WeightedHypergraph(3, [[0, 1, 3]], [1.0], np.zeros(3), 3)
    with pytest.raises(ParameterError):
        WeightedHypergraph(3, [[0, 1, 2]], [-1.0], np.zeros(3), 3)
    assert random_hypergraph(10, 0, 3, seed=0).M == 0
