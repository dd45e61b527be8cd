import numpy as np
import pytest

from oracles import bfs_components
from subtrack.merging import (
    ReachabilityGraph,
    build_graph,
    direct_positive_sets,
    progressive_positive_sets,
    reachable_positive_sets,
)
from subtrack.model import (
    MODE_DIRECT,
    MODE_REACHABLE,
    OUTLIER,
    SubTracklet,
    default_config,
)


def _assignment(spread):
    """spread: {tracklet_id: [labels of its sub-tracklets in order]}"""
    out = {}
    for tid, labels in spread.items():
        for i, y in enumerate(labels, start=1):
            out[SubTracklet(tid, i, (0, 0))] = y
    return out


def test_build_graph_chain_not_transitive():
    assignment = _assignment({"A": [1, 2], "B": [2, 3]})
    g = build_graph(assignment)
    assert g.edges == frozenset({(1, 2), (2, 3)})
    assert (1, 3) not in g.edges
    assert g.witness[(1, 2)] == frozenset({"A"})
    assert g.witness[(2, 3)] == frozenset({"B"})


def test_build_graph_single_cluster_tracklets_no_edges():
    g = build_graph(_assignment({"A": [1, 1], "B": [2], "C": [3, 3, 3]}))
    assert g.edges == frozenset()
    assert g.nodes == frozenset({1, 2, 3})


def test_build_graph_clique_rule():
    g = build_graph(_assignment({"A": [1, 2, 3]}))
    assert g.edges == frozenset({(1, 2), (1, 3), (2, 3)})


def test_build_graph_ignores_outliers():
    g = build_graph(_assignment({"A": [1, OUTLIER, 2]}))
    assert g.nodes == frozenset({1, 2})
    assert g.edges == frozenset({(1, 2)})


def test_build_graph_order_invariant():
    spread = {"A": [1, 2], "B": [2, 3], "C": [4]}
    a = build_graph(_assignment(spread))
    items = list(_assignment(spread).items())
    b = build_graph(dict(reversed(items)))
    assert a.edges == b.edges and a.witness == b.witness


def test_direct_positive_sets_chain():
    g = build_graph(_assignment({"A": [1, 2], "B": [2, 3]}))
    psets = direct_positive_sets(g)
    assert psets[1] == frozenset({1, 2})
    assert psets[2] == frozenset({1, 2, 3})
    assert psets[3] == frozenset({2, 3})


def test_direct_positive_sets_isolated_and_symmetric():
    g = build_graph(_assignment({"A": [1], "B": [2, 3]}))
    psets = direct_positive_sets(g)
    assert psets[1] == frozenset({1})
    for a, pos in psets.items():
        for b in pos:
            assert a in psets[b]


def test_reachable_positive_sets_chain_single_component():
    g = build_graph(_assignment({"A": [1, 2], "B": [2, 3]}))
    psets, refined = reachable_positive_sets(g)
    assert psets[1] == psets[2] == psets[3] == frozenset({1, 2, 3})
    assert refined[1] == refined[2] == refined[3] == 1


def test_reachable_positive_sets_disjoint_edges():
    g = build_graph(_assignment({"A": [1, 2], "B": [3, 4]}))
    psets, refined = reachable_positive_sets(g)
    assert psets[1] == frozenset({1, 2})
    assert psets[3] == frozenset({3, 4})
    assert refined == {1: 1, 2: 1, 3: 2, 4: 2}


def test_reachable_positive_sets_no_edges_singletons():
    g = build_graph(_assignment({"A": [1], "B": [2], "C": [3]}))
    psets, refined = reachable_positive_sets(g)
    assert all(psets[c] == frozenset({c}) for c in (1, 2, 3))
    assert sorted(refined.values()) == [1, 2, 3]


def _random_graph(rng, max_nodes=500):
    n = int(rng.integers(1, max_nodes + 1))
    nodes = frozenset(range(1, n + 1))
    m = int(rng.integers(0, max(1, 2 * n)))
    edges = set()
    for _ in range(m):
        a, b = rng.integers(1, n + 1, size=2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    return ReachabilityGraph(
        nodes=nodes,
        edges=frozenset(edges),
        witness={e: frozenset({"w"}) for e in edges},
    )


def test_reachable_matches_bfs_oracle_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(60):
        g = _random_graph(rng)
        psets, refined = reachable_positive_sets(g)
        expected = bfs_components(g.nodes, g.edges)
        assert frozenset(frozenset(p) for p in psets.values()) == expected
        # refined labels agree with the component structure
        for a, pos in psets.items():
            for b in pos:
                assert refined[a] == refined[b]


def test_direct_subset_of_reachable_random_graphs():
    rng = np.random.default_rng(13)
    for _ in range(60):
        g = _random_graph(rng, max_nodes=120)
        direct = direct_positive_sets(g)
        reach, _ = reachable_positive_sets(g)
        for c in g.nodes:
            assert direct[c] <= reach[c]


def test_progressive_switch():
    cfg = default_config()
    assignment = _assignment({"A": [1, 2], "B": [2, 3]})
    g = build_graph(assignment)
    early = progressive_positive_sets(assignment, g, epoch=1, cfg=cfg)
    assert early.mode == MODE_DIRECT
    assert early.refined is None
    assert early.check() == []
    at_switch = progressive_positive_sets(assignment, g, epoch=51, cfg=cfg)
    assert at_switch.mode == MODE_REACHABLE
    assert at_switch.check() == []
    late = progressive_positive_sets(assignment, g, epoch=150, cfg=cfg)
    assert late.mode == MODE_REACHABLE


def test_progressive_rejects_bad_epoch():
    cfg = default_config()
    g = build_graph(_assignment({"A": [1]}))
    with pytest.raises(ValueError):
        progressive_positive_sets({}, g, epoch=0, cfg=cfg)


def test_random_label_states_satisfy_invariants():
    rng = np.random.default_rng(29)
    cfg = default_config(merge_switch_epoch=5)
    for _ in range(40):
        spread = {
            f"t{i}": [int(rng.integers(1, 9)) for _ in range(int(rng.integers(1, 5)))]
            for i in range(int(rng.integers(1, 12)))
        }
        assignment = _assignment(spread)
        g = build_graph(assignment)
        epoch = int(rng.integers(1, 10))
        state = progressive_positive_sets(assignment, g, epoch, cfg)
        assert state.check() == []
