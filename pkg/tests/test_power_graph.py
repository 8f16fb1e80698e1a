import networkx as nx
import numpy as np
import pytest
from gather.cost import CostLedger
from gather.power_graph import (dominating_set_power, greedy_mis_power, high_degree_vertices, is_independent_khop, is_maximal_khop,
                                nearest_in_khop, ruling_set_power, run_sparsified_mis, sparsified_mis_power, truncated_explore)
from models.neighbor_graph import NeighborGraph
from utils.errors import RGatherError


def path(n):
    return NeighborGraph.from_pairs(range(1, n + 1), [(v, v + 1) for v in range(1, n)])


def random_graph(rng, n, p):
    g = nx.gnp_random_graph(n, p, seed=int(rng.integers(1 << 31)))
    return NeighborGraph.from_pairs(range(n), list(g.edges))


def dominates(graph, Vp, S, k):
    reached = nx.multi_source_dijkstra_path_length(graph.to_networkx(), set(S), cutoff=k) if S else {}
    return all(v in reached for v in Vp)


def test_truncated_explore_path():
    result = truncated_explore(path(4), [1, 4], 2, 5)
    assert result.lists == {1: [1], 2: [1, 4], 3: [1, 4], 4: [4]}
    assert not any(result.truncated.values())
    assert all(members == [] for members in truncated_explore(path(4), [], 2, 3).lists.values())


def test_truncated_explore_flags():
    graph = path(5)
    result = truncated_explore(graph, range(1, 6), 1, 0)
    assert all(len(members) == 1 and result.truncated[v] for v, members in result.lists.items())
    with pytest.raises(RGatherError):
        truncated_explore(graph, [1], 0, 2)


def test_truncated_explore_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        graph = random_graph(rng, n, float(rng.uniform(.02, .3)))
        S = [v for v in range(n) if rng.random() < .4]
        k, J = int(rng.integers(1, 4)), int(rng.integers(0, 5))
        result = truncated_explore(graph, S, k, J)
        g = graph.to_networkx()
        for v in range(n):
            ball = nx.single_source_shortest_path_length(g, v, cutoff=k)
            expected = sorted(u for u in ball if u in S)
            assert result.lists[v] == expected[:J + 1]
            assert result.truncated[v] == (len(expected) >= J + 1)


def test_nearest_in_khop():
    nearest = nearest_in_khop(path(5), [1, 5], 2)
    assert nearest[3] == (1, 2)
    assert nearest[1] == (1, 0) and nearest[5] == (5, 0)
    assert nearest[2] == (1, 1) and nearest[4] == (5, 1)
    assert nearest_in_khop(path(5), [1], 1)[5] is None


def test_high_degree_vertices():
    graph = path(6)
    assert high_degree_vertices(graph, 1, 1, .2, seed=0) == list(range(1, 7))
    with pytest.raises(RGatherError):
        high_degree_vertices(graph, 1, 1, 1., seed=0)


def test_high_degree_star():
    # Closed balls: 9 for the center, 2 for every leaf, far below r = 9.
    graph = NeighborGraph.from_pairs(range(9), [(0, v) for v in range(1, 9)])
    for seed in range(50):
        assert high_degree_vertices(graph, 9, 1, .2, seed) == [0]


def selected_below_bound(seeds, n, edge_p, r, k, eta):
    # Seeds whose selection holds a vertex with fewer than (1 - eta) r vertices within k hops.
    rng = np.random.default_rng(8)
    failures = 0
    for seed in range(seeds):
        graph = random_graph(rng, n, edge_p)
        sizes = dict(zip(graph.ids.tolist(), graph.ball_sizes(k).tolist()))
        chosen = high_degree_vertices(graph, r, k, eta, seed)
        failures += int(any(sizes[v] < (1. - eta) * r for v in chosen))
    return failures


def test_high_degree_against_exact_degrees():
    assert selected_below_bound(10, 300, .05, 200, 2, .5) <= 1


@pytest.mark.slow
def test_high_degree_against_exact_degrees_full():
    assert selected_below_bound(50, 300, .05, 200, 2, .5) <= 5


def test_greedy_mis():
    assert greedy_mis_power(path(5), range(1, 6), 2) == [1, 4]
    assert greedy_mis_power(path(5), range(1, 6), 4) == [1]
    assert greedy_mis_power(path(5), [], 2) == []
    assert greedy_mis_power(path(5), range(1, 6), 2, order=[5, 4, 3, 2, 1]) == [2, 5]
    with pytest.raises(RGatherError):
        greedy_mis_power(path(5), [1, 2], 2, order=[1, 3])


def test_independence_checks():
    graph = path(5)
    assert is_independent_khop(graph, [], 2)
    assert is_independent_khop(graph, [3], 2)
    assert is_maximal_khop(graph, range(1, 6), [3], 2)
    assert not is_maximal_khop(graph, range(1, 6), [1], 2)
    assert not is_independent_khop(graph, [1, 3], 2)
    assert is_maximal_khop(graph, [], [], 2)


def test_sparsified_mis_without_edges():
    graph = NeighborGraph.from_pairs(range(6), [])
    assert sparsified_mis_power(graph, range(6), 2, seed=1) == list(range(6))


def test_sparsified_mis_path():
    valid = [[1, 4], [1, 5], [2, 5], [3]]
    for seed in range(100):
        assert sparsified_mis_power(path(5), range(1, 6), 2, seed) in valid


def test_sparsified_mis_random():
    rng = np.random.default_rng(4)
    for seed in range(60):
        n = int(rng.integers(2, 60))
        graph = random_graph(rng, n, float(rng.uniform(.02, .2)))
        Vp = [v for v in range(n) if rng.random() < .8]
        k = int(rng.integers(1, 3))
        S = sparsified_mis_power(graph, Vp, k, seed)
        assert is_independent_khop(graph, S, k)
        assert is_maximal_khop(graph, Vp, S, k)


def test_sparsified_mis_history():
    state = run_sparsified_mis(path(9), range(1, 10), 1, seed=3, record=True)
    assert len(state.history) == state.iteration
    assert not bool(state.alive.any())
    assert all(entry['alive'] >= 0 for entry in state.history)


def test_sparsified_mis_is_deterministic():
    graph = random_graph(np.random.default_rng(9), 40, .1)
    assert sparsified_mis_power(graph, range(40), 2, 5) == sparsified_mis_power(graph, range(40), 2, 5)


def test_dominating_set():
    single = NeighborGraph.from_pairs([7], [])
    assert dominating_set_power(single, [7], 1)[0] == [7]
    assert dominating_set_power(path(4), [], 1)[0] == []
    graph = NeighborGraph.from_pairs(range(8), [(0, v) for v in range(1, 8)])
    for seed in range(50):
        U, induced = dominating_set_power(graph, range(8), 1, seed=seed)
        assert dominates(graph, range(8), U, 1)
        assert induced.ids.tolist() == U
    with pytest.raises(RGatherError):
        dominating_set_power(graph, range(8), 1, f=1.5)


def test_dominating_set_random():
    rng = np.random.default_rng(12)
    for seed in range(50):
        n = int(rng.integers(2, 50))
        graph = random_graph(rng, n, float(rng.uniform(.05, .3)))
        k = int(rng.integers(1, 3))
        U, _ = dominating_set_power(graph, range(n), k, seed=seed)
        assert dominates(graph, range(n), U, k)


@pytest.mark.parametrize('beta', [1, 2, 3])
def test_ruling_set_path(beta):
    graph = path(9)
    for seed in range(30):
        S = ruling_set_power(graph, range(1, 10), 1, beta, seed)
        assert is_independent_khop(graph, S, 1)
        assert dominates(graph, range(1, 10), S, beta)


def test_ruling_set_complete_graph():
    graph = NeighborGraph.from_pairs(range(6), [(u, v) for u in range(6) for v in range(u + 1, 6)])
    for beta in (1, 2):
        assert len(ruling_set_power(graph, range(6), 1, beta, seed=2)) == 1
    with pytest.raises(RGatherError):
        ruling_set_power(graph, range(6), 1, 0, seed=2)


@pytest.mark.slow
def test_primitives_full():
    rng = np.random.default_rng(99)
    for seed in range(200):
        n = int(rng.integers(2, 100))
        graph = random_graph(rng, n, float(rng.uniform(.01, .1)))
        k = int(rng.integers(1, 3))
        S = sparsified_mis_power(graph, range(n), k, seed)
        assert is_independent_khop(graph, S, k) and is_maximal_khop(graph, range(n), S, k)
        S = ruling_set_power(graph, range(n), k, 2, seed)
        assert is_independent_khop(graph, S, k) and dominates(graph, range(n), S, 2 * k)
        U, _ = dominating_set_power(graph, range(n), k, seed=seed)
        assert dominates(graph, range(n), U, k)


def test_nearest_is_charged_per_edge():
    ledger = CostLedger()
    nearest_in_khop(path(6), [1], 2, ledger)
    assert ledger.charges[-1].primitive == 'bfs' and ledger.charges[-1].words == 5


def test_exploration_is_charged():
    ledger = CostLedger()
    graph = path(6)
    truncated_explore(graph, [1, 6], 3, 2, ledger)
    charge = ledger.charges[-1]
    assert charge.primitive == 'explore' and charge.rounds == 3
    assert graph.num_edges == 5 and charge.words == 5 * 3

    truncated_explore(graph, [1], 2, 0, ledger)
    assert ledger.charges[-1].words == 5
