import heapq
import math
import torch
import networkx as nx
from dataclasses import dataclass, field
from loguru import logger
from gather.cost import account
from models.neighbor_graph import NeighborGraph
from utils.errors import RGatherError
from utils.utils import make_rng, derive_seed


@dataclass
class ExplorationResult:
    lists: dict = field(default_factory=dict)
    truncated: dict = field(default_factory=dict)


@dataclass
class MisState:
    exponent: torch.Tensor
    alive: torch.Tensor
    stalled: torch.Tensor
    independent: torch.Tensor
    iteration: int = 0
    R_phase: int = 2
    r_s: int = 8
    T: int = 1
    seed: int = 0
    finished: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def probabilities(self):
        return torch.pow(2., -self.exponent.double())


def _log_n(n):
    return math.log(max(n, 2))


def truncated_explore(graph, S, k, J, ledger=None):
    '''
    Intersections of S with every closed k-hop ball, keeping the J+1 smallest ids.
    Each round merges the lists of the closed neighbourhood; the survivors are
    always the J+1 smallest ids of the true intersection.
    '''
    if k < 1 or J < 0:
        raise RGatherError('Exploration needs k >= 1 and J >= 0.')
    in_S = set(graph.rows_of(S))
    adjacency = graph.adjacency()
    lists = [[v] if v in in_S else [] for v in range(graph.n)]
    for _ in range(k):
        merged = []
        for v in range(graph.n):
            union = set(lists[v])
            for u in adjacency[v]:
                union.update(lists[u])
            merged.append(heapq.nsmallest(J + 1, union))
        lists = merged
    account(ledger, 'explore', graph.num_edges, k=k, J=J)

    ids = graph.ids.tolist()
    result = ExplorationResult()
    for v in range(graph.n):
        result.lists[ids[v]] = [ids[u] for u in lists[v]]
        result.truncated[ids[v]] = len(lists[v]) == J + 1
    return result


def nearest_in_khop(graph, S, k, ledger=None):
    # Level-synchronous BFS from S; rows are sorted by id so the minimum row is the smallest id.
    n = graph.n
    row, col = graph.edge_index
    label = torch.full((n,), n, dtype=torch.long)
    hops = torch.full((n,), -1, dtype=torch.long)
    sources = torch.tensor(graph.rows_of(S), dtype=torch.long)
    label[sources] = sources
    hops[sources] = 0
    for h in range(1, k + 1):
        frontier = torch.where(hops == h - 1, label, torch.full_like(label, n))
        reached = torch.full((n,), n, dtype=torch.long).scatter_reduce(0, row, frontier[col], reduce='amin', include_self=True)
        new = (hops < 0) & (reached < n)
        if not bool(new.any()):
            break
        label[new] = reached[new]
        hops[new] = h
    account(ledger, 'bfs', graph.num_edges, k=k)

    ids = graph.ids.tolist()
    nearest = {}
    for v, (lab, hop) in enumerate(zip(label.tolist(), hops.tolist())):
        nearest[ids[v]] = (ids[lab], hop) if hop >= 0 else None
    return nearest


def high_degree_vertices(graph, r, k, eta, seed, c=3., ledger=None):
    '''
    Vertices whose closed k-hop ball has at least about r members.
    Every vertex is sampled with probability p = min(1, c ln n / (r eta^2)) and kept when
    at least (1 - eta/10) p r sampled vertices lie within k hops.
    '''
    if not 0. < eta < 1.:
        raise RGatherError('eta must lie in (0, 1), got ' + str(eta) + '.')
    n = graph.n
    p = min(1., c * _log_n(n) / (r * eta ** 2))
    threshold = (1. - eta / 10.) * p * r
    J = max(0, math.ceil(threshold))
    rng = make_rng(seed, 'degree')
    sampled = graph.ids_of((torch.from_numpy(rng.random(n)) < p).nonzero().reshape(-1).tolist())
    explored = truncated_explore(graph, sampled, k, J, ledger)
    return sorted(v for v, members in explored.lists.items() if len(members) >= threshold)


def _blelloch_mis(graph, candidates, k, rank):
    '''
    Lexicographically first independent set of G^k[candidates] under `rank`.
    Non-candidates relay ranks but never join.
    '''
    n = graph.n
    loops = torch.arange(n, dtype=torch.long)
    row = torch.cat([graph.edge_index[0], loops])
    col = torch.cat([graph.edge_index[1], loops])
    rank = torch.where(candidates, rank, torch.full_like(rank, n))

    mis = torch.zeros(n, dtype=torch.bool)
    covered = ~candidates
    min_rank = rank.clone()
    rounds = 0
    while not bool(covered.all()):
        for _ in range(k):
            min_rank = torch.full((n,), n, dtype=torch.long).scatter_reduce(0, row, min_rank[col], reduce='amin', include_self=True)
        mis = mis | (candidates & ~covered & torch.eq(rank, min_rank))

        mask = mis.long()
        for _ in range(k):
            mask = torch.zeros(n, dtype=torch.long).scatter_reduce(0, col, mask[row], reduce='amax', include_self=True)
        covered = covered | mask.bool()
        min_rank = rank.clone()
        min_rank[covered] = n
        rounds += 2 * k
    return mis, rounds


def greedy_mis_power(graph, Vp, k, order=None, ledger=None):
    Vp = list(Vp)
    candidates = graph.mask_of(Vp)
    rank = torch.full((graph.n,), graph.n, dtype=torch.long)
    if order is None:
        order = sorted(Vp)
    rows = graph.rows_of(order)
    if set(rows) != set(candidates.nonzero().reshape(-1).tolist()):
        raise RGatherError('Scan order must list exactly the vertices of V\'.')
    rank[rows] = torch.arange(len(rows), dtype=torch.long)
    mis, rounds = _blelloch_mis(graph, candidates, k, rank)
    account(ledger, 'finish', len(Vp), rounds=rounds, note='greedy mis')
    return graph.ids_of(mis.nonzero().reshape(-1).tolist())


def is_independent_khop(graph, S, k):
    g = graph.to_networkx()
    S = set(S)
    for s in S:
        near = nx.single_source_shortest_path_length(g, s, cutoff=k)
        if any(u in S and u != s for u in near):
            return False
    return True


def is_maximal_khop(graph, Vp, S, k):
    # S must lie in V' and reach every vertex of V' within k hops.
    Vp, S = set(Vp), set(S)
    if not S <= Vp:
        return False
    if not Vp:
        return True
    if not S:
        return False
    g = graph.to_networkx()
    reached = nx.multi_source_dijkstra_path_length(g, S, cutoff=k)
    return all(v in reached for v in Vp)


def init_mis_state(graph, Vp, k, seed, R_phase=2, r_s=None, T=None):
    n = graph.n
    if r_s is None:
        r_s = max(8, math.ceil(2. * _log_n(n)))
    if T is None:
        delta_k = int(graph.ball_sizes(k).max().item()) if n > 0 else 1
        T = math.ceil(30. * math.log(delta_k + 2))
    if R_phase < 1 or r_s < 1 or T < 1:
        raise RGatherError('MIS parameters must be positive.')
    return MisState(exponent=torch.ones(n, dtype=torch.long),
                    alive=graph.mask_of(Vp),
                    stalled=torch.zeros(n, dtype=torch.bool),
                    independent=torch.zeros(n, dtype=torch.bool),
                    R_phase=R_phase, r_s=r_s, T=T, seed=seed)


def _ball_count(reach, mask):
    return torch.sparse.mm(reach, mask.double().unsqueeze(1)).reshape(-1)


def run_sparsified_mis(graph, Vp, k, seed, R_phase=2, r_s=None, T=None, record=False, ledger=None):
    state = init_mis_state(graph, Vp, k, seed, R_phase, r_s, T)
    n = graph.n
    if n == 0:
        return state
    reach = graph.khop_reach(k)
    stall_limit = 100. * 2. ** (4 * state.R_phase) * state.r_s

    for t in range(1, state.T + 1):
        if not bool(state.alive.any()):
            break
        i = (t - 1) % state.R_phase + 1
        rng = make_rng(seed, 'mis', t)
        samples = torch.from_numpy(rng.random((n, state.r_s)))
        coins = torch.from_numpy(rng.random(n))

        # r_s sampled copies of the alive vertices, each with probability p_{t-1}.
        p = state.probabilities()
        b = ((samples < p.unsqueeze(1)) & state.alive.unsqueeze(1)).double()
        estimates = torch.sparse.mm(reach, b)
        tau_hat = estimates.median(dim=1).values
        if i == 1:
            state.stalled = state.alive & (estimates.sum(dim=1) >= stall_limit)

        halve = (tau_hat >= 2.) | state.stalled
        exponent = torch.where(halve, (state.exponent + 1).clamp(max=state.T), (state.exponent - 1).clamp(min=1))
        state.exponent = torch.where(state.alive, exponent, state.exponent)

        # Marking, joining and removing dominated vertices.
        marked = state.alive & ~state.stalled & (coins < state.probabilities())
        joined = marked & (_ball_count(reach, marked) == 1.)
        state.independent |= joined
        dominated = _ball_count(reach, joined) > 0
        state.alive &= ~(dominated & ~state.stalled)
        if i == state.R_phase or t == state.T:
            near = _ball_count(reach, state.independent) > 0
            state.alive &= ~(near & state.stalled)
            state.stalled = torch.zeros(n, dtype=torch.bool)
        state.iteration = t
        if record:
            state.history.append({'iteration': t,
                                  'alive': int(state.alive.sum()),
                                  'stalled': int(state.stalled.sum()),
                                  'joined': int(joined.sum()),
                                  'min_exponent': int(state.exponent.min()) if n else 0,
                                  'max_exponent': int(state.exponent.max()) if n else 0})
        logger.debug('mis iteration {}: {} alive, {} joined', t, int(state.alive.sum()), int(joined.sum()))

    delta_k = int(graph.ball_sizes(k).max().item()) if n > 0 else 1
    account(ledger, 'mis', graph.num_edges + n, k=k, n=n, delta_k=delta_k)

    # Stalled leftovers next to a joined vertex leave; the rest are finished greedily.
    if bool(state.alive.any()):
        near = _ball_count(reach, state.independent) > 0
        state.alive &= ~near
    leftovers = graph.ids_of(state.alive.nonzero().reshape(-1).tolist())
    if leftovers:
        logger.debug('finishing {} leftover vertices greedily', len(leftovers))
        state.finished = greedy_mis_power(graph, leftovers, k, ledger=ledger)
        state.independent[graph.rows_of(state.finished)] = True
        state.alive[:] = False
    return state


def sparsified_mis_power(graph, Vp, k, seed, R_phase=2, r_s=None, T=None, ledger=None):
    state = run_sparsified_mis(graph, Vp, k, seed, R_phase, r_s, T, ledger=ledger)
    return graph.ids_of(state.independent.nonzero().reshape(-1).tolist())


def dominating_set_power(graph, Vp, k, f=2., seed=0, c=2., ledger=None):
    '''
    Sampled dominating set U of V' in G^k, returned with the graph G^k[U].
    Round t samples the vertices not yet within k hops of U with probability
    min(1, c f^t ln n / Delta_k); the last round samples everything left.
    '''
    if f < 2:
        raise RGatherError('Dominating set needs f >= 2, got ' + str(f) + '.')
    n = graph.n
    log_n = _log_n(n)
    reach = graph.khop_reach(k)
    delta_k = int(graph.ball_sizes(k).max().item()) if n > 0 else 1
    rounds = max(1, math.ceil(math.log(max(delta_k, 1)) / math.log(f)))

    remaining = graph.mask_of(Vp)
    chosen = torch.zeros(n, dtype=torch.bool)
    for t in range(1, rounds + 1):
        p = min(1., c * f ** t * log_n / delta_k)
        rng = make_rng(seed, 'dominate', t)
        U_t = remaining & (torch.from_numpy(rng.random(n)) < p)
        chosen |= U_t
        remaining &= ~(_ball_count(reach, U_t) > 0)
        account(ledger, 'bfs', graph.num_edges, k=k, note='dominating round ' + str(t))
    if bool(remaining.any()):
        # The last round samples with probability one, so this only happens on misuse.
        chosen |= remaining

    # Building G^k[U] from truncated explorations.
    U = graph.ids_of(chosen.nonzero().reshape(-1).tolist())
    J = math.ceil(10. * c * f * log_n)
    explored = truncated_explore(graph, U, k, J, ledger)
    if any(explored.truncated[u] for u in U):
        logger.warning('dominating set degree above {} in G^{}; exploring without truncation', J, k)
        explored = truncated_explore(graph, U, k, max(len(U), 1), ledger)
    pairs = [(u, v) for u in U for v in explored.lists[u] if v != u]
    induced = NeighborGraph.from_pairs(U, pairs, R=graph.R, r=graph.r, C=graph.C, mode='power', seed=seed)
    return U, induced


def ruling_set_power(graph, Vp, k, beta, seed, ledger=None):
    '''
    Vertices pairwise more than k hops apart with every vertex of V' within beta * k hops.
    beta = 1 is the maximal independent set of G^k[V']; larger beta first shrinks V' to a
    dominating set U and recurses on G^k[U] with one fewer level.
    '''
    if beta < 1:
        raise RGatherError('beta must be at least 1.')
    if beta == 1:
        return sparsified_mis_power(graph, Vp, k, seed, ledger=ledger)
    U, induced = dominating_set_power(graph, Vp, k, seed=derive_seed(seed, 'ruling', beta), ledger=ledger)
    if not U:
        return []
    return ruling_set_power(induced, U, 1, beta - 1, derive_seed(seed, 'ruling-mis', beta), ledger)
