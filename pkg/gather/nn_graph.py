import torch
from loguru import logger
from pydantic import BaseModel
from gather.cost import account
from gather.lsh import NOT_COVERED, LshFunction, lsh_keys, lsh_parameters
from models.neighbor_graph import NeighborGraph
from utils.errors import RGatherError

# Relative slack on distance comparisons against R.
TOLERANCE = 1e-12


class NeighborGraphReport(BaseModel):
    ok: bool
    violations: list[str] = []
    max_edge_ratio: float = 0.


def _check_R(R):
    if not R > 0:
        raise RGatherError('Scale R must be positive, got ' + str(R) + '.')


def build_exact(points, R, r=None, ledger=None):
    _check_R(R)
    n = len(points)
    within = points.distance_matrix() <= R * (1. + TOLERANCE)
    within = torch.triu(within, diagonal=1)
    edge_index = within.nonzero().t()
    account(ledger, 'map', n * n, note='pairwise distances')
    account(ledger, 'sort', edge_index.shape[1], note='edge list')
    return NeighborGraph(edge_index, points.ids, R, r, 1., 'exact')


def _buckets(keys):
    # Bucket key -> rows in increasing order; uncovered points stay alone.
    buckets = {}
    for row, key in enumerate(keys):
        if key is NOT_COVERED:
            continue
        buckets.setdefault(key, []).append(row)
    return buckets


def _hash_draws(points, R, seed, params, fallback):
    # Bucket maps of every hash draw, hashing P/R at scale 1.
    coords = (points.coords / R).numpy()
    draws, flags = [], set()
    for i in range(params.s):
        g = [LshFunction(points.dim, params.t, params.w, seed, ('draw', i, j), params.num_shifts) for j in range(params.kc)]
        keys = lsh_keys(g, coords, fallback)
        for key in keys:
            if key is NOT_COVERED:
                flags.add('lsh_not_covered')
            elif any(part[0] < 0 for part in key):
                flags.add('lsh_fallback')
        draws.append(_buckets(keys))
    return draws, sorted(flags)


def _lsh_graph(points, R, r, C, seed, params, ledger, fallback, sparse):
    _check_R(R)
    if C <= 1:
        raise RGatherError('LSH graphs need C > 1, got ' + str(C) + '.')
    n = len(points)
    mode = 'lsh_sparse' if sparse else 'lsh_explicit'
    if not sparse and r == 0:
        return NeighborGraph(torch.zeros((2, 0), dtype=torch.long), points.ids, R, r, C, mode, seed)
    if params is None:
        params = lsh_parameters(n, C, seed, fallback=fallback)

    # Linking bucket members draw by draw.
    sources, targets = [], []
    draws, flags = _hash_draws(points, R, seed, params, fallback)
    for buckets in draws:
        for members in buckets.values():
            if sparse:
                # Star on the bucket's smallest id.
                head = members[0]
                sources.extend(members[1:])
                targets.extend([head] * (len(members) - 1))
            else:
                # Each point links to the r smallest ids of its bucket other than itself.
                window = members[:r + 1]
                for p in members:
                    chosen = [q for q in window if q != p][:r]
                    sources.extend([p] * len(chosen))
                    targets.extend(chosen)

    # Charging keys, bucket sort and edge dedup.
    account(ledger, 'hash', n * params.s * params.kc, note='lsh keys')
    account(ledger, 'sort', n * params.s, note='buckets')
    account(ledger, 'graph', len(sources), note='candidate edges')
    account(ledger, 'dedup', len(sources), note='edge dedup')
    if params.capped:
        flags.append('lsh_capped')
    edge_index = torch.tensor([sources, targets], dtype=torch.long).reshape(2, -1)
    graph = NeighborGraph(edge_index, points.ids, R, r, C, mode, seed, flags)
    logger.debug('{} graph at R={}: {} edges from {} candidates', mode, R, graph.num_edges, len(sources))
    return graph


def build_lsh_explicit(points, R, r, C, seed, params=None, ledger=None, fallback=True):
    return _lsh_graph(points, R, r, C, seed, params, ledger, fallback, sparse=False)


def build_lsh_sparse(points, R, C, seed, params=None, ledger=None, fallback=True):
    return _lsh_graph(points, R, None, C, seed, params, ledger, fallback, sparse=True)


def square(graph):
    return graph.square()


def build_graph(points, R, r, mode='exact', C=2., seed=0, params=None, ledger=None, fallback=True):
    if mode == 'exact':
        return build_exact(points, R, r, ledger)
    if mode == 'lsh':
        return build_lsh_explicit(points, R, r, C, seed, params, ledger, fallback)
    if mode == 'lsh-sparse':
        # The square of the sparse graph is the near-neighbor graph.
        graph = build_lsh_sparse(points, R, C, seed, params, ledger, fallback)
        squared = graph.square()
        squared.r = r
        account(ledger, 'bfs', squared.num_edges, k=2, note='squaring')
        return squared
    raise RGatherError('Unknown graph mode ' + repr(mode) + '.')


def edge_ratio(points, graph):
    return graph.max_edge_length(points) / graph.R if graph.R else 0.


def verify_neighbor_graph(points, graph, R, r, C_eff):
    violations = []
    if graph.ids.tolist() != points.id_list():
        violations.append('vertex set differs from the point set')
        return NeighborGraphReport(ok=False, violations=violations)

    # Checking edge lengths against C_eff * R.
    d = points.distance_matrix()
    n = len(points)
    row, col = graph.edge_index
    lengths = d[row, col]
    limit = C_eff * R * (1. + TOLERANCE)
    for u, v, length in zip(row.tolist(), col.tolist(), lengths.tolist()):
        if u < v and length > limit:
            violations.append('edge (' + str(graph.ids[u].item()) + ', ' + str(graph.ids[v].item()) + ') has length ' + str(length) + ' > ' + str(C_eff * R))

    # Closed neighbourhoods: either r of them or the whole closed R-ball.
    adj = torch.eye(n, dtype=torch.bool)
    adj[row, col] = True
    ball = d <= R * (1. + TOLERANCE)
    enough = adj.sum(dim=1) >= r
    owns_ball = ~(ball & ~adj).any(dim=1)
    for v in (~(enough | owns_ball)).nonzero().reshape(-1).tolist():
        violations.append('vertex ' + str(graph.ids[v].item()) + ' has ' + str(int(adj[v].sum())) + ' < ' + str(r) + ' neighbors and misses part of its R-ball')

    ratio = lengths.max().item() / R if lengths.numel() > 0 else 0.
    return NeighborGraphReport(ok=not violations, violations=violations, max_edge_ratio=ratio)
