import math
import torch
from typing import NamedTuple
from loguru import logger
from gather import metric
from gather.lsh import lsh_parameters
from gather.nn_graph import build_graph, edge_ratio
from gather.power_graph import nearest_in_khop, ruling_set_power
from models.clustering import Cluster, Clustering, RGatherParams
from utils.errors import InfeasibleError, RGatherError
from utils.utils import derive_seed, make_rng

# Point sets above this size get sampled scale bounds.
EXACT_BOUNDS_LIMIT = 10 ** 4
# Scales probed past the diameter before LSH pipelines give up.
EXTRA_SCALES = 8


class GatherOutcome(NamedTuple):
    clustering: Clustering
    R_used: float
    C_eff: float = 1.
    flags: tuple = ()
    graph: object = None


class ScaleGrid:
    """Geometric list of candidate scales R covering [lo, hi].

    ``lo`` is half the smallest distance between distinct points and ``hi`` the largest
    distance, both exact up to EXACT_BOUNDS_LIMIT points and estimated beyond (flagged
    ``sampled_bounds``). Values are lo * ratio^i up to the first one reaching hi.
    """

    def __init__(self, points, ratio=2., lo=None, seed=0, sample_size=2048):
        if ratio <= 1.:
            raise RGatherError('Grid ratio must exceed 1, got ' + str(ratio) + '.')
        self.ratio = ratio
        self.flags = []
        if len(points) > EXACT_BOUNDS_LIMIT:
            min_d, max_d = self._sampled_bounds(points, seed, sample_size)
            self.flags.append('sampled_bounds')
        else:
            min_d, max_d = points.min_distance(), points.max_distance()

        if min_d is None:
            # Every point coincides with every other one.
            self.lo = lo if lo is not None else 1.
            self.hi = self.lo
        else:
            self.lo = lo if lo is not None else min_d / 2.
            self.hi = max(max_d, self.lo)
        self.values = [self.lo]
        while self.values[-1] < self.hi:
            self.values.append(self.lo * ratio ** len(self.values))

    def _sampled_bounds(self, points, seed, sample_size):
        # Diameter is at most twice the eccentricity of any point; the sampled minimum gets a 2x margin.
        rng = make_rng(seed, 'grid')
        rows = torch.from_numpy(rng.choice(len(points), size=min(sample_size, len(points)), replace=False))
        sample = points.coords[rows]
        d = torch.cdist(sample, sample, compute_mode='donot_use_mm_for_euclid_dist')
        positive = d[d > 0]
        min_d = positive.min().item() / 2. if positive.numel() > 0 else None
        max_d = 2. * (points.coords - points.coords[0]).norm(dim=1).max().item()
        return min_d, max_d

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def extended(self, extra=EXTRA_SCALES):
        return self.values + [self.values[-1] * self.ratio ** j for j in range(1, extra + 1)]


def _lsh_params(points, params):
    if params.mode == 'exact':
        return None
    return lsh_parameters(len(points), params.C, params.seed, params.num_shifts, params.lsh_fallback,
                          kc_max=params.kc_max, s_max=params.s_max)


def _group(nearest, pids):
    clusters = {}
    for pid in pids:
        clusters.setdefault(nearest[pid][0], []).append(pid)
    return [Cluster(center=center, members=sorted(members)) for center, members in sorted(clusters.items())]


def _plain_at_scale(points, r, R, mode, C, beta, seed, lsh, ledger, fallback):
    graph = build_graph(points, R, r, mode, C, seed, lsh, ledger, fallback)
    centers = ruling_set_power(graph, points.id_list(), 2, beta, derive_seed(seed, 'ruling'), ledger)
    nearest = nearest_in_khop(graph, centers, 2 * beta, ledger)
    if any(v is None for v in nearest.values()):
        logger.debug('scale R={}: unreachable points', R)
        return None, graph
    clusters = _group(nearest, points.id_list())
    if any(len(cluster.members) < r for cluster in clusters):
        logger.debug('scale R={}: smallest cluster below r', R)
        return None, graph
    return Clustering(clusters=clusters), graph


def rgather_at_scale(points, r, R, mode='exact', C=2., beta=1, seed=0, lsh=None, ledger=None, fallback=True):
    return _plain_at_scale(points, r, R, mode, C, beta, seed, lsh, ledger, fallback)[0]


def _c_eff(points, graph, mode):
    return 1. if mode == 'exact' else max(1., edge_ratio(points, graph))


def rgather(points, r, params=None, ledger=None):
    params = params or RGatherParams(r=r)
    n = len(points)
    if r > n:
        raise InfeasibleError('r=' + str(r) + ' exceeds the number of points ' + str(n) + '.')
    grid = ScaleGrid(points, params.grid_ratio, params.grid_lo, params.seed)
    lsh = _lsh_params(points, params)
    scales = grid.values if params.mode == 'exact' else grid.extended()

    # Probing scales upwards until the first feasible one.
    for i, R in enumerate(scales):
        seed = derive_seed(params.seed, 'scale', i)
        clustering, graph = _plain_at_scale(points, r, R, params.mode, params.C, params.beta, seed, lsh, ledger, params.lsh_fallback)
        if clustering is None:
            continue
        logger.info('plain r-gather feasible at R={} with {} clusters', R, len(clustering.clusters))
        return GatherOutcome(clustering, R, _c_eff(points, graph, params.mode), grid.flags + graph.flags, graph)
    raise InfeasibleError('No feasible scale for r=' + str(r) + ' among ' + str(len(scales)) + ' probed values.')


def rgather_outliers(points, r, k_out, params=None, ledger=None):
    params = params or RGatherParams(r=r, k_out=k_out)
    n = len(points)
    grid = ScaleGrid(points, params.grid_ratio, params.grid_lo, params.seed)
    lsh = _lsh_params(points, params)
    scales = grid.values if params.mode == 'exact' else grid.extended()

    for i, R in enumerate(scales):
        seed = derive_seed(params.seed, 'scale', i)
        graph = build_graph(points, R, r, params.mode, params.C, seed, lsh, ledger, params.lsh_fallback)
        # Only points with r closed neighbours may become centers.
        dense = graph.ids_of((graph.closed_degree() >= r).nonzero().reshape(-1).tolist())
        centers = ruling_set_power(graph, dense, 2, params.beta, derive_seed(seed, 'ruling'), ledger) if dense else []
        nearest = nearest_in_khop(graph, centers, 2 * params.beta, ledger)
        assigned = [pid for pid in points.id_list() if nearest[pid] is not None]
        if len(assigned) < n - k_out:
            logger.debug('scale R={}: {} outliers exceed budget {}', R, n - len(assigned), k_out)
            continue
        clusters = _group(nearest, assigned)
        if any(len(cluster.members) < r for cluster in clusters):
            logger.debug('scale R={}: smallest cluster below r', R)
            continue
        # Unreached points are the outliers.
        outliers = sorted(set(points.id_list()) - set(assigned))
        logger.info('outlier r-gather feasible at R={} with {} outliers', R, len(outliers))
        return GatherOutcome(Clustering(clusters=clusters, outliers=outliers), R, _c_eff(points, graph, params.mode), grid.flags + graph.flags, graph)
    raise InfeasibleError('No scale leaves at most ' + str(k_out) + ' outliers for r=' + str(r) + '.')


def rgather_pointwise(points, r, params=None, ledger=None):
    # Phase i works at R_i = 2^i * lo; every point is served at the phase matching its own rho_r.
    params = params or RGatherParams(r=r)
    n = len(points)
    if r > n:
        raise InfeasibleError('r=' + str(r) + ' exceeds the number of points ' + str(n) + '.')
    grid = ScaleGrid(points, 2., params.grid_lo, params.seed)
    L = max(0, math.ceil(math.log2(grid.hi / grid.lo))) if grid.hi > grid.lo else 0
    phases = L + 1 if params.mode == 'exact' else L + 1 + EXTRA_SCALES
    lsh = _lsh_params(points, params)

    clusters = []
    owner = {}
    C_eff, flags = 1., list(grid.flags)
    for i in range(phases):
        R = grid.lo * 2. ** i
        seed = derive_seed(params.seed, 'phase', i)
        graph = build_graph(points, R, r, params.mode, params.C, seed, lsh, ledger, params.lsh_fallback)
        C_eff = max(C_eff, _c_eff(points, graph, params.mode))
        flags.extend(f for f in graph.flags if f not in flags)
        before = dict(owner)

        # Dense points not touching an earlier cluster seed new ones.
        dense = set(graph.ids_of((graph.closed_degree() >= r).nonzero().reshape(-1).tolist()))
        touching = set(before)
        for pid in before:
            touching.update(graph.neighbors(pid))
        fresh = sorted(dense - touching)

        # Ruling set of G^2 on the seeds, then assignment of the unclustered points.
        centers = ruling_set_power(graph, fresh, 2, params.beta, derive_seed(seed, 'ruling'), ledger) if fresh else []
        nearest = nearest_in_khop(graph, centers, 2 * params.beta, ledger)
        new_members = [pid for pid in points.id_list() if pid not in before and nearest[pid] is not None]
        formed = _group(nearest, new_members)

        # Late joins attach to the smallest-id clustered neighbour from earlier phases.
        placed = set(new_members)
        for pid in sorted(dense - placed - set(before)):
            anchors = sorted(q for q in graph.neighbors(pid) if q in before)
            if not anchors:
                continue
            target = before[anchors[0]]
            clusters[target].members.append(pid)
            owner[pid] = target

        for cluster in formed:
            cluster.scale = R
            for pid in cluster.members:
                owner[pid] = len(clusters)
            clusters.append(cluster)
        logger.debug('phase R={}: {} new clusters, {} points clustered', R, len(formed), len(owner))
        if len(owner) == n:
            break

    if len(owner) < n:
        raise InfeasibleError('Pointwise r-gather left ' + str(n - len(owner)) + ' points unclustered.')
    for cluster in clusters:
        cluster.members.sort()
    return GatherOutcome(Clustering(clusters=clusters), grid.lo * 2. ** i, C_eff, flags, graph)


def total_power_cost(points, clustering, k_pow=1):
    return sum((metric.member_distances(points, cluster) ** k_pow).sum().item() for cluster in clustering.clusters)


def brute_force_opt_power_cost(points, r, k_pow=1, cap=metric.ORACLE_CAP):
    return metric.brute_force_opt_power(points, r, k_pow, cap)
