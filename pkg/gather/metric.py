import math
import torch
from models.clustering import ValidationReport
from utils.errors import DimensionMismatchError, OracleCapError, RGatherError

ORACLE_CAP = 12


def dist(p, q):
    p = torch.as_tensor(p, dtype=torch.float64).reshape(-1)
    q = torch.as_tensor(q, dtype=torch.float64).reshape(-1)
    if p.shape != q.shape:
        raise DimensionMismatchError('Cannot compare points of dimension ' + str(p.numel()) + ' and ' + str(q.numel()) + '.')
    return torch.linalg.vector_norm(p - q).item()


def _check_r(points, r):
    if r < 1 or r > len(points):
        raise RGatherError('r must lie in [1, ' + str(len(points)) + '], got ' + str(r) + '.')


def rho_values(points, r):
    # r-th smallest distance per row; the point itself is the 1st.
    _check_r(points, r)
    return torch.kthvalue(points.distance_matrix(), r, dim=1).values


def rho_r(points, pid, r):
    _check_r(points, r)
    return torch.kthvalue(points.distance_matrix()[points.row(pid)], r).values.item()


def rho_hat(points, r):
    return rho_values(points, r).max().item()


def rho_hat_k(points, r, k):
    values = torch.sort(rho_values(points, r), descending=True).values
    if k >= values.numel():
        return 0.
    return values[k].item()


def _center_coords(points, cluster):
    if cluster.center_is_point():
        return points.coords_of(cluster.center)
    center = torch.as_tensor(cluster.center, dtype=torch.float64)
    if center.numel() != points.dim:
        raise DimensionMismatchError('Center has ' + str(center.numel()) + ' coordinates, expected ' + str(points.dim) + '.')
    return center


def member_distances(points, cluster):
    rows = [points.row(pid) for pid in cluster.members]
    return (points.coords[rows] - _center_coords(points, cluster)).norm(dim=1)


def validate(points, solution, k_pow=1):
    # Checking the partition before measuring radii and costs.
    solution.check_partition(points.id_list())
    max_radius, cost = 0., 0.
    for cluster in solution.clusters:
        d = member_distances(points, cluster)
        max_radius = max(max_radius, d.max().item())
        cost += (d ** k_pow).sum().item()
    return ValidationReport(num_clusters=len(solution.clusters),
                            min_size=min([len(c.members) for c in solution.clusters], default=0),
                            max_radius=max_radius,
                            power_cost=cost,
                            outlier_count=len(solution.outliers),
                            k_pow=k_pow)


def _subset_masks(n):
    masks = torch.arange(1 << n, dtype=torch.long)
    return (masks.unsqueeze(1) >> torch.arange(n, dtype=torch.long)) & 1 == 1


def block_costs(points, r, objective='radius', k_pow=1, centers_in_P=True):
    """Cost of every subset of P taken as one cluster, indexed by bitmask.

    Blocks smaller than r cost infinity. With centers in P the cost is the best
    center's max distance ('radius') or power sum ('power'). Free centers give
    half the block's extent in one dimension and half its diameter otherwise.
    """
    n = len(points)
    members = _subset_masks(n)
    d = points.distance_matrix()
    inf = torch.tensor(math.inf, dtype=torch.float64)
    if centers_in_P:
        # Per (mask, center): aggregate of distances from the center to the mask's members.
        weights = d.unsqueeze(0) * members.unsqueeze(1)
        if objective == 'radius':
            per_center = weights.amax(dim=2)
        else:
            per_center = (weights ** k_pow).sum(dim=2)
        per_center = torch.where(members, per_center, inf)
        cost = per_center.amin(dim=1)
    else:
        if objective != 'radius':
            raise RGatherError('Free centers are only supported for the radius objective.')
        pair = members.unsqueeze(2) & members.unsqueeze(1)
        cost = (d.unsqueeze(0) * pair).amax(dim=(1, 2)) / 2.
        if points.dim == 1:
            x = points.coords[:, 0].unsqueeze(0)
            hi = torch.where(members, x, -inf).amax(dim=1)
            lo = torch.where(members, x, inf).amin(dim=1)
            cost = torch.where(members.any(dim=1), (hi - lo) / 2., torch.zeros_like(hi))
    cost = torch.where(members.sum(dim=1) < r, inf, cost)
    cost[0] = 0.
    return cost.tolist()


def partition_table(n, cost, combine):
    """Best partition value of every subset under max or sum combination."""
    best = [math.inf] * (1 << n)
    best[0] = 0.
    for mask in range(1, 1 << n):
        low = mask & -mask
        rest = mask ^ low
        value = math.inf
        # Blocks always contain the lowest member.
        sub = rest
        while True:
            block = sub | low
            c = cost[block]
            if c < value:
                other = best[mask ^ block]
                total = max(c, other) if combine == 'max' else c + other
                if total < value:
                    value = total
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = value
    return best


def _check_cap(points, cap):
    if len(points) > cap:
        raise OracleCapError('Oracle limited to ' + str(cap) + ' points, got ' + str(len(points)) + '.')
    if len(points) == 0:
        raise RGatherError('Oracle needs at least one point.')


def _best_with_outliers(n, best, k):
    full = (1 << n) - 1
    if k <= 0:
        return best[full]
    keep = max(0, n - k)
    return min(best[mask] for mask in range(1 << n) if bin(mask).count('1') >= keep)


def brute_force_opt_radius(points, r, centers_in_P=True, cap=ORACLE_CAP):
    _check_cap(points, cap)
    _check_r(points, r)
    cost = block_costs(points, r, 'radius', centers_in_P=centers_in_P)
    return partition_table(len(points), cost, 'max')[-1]


def brute_force_opt_radius_outliers(points, r, k, centers_in_P=True, cap=ORACLE_CAP):
    _check_cap(points, cap)
    if r < 1:
        raise RGatherError('r must be at least 1.')
    if k >= len(points):
        return 0.
    cost = block_costs(points, r, 'radius', centers_in_P=centers_in_P)
    return _best_with_outliers(len(points), partition_table(len(points), cost, 'max'), k)


def brute_force_opt_power(points, r, k_pow, cap=ORACLE_CAP):
    _check_cap(points, cap)
    _check_r(points, r)
    cost = block_costs(points, r, 'power', k_pow=k_pow)
    return partition_table(len(points), cost, 'sum')[-1]


def lower_bound_check(points, r, cap=ORACLE_CAP):
    # Optimal radius with free centers is at least half of rho_hat.
    return brute_force_opt_radius(points, r, centers_in_P=False, cap=cap) >= rho_hat(points, r) / 2. - 1e-12

