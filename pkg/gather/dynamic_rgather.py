import math
from typing import NamedTuple
from loguru import logger
from models.clustering import Cluster, Clustering
from models.navigating_net import MetricSpace, NavigatingNet
from utils.errors import EmptyStructureError, InfeasibleError, RGatherError, UnknownPointError


class Assignment(NamedTuple):
    center: int
    radius: float


class Snapshot(NamedTuple):
    clustering: Clustering
    radius: float
    exponent: int = 0


class ScaleState:
    """Free pool and capped pre-clusters of one scale. The pool is a navigating net sharing the point coordinates."""

    def __init__(self, space, alpha=1.):
        self.pool = NavigatingNet(space, alpha)
        self.groups = {}
        self.owner = {}

    def open(self, q):
        self.groups[q] = {q}
        self.owner[q] = q

    def join(self, q, p):
        self.groups[q].add(p)
        self.owner[p] = q

    def leave(self, p):
        q = self.owner.pop(p)
        self.groups[q].discard(p)
        return q

    def close(self, q):
        members = self.groups.pop(q)
        for p in members:
            self.owner.pop(p, None)
        return sorted(members - {q})

    def pull(self, q, within, cap, eps, limit=None):
        # Claims approximate nearest pool points for q while they stay within range.
        taken = 0
        while len(self.groups[q]) < cap and len(self.pool) and (limit is None or taken < limit):
            y, d = self.pool.nearest(q, eps)
            if not within(d):
                break
            self.pool.delete(y)
            self.join(q, y)
            taken += 1
        return taken

    def clone(self):
        other = ScaleState.__new__(ScaleState)
        other.pool = self.pool.clone()
        other.groups = {q: set(members) for q, members in self.groups.items()}
        other.owner = dict(self.owner)
        return other

    def check(self, tag, points, space, r, radius, strict):
        violations = []
        listed = sorted(list(self.pool.members) + [p for members in self.groups.values() for p in members])
        if listed != points:
            violations.append(tag + ': pool and pre-clusters do not partition the point set')
        for q, members in self.groups.items():
            if q not in members:
                violations.append(tag + ': pre-cluster of ' + str(q) + ' misses its center')
            if len(members) > r:
                violations.append(tag + ': pre-cluster of ' + str(q) + ' holds ' + str(len(members)) + ' > r points')
            for p in members:
                d = space.distance(q, p)
                if (d >= radius) if strict else (d > radius):
                    violations.append(tag + ': member ' + str(p) + ' lies ' + str(d) + ' from center ' + str(q))
                if self.owner.get(p) != q:
                    violations.append(tag + ': owner of ' + str(p) + ' is not ' + str(q))
        return violations


def _centers_clustering(assignments):
    clusters = {}
    for pid, center in assignments.items():
        clusters.setdefault(center, []).append(pid)
    return Clustering(clusters=[Cluster(center=c, members=sorted(m)) for c, m in sorted(clusters.items())])


class IncrementalRGather:
    '''
    Insertion-only r-gather over scales base * 2^i, i = 0..levels.

    Level i keeps a net N_i of points more than 4 C^2 base 2^i apart (as seen through
    approximate nearest neighbour queries), a pre-cluster of at most r points within
    2 C base 2^i of each net point and a pool of everything else.
    '''

    def __init__(self, r, eps=1., base=1., levels=32, distance=None):
        if r < 1:
            raise RGatherError('r must be at least 1, got ' + str(r) + '.')
        if eps <= 0 or base <= 0 or levels < 0:
            raise RGatherError('Need eps > 0, base > 0 and levels >= 0.')
        self.r, self.eps, self.base, self.levels = r, eps, base, levels
        self.C = 1. + eps
        self.space = MetricSpace(distance)
        self.points = set()
        self.nets = [NavigatingNet(self.space) for _ in range(levels + 1)]
        self.scales = [ScaleState(self.space) for _ in range(levels + 1)]

    def radius(self, i):
        return self.base * 2. ** i

    def insert(self, pid, coords):
        if pid in self.points:
            raise UnknownPointError('Point id ' + str(pid) + ' is already present.')
        self.space.add(pid, coords)
        self.points.add(pid)
        C = self.C
        for i in range(self.levels + 1):
            R, net, state = self.radius(i), self.nets[i], self.scales[i]
            q, d = net.nearest(pid, self.eps) if len(net) else (None, math.inf)
            if d > 4. * C * C * R:
                net.insert(pid)
                state.open(pid)
                state.pull(pid, lambda x: x <= 2. * C * R, self.r, self.eps)
            elif d <= 2. * C * R and len(state.groups[q]) < self.r:
                state.join(q, pid)
            else:
                state.pool.insert(pid)

    def feasible_level(self):
        for i, state in enumerate(self.scales):
            if state.groups and all(len(members) >= self.r for members in state.groups.values()):
                return i
        raise InfeasibleError('No level has pre-clusters of size ' + str(self.r) + ' yet.')

    def query(self, pid):
        if not self.points:
            raise EmptyStructureError('Query on an empty structure.')
        if pid not in self.points:
            raise UnknownPointError('Unknown point id ' + str(pid) + '.')
        i = self.feasible_level()
        bound = 4. * self.C ** 3 * self.radius(i)
        state = self.scales[i]
        if pid in state.owner:
            return Assignment(state.owner[pid], bound)
        return Assignment(self.nets[i].nearest(pid, self.eps)[0], bound)

    def query_all(self):
        if not self.points:
            raise EmptyStructureError('Query on an empty structure.')
        i = self.feasible_level()
        assignments = {pid: self.query(pid).center for pid in sorted(self.points)}
        return Snapshot(_centers_clustering(assignments), 4. * self.C ** 3 * self.radius(i), i)

    def check_invariants(self):
        violations = []
        points = sorted(self.points)
        d = self.space.distance
        C = self.C
        for i, (net, state) in enumerate(zip(self.nets, self.scales)):
            R, tag = self.radius(i), 'level ' + str(i)
            centers = sorted(net.members)
            if sorted(state.groups) != centers:
                violations.append(tag + ': pre-cluster keys differ from the net')
            for k, u in enumerate(centers):
                for v in centers[k + 1:]:
                    if d(u, v) <= 4. * C * R:
                        violations.append(tag + ': net points ' + str(u) + ' and ' + str(v) + ' within ' + str(4. * C * R))
            for p in points:
                nearest = min((d(p, u) for u in centers), default=math.inf)
                if nearest > 4. * C * C * R:
                    violations.append(tag + ': point ' + str(p) + ' not covered within ' + str(4. * C * C * R))
                if p not in net and nearest > 2. * C * R and p not in state.pool:
                    violations.append(tag + ': far point ' + str(p) + ' missing from the pool')
            for u in centers:
                near = sum(1 for p in points if d(u, p) <= 2. * R)
                if len(state.groups[u]) < min(self.r, near):
                    violations.append(tag + ': pre-cluster of ' + str(u) + ' has ' + str(len(state.groups[u])) + ' < min(r, ' + str(near) + ') points')
            violations.extend(state.check(tag, points, self.space, self.r, 2. * C * R, strict=False))
        return violations


class DynamicRGather:
    '''
    Fully dynamic r-gather on a navigating net with scales R(i) = alpha * 2^i.

    Only the exponents between the largest one whose net is the whole point set and
    top + log2(4 C') (C' the power of two at or above C) are stored; below that range every
    point is its own pre-cluster and above it the state of the highest stored scale applies.
    Pre-clusters hold at most r points within R/2 of their net point.
    '''

    def __init__(self, r, eps=1., alpha=1., distance=None):
        if r < 1:
            raise RGatherError('r must be at least 1, got ' + str(r) + '.')
        if eps <= 0:
            raise RGatherError('ANN eps must be positive, got ' + str(eps) + '.')
        self.r, self.eps, self.alpha = r, eps, alpha
        self.C = 1. + eps
        self.reach = int(math.log2(4. * 2 ** math.ceil(math.log2(self.C))))
        self.space = MetricSpace(distance)
        self.net = NavigatingNet(self.space, alpha)
        self.scales = {}

    def __len__(self):
        return len(self.net)

    def __contains__(self, pid):
        return pid in self.net

    def active_range(self):
        if len(self.net) < 2:
            return None
        return self.net.lowest(), self.net.top + self.reach

    def _materialize(self, i, old, fresh):
        if i in old:
            return old[i]
        if old and i > max(old):
            return old[max(old)].clone()
        state = ScaleState(self.space, self.alpha)
        for q in self.net.members - {fresh}:
            state.open(q)
        return state

    def _expand(self, fresh):
        lo, hi = self.active_range()
        old = self.scales
        self.scales = {i: self._materialize(i, old, fresh) for i in range(lo, hi + 1)}

    def insert(self, pid, coords):
        if pid in self.net:
            raise UnknownPointError('Point id ' + str(pid) + ' is already present.')
        self.space.add(pid, coords)
        try:
            self.net.insert(pid)
        except RGatherError:
            self.space.remove(pid)
            raise
        if len(self.net) == 1:
            return
        self._expand(pid)
        for i, state in self.scales.items():
            R = self.net.scale(i)
            if self.net.in_net(pid, i):
                state.open(pid)
                state.pull(pid, lambda d: d < R / 2., self.r, self.eps)
                continue
            q, d = self.net.nearest(pid, self.eps, floor=i)
            if d < R / 2. and len(state.groups[q]) < self.r:
                state.join(q, pid)
            else:
                state.pool.insert(pid)
        logger.debug('dynamic insert {}: scales {}', pid, self.active_range())

    def delete(self, pid):
        if pid not in self.net:
            raise UnknownPointError('Unknown point id ' + str(pid) + '.')
        old_root, old_level = self.net.root, self.net.level.get(pid)
        promoted = self.net.delete(pid)
        if len(self.net) <= 1:
            self.space.remove(pid)
            self._rebuild()
            return promoted

        lo, hi = self.active_range()
        if self.net.root != old_root:
            z = self.net.root
            start = max(j for j, pts in promoted.items() if z in pts)
            for j in range(start + 1, hi + 1):
                promoted.setdefault(j, set()).add(z)
        self._expand(None)

        for i, state in self.scales.items():
            R = self.net.scale(i)
            within = lambda d, R=R: d < R / 2.
            if pid == old_root or old_level >= i:
                for v in state.close(pid):
                    state.pool.insert(v)
            elif pid in state.pool:
                state.pool.delete(pid)
            else:
                q = state.leave(pid)
                state.pull(q, within, self.r, self.eps, limit=1)
            for x in sorted(promoted.get(i, ())):
                if x in state.pool:
                    state.pool.delete(x)
                elif x in state.owner:
                    q = state.leave(x)
                    state.pull(q, within, self.r, self.eps, limit=1)
                state.open(x)
                state.pull(x, within, self.r, self.eps)
        self.space.remove(pid)
        logger.debug('dynamic delete {}: promoted {}', pid, {i: sorted(p) for i, p in sorted(promoted.items())})
        return promoted

    def _rebuild(self):
        # At most one point left: start over from it.
        survivors = sorted(self.net.members)
        self.net = NavigatingNet(self.space, self.alpha)
        self.scales = {}
        for pid in survivors:
            self.net.insert(pid)

    def feasible_exponent(self):
        for i, state in sorted(self.scales.items()):
            if all(len(members) >= self.r for members in state.groups.values()):
                return i
        raise InfeasibleError('No scale has pre-clusters of size ' + str(self.r) + ' for ' + str(len(self.net)) + ' points.')

    def _single(self):
        if self.r > 1:
            raise InfeasibleError('A single point cannot form a cluster of size ' + str(self.r) + '.')
        return self.net.root

    def query(self, pid):
        if not len(self.net):
            raise EmptyStructureError('Query on an empty structure.')
        if pid not in self.net:
            raise UnknownPointError('Unknown point id ' + str(pid) + '.')
        if len(self.net) == 1:
            return Assignment(self._single(), 0.)
        i = self.feasible_exponent()
        bound = 2. * self.C * self.net.scale(i)
        state = self.scales[i]
        if pid in state.owner:
            return Assignment(state.owner[pid], bound)
        return Assignment(self.net.nearest(pid, self.eps, floor=i)[0], bound)

    def query_all(self):
        if not len(self.net):
            raise EmptyStructureError('Query on an empty structure.')
        if len(self.net) == 1:
            center = self._single()
            return Snapshot(Clustering(clusters=[Cluster(center=center, members=[center])]), 0.)
        i = self.feasible_exponent()
        assignments = {pid: self.query(pid).center for pid in sorted(self.net.members)}
        return Snapshot(_centers_clustering(assignments), 2. * self.C * self.net.scale(i), i)

    def check_invariants(self, net=True):
        violations = list(self.net.check_invariants()) if net else []
        points = sorted(self.net.members)
        if len(points) <= 1:
            if self.scales:
                violations.append('scales stored for ' + str(len(points)) + ' points')
            return violations
        lo, hi = self.active_range()
        if sorted(self.scales) != list(range(lo, hi + 1)):
            violations.append('stored scales ' + str(sorted(self.scales)) + ' differ from [' + str(lo) + ', ' + str(hi) + ']')
        d = self.space.distance
        for i, state in sorted(self.scales.items()):
            R, tag = self.net.scale(i), 'exponent ' + str(i)
            Y = self.net.net(i)
            if sorted(state.groups) != Y:
                violations.append(tag + ': pre-cluster keys differ from the net')
            for p in points:
                if p in state.pool.members or p in Y:
                    continue
                if min(d(p, y) for y in Y) >= R / 2.:
                    violations.append(tag + ': point ' + str(p) + ' is at least R/2 from the net but not pooled')
            violations.extend(state.check(tag, points, self.space, self.r, R / 2., strict=True))
            if net:
                violations.extend(tag + ' pool: ' + v for v in state.pool.check_invariants())
        return violations

    def adequacy_warnings(self):
        warnings = []
        points = sorted(self.net.members)
        for i, state in sorted(self.scales.items()):
            R = self.net.scale(i)
            for q, members in sorted(state.groups.items()):
                near = sum(1 for p in points if self.space.distance(q, p) < R / (2. * self.C))
                if len(members) < min(self.r, near):
                    warnings.append('exponent ' + str(i) + ': pre-cluster of ' + str(q) + ' has ' + str(len(members)) + ' < min(r, ' + str(near) + ') points')
        for warning in warnings:
            logger.warning(warning)
        return warnings
