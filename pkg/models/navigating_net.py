import math
import numpy as np
from loguru import logger
from utils.errors import DimensionMismatchError, EmptyStructureError, RGatherError, UnknownPointError


def euclidean(u, v):
    return float(np.linalg.norm(u - v))


class MetricSpace:
    """Coordinate store with a pluggable distance callback and a symmetric distance cache."""

    def __init__(self, distance=None):
        self.distance_fn = distance or euclidean
        self.coords = {}
        self.dim = None
        self._where = {}
        self._cache = {}

    def __contains__(self, pid):
        return pid in self.coords

    def __len__(self):
        return len(self.coords)

    def add(self, pid, coords):
        coords = np.asarray(coords, dtype=np.float64).reshape(-1)
        if self.dim is None:
            self.dim = coords.shape[0]
        elif coords.shape[0] != self.dim:
            raise DimensionMismatchError('Point ' + str(pid) + ' has ' + str(coords.shape[0]) + ' coordinates, expected ' + str(self.dim) + '.')
        if pid in self.coords:
            raise UnknownPointError('Point id ' + str(pid) + ' is already present.')
        key = coords.tobytes()
        if key in self._where:
            raise RGatherError('Point ' + str(pid) + ' coincides with point ' + str(self._where[key]) + '.')
        self.coords[pid] = coords
        self._where[key] = pid

    def remove(self, pid):
        if pid not in self.coords:
            raise UnknownPointError('Unknown point id ' + str(pid) + '.')
        del self._where[self.coords.pop(pid).tobytes()]
        self._cache = {key: d for key, d in self._cache.items() if pid not in key}

    def distance(self, a, b):
        if a == b:
            return 0.
        key = (a, b) if a < b else (b, a)
        d = self._cache.get(key)
        if d is None:
            d = self.distance_fn(self.coords[a], self.coords[b])
            self._cache[key] = d
        return d

    def distance_to(self, coords, pid):
        return self.distance_fn(np.asarray(coords, dtype=np.float64).reshape(-1), self.coords[pid])


class NavigatingNet:
    '''
    Hierarchy of nets Y_i at scales R(i) = alpha * 2^i over a MetricSpace.

    Every point lives in Y_i for i up to its level; the root lives at every scale and
    Y_i = {root} from ``top`` upwards. Points of Y_i are at least R(i) apart and every point
    of Y_{i-1} lies closer than R(i) to some point of Y_i. The navigation list of x at scale i
    holds the points of Y_{i-1} within 4 R(i) of x; only lists other than {x} are stored, with
    a reverse index from each point to the lists holding it.

    Several nets may share one MetricSpace; only a net that created its space drops coordinates from it.
    '''

    def __init__(self, space=None, alpha=1.):
        if not .5 < alpha <= 1.:
            raise RGatherError('Base scale alpha must lie in (1/2, 1], got ' + str(alpha) + '.')
        self._owns_space = space is None
        self.space = space if space is not None else MetricSpace()
        self.alpha = alpha
        self.members = set()
        self.root = None
        self.top = None
        self.level = {}
        self.lists = {}
        self.owned = {}
        self.holders = {}

    def __len__(self):
        return len(self.members)

    def __contains__(self, pid):
        return pid in self.members

    def scale(self, i):
        return self.alpha * 2. ** i

    def _d(self, a, b):
        return self.space.distance(a, b)

    def in_net(self, x, i):
        return x == self.root or self.level.get(x, -math.inf) >= i

    def net(self, i):
        return sorted(x for x in self.members if self.in_net(x, i))

    def lowest(self):
        # Largest exponent whose net is the whole point set.
        return min(self.level.values()) if self.level else None

    def navigation_list(self, x, i):
        return self.lists.get((x, i), {x})

    def _exponent_above(self, d):
        i = math.floor(math.log2(d / self.alpha)) + 1
        while self.scale(i - 1) > d:
            i -= 1
        while self.scale(i) <= d:
            i += 1
        return i

    def _link(self, x, i, z):
        if z == x:
            return
        self.lists.setdefault((x, i), {x}).add(z)
        self.owned.setdefault(x, set()).add(i)
        self.holders.setdefault(z, set()).add((x, i))

    def insert(self, pid, coords=None):
        if pid in self.members:
            raise UnknownPointError('Point id ' + str(pid) + ' is already in the net.')
        if coords is not None:
            self.space.add(pid, coords)
        elif pid not in self.space:
            raise UnknownPointError('No coordinates known for point ' + str(pid) + '.')

        if not self.members:
            self.members.add(pid)
            self.root, self.top = pid, None
            return

        d_root = self._d(pid, self.root)
        if d_root == 0.:
            self._reject(pid, coords, self.root)
        top = self._exponent_above(d_root)
        if self.top is not None:
            top = max(top, self.top)

        # Descent: zs[i] ends up as the points of Y_i within 8 R(i) of pid.
        zs = {top: {self.root}}
        i = top
        while zs[i]:
            below = set()
            for y in zs[i]:
                below.update(self.navigation_list(y, i))
            zs[i - 1] = set()
            for x in below:
                d = self._d(pid, x)
                if d == 0.:
                    self._reject(pid, coords, x)
                if d <= 8. * self.scale(i - 1):
                    zs[i - 1].add(x)
            i -= 1
        bottom = i

        # Level of pid: climb while the net at the next scale keeps its distance.
        hat = bottom
        while hat + 1 < top and min((self._d(pid, x) for x in zs[hat + 1]), default=math.inf) >= self.scale(hat + 1):
            hat += 1

        self.members.add(pid)
        self.level[pid] = hat
        for i in range(bottom + 1, hat + 2):
            for x in zs[i]:
                if self._d(pid, x) <= 4. * self.scale(i):
                    self._link(x, i, pid)
            if i <= hat:
                for z in zs[i - 1]:
                    self._link(pid, i, z)
        self.top = hat + 1 if self.top is None else max(self.top, hat + 1)
        logger.debug('net insert {}: level {} (descent bottom {}, top {})', pid, hat, bottom, self.top)

    def _reject(self, pid, coords, other):
        if coords is not None:
            self.space.remove(pid)
        raise RGatherError('Point ' + str(pid) + ' coincides with point ' + str(other) + '.')

    def delete(self, pid, upto=None):
        '''
        Removes pid and restores both net properties by promoting points of the finer net
        scale by scale. Returns {exponent: set of points newly added to that net}; a point that
        becomes the root is reported at every scale from its promotion up to ``upto``
        (default: the current top).
        '''
        if pid not in self.members:
            raise UnknownPointError('Unknown point id ' + str(pid) + '.')
        upto = self.top if upto is None else upto
        promoted = {}
        if len(self.members) <= 2:
            self.members.discard(pid)
            self.root = next(iter(self.members)) if self.members else None
            self.top = None
            self.level, self.lists, self.owned, self.holders = {}, {}, {}, {}
            self._release(pid)
            return promoted

        i = min(self.owned.get(pid, ()), default=None)
        limit = (self.top if self.top is not None else 0) + 64
        prev = set()
        while i is not None:
            if i > limit:
                raise RuntimeError('Navigating net promotion did not settle below exponent ' + str(limit) + '.')
            present = self.in_net(pid, i)
            if not prev and not present:
                break
            if len(prev) == 1 and set(self.net(i - 1)) - {pid} == prev:
                z = next(iter(prev))
                self.root = z
                self.level.pop(z, None)
                for j in range(i, max(upto, i - 1) + 1):
                    promoted.setdefault(j, set()).add(z)
                break

            candidates = set(prev)
            if present:
                candidates |= self.navigation_list(pid, i) - {pid}
            current = set()
            R = self.scale(i)
            for x in sorted(candidates):
                if self.in_net(x, i):
                    continue
                if any(y != pid and self.in_net(y, i) and self._d(x, y) < R for y in self.navigation_list(x, i - 1)):
                    continue
                self.level[x] = i
                current.add(x)
                self._relist(x, i, pid)
            if current:
                promoted[i] = current
                logger.debug('net delete {}: promoted {} to exponent {}', pid, sorted(current), i)
            prev = current
            i += 1

        self._forget(pid)
        if self.root == pid:
            raise RuntimeError('Navigating net lost its root while deleting ' + str(pid) + '.')
        self.top = max(self.level.values()) + 1 if self.level else None
        self._release(pid)
        return promoted

    def _relist(self, x, i, pid):
        # Rebuilds the list of x at scale i and enters x into the lists one scale up.
        R = self.scale(i)
        for z in self.members:
            if z == pid or z == x:
                continue
            d = self._d(x, z)
            if d <= 4. * R and self.in_net(z, i - 1):
                self._link(x, i, z)
            if d <= 8. * R and self.in_net(z, i + 1):
                self._link(z, i + 1, x)

    def _forget(self, pid):
        for i in self.owned.pop(pid, set()):
            for z in self.lists.pop((pid, i)) - {pid}:
                self.holders[z].discard((pid, i))
        for x, i in list(self.holders.pop(pid, set())):
            entry = self.lists[(x, i)]
            entry.discard(pid)
            if len(entry) == 1:
                del self.lists[(x, i)]
                self.owned[x].discard(i)
        self.members.discard(pid)
        self.level.pop(pid, None)

    def _release(self, pid):
        if self._owns_space:
            self.space.remove(pid)

    def ann(self, q, eps=1., floor=None):
        '''
        (1+eps)-approximate nearest neighbour of coordinates q, descending from the root scale.
        With ``floor`` the descent stops at that exponent and the answer is taken from Y_floor.
        Returns (point id, distance); ties go to the smaller id.
        '''
        if not self.members:
            raise EmptyStructureError('Nearest neighbor query on an empty net.')
        if eps <= 0:
            raise RGatherError('ANN eps must be positive, got ' + str(eps) + '.')
        dist = {self.root: self.space.distance_to(q, self.root)}
        if len(self.members) == 1:
            return self.root, dist[self.root]

        i, Z = self.top, {self.root}
        while True:
            dz = min(dist[z] for z in Z)
            if floor is not None and i <= floor:
                break
            if 2. * self.scale(i) * (1. + 1. / eps) <= dz:
                break
            if len(Z) == 1 and not any(j <= i for j in self.owned.get(next(iter(Z)), ())):
                break
            below = set()
            for z in Z:
                below.update(self.navigation_list(z, i))
            for y in below:
                if y not in dist:
                    dist[y] = self.space.distance_to(q, y)
            Z = {y for y in below if dist[y] <= dz + self.scale(i)}
            i -= 1
        best = min(Z, key=lambda y: (dist[y], y))
        return best, dist[best]

    def nearest(self, pid, eps=1., floor=None):
        return self.ann(self.space.coords[pid], eps, floor)

    def clone(self):
        other = NavigatingNet(self.space, self.alpha)
        other._owns_space = False
        other.members = set(self.members)
        other.root, other.top = self.root, self.top
        other.level = dict(self.level)
        other.lists = {key: set(entry) for key, entry in self.lists.items()}
        other.owned = {x: set(levels) for x, levels in self.owned.items()}
        other.holders = {z: set(keys) for z, keys in self.holders.items()}
        return other

    def check_invariants(self):
        violations = []
        if len(self.members) <= 1:
            if self.lists or self.level:
                violations.append('net with ' + str(len(self.members)) + ' points keeps levels or lists')
            return violations
        if self.root not in self.members:
            violations.append('root ' + str(self.root) + ' is not a member')
        pts = sorted(self.members)
        d_min = min(self._d(a, b) for k, a in enumerate(pts) for b in pts[k + 1:])
        low = min(self.lowest(), self._exponent_above(d_min / 4.) - 1)
        if any(level >= self.top for level in self.level.values()):
            violations.append('a non-root point reaches the top exponent ' + str(self.top))

        for i in range(low, self.top + 2):
            R = self.scale(i)
            Y, finer = self.net(i), self.net(i - 1)
            for k, a in enumerate(Y):
                for b in Y[k + 1:]:
                    if self._d(a, b) < R:
                        violations.append('Y_' + str(i) + ': points ' + str(a) + ' and ' + str(b) + ' closer than ' + str(R))
            for y in finer:
                if not any(self._d(x, y) < R for x in Y):
                    violations.append('Y_' + str(i) + ' does not cover point ' + str(y) + ' of Y_' + str(i - 1))
            for p in pts:
                if not any(self._d(x, p) < 2. * R for x in Y):
                    violations.append('point ' + str(p) + ' farther than ' + str(2. * R) + ' from Y_' + str(i))
            for x in Y:
                expected = {z for z in finer if self._d(x, z) <= 4. * R}
                if self.navigation_list(x, i) != expected:
                    violations.append('list of ' + str(x) + ' at exponent ' + str(i) + ' is ' + str(sorted(self.navigation_list(x, i))) + ', expected ' + str(sorted(expected)))

        for (x, i), entry in self.lists.items():
            if x not in self.members or not self.in_net(x, i) or not low <= i <= self.top:
                violations.append('stale list stored for ' + str(x) + ' at exponent ' + str(i))
            for z in entry - {x}:
                if (x, i) not in self.holders.get(z, ()):
                    violations.append('reverse index misses ' + str(z) + ' in the list of ' + str(x) + ' at exponent ' + str(i))
        return violations
