import math
import numpy as np
from functools import lru_cache
from loguru import logger
from pydantic import BaseModel
from models.point_set import PointSet
from utils.errors import DimensionMismatchError, RGatherError
from utils.utils import make_rng

# Key of a point that no shifted grid ball covers.
NOT_COVERED = None
# Far pairs lie beyond FAR_FACTOR * C at scale 1; hashed edges are at most this long w.h.p.
FAR_FACTOR = 10.


class JlProjection:

    def __init__(self, dim, n, eps, seed, c_jl=8.):
        if not 0. < eps < 1.:
            raise RGatherError('JL distortion eps must lie in (0, 1), got ' + str(eps) + '.')
        self.dim = dim
        self.eps = eps
        self.seed = seed
        self.t = max(1, math.ceil(c_jl / eps ** 2 * math.log(max(n, 2))))
        self.scale = 1. / math.sqrt(self.t)
        self.matrix = make_rng(seed, 'jl').standard_normal((self.t, dim)) * self.scale

    def __call__(self, points):
        if points.dim != self.dim:
            raise DimensionMismatchError('Projection expects dimension ' + str(self.dim) + ', got ' + str(points.dim) + '.')
        coords = points.coords.numpy() @ self.matrix.T
        return PointSet(points.id_list(), coords, self.t)


def jl_project(points, eps, seed, c_jl=8.):
    return JlProjection(points.dim, len(points), eps, seed, c_jl)(points)


def _cells(proj, shifts, w, fallback):
    '''
    Grid ball lookup for projected points.
    Shifted grid u has centers shifts[u] + 4w * Z^t; a point is covered by u when it lies
    within w of its nearest center. The key is the first covering u and that center's cell.
    '''
    width = 4. * w
    rel = (proj[:, None, :] - shifts[None, :, :]) / width
    cell = np.round(rel)
    covered = np.linalg.norm((rel - cell) * width, axis=2) <= w
    first = covered.argmax(axis=1)
    hit = covered.any(axis=1)

    keys = []
    for i in range(proj.shape[0]):
        if hit[i]:
            u = int(first[i])
            keys.append((u, tuple(int(x) for x in cell[i, u])))
        elif fallback:
            keys.append((-1, tuple(int(x) for x in np.floor(proj[i] / width))))
        else:
            keys.append(NOT_COVERED)
    return keys


class LshFunction:
    """One draw h of the ball-carving Euclidean hash.

    Points are projected by a t x d Gaussian matrix scaled by 1/sqrt(t) and looked up in
    ``num_shifts`` randomly shifted grids of 4w-wide cells. Every draw is fixed by
    (seed, stream).
    """

    def __init__(self, dim, t, w, seed, stream=(), num_shifts=64):
        if w <= 0:
            raise RGatherError('Cell parameter w must be positive.')
        if num_shifts < 1:
            raise RGatherError('At least one grid shift is required.')
        self.dim, self.t, self.w = dim, t, w
        self.seed, self.stream = seed, tuple(stream)
        self.num_shifts = num_shifts
        rng = make_rng(seed, 'lsh', *self.stream)
        self.A = rng.standard_normal((t, dim)) / math.sqrt(t)
        self.shifts = rng.uniform(0., 4. * w, size=(num_shifts, t))

    def hash_points(self, coords, fallback=False):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise DimensionMismatchError('Hash expects rows of dimension ' + str(self.dim) + ', got shape ' + str(coords.shape) + '.')
        return _cells(coords @ self.A.T, self.shifts, self.w, fallback)


def lsh_hash(f, p, fallback=False):
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.shape[0] != f.dim:
        raise DimensionMismatchError('Hash expects dimension ' + str(f.dim) + ', got ' + str(p.shape[0]) + '.')
    return f.hash_points(p[None, :], fallback)[0]


def lsh_keys(g, coords, fallback=False):
    # Concatenated keys of every row; NOT_COVERED as soon as one component is.
    columns = [f.hash_points(coords, fallback) for f in g]
    keys = []
    for parts in zip(*columns):
        keys.append(NOT_COVERED if any(part is NOT_COVERED for part in parts) else tuple(parts))
    return keys


def lsh_key(g, p, fallback=False):
    parts = [lsh_hash(f, p, fallback) for f in g]
    if any(part is NOT_COVERED for part in parts):
        return NOT_COVERED
    return tuple(parts)


@lru_cache(maxsize=64)
def collision_rate(t, w, distance, seed, num_shifts=64, fallback=True, functions=64, pairs=64):
    '''
    Monte-Carlo collision probability of one hash draw for pairs at the given distance.
    The Gaussian projection of a difference vector v is N(0, |v|^2/t) per coordinate,
    so pairs are sampled directly in the projected space.
    '''
    rng = make_rng(seed, 'calibrate', repr(distance))
    hits = 0
    for _ in range(functions):
        shifts = rng.uniform(0., 4. * w, size=(num_shifts, t))
        p = rng.uniform(0., 4. * w, size=(pairs, t))
        q = p + rng.standard_normal((pairs, t)) * (distance / math.sqrt(t))
        for a, b in zip(_cells(p, shifts, w, fallback), _cells(q, shifts, w, fallback)):
            hits += int(a is not NOT_COVERED and a == b)
    return hits / float(functions * pairs)


class LshParams(BaseModel):
    t: int
    w: float
    kc: int
    s: int
    p_close: float
    p_far: float
    num_shifts: int = 64
    fallback: bool = True
    capped: bool = False


def lsh_parameters(n, C, seed=0, num_shifts=64, fallback=True, c_s=3., far_factor=FAR_FACTOR, kc_max=16, s_max=256):
    # Scale 1: close pairs at distance <= 1, far pairs beyond far_factor * C.
    log_n = math.log(max(n, 2))
    t = max(4, round(log_n ** .8))
    w = t ** (1. / 3.)
    p_close = collision_rate(t, w, 1., seed, num_shifts, fallback)
    p_far = collision_rate(t, w, far_factor * C, seed, num_shifts, fallback)

    capped = False
    if p_far <= 0.:
        kc = 1
    else:
        kc = max(1, math.ceil(4. * log_n / math.log(1. / p_far)))
    if kc > kc_max:
        kc, capped = kc_max, True
    if p_close <= 0.:
        s, capped = s_max, True
    else:
        s = max(1, math.ceil(c_s * log_n / p_close ** kc))
        if s > s_max:
            s, capped = s_max, True
    if capped:
        logger.warning('LSH parameters capped: kc={} s={} (p_close={:.4f}, p_far={:.4f})', kc, s, p_close, p_far)
    logger.info('LSH parameters n={} t={} w={:.3f} kc={} s={}', n, t, w, kc, s)
    return LshParams(t=t, w=w, kc=kc, s=s, p_close=p_close, p_far=p_far, num_shifts=num_shifts, fallback=fallback, capped=capped)
