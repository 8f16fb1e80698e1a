import numpy as np
import pytest
import torch
from gather.lsh import NOT_COVERED, JlProjection, LshFunction, collision_rate, jl_project, lsh_hash, lsh_key, lsh_keys, lsh_parameters
from models.point_set import PointSet
from utils.errors import DimensionMismatchError, RGatherError


def test_jl_is_linear():
    points = PointSet([0, 1, 2], torch.tensor([[1., 2., 3.], [1., 2., 3.], [0., 0., 0.]]))
    projected = jl_project(points, .5, seed=3)
    assert torch.equal(projected.coords[0], projected.coords[1])
    assert torch.count_nonzero(projected.coords[2]) == 0
    assert projected.id_list() == [0, 1, 2]


def test_jl_distortion():
    good = 0
    for seed in range(20):
        coords = np.random.default_rng(seed).standard_normal((50, 100))
        points = PointSet(range(50), torch.from_numpy(coords))
        projected = JlProjection(100, 50, .3, seed)(points)
        before = points.distinct_distances()
        after = projected.distinct_distances()
        ratio = after / before
        good += int(bool(((ratio >= .7) & (ratio <= 1.3)).all()))
    assert good >= 19


def test_jl_errors():
    with pytest.raises(RGatherError):
        JlProjection(3, 10, 1.5, 0)
    projection = JlProjection(3, 10, .5, 0)
    with pytest.raises(DimensionMismatchError):
        projection(PointSet([0], torch.zeros((1, 2))))


def test_hash_determinism():
    p = np.array([.3, -1.2, 4.])
    f = LshFunction(3, 4, 2., seed=9, stream=('a', 1))
    g = LshFunction(3, 4, 2., seed=9, stream=('a', 1))
    assert lsh_hash(f, p) == lsh_hash(g, p)
    assert lsh_hash(f, p, fallback=True) == lsh_hash(f, p.copy(), fallback=True)
    assert lsh_key([f], p, fallback=True) == (lsh_hash(f, p, fallback=True),)


def test_hash_keys_match_pointwise():
    rng = np.random.default_rng(1)
    coords = rng.uniform(0., 5., size=(30, 2))
    g = [LshFunction(2, 4, 1., seed=2, stream=(j,)) for j in range(3)]
    assert lsh_keys(g, coords, fallback=True) == [lsh_key(g, p, fallback=True) for p in coords]
    keys = lsh_keys(g, coords, fallback=False)
    assert all(key is NOT_COVERED or len(key) == 3 for key in keys)


def test_hash_errors():
    with pytest.raises(RGatherError):
        LshFunction(2, 4, 0., seed=0)
    with pytest.raises(RGatherError):
        LshFunction(2, 4, 1., seed=0, num_shifts=0)
    f = LshFunction(2, 4, 1., seed=0)
    with pytest.raises(DimensionMismatchError):
        lsh_hash(f, [1., 2., 3.])
    with pytest.raises(DimensionMismatchError):
        f.hash_points(np.zeros((4, 3)))


def test_collision_rates_separate():
    t, w = 4, 4 ** (1. / 3.)
    close = collision_rate(t, w, 1., seed=0)
    far = collision_rate(t, w, 20., seed=0)
    assert 0. < close <= 1.
    assert far <= close


@pytest.mark.slow
def test_collision_rates_three_sigma():
    t, w = 4, 4 ** (1. / 3.)
    trials = 100 * 100
    close = collision_rate(t, w, 1., 5, functions=100, pairs=100)
    far = collision_rate(t, w, 10., 5, functions=100, pairs=100)
    sigma = np.sqrt(close * (1. - close) / trials + far * (1. - far) / trials)
    assert close - far > 3. * sigma


def test_lsh_parameters():
    params = lsh_parameters(200, 2., seed=0)
    assert params.t >= 4 and params.kc >= 1 and params.s >= 1
    assert params.kc <= 16 and params.s <= 256
    assert 0. <= params.p_far <= params.p_close <= 1.
    assert lsh_parameters(200, 2., seed=0) == params

    capped = lsh_parameters(200, 2., seed=0, s_max=1)
    assert capped.s == 1 and capped.capped
