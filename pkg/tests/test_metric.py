import numpy as np
import pytest
from gather import metric
from models.clustering import Cluster, Clustering
from utils.errors import DimensionMismatchError, OracleCapError, PartitionError, RGatherError


def test_dist():
    assert metric.dist([0., 0.], [3., 4.]) == pytest.approx(5.)
    assert metric.dist([2., 7.], [2., 7.]) == 0.
    assert metric.dist([0.], [7.]) == pytest.approx(7.)
    with pytest.raises(DimensionMismatchError):
        metric.dist([0., 0.], [1.])


def test_rho_r(line_points):
    points = line_points(0., 1., 3.)
    assert metric.rho_r(points, 0, 2) == pytest.approx(1.)
    assert metric.rho_r(points, 2, 3) == pytest.approx(3.)
    assert all(metric.rho_r(points, pid, 1) == 0. for pid in points.id_list())
    with pytest.raises(RGatherError):
        metric.rho_r(points, 0, 4)


def test_rho_hat(line_points, four_points, with_outlier):
    assert metric.rho_hat(line_points(0., 1., 3.), 2) == pytest.approx(2.)
    assert metric.rho_hat(four_points, 2) == pytest.approx(1.)
    assert metric.rho_hat(four_points, 1) == 0.
    assert metric.rho_hat_k(with_outlier, 2, 1) == pytest.approx(1.)
    assert metric.rho_hat_k(with_outlier, 2, 0) == pytest.approx(metric.rho_hat(with_outlier, 2))
    assert metric.rho_hat_k(with_outlier, 2, 4) == pytest.approx(metric.rho_values(with_outlier, 2).min().item())


def test_validate(four_points, with_outlier):
    solution = Clustering(clusters=[Cluster(center=0, members=[0, 1]), Cluster(center=2, members=[2, 3])])
    report = metric.validate(four_points, solution)
    assert report.max_radius == pytest.approx(1.)
    assert report.min_size == 2
    assert report.power_cost == pytest.approx(2.)
    assert metric.validate(four_points, solution, k_pow=2).power_cost == pytest.approx(2.)

    singleton = Clustering(clusters=[Cluster(center=p, members=[p]) for p in four_points.id_list()])
    assert metric.validate(four_points, singleton).max_radius == 0.

    outlier = Clustering(clusters=solution.clusters, outliers=[4])
    assert metric.validate(with_outlier, outlier).outlier_count == 1


def test_validate_free_center(four_points):
    solution = Clustering(clusters=[Cluster(center=[.5], members=[0, 1]), Cluster(center=[10.5], members=[2, 3])])
    assert metric.validate(four_points, solution).max_radius == pytest.approx(.5)
    with pytest.raises(DimensionMismatchError):
        metric.validate(four_points, Clustering(clusters=[Cluster(center=[.5, 0.], members=[0, 1, 2, 3])]))


def test_validate_rejects_bad_partitions(four_points):
    overlap = Clustering(clusters=[Cluster(center=0, members=[0, 1, 2]), Cluster(center=2, members=[2, 3])])
    missing = Clustering(clusters=[Cluster(center=0, members=[0, 1])])
    stray = Clustering(clusters=[Cluster(center=0, members=[0, 1, 2, 3, 9])])
    off_center = Clustering(clusters=[Cluster(center=3, members=[0, 1, 2])], outliers=[3])
    for solution in (overlap, missing, stray, off_center):
        with pytest.raises(PartitionError):
            metric.validate(four_points, solution)


def test_brute_force_radius(line_points, four_points, with_outlier):
    assert metric.brute_force_opt_radius(four_points, 2) == pytest.approx(1.)
    assert metric.brute_force_opt_radius(four_points, 1) == 0.
    assert metric.brute_force_opt_radius(line_points(5.), 1) == 0.
    # One cluster of everything: best center in P.
    assert metric.brute_force_opt_radius(four_points, 4) == pytest.approx(10.)
    assert metric.brute_force_opt_radius(four_points, 2, centers_in_P=False) == pytest.approx(.5)

    assert metric.brute_force_opt_radius_outliers(with_outlier, 2, 1) == pytest.approx(1.)
    assert metric.brute_force_opt_radius_outliers(with_outlier, 2, 0) == pytest.approx(metric.brute_force_opt_radius(with_outlier, 2))
    assert metric.brute_force_opt_radius_outliers(with_outlier, 1, 2) == 0.


def test_brute_force_power(four_points):
    assert metric.brute_force_opt_power(four_points, 2, 1) == pytest.approx(2.)
    assert metric.brute_force_opt_power(four_points, 1, 2) == 0.
    # r = n forces one cluster: center 1 gives 1 + 9 + 10 = 20.
    assert metric.brute_force_opt_power(four_points, 4, 1) == pytest.approx(20.)


def test_oracle_cap(random_points):
    points = random_points(np.random.default_rng(0), metric.ORACLE_CAP + 1, 2)
    with pytest.raises(OracleCapError):
        metric.brute_force_opt_radius(points, 2)


def test_lower_bound(line_points, four_points):
    assert metric.lower_bound_check(line_points(0., 1., 3.), 2)
    assert metric.lower_bound_check(four_points, 2)
    assert metric.lower_bound_check(line_points(4.), 1)


def test_lower_bound_random(random_points):
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 9))
        points = random_points(rng, n, int(rng.integers(1, 4)))
        r = int(rng.integers(1, n + 1))
        assert metric.lower_bound_check(points, r)
