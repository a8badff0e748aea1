import math

import numpy as np
import pytest

from src.common.errors import CapacityError, DomainError, ValidationError
from src.qft_vacuum.types import SpacetimePoint
from src.qft_vacuum.wightman import w0_regularized, w0_spacelike
from src.random_field.lattice import (
    covariance_matrix,
    cutoff_convergence_scan,
    lattice_covariance,
    min_eigenvalue,
)
from src.random_field.sampler import (
    moment_estimate,
    sample_field,
    verify_field_moments,
    wick_lattice_moment,
)
from src.random_field.types import MomentCheck, MomentumLattice

M = 1.0


def at(x: float, t: float = 0.0) -> SpacetimePoint:
    return SpacetimePoint(t, (x, 0.0, 0.0))


@pytest.fixture(scope="module")
def small() -> MomentumLattice:
    return MomentumLattice(cutoff=4.0, n_per_axis=8)


class TestMomentumLattice:
    def test_default(self):
        lattice = MomentumLattice.default(M)
        assert lattice.cutoff == 8.0
        assert lattice.n_per_axis == 48
        assert lattice.damping == pytest.approx(1.0)
        assert lattice.mode_count == 48**3

    def test_axis_is_symmetric_midpoint_grid(self, small):
        axis = small.axis()
        assert axis[0] == pytest.approx(-4.0 + 0.5 * small.spacing)
        assert np.allclose(axis, -axis[::-1])
        assert not np.any(axis == 0.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"cutoff": 0.0, "n_per_axis": 8},
            {"cutoff": 4.0, "n_per_axis": 6},
            {"cutoff": 4.0, "n_per_axis": 9},
            {"cutoff": 4.0, "n_per_axis": 8, "damping": -1.0},
        ],
    )
    def test_rejects_bad_lattice(self, kwargs):
        with pytest.raises(ValidationError):
            MomentumLattice(**kwargs)

    def test_weights_positive(self, small):
        assert np.all(small.weights(M) > 0.0)


class TestLatticeCovariance:
    def test_hermitian(self, small):
        x, y = at(0.0), at(1.3, t=0.4)
        assert lattice_covariance(x, y, small, M) == lattice_covariance(y, x, small, M).conjugate()

    def test_equal_time_is_real(self, small):
        assert lattice_covariance(at(0.0), at(1.0), small, M).imag == pytest.approx(0.0, abs=1e-15)

    def test_positive_semidefinite(self, small):
        points = [at(0.5 * k, t=0.1 * k) for k in range(5)]
        c = covariance_matrix(points, small, M)
        assert np.allclose(c, c.conj().T)
        assert min_eigenvalue(c) >= -1e-12 * np.abs(c).max()
        assert c[0, 1] == pytest.approx(lattice_covariance(points[0], points[1], small, M), rel=1e-10)

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_default_lattice_matches_regulated_continuum(self, s):
        lattice = MomentumLattice.default(M)
        value = lattice_covariance(at(0.0), at(s), lattice, M)
        target = w0_regularized(s, M, lattice.damping)
        assert abs(value - target) <= 0.02 * target

    def test_refining_spacing_converges(self):
        lattices = [MomentumLattice(8.0, n) for n in (8, 16, 32)]
        rows = cutoff_convergence_scan(at(0.0), at(1.0), M, lattices)
        errors = [row.regulated_deviation for row in rows]
        assert errors[2] < errors[1] < errors[0]
        assert errors[2] < 0.02

    def test_raising_cutoff_approaches_bare_w0(self):
        lattices = [MomentumLattice(cutoff, 4 * int(cutoff)) for cutoff in (4.0, 8.0, 16.0)]
        rows = cutoff_convergence_scan(at(0.0), at(1.0), M, lattices)
        deviations = [row.deviation for row in rows]
        assert deviations[2] < deviations[1] < deviations[0]
        assert all(row.continuum == w0_spacelike(1.0, M) for row in rows)

    def test_scan_needs_equal_times(self, small):
        with pytest.raises(DomainError):
            cutoff_convergence_scan(at(0.0), at(1.0, t=0.5), M, [small])

    def test_scan_needs_distinct_points(self, small):
        with pytest.raises(DomainError):
            cutoff_convergence_scan(at(1.0), at(1.0), M, [small])


class TestSampler:
    def test_shape(self, small):
        sample = sample_field(small, [at(0.0), at(1.0), at(2.0)], M, seed=1, n_samples=70)
        assert sample.values.shape == (70, 3)
        assert sample.n_samples == 70

    def test_independent_of_worker_count(self, small, monkeypatch):
        points = [at(0.0), at(0.5)]
        monkeypatch.setenv("BELLTIME_THREADS", "1")
        serial = sample_field(small, points, M, seed=3, n_samples=200)
        monkeypatch.setenv("BELLTIME_THREADS", "3")
        threaded = sample_field(small, points, M, seed=3, n_samples=200)
        assert np.array_equal(serial.values, threaded.values)

    def test_phase_rotation(self, small):
        points = [at(0.0), at(0.5)]
        plain = sample_field(small, points, M, seed=4, n_samples=64)
        rotated = sample_field(small, points, M, seed=4, n_samples=64, phase=0.7)
        assert np.allclose(rotated.values, plain.values * np.exp(0.7j), rtol=1e-12, atol=1e-15)
        plain_product = plain.values[:, 0] * plain.values[:, 1].conj()
        rotated_product = rotated.values[:, 0] * rotated.values[:, 1].conj()
        assert np.allclose(plain_product, rotated_product, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize(
        "lattice",
        [
            MomentumLattice(cutoff=4.0, n_per_axis=8),
            pytest.param(MomentumLattice.default(M), marks=pytest.mark.slow),
        ],
    )
    def test_five_point_covariance(self, lattice):
        points = [at(0.0), at(0.5), at(1.0, t=0.3), SpacetimePoint(0.2, (0.0, 1.0, -0.5)), at(2.5)]
        sample = sample_field(lattice, points, M, seed=21, n_samples=10_000)
        expected = covariance_matrix(points, lattice, M)
        for i in range(5):
            for j in range(5):
                paired = moment_estimate(sample.values[:, i] * sample.values[:, j].conj())
                assert abs(paired.mean - expected[i, j]) <= 5 * paired.stderr
                anomalous = moment_estimate(sample.values[:, i] * sample.values[:, j])
                assert abs(anomalous.mean) <= 5 * anomalous.stderr

    def test_no_points(self, small):
        with pytest.raises(ValidationError):
            sample_field(small, [], M, seed=0)

    def test_moment_estimate(self):
        estimate = moment_estimate([1.0 + 1.0j, 3.0 - 1.0j])
        assert estimate.mean == 2.0 + 0.0j
        assert estimate.stderr == pytest.approx(math.sqrt((2.0 + 2.0) / 2.0))


class TestMoments:
    points = [at(0.0), at(0.5), at(1.0, t=0.3)]

    def check(self, xs, ys, lattice, seed, phase=0.0) -> MomentCheck:
        estimate, analytic = verify_field_moments(xs, ys, lattice, M, 10_000, seed, phase=phase)
        return MomentCheck("moment", estimate, analytic)

    def test_second_moment(self, small):
        x, y = self.points[0], self.points[1]
        result = self.check([x], [y], small, seed=10)
        assert result.analytic == lattice_covariance(x, y, small, M)
        assert result.passed

    def test_anomalous_moment_vanishes(self, small):
        result = self.check(self.points[:2], [], small, seed=11)
        assert result.analytic == 0j
        assert result.passed

    def test_fourth_moment(self, small):
        result = self.check(self.points[:2], [self.points[2], self.points[0]], small, seed=12)
        assert result.passed

    def test_fourth_moment_on_random_configurations(self, small):
        rng = np.random.default_rng(41)
        for k in range(20):
            points = [SpacetimePoint(float(rng.uniform(0.0, 0.5)), tuple(rng.uniform(-1.5, 1.5, 3))) for _ in range(4)]
            assert self.check(points[:2], points[2:], small, seed=100 + k).passed

    def test_odd_moment(self, small):
        result = self.check(self.points[:2], [self.points[2]], small, seed=13)
        assert result.analytic == 0j
        assert result.passed

    def test_phase_does_not_change_moments(self, small):
        result = self.check([self.points[0]], [self.points[2]], small, seed=14, phase=1.1)
        assert result.passed

    def test_wick_permanent(self, small):
        x1, x2, y1, y2 = at(0.0), at(0.4), at(0.9), at(1.7)
        w = lambda a, b: lattice_covariance(a, b, small, M)  # noqa: E731
        expected = w(x1, y1) * w(x2, y2) + w(x1, y2) * w(x2, y1)
        assert wick_lattice_moment([x1, x2], [y1, y2], small, M) == pytest.approx(expected, rel=1e-12)
        assert wick_lattice_moment([x1], [y1, y2], small, M) == 0j

    def test_capacity(self, small):
        with pytest.raises(CapacityError):
            verify_field_moments([at(0.0)] * 3, [], small, M, 10_000, seed=0)

    def test_minimum_samples(self, small):
        with pytest.raises(ValidationError):
            verify_field_moments([at(0.0)], [at(1.0)], small, M, 500, seed=0)

    def test_empty_moment(self, small):
        with pytest.raises(ValidationError):
            verify_field_moments([], [], small, M, 10_000, seed=0)
