import itertools
import math

import numpy as np
import pytest
from scipy import special

from src.common.errors import CapacityError, DomainError, ValidationError
from src.qft_vacuum.bessel import bessel_k0, bessel_k1, bessel_k1_integral
from src.qft_vacuum.types import SmearedField, SpacetimePoint, WickMonomial
from src.qft_vacuum.wick import (
    cluster_residual,
    pairings,
    state_expectation,
    vacuum_expectation,
    wick_npoint,
)
from src.qft_vacuum.wightman import (
    asymptotic_ratio,
    fit_decay_rate,
    smeared_covariance,
    smeared_covariance_momentum,
    smeared_covariance_position,
    statistical_dependence,
    vacuum_one_point,
    w0_asymptotic_pi_scaled,
    w0_quadrature,
    w0_radial_quadrature,
    w0_regularized,
    w0_spacelike,
)

K1_AT_1 = 0.6019072301972346
K1_AT_10 = 1.864877345382558e-05
K0_AT_1 = 0.42102443824070834


def point(x: float, y: float = 0.0, z: float = 0.0, t: float = 0.0) -> SpacetimePoint:
    return SpacetimePoint(t, (x, y, z))


def blob(x: float, width: float = 0.5, t: float = 0.0, conjugate: bool = False) -> SmearedField:
    return SmearedField(point(x, t=t), width, conjugate)


class TestBessel:
    def test_reference_values(self):
        assert bessel_k1(1.0) == pytest.approx(K1_AT_1, rel=1e-12)
        assert bessel_k1(10.0) == pytest.approx(K1_AT_10, rel=1e-12)
        assert bessel_k0(1.0) == pytest.approx(K0_AT_1, rel=1e-12)

    @pytest.mark.parametrize("x", [1e-4, 0.05, 0.5, 1.99, 2.0, 2.01, 3.7, 15.0, 80.0, 300.0])
    def test_against_library(self, x):
        assert bessel_k1(x) == pytest.approx(float(special.k1(x)), rel=1e-10)
        assert bessel_k0(x) == pytest.approx(float(special.k0(x)), rel=1e-10)

    @pytest.mark.parametrize("x", [0.2, 1.0, 2.5, 10.0, 40.0])
    def test_against_integral(self, x):
        assert bessel_k1(x) == pytest.approx(bessel_k1_integral(x), rel=1e-10)

    @pytest.mark.parametrize("x", [50.0, 100.0, 400.0])
    def test_large_argument_matches_asymptotic_series(self, x):
        series = math.sqrt(math.pi / (2 * x)) * math.exp(-x) * (1 + 3 / (8 * x) - 15 / (128 * x * x))
        assert bessel_k1(x) == pytest.approx(series, rel=1e-5)

    def test_small_argument(self):
        assert 1e-6 * bessel_k1(1e-6) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("x", [0.0, -1.0, math.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            bessel_k1(x)


class TestW0:
    def test_unit_separation(self):
        assert w0_spacelike(1.0, 1.0) == pytest.approx(K1_AT_1 / (4 * math.pi**2), rel=1e-12)
        assert w0_spacelike(1.0, 1.0) == pytest.approx(0.015247, abs=1e-6)

    @pytest.mark.parametrize("s,m", [(0.1, 1.0), (0.5, 2.0), (1.0, 1.0), (3.0, 1.0), (4.0, 5.0), (20.0, 1.0)])
    def test_matches_proper_time_quadrature(self, s, m):
        assert w0_spacelike(s, m) == pytest.approx(w0_quadrature(s, m), rel=1e-6)

    @pytest.mark.parametrize("s", [0.3, 1.0, 2.0, 3.0])
    def test_matches_radial_quadrature(self, s):
        assert w0_spacelike(s, 1.0) == pytest.approx(w0_radial_quadrature(s, 1.0), rel=1e-5)

    def test_positive_and_decreasing(self):
        values = [w0_spacelike(s, 1.0) for s in np.linspace(0.1, 30.0, 60)]
        assert all(v > 0.0 for v in values)
        assert np.all(np.diff(values) < 0.0)

    def test_asymptotic_ratio(self):
        assert abs(asymptotic_ratio(20.0, 1.0) - 1.0) < 0.05
        assert abs(asymptotic_ratio(10.0, 2.0) - 1.0) < 0.05
        assert asymptotic_ratio(40.0, 1.0) < asymptotic_ratio(20.0, 1.0)

    def test_pi_scaled_variant_overshoots(self):
        ratio = w0_spacelike(20.0, 1.0) / w0_asymptotic_pi_scaled(20.0, 1.0)
        assert ratio == pytest.approx(1.0 / math.pi, rel=0.05)

    def test_regularized(self):
        assert w0_regularized(1.0, 1.0, 0.0) == w0_spacelike(1.0, 1.0)
        assert w0_regularized(3.0, 1.0, 4.0) == pytest.approx(w0_spacelike(5.0, 1.0), rel=1e-15)
        with pytest.raises(DomainError):
            w0_regularized(1.0, 1.0, -0.1)

    def test_massless_is_rejected(self):
        with pytest.raises(DomainError):
            w0_spacelike(1.0, 0.0)

    @pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
    def test_decay_rate(self, m):
        distances = [d / m for d in (2.0, 4.0, 8.0, 16.0)]
        fit = fit_decay_rate(distances, [w0_spacelike(s, m) for s in distances])
        assert fit.rate == pytest.approx(m, rel=0.15)
        assert fit.power == 1.5

    def test_decay_fit_input(self):
        with pytest.raises(ValidationError):
            fit_decay_rate([1.0], [0.1])
        with pytest.raises(DomainError):
            fit_decay_rate([1.0, 2.0], [0.1, 0.0])


class TestStatisticalDependence:
    def test_unit_separation(self):
        assert statistical_dependence(point(0.0), point(1.0), 1.0) == pytest.approx(0.015247, abs=1e-6)

    def test_far_apart(self):
        value = statistical_dependence(point(0.0), point(0.0, 10.0), 1.0)
        assert 0.0 < value < 1e-6

    def test_tilted_spacelike_pair(self):
        value = statistical_dependence(point(0.0), point(5.0, t=4.0), 1.0)
        assert value == pytest.approx(w0_spacelike(3.0, 1.0), rel=1e-12)

    @pytest.mark.parametrize("other", [point(1.0, t=1.0), point(0.5, t=2.0), point(0.0)])
    def test_not_spacelike(self, other):
        with pytest.raises(DomainError):
            statistical_dependence(point(0.0), other, 1.0)

    def test_spacelike_predicate(self):
        assert point(0.0).is_spacelike_to(point(1.0, t=0.5))
        assert not point(0.0).is_spacelike_to(point(1.0, t=1.0))
        assert not point(0.0).is_spacelike_to(point(0.0, t=1.0))

    def test_one_point_vanishes(self):
        assert vacuum_one_point(point(3.0)) == 0.0


class TestSmearedCovariance:
    def test_diagonal_is_positive(self):
        value = smeared_covariance(blob(0.0), blob(0.0), 1.0)
        assert value.real > 0.0
        assert value.imag == 0.0

    @pytest.mark.parametrize("d", [0.0, 1.0, 2.0])
    def test_momentum_matches_position(self, d):
        f, g = blob(0.0, 0.4), blob(d, 0.6)
        assert smeared_covariance_momentum(f, g, 1.0).real == pytest.approx(
            smeared_covariance_position(f, g, 1.0), rel=1e-5
        )

    def test_hermitian_across_times(self):
        f, g = blob(0.0, t=0.0), blob(1.5, t=0.7)
        forward = smeared_covariance(f, g, 1.0)
        backward = smeared_covariance(g, f, 1.0)
        assert forward.imag != 0.0
        assert forward == pytest.approx(backward.conjugate(), rel=1e-9)

    def test_small_width_limit(self):
        narrow = smeared_covariance_position(blob(0.0, 0.01), blob(2.0, 0.01), 1.0)
        assert narrow == pytest.approx(w0_spacelike(2.0, 1.0), rel=1e-3)
        narrow_k = smeared_covariance_momentum(blob(0.0, 0.05), blob(2.0, 0.05), 1.0)
        assert narrow_k.real == pytest.approx(w0_spacelike(2.0, 1.0), rel=1e-2)

    def test_point_fields(self):
        value = smeared_covariance(blob(0.0, 0.0), blob(1.0, 0.0), 1.0)
        assert value == pytest.approx(w0_spacelike(1.0, 1.0), rel=1e-15)

    def test_decays_at_mass_rate(self):
        distances = [2.0, 4.0, 8.0, 16.0]
        values = [smeared_covariance(blob(0.0), blob(d), 1.0).real for d in distances]
        assert all(v > 0.0 for v in values)
        assert fit_decay_rate(distances, values).rate == pytest.approx(1.0, rel=0.15)

    def test_position_form_needs_equal_times(self):
        with pytest.raises(ValidationError):
            smeared_covariance_position(blob(0.0), blob(1.0, t=1.0), 1.0)

    def test_negative_width(self):
        with pytest.raises(ValidationError):
            SmearedField(point(0.0), -0.1)


class TestWick:
    def test_pairing_counts(self):
        assert [len(list(pairings(n))) for n in (0, 2, 4, 6)] == [1, 1, 3, 15]
        assert list(pairings(3)) == []

    def test_odd_order_vanishes(self):
        assert wick_npoint([blob(0.0), blob(1.0), blob(2.0)], 1.0) == 0j

    def test_two_point_is_covariance(self):
        f, g = blob(0.0), blob(1.0)
        assert wick_npoint([f, g], 1.0) == smeared_covariance(f, g, 1.0)

    def test_four_point_sum_of_pairings(self):
        pts = [blob(0.0, 0.0), blob(1.0, 0.0), blob(0.0, 0.0).translated((0.0, 2.0, 0.0)), blob(3.0, 0.0)]
        w = {(i, j): w0_spacelike(float(np.linalg.norm(pts[i].center.r_array() - pts[j].center.r_array())), 1.0)
             for i, j in itertools.combinations(range(4), 2)}
        expected = w[(0, 1)] * w[(2, 3)] + w[(0, 2)] * w[(1, 3)] + w[(0, 3)] * w[(1, 2)]
        assert wick_npoint(pts, 1.0).real == pytest.approx(expected, rel=1e-12)

    def test_equal_time_permutation_symmetry(self):
        fields = [blob(0.0), blob(1.0), blob(2.5), blob(-1.0)]
        reference = wick_npoint(fields, 1.0)
        for order in itertools.permutations(range(4)):
            assert wick_npoint([fields[k] for k in order], 1.0) == pytest.approx(reference, rel=1e-12)

    def test_complex_field_contracts_conjugates_only(self):
        f, g = blob(0.0), blob(1.0)
        assert wick_npoint([f, g], 1.0, complex_field=True) == 0j
        conj_g = blob(1.0, conjugate=True)
        assert wick_npoint([f, conj_g], 1.0, complex_field=True) == smeared_covariance(f, conj_g, 1.0)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            wick_npoint([blob(float(k)) for k in range(8)], 1.0)
        with pytest.raises(CapacityError):
            WickMonomial(tuple(blob(float(k)) for k in range(7)))

    def test_identity_expectation(self):
        assert vacuum_expectation(WickMonomial.identity(), 1.0) == 1.0

    def test_vacuum_state(self):
        a = WickMonomial((blob(0.0), blob(1.0)))
        assert state_expectation(WickMonomial.identity(), a, 1.0) == vacuum_expectation(a, 1.0)

    def test_one_particle_state_keeps_zero_mean(self):
        state = WickMonomial((blob(0.0),))
        assert state_expectation(state, WickMonomial((blob(2.0),)), 1.0) == 0j


class TestClusterResidual:
    distances = (2.0, 4.0, 8.0, 16.0)

    @pytest.mark.parametrize("degree", [0, 1, 2])
    def test_connected_decays_at_mass_rate(self, degree):
        f = blob(0.0)
        a = WickMonomial((f,))
        state = WickMonomial((blob(0.0),) * degree)
        residuals = [cluster_residual(a, a, state, (d, 0.0, 0.0), 1.0) for d in self.distances]
        assert [r.distance for r in residuals] == list(self.distances)
        fit = fit_decay_rate(self.distances, [r.connected for r in residuals])
        assert fit.rate == pytest.approx(1.0, rel=0.15)

    def test_vacuum_residual_is_covariance(self):
        f = blob(0.0)
        a = WickMonomial((f,))
        residual = cluster_residual(a, a, WickMonomial.identity(), (3.0, 0.0, 0.0), 1.0)
        assert residual.connected == pytest.approx(smeared_covariance(blob(3.0), f, 1.0).real, rel=1e-12)
        assert residual.vacuum_shift == 0.0

    def test_vacuum_shift_decays_at_twice_mass(self):
        square = WickMonomial((blob(0.0), blob(0.0)))
        state = WickMonomial((blob(0.0),))
        shifts = [
            cluster_residual(square, WickMonomial.identity(), state, (d, 0.0, 0.0), 1.0).vacuum_shift
            for d in self.distances
        ]
        assert all(s > 0.0 for s in shifts)
        fit = fit_decay_rate(self.distances, shifts, prefactor_power=3.0)
        assert fit.rate == pytest.approx(2.0, rel=0.15)

    def test_vacuum_shift_matches_subtraction(self):
        square = WickMonomial((blob(0.0), blob(0.0)))
        state = WickMonomial((blob(0.0),))
        moved = square.translated((1.0, 0.0, 0.0))
        direct = state_expectation(state, moved, 1.0) - vacuum_expectation(moved, 1.0)
        residual = cluster_residual(square, WickMonomial.identity(), state, (1.0, 0.0, 0.0), 1.0)
        assert residual.vacuum_shift == pytest.approx(direct.real, rel=1e-9)

    def test_capacity(self):
        a = WickMonomial((blob(0.0), blob(0.0)))
        state = WickMonomial((blob(0.0), blob(0.0)))
        with pytest.raises(CapacityError):
            cluster_residual(a, a, state, (1.0, 0.0, 0.0), 1.0)
