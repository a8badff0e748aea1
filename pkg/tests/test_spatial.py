import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.common.errors import DomainError, PreconditionError, ValidationError
from src.spatial.representation import ProductRepresentationModel, product_representation
from src.spatial.types import BoxRegion, GaussianPacket3D, ProductWavefunction
from src.spatial.wavefunctions import (
    conditional_correlation,
    density,
    disentanglement_scan,
    g_factor,
    local_correlation,
    modified_local_equation,
    region_probability,
    region_probability_quadrature,
    single_detector_term,
    tail_mass,
    width_at_time,
)
from src.spin_algebra.types import UnitVector3

ONE_SIGMA = math.erf(1.0 / math.sqrt(2.0))
O_A = BoxRegion((2.0, -1.0, -1.0), (4.0, 1.0, 1.0))
O_B = BoxRegion.cube((0.0, 0.0, 0.0), 1.0)


@pytest.fixture
def wf() -> ProductWavefunction:
    return ProductWavefunction()


class TestBoxRegion:
    def test_inverted_box(self):
        with pytest.raises(ValidationError):
            BoxRegion((0.0, 0.0, 1.0), (1.0, 1.0, 0.0))

    def test_min_norm_outside(self):
        assert O_A.min_norm() == 2.0

    def test_min_norm_inside(self):
        assert O_B.min_norm() == 0.0

    def test_contains_is_closed(self):
        points = np.array([[1.0, 1.0, 1.0], [1.0001, 0.0, 0.0]])
        assert list(O_B.contains(points)) == [True, False]


class TestWavefunctions:
    def test_width_spreads(self):
        p = GaussianPacket3D()
        assert width_at_time(p, 0.0) == 1.0
        assert width_at_time(p, 1.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            width_at_time(GaussianPacket3D(), -1.0)

    def test_cube_probability(self):
        p = GaussianPacket3D()
        assert region_probability(p, O_B) == pytest.approx(ONE_SIGMA**3, rel=1e-12)
        assert region_probability(p, O_B) == pytest.approx(0.318178, abs=1e-5)

    def test_half_space(self):
        p = GaussianPacket3D(center=(3.0, 0.0, 0.0), eps0=2.0)
        assert region_probability(p, BoxRegion.half_space(0, 3.0)) == pytest.approx(0.5, abs=1e-15)

    def test_whole_space(self):
        assert region_probability(GaussianPacket3D(), BoxRegion.whole_space()) == 1.0

    def test_closed_form_matches_quadrature(self):
        p = GaussianPacket3D(center=(0.5, -0.2, 0.1), eps0=0.8)
        box = BoxRegion((0.0, -1.0, -0.5), (1.5, 0.5, 2.0))
        assert region_probability(p, box, t=0.7) == pytest.approx(
            region_probability_quadrature(p, box, t=0.7), abs=1e-8
        )

    def test_translation_invariance(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            p = GaussianPacket3D(center=tuple(rng.uniform(-2, 2, 3)), eps0=float(rng.uniform(0.3, 2.0)))
            lo = rng.uniform(-3, 2, 3)
            box = BoxRegion(tuple(lo), tuple(lo + rng.uniform(0.2, 3.0, 3)))
            shift = rng.uniform(-10, 10, 3)
            moved = GaussianPacket3D(center=tuple(p.center_array() + shift), eps0=p.eps0)
            t = float(rng.uniform(0.0, 2.0))
            assert region_probability(moved, box.translated(shift), t) == pytest.approx(
                region_probability(p, box, t), abs=1e-12
            )

    def test_centred_box_loses_probability_as_packet_spreads(self):
        p = GaussianPacket3D(center=(1.0, -2.0, 0.5), eps0=0.7)
        box = BoxRegion.cube(p.center, 0.8)
        times = np.linspace(0.0, 6.0, 25)
        probabilities = [region_probability(p, box, float(t)) for t in times]
        widths = [width_at_time(p, float(t)) for t in times]
        assert all(later <= earlier for earlier, later in zip(probabilities, probabilities[1:]))
        assert all(later > earlier for earlier, later in zip(widths, widths[1:]))

    @pytest.mark.parametrize("n", [10, pytest.param(100, marks=pytest.mark.slow)])
    def test_closed_form_matches_quadrature_on_random_cases(self, n):
        rng = np.random.default_rng(23)
        for _ in range(n):
            p = GaussianPacket3D(center=tuple(rng.uniform(-1, 1, 3)), eps0=float(rng.uniform(0.5, 1.5)))
            lo = rng.uniform(-2, 1, 3)
            box = BoxRegion(tuple(lo), tuple(lo + rng.uniform(0.3, 2.0, 3)))
            t = float(rng.uniform(0.0, 1.0))
            assert region_probability(p, box, t) == pytest.approx(region_probability_quadrature(p, box, t), abs=1e-8)

    def test_density_normalised_at_centre(self):
        p = GaussianPacket3D(eps0=0.5)
        assert float(density(p, np.zeros(3))) == pytest.approx((2 * math.pi * 0.25) ** -1.5)

    def test_tail_mass_matches_radial_integral(self):
        p = GaussianPacket3D()
        inner, _ = quad(lambda r: 4 * math.pi * r * r * (2 * math.pi) ** -1.5 * math.exp(-r * r / 2), 0.0, 2.0)
        assert tail_mass(p, 2.0) == pytest.approx(1.0 - inner, abs=1e-10)
        assert tail_mass(p, 2.0) == pytest.approx(0.2615, abs=1e-4)

    def test_tail_mass_off_centre(self):
        p = GaussianPacket3D(center=(1.0, 0.0, 0.0))
        assert tail_mass(p, 0.0) == pytest.approx(1.0)
        assert tail_mass(p, 2.0) > tail_mass(GaussianPacket3D(), 2.0)


class TestGFactor:
    def test_bounds(self, wf):
        for shift in ((0, 0, 0), (1, 2, 0), (5, 5, 5)):
            g = g_factor(wf, O_B.translated(shift), O_B)
            assert 0.0 <= g <= 1.0

    @pytest.mark.parametrize("n", [2_000, pytest.param(10_000, marks=pytest.mark.slow)])
    def test_bounds_on_random_geometry(self, n):
        rng = np.random.default_rng(29)
        for _ in range(n):
            packets = [
                GaussianPacket3D(center=tuple(rng.uniform(-5, 5, 3)), eps0=float(rng.uniform(0.1, 3.0)))
                for _ in range(2)
            ]
            boxes = []
            for _ in range(2):
                lo = rng.uniform(-6, 6, 3)
                hi = lo + rng.exponential(2.0, 3) + 1e-3
                lo[rng.random(3) < 0.1] = -math.inf
                hi[rng.random(3) < 0.1] = math.inf
                boxes.append(BoxRegion(tuple(lo), tuple(hi)))
            wf = ProductWavefunction(*packets)
            t = float(rng.uniform(0.0, 3.0))
            g = g_factor(wf, boxes[0], boxes[1], t)
            assert 0.0 <= g <= 1.0
            assert g == pytest.approx(
                region_probability(packets[0], boxes[0], t) * region_probability(packets[1], boxes[1], t),
                abs=1e-12,
            )

    def test_local_correlation(self, wf):
        a = UnitVector3(1.0, 0.0, 0.0)
        b = UnitVector3.from_polar(1.0, 0.4)
        g = g_factor(wf, O_A, O_B)
        assert local_correlation(wf, a, b, O_A, O_B) == pytest.approx(-g * a.dot(b), abs=1e-14)
        assert conditional_correlation(wf, a, b, O_A, O_B) == pytest.approx(-a.dot(b), abs=1e-12)

    def test_single_detector_term_vanishes(self):
        a = UnitVector3.from_polar(0.3, 2.0)
        assert abs(single_detector_term(GaussianPacket3D(), a, O_B)) < 1e-12

    def test_modified_local_equation(self, wf):
        r1 = np.array([0.5, 0.0, 0.0])
        r2 = np.array([0.0, -0.5, 0.2])
        expected = float(density(wf.packet1, r1, 0.3)) * float(density(wf.packet2, r2, 0.3)) * math.cos(0.7)
        assert modified_local_equation(wf, r1, r2, 0.3, 1.0, 0.3) == pytest.approx(expected)

    def test_conditional_correlation_underflow(self, wf):
        a = UnitVector3(0.0, 0.0, 1.0)
        far = BoxRegion.cube((1e3, 0.0, 0.0), 0.5)
        with pytest.raises(DomainError):
            conditional_correlation(wf, a, a, far, O_B)


class TestDisentanglement:
    def test_decreasing_and_vanishing(self, wf):
        a = UnitVector3(0.0, 0.0, 1.0)
        unit = BoxRegion((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
        shifts = [(d, 0.0, 0.0) for d in (0, 1, 2, 4, 8, 16, 30)]
        rows = disentanglement_scan(wf, a, UnitVector3.normalized(1.0, 0.0, 1.0), unit, O_B, shifts)
        gs = [row.g for row in rows]
        assert all(later < earlier for earlier, later in zip(gs, gs[1:]))
        assert abs(rows[-1].correlation) < 1e-12
        assert all(abs(row.single_a) < 1e-12 and abs(row.single_b) < 1e-12 for row in rows)
        assert rows[2].distance == 2.0

    def test_empty_scan(self, wf):
        a = UnitVector3(0.0, 0.0, 1.0)
        with pytest.raises(ValidationError):
            disentanglement_scan(wf, a, a, O_A, O_B, [])


class TestProductRepresentation:
    def test_bounded_and_consistent(self, wf):
        model = ProductRepresentationModel(wf, O_A, O_B, radius=2.0)
        assert model.amplitude < 1.0
        space_a, space_b = model.expected_space_factors()
        g = g_factor(wf, O_A, O_B)
        assert space_a * space_b * model.tail == pytest.approx(g, rel=1e-12)

    def test_samples_stay_outside_ball(self, wf):
        model = ProductRepresentationModel(wf, O_A, O_B, radius=2.0)
        lambdas = model.sample_lambda(np.random.default_rng(0), 5_000)
        assert lambdas.shape == (5_000, 7)
        assert np.all(np.linalg.norm(lambdas[:, :3], axis=1) >= 2.0 * (1.0 - 1e-12))

    def test_far_detector_small_tail(self, wf):
        far = BoxRegion((6.0, -1.0, -1.0), (8.0, 1.0, 1.0))
        model = ProductRepresentationModel(wf, far, O_B, radius=6.0)
        assert model.tail < 1e-7
        n = 200_000
        r1 = model.sample_lambda(np.random.default_rng(3), n)[:, :3]
        assert np.all(np.linalg.norm(r1, axis=1) >= 6.0 * (1.0 - 1e-12))
        p, _ = model.expected_space_factors()
        hits = float(np.mean(far.contains(r1)))
        assert abs(hits - p) <= 5.0 * math.sqrt(p * (1.0 - p) / n)

    def test_far_detector_reproduces_local_correlation(self, wf):
        far = BoxRegion((6.0, -1.0, -1.0), (8.0, 1.0, 1.0))
        estimates = product_representation(wf, far, O_B, 6.0, 50_000, 5, (0.0,), (0.0, math.pi / 3))
        g = g_factor(wf, far, O_B)
        assert g > 0.0
        for (alpha, beta), est in estimates.items():
            assert abs(est.mean - g * math.cos(alpha - beta)) <= 4 * est.stderr + 1e-15

    def test_off_centre_packet_direction(self):
        wf = ProductWavefunction(packet1=GaussianPacket3D(center=(1.5, 0.5, 0.0)))
        front = BoxRegion((3.0, -1.0, -1.0), (5.0, 1.0, 1.0))
        back = BoxRegion((-5.0, -1.0, -1.0), (-3.0, 1.0, 1.0))
        model = ProductRepresentationModel(wf, front, O_B, radius=2.5)
        n = 200_000
        r1 = model.sample_lambda(np.random.default_rng(8), n)[:, :3]
        assert np.all(np.linalg.norm(r1, axis=1) >= 2.5 * (1.0 - 1e-12))
        for region in (front, back):
            p = region_probability(wf.packet1, region) / model.tail
            hits = float(np.mean(region.contains(r1)))
            assert abs(hits - p) <= 5.0 * math.sqrt(p * (1.0 - p) / n)

    def test_reproduces_local_correlation(self, wf):
        alphas = (0.0, math.pi / 2)
        betas = (0.0, math.pi / 4)
        estimates = product_representation(wf, O_A, O_B, 2.0, 100_000, 11, alphas, betas)
        g = g_factor(wf, O_A, O_B)
        for (alpha, beta), est in estimates.items():
            assert abs(est.mean - g * math.cos(alpha - beta)) <= 4 * est.stderr + 1e-12

    def test_region_inside_ball(self, wf):
        with pytest.raises(PreconditionError):
            ProductRepresentationModel(wf, O_B, O_B, radius=2.0)

    def test_tail_too_heavy(self, wf):
        with pytest.raises(PreconditionError):
            ProductRepresentationModel(wf, O_A, O_B, radius=0.5)
