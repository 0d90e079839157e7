import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stableplace.rotations import (
    DegenerateSixD,
    InvalidAxis,
    check_rotation,
    fit_geodesic_polynomial,
    geodesic_distance,
    poly_geodesic_distance,
    random_rotation,
    rot_x,
    rot_y,
    rot_z,
    rotation_from_axis_angle,
    rotation_from_sixd,
    sixd_from_rotation,
    z_quotient_distance,
    z_quotient_distances,
)

from conftest import random_rotations

X = np.array([1.0, 0.0, 0.0])
Z = np.array([0.0, 0.0, 1.0])


class TestAxisAngle:
    def test_zero_angle_is_identity(self):
        assert np.allclose(rotation_from_axis_angle(Z, 0.0), np.eye(3))

    def test_pi_about_x(self):
        assert np.allclose(rot_x(np.pi), np.diag([1.0, -1.0, -1.0]))

    def test_quarter_turn_maps_x_to_y(self):
        assert np.allclose(rot_z(np.pi / 2) @ X, [0.0, 1.0, 0.0])

    def test_non_unit_axis_rejected(self):
        with pytest.raises(InvalidAxis):
            rotation_from_axis_angle(np.array([1.0, 1.0, 0.0]), 0.3)

    def test_results_are_valid_rotations(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            check_rotation(rotation_from_axis_angle(axis, rng.uniform(-np.pi, np.pi)))


class TestGeodesicDistance:
    def test_identity(self):
        assert geodesic_distance(np.eye(3), np.eye(3)) == 0.0

    def test_half_turn(self):
        assert geodesic_distance(rot_z(np.pi), np.eye(3)) == pytest.approx(np.pi)

    def test_quarter_turn(self):
        assert geodesic_distance(rot_x(np.pi / 2), np.eye(3)) == pytest.approx(np.pi / 2)

    def test_symmetry_and_triangle_inequality(self):
        for r1, r2, r3 in zip(
            random_rotations(1, 1000), random_rotations(2, 1000), random_rotations(3, 1000)
        ):
            d12 = geodesic_distance(r1, r2)
            assert d12 == pytest.approx(geodesic_distance(r2, r1), abs=0)
            assert d12 <= geodesic_distance(r1, r3) + geodesic_distance(r3, r2) + 1e-9

    def test_range(self):
        for r1, r2 in zip(random_rotations(4, 200), random_rotations(5, 200)):
            assert 0.0 <= geodesic_distance(r1, r2) <= np.pi


class TestPolynomialSurrogate:
    def test_exact_zero_at_trace_three(self, poly):
        assert poly.value(3.0) == 0.0

    def test_fit_error_reported_matches_recomputation(self, poly):
        t = np.linspace(-1.0, 3.0, 10001)
        err = np.abs(poly.value(t) - np.arccos(np.clip((t - 1) / 2, -1, 1))).max()
        assert err == pytest.approx(poly.max_fit_error, rel=1e-12)

    def test_fit_error_magnitude(self, poly):
        # arccos has square-root singularities at both trace endpoints, so
        # the degree-10 family cannot do better than ~0.046 rad uniformly;
        # the unweighted least-squares fit lands near 0.103.
        assert poly.max_fit_error < 0.11
        t = np.linspace(-0.9, 2.9, 5001)
        interior = np.abs(poly.value(t) - np.arccos((t - 1) / 2)).max()
        assert interior < 0.02

    def test_symmetric_in_arguments(self, poly):
        for r1, r2 in zip(random_rotations(6, 100), random_rotations(7, 100)):
            v1, _ = poly_geodesic_distance(poly, r1, r2)
            v2, _ = poly_geodesic_distance(poly, r2, r1)
            assert v1 == pytest.approx(v2, abs=1e-12)

    def test_value_at_identity_pair(self, poly):
        v, _ = poly_geodesic_distance(poly, np.eye(3), np.eye(3))
        assert v == 0.0

    def test_value_near_half_turn(self, poly):
        # fit error at t = -1 dominates; frozen against the fit oracle
        v, _ = poly_geodesic_distance(poly, rot_z(np.pi), np.eye(3))
        assert v == pytest.approx(np.pi, abs=0.11)

    def test_min_samples_enforced(self):
        with pytest.raises(ValueError):
            fit_geodesic_polynomial(samples=50)

    def test_gradient_against_finite_differences(self, poly):
        rng = np.random.default_rng(8)
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            rg = random_rotation(rng)
            rt = random_rotation(rng)
            _, grad = poly_geodesic_distance(poly, rg, rt)
            fd = np.zeros((3, 3))
            for i in range(3):
                for j in range(3):
                    rp, rm = rg.copy(), rg.copy()
                    rp[i, j] += h
                    rm[i, j] -= h
                    fd[i, j] = (
                        poly_geodesic_distance(poly, rp, rt)[0]
                        - poly_geodesic_distance(poly, rm, rt)[0]
                    ) / (2 * h)
            denom = max(np.abs(fd).max(), 1e-12)
            worst = max(worst, np.abs(grad - fd).max() / denom)
        assert worst <= 1e-5


class TestSixD:
    def test_identity_round_trip(self):
        s = sixd_from_rotation(np.eye(3))
        assert np.allclose(s, [[1, 0, 0], [0, 1, 0]])
        assert np.allclose(rotation_from_sixd(s), np.eye(3))

    def test_gram_schmidt_normalizes(self):
        r = rotation_from_sixd(np.array([[2.0, 0, 0], [1.0, 1.0, 0]]))
        assert np.allclose(r, np.eye(3))

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateSixD):
            rotation_from_sixd(np.zeros((2, 3)))
        with pytest.raises(DegenerateSixD):
            rotation_from_sixd(np.array([[1.0, 0, 0], [2.0, 0, 0]]))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=10**9))
    def test_round_trip_property(self, seed):
        r = random_rotation(np.random.default_rng(seed))
        assert np.abs(rotation_from_sixd(sixd_from_rotation(r)) - r).max() < 1e-12

    def test_round_trip_bulk(self):
        for r in random_rotations(9, 1000):
            assert np.abs(rotation_from_sixd(sixd_from_rotation(r)) - r).max() < 1e-12


class TestZQuotient:
    def test_same_fiber_is_zero(self):
        for r in random_rotations(10, 20):
            assert z_quotient_distance(r, rot_z(1.234) @ r) < 1e-7

    def test_x_half_turn(self):
        # trace of Rz(theta) @ Rx(pi) is -1 for every theta
        assert z_quotient_distance(rot_x(np.pi), np.eye(3)) == pytest.approx(np.pi)

    def test_against_dense_sweep_oracle(self):
        thetas = np.linspace(0, 2 * np.pi, 10000, endpoint=False)
        r1, r2 = rot_x(np.pi / 2), rot_y(np.pi / 2)
        oracle = min(geodesic_distance(rot_z(t) @ r1, r2) for t in thetas)
        assert z_quotient_distance(r1, r2) == pytest.approx(oracle, abs=1e-6)

    def test_never_exceeds_geodesic(self):
        for r1, r2 in zip(random_rotations(11, 300), random_rotations(12, 300)):
            assert z_quotient_distance(r1, r2) <= geodesic_distance(r1, r2) + 1e-9

    def test_vectorized_matches_scalar(self):
        rs = np.stack(random_rotations(13, 50))
        for r in random_rotations(14, 10):
            fast = z_quotient_distances(r, rs)
            slow = [z_quotient_distance(r, s) for s in rs]
            assert np.abs(fast - slow).max() < 1e-7

    def test_up_axis_characterizes_equivalence(self):
        z = np.array([0.0, 0.0, 1.0])
        for r1, r2 in zip(random_rotations(15, 100), random_rotations(16, 100)):
            equiv = z_quotient_distance(r1, r2) < 1e-6
            same_axis = np.linalg.norm(r1.T @ z - r2.T @ z) < 1e-6
            assert equiv == same_axis
        for r in random_rotations(17, 20):
            r2 = rot_z(0.777) @ r
            assert np.linalg.norm(r.T @ z - r2.T @ z) < 1e-9
            assert z_quotient_distance(r, r2) < 1e-6
