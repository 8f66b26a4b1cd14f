import numpy as np
import pytest

from hypervec import geometry
from hypervec.geometry import (
    DistanceSaturationError,
    GeometryError,
    SingularGradientError,
    conformal_factor,
    distance_gradient,
    exp_map,
    h_apply,
    h_apply_clamped,
    mobius_add,
    poincare_distance,
    project_to_ball,
    riemannian_rescale,
)

from geomprops import (
    ALL_PROPERTY_CHECKS,
    fd_distance_gradient,
    random_ball_points,
)

LN3 = 1.0986122886681096914
# arcosh form of the distance between (0.3, 0) and (0, 0.3), evaluated with
# 50-digit mpmath arithmetic.
D_03_03 = 0.90159947298184407193


class TestConformalFactor:
    def test_origin(self):
        assert conformal_factor(np.zeros(3)) == 2.0

    def test_half_squared_norm(self):
        x = np.array([np.sqrt(0.5), 0.0])
        np.testing.assert_allclose(conformal_factor(x), 4.0, rtol=1e-14)

    def test_three_quarters_squared_norm(self):
        x = np.array([np.sqrt(0.75), 0.0])
        np.testing.assert_allclose(conformal_factor(x), 8.0, rtol=1e-13)

    def test_rejects_boundary_and_outside(self):
        with pytest.raises(GeometryError):
            conformal_factor(np.array([1.0, 0.0]))
        with pytest.raises(GeometryError):
            conformal_factor(np.array([1.5, 0.0]))

    def test_rejects_non_finite(self):
        with pytest.raises(GeometryError):
            conformal_factor(np.array([np.nan, 0.0]))


class TestPoincareDistance:
    def test_identity_at_origin(self):
        origin = np.zeros(2)
        assert poincare_distance(origin, origin) == 0.0

    def test_origin_to_half(self):
        np.testing.assert_allclose(
            poincare_distance(np.zeros(2), np.array([0.5, 0.0])), LN3, atol=1e-12
        )

    def test_frozen_high_precision_value(self):
        d = poincare_distance(np.array([0.3, 0.0]), np.array([0.0, 0.3]))
        np.testing.assert_allclose(d, D_03_03, atol=1e-14)

    def test_rejects_points_outside_ball(self):
        with pytest.raises(GeometryError):
            poincare_distance(np.array([1.2, 0.0]), np.zeros(2))
        with pytest.raises(GeometryError):
            poincare_distance(np.zeros(2), np.array([0.0, 1.0]))

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(0)
        x = random_ball_points(rng, 1, 4)[0]
        ys = random_ball_points(rng, 10, 4)
        batched = poincare_distance(x, ys)
        looped = np.array([poincare_distance(x, y) for y in ys])
        np.testing.assert_array_equal(batched, looped)


class TestDistanceGradient:
    def test_matches_finite_differences_at_spec_point(self):
        x = np.array([0.2, 0.1])
        y = np.array([-0.3, 0.4])
        analytic = distance_gradient(x, y)
        fd = fd_distance_gradient(x, y)
        rel = np.linalg.norm(analytic - fd) / np.linalg.norm(analytic)
        assert rel < 1e-5

    def test_points_from_origin_toward_negative_y(self):
        y = np.array([0.5, 0.0])
        grad = distance_gradient(np.zeros(2), y)
        # Moving x toward y decreases d, so the gradient is parallel to -y.
        cosine = grad @ (-y) / (np.linalg.norm(grad) * np.linalg.norm(y))
        np.testing.assert_allclose(cosine, 1.0, atol=1e-12)

    def test_gradient_norm_grows_toward_boundary(self):
        direction = np.array([0.0, 1.0])
        y = np.array([0.5, 0.0])
        norms = [
            np.linalg.norm(distance_gradient(r * direction, y))
            for r in (0.5, 0.9, 0.99)
        ]
        assert norms[0] < norms[1] < norms[2]

    def test_singularity_at_coincident_points(self):
        x = np.array([0.1, 0.2])
        with pytest.raises(SingularGradientError):
            distance_gradient(x, x)

    def test_singularity_below_guard(self):
        x = np.array([0.1, 0.2])
        y = x + 1e-12
        with pytest.raises(SingularGradientError):
            distance_gradient(x, y)

    def test_antisymmetry_by_role_swap(self):
        rng = np.random.default_rng(1)
        x, y = random_ball_points(rng, 2, 3)
        # d is symmetric, so grad w.r.t. y equals the x-gradient with roles swapped.
        np.testing.assert_allclose(
            distance_gradient(y, x), fd_distance_gradient(y, x), rtol=1e-5
        )


class TestMobiusAdd:
    def test_left_identity(self):
        y = np.array([0.3, -0.2, 0.1])
        np.testing.assert_allclose(mobius_add(np.zeros(3), y), y, atol=1e-16)

    def test_right_inverse_cancels(self):
        x = np.array([0.4, 0.3])
        np.testing.assert_allclose(mobius_add(x, -x), np.zeros(2), atol=1e-15)

    def test_collinear_scalar_formula(self):
        out = mobius_add(np.array([0.3, 0.0]), np.array([0.4, 0.0]))
        np.testing.assert_allclose(out, [0.7 / 1.12, 0.0], atol=1e-15)

    def test_result_stays_in_ball(self):
        rng = np.random.default_rng(2)
        xs = random_ball_points(rng, 200, 4, max_norm=1 - 2e-5)
        ys = random_ball_points(rng, 200, 4, max_norm=1 - 2e-5)
        out = mobius_add(xs, ys)
        assert np.all(np.linalg.norm(out, axis=1) <= 1 - geometry.BALL_EPSILON)

    def test_rejects_non_finite(self):
        with pytest.raises(GeometryError):
            mobius_add(np.array([np.inf, 0.0]), np.zeros(2))


class TestExpMap:
    def test_unit_tangent_at_origin(self):
        out = exp_map(np.zeros(2), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, [np.tanh(1.0), 0.0], atol=1e-15)

    def test_zero_tangent_is_exact_identity(self):
        x = np.array([0.3, 0.1, -0.2])
        out = exp_map(x, np.zeros(3))
        np.testing.assert_array_equal(out, x)

    def test_batch_zero_and_nonzero_tangents(self):
        x = np.array([0.2, 0.0])
        vs = np.array([[0.0, 0.0], [0.5, 0.0]])
        out = exp_map(x, vs)
        np.testing.assert_array_equal(out[0], x)
        assert np.linalg.norm(out[1]) > np.linalg.norm(x)

    def test_geodesic_length(self):
        rng = np.random.default_rng(3)
        xs = random_ball_points(rng, 100, 3, max_norm=0.9)
        vs = rng.normal(size=(100, 3))
        vs *= rng.uniform(0, 0.1, size=(100, 1)) / np.linalg.norm(vs, axis=1, keepdims=True)
        moved = exp_map(xs, vs)
        d = poincare_distance(xs, moved)
        expected = conformal_factor(xs) * np.linalg.norm(vs, axis=1)
        np.testing.assert_allclose(d, expected, atol=1e-6)


class TestProjectToBall:
    def test_interior_point_unchanged(self):
        x = np.array([0.1, 0.2])
        np.testing.assert_array_equal(project_to_ball(x, 1e-5), x)

    def test_outside_point_rescaled(self):
        out = project_to_ball(np.array([2.0, 0.0]), 1e-5)
        np.testing.assert_allclose(out, [1 - 1e-5, 0.0], rtol=1e-15)

    def test_origin_unchanged(self):
        np.testing.assert_array_equal(project_to_ball(np.zeros(3), 1e-5), np.zeros(3))

    def test_rejects_non_finite(self):
        with pytest.raises(GeometryError):
            project_to_ball(np.array([np.nan, 0.0]), 1e-5)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(GeometryError):
            project_to_ball(np.zeros(2), 0.0)


class TestRiemannianRescale:
    def test_origin_scale_quarter(self):
        g = np.array([2.0, -4.0])
        np.testing.assert_allclose(riemannian_rescale(np.zeros(2), g), g / 4.0)

    def test_half_squared_norm_scale(self):
        x = np.array([np.sqrt(0.5), 0.0])
        g = np.array([1.0, 1.0])
        np.testing.assert_allclose(riemannian_rescale(x, g), g / 16.0, rtol=1e-13)

    def test_zero_gradient(self):
        out = riemannian_rescale(np.array([0.3, 0.3]), np.zeros(2))
        np.testing.assert_array_equal(out, np.zeros(2))


class TestHApply:
    def test_at_zero(self):
        value, deriv = h_apply(0.0)
        assert value == 1.0
        assert deriv == 0.0

    def test_at_one(self):
        value, deriv = h_apply(1.0)
        np.testing.assert_allclose(value, 2.3810978455418157, rtol=1e-15)
        np.testing.assert_allclose(deriv, 3.6268604078470188, rtol=1e-15)

    def test_derivative_matches_finite_difference(self):
        d = 0.7
        step = 1e-6
        _, deriv = h_apply(d)
        fd = (h_apply(d + step)[0] - h_apply(d - step)[0]) / (2 * step)
        np.testing.assert_allclose(deriv, fd, rtol=1e-6)

    def test_saturation_error(self):
        with pytest.raises(DistanceSaturationError):
            h_apply(20.5)

    def test_rejects_negative(self):
        with pytest.raises(GeometryError):
            h_apply(-0.1)

    def test_clamped_extension_is_flat(self):
        value, deriv = h_apply_clamped(np.array([1.0, 25.0]))
        np.testing.assert_allclose(value[0], h_apply(1.0)[0])
        np.testing.assert_allclose(value[1], np.cosh(20.0) ** 2)
        assert deriv[1] == 0.0


@pytest.mark.parametrize("check", ALL_PROPERTY_CHECKS, ids=lambda f: f.__name__)
def test_geometry_invariants(check):
    check(np.random.default_rng(20240817), 300)
