"""Stateless kernels for the Poincare ball model of hyperbolic space.

Points live in the open unit ball ``{x : ||x|| < 1}`` where the metric is
conformal to the Euclidean one with factor ``lambda_x = 2 / (1 - ||x||^2)``.
Distances blow up near the boundary, which is what lets tree-like data embed
with low distortion.

Every function here is a pure function of its inputs and operates in double
precision: the ``1 - ||x||^2`` terms lose too much precision near the
boundary in float32. All kernels accept either a single vector of shape
``(n,)`` or a batch of shape ``(m, n)``; batched inputs are reduced along the
last axis and broadcast against single vectors, so ``poincare_distance(x, Y)``
with ``Y`` of shape ``(m, n)`` returns ``m`` distances.
"""

from __future__ import annotations

import numpy as np

from .errors import HypervecError

# Iterates are kept at Euclidean norm <= 1 - BALL_EPSILON so the conformal
# factor and the arcosh argument stay representable.
BALL_EPSILON = 1e-5

# Below this hyperbolic distance the distance gradient is treated as
# singular (division by sqrt(gamma^2 - 1) blows up at coincident points).
DERIVATIVE_GUARD = 1e-8

# h(d) = cosh^2(d) saturates above this distance: the value is still
# representable but its derivative destabilizes training.
OVERFLOW_GUARD = 20.0


class GeometryError(HypervecError, ValueError):
    """Input outside the kernel's domain (non-finite, or not in the open ball)."""


class SingularGradientError(GeometryError):
    """Distance gradient requested at (near-)coincident points; skip the sample."""


class DistanceSaturationError(GeometryError):
    """h(d) evaluated beyond the overflow guard; clamp the sample's contribution."""


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} contains non-finite coordinates")
    return arr


def _sq_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def check_in_ball(x, name: str = "point") -> np.ndarray:
    """Validate that every row of ``x`` lies strictly inside the unit ball."""
    arr = _as_float_array(x, name)
    if np.any(_sq_norm(arr) >= 1.0):
        raise GeometryError(f"{name} lies outside the open unit ball")
    return arr


def check_finite(v, name: str = "vector") -> np.ndarray:
    """Validate that ``v`` is finite; returns it as a float64 array."""
    return _as_float_array(v, name)


def _arcosh(w: np.ndarray) -> np.ndarray:
    # Rounding can land w at 1 - 1e-17; clamp before the square root.
    w = np.maximum(w, 1.0)
    return np.log(w + np.sqrt(w * w - 1.0))


def conformal_factor(x) -> float | np.ndarray:
    """Metric scale ``lambda_x = 2 / (1 - ||x||^2)`` at ``x``; equals 2 at the origin."""
    x = check_in_ball(x, "x")
    return 2.0 / (1.0 - _sq_norm(x))


def poincare_distance(x, y) -> float | np.ndarray:
    """Hyperbolic distance ``arcosh(1 + 2||x-y||^2 / ((1-||x||^2)(1-||y||^2)))``.

    Raises :class:`GeometryError` for inputs outside the open ball; this
    kernel never silently clips.
    """
    x = check_in_ball(x, "x")
    y = check_in_ball(y, "y")
    diff_sq = _sq_norm(x - y)
    denom = (1.0 - _sq_norm(x)) * (1.0 - _sq_norm(y))
    return _arcosh(1.0 + 2.0 * diff_sq / denom)


def _dot_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise dot product along the last axis (cheap for tiny arrays)."""
    return np.einsum("...i,...i->...", a, b)


def _distance_state(x: np.ndarray, y: np.ndarray):
    """Shared intermediates: (d, alpha, beta, diff_sq, rooted gamma term)."""
    alpha = 1.0 - _dot_rows(x, x)
    beta = 1.0 - _dot_rows(y, y)
    diff = x - y
    diff_sq = _dot_rows(diff, diff)
    gamma = 1.0 + 2.0 * diff_sq / (alpha * beta)
    d = _arcosh(gamma)
    root = np.sqrt(np.maximum(gamma * gamma - 1.0, 0.0))
    return d, alpha, beta, diff_sq, root


def distance_gradient(x, y) -> np.ndarray:
    """Ambient partial derivative ``d poincare_distance(x, y) / d x``.

    The closed form follows from differentiating the arcosh expression:

        grad_x = 4 / (alpha * beta * sqrt(gamma^2 - 1))
                 * ((x - y) + x * ||x - y||^2 / alpha)

    with ``alpha = 1 - ||x||^2``, ``beta = 1 - ||y||^2`` and ``gamma`` the
    arcosh argument. Raises :class:`SingularGradientError` when the distance
    is below :data:`DERIVATIVE_GUARD`; callers must skip such samples.
    """
    x = check_in_ball(x, "x")
    y = check_in_ball(y, "y")
    _, grad, _ = _distance_and_gradients(x, y)
    return grad


def _distance_and_gradients(x: np.ndarray, y: np.ndarray):
    """Distance plus gradients w.r.t. both arguments, sharing intermediates.

    Hot-path core: validates the open-ball domain from the norms it computes
    anyway, but assumes finite inputs. Broadcasts a single ``x`` against a
    batch ``y`` (and vice versa).
    """
    d, alpha, beta, diff_sq, root = _distance_state(x, y)
    if (alpha <= 0.0).any() or (beta <= 0.0).any():
        raise GeometryError("point outside the open unit ball")
    if (d < DERIVATIVE_GUARD).any():
        raise SingularGradientError(
            "distance gradient is singular at (near-)coincident points"
        )
    diff = x - y
    scale = 4.0 / (alpha * beta * root)
    grad_x = scale[..., None] * (diff + x * (diff_sq / alpha)[..., None])
    grad_y = scale[..., None] * (-diff + y * (diff_sq / beta)[..., None])
    return d, grad_x, grad_y


def _fused_rsgd(rows: np.ndarray, grads: np.ndarray, lr: float,
                ball_epsilon: float, use_exp_map: bool) -> np.ndarray:
    """One Riemannian step over a batch of rows, fused for the training loop.

    Semantically the composition riemannian_rescale -> (exp_map | ambient
    step) -> project_to_ball of the public kernels (the unit suite asserts
    equivalence); fused here to cut per-sample numpy call overhead roughly
    in half.
    """
    sq = _dot_rows(rows, rows)
    v = ((1.0 - sq) ** 2 * (-lr / 4.0))[..., None] * grads
    if use_exp_map:
        v_norm = np.sqrt(_dot_rows(v, v))
        safe = np.where(v_norm == 0.0, 1.0, v_norm)
        step = np.tanh(v_norm / (1.0 - sq)) / safe
        w = step[..., None] * v
        xy = _dot_rows(rows, w)
        w_sq = _dot_rows(w, w)
        num = (1.0 + 2.0 * xy + w_sq)[..., None] * rows + (1.0 - sq)[..., None] * w
        out = num / (1.0 + 2.0 * xy + sq * w_sq)[..., None]
        moved = v_norm != 0.0
        if not moved.all():
            out = np.where(moved[..., None], out, rows)
    else:
        out = rows + v
    norm = np.sqrt(_dot_rows(out, out))
    max_norm = 1.0 - ball_epsilon
    over = norm > max_norm
    if over.any():
        out = out * np.where(over, max_norm / norm, 1.0)[..., None]
    return out


def mobius_add(x, y, ball_epsilon: float = BALL_EPSILON) -> np.ndarray:
    """Mobius addition, the ball's analogue of vector addition.

        x (+) y = ((1 + 2<x,y> + ||y||^2) x + (1 - ||x||^2) y)
                  / (1 + 2<x,y> + ||x||^2 ||y||^2)

    The exact result lies in the open ball; rounding overflow is projected
    back with ``ball_epsilon``.
    """
    x = check_in_ball(x, "x")
    y = check_in_ball(y, "y")
    xy = np.sum(x * y, axis=-1)
    x_sq = _sq_norm(x)
    y_sq = _sq_norm(y)
    num = (1.0 + 2.0 * xy + y_sq)[..., None] * x + (1.0 - x_sq)[..., None] * y
    den = 1.0 + 2.0 * xy + x_sq * y_sq
    return project_to_ball(num / den[..., None], ball_epsilon)


def exp_map(x, v, ball_epsilon: float = BALL_EPSILON) -> np.ndarray:
    """Exponential map: follow the geodesic from ``x`` with tangent ``v``.

        exp_x(v) = x (+) tanh(lambda_x ||v|| / 2) * v / ||v||

    A zero tangent returns ``x`` exactly.
    """
    x = check_in_ball(x, "x")
    v = check_finite(v, "v")
    v_norm = np.sqrt(_sq_norm(v))
    lam = 2.0 / (1.0 - _sq_norm(x))
    # Guard the 0/0 at ||v|| = 0; the limit of tanh(a||v||)/||v|| is finite
    # but exp_x(0) = x must hold exactly.
    safe = np.where(v_norm == 0.0, 1.0, v_norm)
    step = np.tanh(lam * v_norm / 2.0) / safe
    result = mobius_add(np.broadcast_to(x, np.broadcast_shapes(x.shape, v.shape)),
                        step[..., None] * v, ball_epsilon)
    zero = v_norm == 0.0
    if np.any(zero):
        result = np.where(zero[..., None], np.broadcast_to(x, result.shape), result)
    return result


def project_to_ball(x, ball_epsilon: float = BALL_EPSILON) -> np.ndarray:
    """Rescale rows with norm above ``1 - ball_epsilon`` back onto that radius.

    Interior points are returned unchanged.
    """
    x = check_finite(x, "x")
    if not 0.0 < ball_epsilon < 1.0:
        raise GeometryError(f"ball_epsilon must be in (0, 1), got {ball_epsilon}")
    max_norm = 1.0 - ball_epsilon
    norm = np.sqrt(_sq_norm(x))
    over = norm > max_norm
    if not np.any(over):
        return x
    scale = np.where(over, max_norm / np.where(norm == 0.0, 1.0, norm), 1.0)
    return x * scale[..., None]


def riemannian_rescale(x, euclidean_grad) -> np.ndarray:
    """Convert an ambient gradient to the Riemannian one: scale by ``(1-||x||^2)^2 / 4``.

    This is the inverse of the metric ``g^B = lambda_x^2 g^E``.
    """
    x = check_in_ball(x, "x")
    g = check_finite(euclidean_grad, "euclidean_grad")
    factor = (1.0 - _sq_norm(x)) ** 2 / 4.0
    return factor[..., None] * g


def h_apply(d) -> tuple[float | np.ndarray, float | np.ndarray]:
    """Distance transform ``h(d) = cosh^2(d)`` and its derivative ``sinh(2d)``.

    Raises :class:`DistanceSaturationError` above :data:`OVERFLOW_GUARD`;
    callers clamp the sample's contribution (see :func:`h_apply_clamped`).
    """
    d = check_finite(d, "d")
    if np.any(d < 0.0):
        raise GeometryError("h_apply requires a nonnegative distance")
    if np.any(d > OVERFLOW_GUARD):
        raise DistanceSaturationError(
            f"distance exceeds the overflow guard ({OVERFLOW_GUARD})"
        )
    c = np.cosh(d)
    return c * c, np.sinh(2.0 * d)


def h_apply_clamped(d) -> tuple[np.ndarray, np.ndarray]:
    """Saturating variant of :func:`h_apply` for training loops.

    Beyond the overflow guard, h is extended flat: the value freezes at
    ``cosh^2(OVERFLOW_GUARD)`` and the derivative drops to zero, keeping
    update magnitudes bounded.
    """
    d = np.asarray(d, dtype=np.float64)
    clipped = np.minimum(d, OVERFLOW_GUARD)
    c = np.cosh(clipped)
    value = c * c
    deriv = np.where(d > OVERFLOW_GUARD, 0.0, np.sinh(2.0 * clipped))
    return value, deriv
