"""Rotation matrices on SO(3): construction, geodesic distance, a
differentiable polynomial surrogate, the 6D continuous representation,
and the z-rotation quotient metric.

Rotations are plain (3, 3) numpy arrays throughout; JSON serialization is
9 numbers, row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-9


class InvalidAxis(ValueError):
    """Axis-angle construction got a non-unit axis."""


class InvalidRotation(ValueError):
    """Matrix is not orthonormal with determinant +1."""


class DegenerateSixD(ValueError):
    """6D representation vectors are zero or parallel."""


class FitFailed(RuntimeError):
    """Polynomial least-squares system was singular."""


def check_rotation(m: np.ndarray, tol: float = ORTHO_TOL) -> np.ndarray:
    """Validate that ``m`` is a rotation matrix and return it as float64."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise InvalidRotation(f"expected (3, 3) matrix, got {m.shape}")
    if not np.all(np.abs(m.T @ m - np.eye(3)) <= tol):
        raise InvalidRotation("matrix is not orthonormal")
    if abs(np.linalg.det(m) - 1.0) > tol:
        raise InvalidRotation("determinant is not +1")
    return m


def rotation_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > ORTHO_TOL:
        raise InvalidAxis(f"axis norm {np.linalg.norm(axis)} != 1")
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rot_x(angle: float) -> np.ndarray:
    return rotation_from_axis_angle(np.array([1.0, 0.0, 0.0]), angle)


def rot_y(angle: float) -> np.ndarray:
    return rotation_from_axis_angle(np.array([0.0, 1.0, 0.0]), angle)


def rot_z(angle: float) -> np.ndarray:
    return rotation_from_axis_angle(np.array([0.0, 0.0, 1.0]), angle)


def geodesic_distance(rg: np.ndarray, rt: np.ndarray) -> float:
    """Angular distance arccos((tr(rg @ rt.T) - 1) / 2), in [0, pi].

    The arccos argument is clamped to [-1, 1] to absorb floating-point
    drift in the trace.
    """
    t = float(np.trace(np.asarray(rg) @ np.asarray(rt).T))
    return float(np.arccos(np.clip((t - 1.0) / 2.0, -1.0, 1.0)))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation via a normalized Gaussian quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


# --- polynomial surrogate -------------------------------------------------


@dataclass(frozen=True)
class PolyCoeffs:
    """Coefficients a0..a9 of the degree-9 factor; the surrogate is
    (t - 3) * sum_i a_i t^i with t the trace of rg @ rt.T, which is zero
    by construction at t = 3.
    """

    a: np.ndarray  # shape (10,)
    max_fit_error: float = float("nan")

    def factor(self, t: float | np.ndarray) -> np.ndarray:
        """sum_i a_i t^i (Horner)."""
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for c in self.a[::-1]:
            acc = acc * t + c
        return acc

    def factor_derivative(self, t: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for i in range(9, 0, -1):
            acc = acc * t + i * self.a[i]
        return acc

    def value(self, t: float | np.ndarray) -> np.ndarray:
        return (np.asarray(t, dtype=float) - 3.0) * self.factor(t)

    def derivative(self, t: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.factor(t) + (t - 3.0) * self.factor_derivative(t)

    def to_list(self) -> list[float]:
        return [float(c) for c in self.a]


def fit_geodesic_polynomial(samples: int = 10001) -> PolyCoeffs:
    """Least-squares fit of the surrogate to arccos((t - 1) / 2) on a
    uniform grid of ``samples`` points over t in [-1, 3].

    Uniform unweighted least squares; the surrogate family cannot
    reproduce the square-root behaviour of arccos near t = -1 and t = 3,
    so the max fit error is ~0.1 rad (dominated by the endpoints).
    """
    if samples < 100:
        raise ValueError(f"samples must be >= 100, got {samples}")
    t = np.linspace(-1.0, 3.0, samples)
    target = np.arccos(np.clip((t - 1.0) / 2.0, -1.0, 1.0))
    design = (t - 3.0)[:, None] * t[:, None] ** np.arange(10)[None, :]
    coeffs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < 10:
        raise FitFailed(f"normal equations rank-deficient (rank {rank})")
    err = float(np.abs(design @ coeffs - target).max())
    return PolyCoeffs(a=coeffs, max_fit_error=err)


def poly_geodesic_distance(
    c: PolyCoeffs, rg: np.ndarray, rt: np.ndarray
) -> tuple[float, np.ndarray]:
    """Surrogate distance and its gradient with respect to the entries of
    ``rg``.

    With t = tr(rg @ rt.T) = sum_ij rg_ij rt_ij, dt/drg = rt, so the
    gradient is f'(t) * rt.  Differentiable everywhere, including t = 3.
    """
    rg = np.asarray(rg, dtype=float)
    rt = np.asarray(rt, dtype=float)
    t = float(np.sum(rg * rt))
    value = float(c.value(t))
    grad = float(c.derivative(t)) * rt
    return value, grad


# --- 6D continuous representation -----------------------------------------


def sixd_from_rotation(r: np.ndarray) -> np.ndarray:
    """First two columns of the rotation, stacked as a (2, 3) array."""
    r = np.asarray(r, dtype=float)
    return r[:, :2].T.copy()


def rotation_from_sixd(s: np.ndarray) -> np.ndarray:
    """Gram-Schmidt the two vectors, third column by cross product."""
    s = np.asarray(s, dtype=float)
    a, b = s[0], s[1]
    na = np.linalg.norm(a)
    if na < 1e-12:
        raise DegenerateSixD("first vector is zero")
    c0 = a / na
    b_perp = b - np.dot(b, c0) * c0
    nb = np.linalg.norm(b_perp)
    if nb < 1e-12:
        raise DegenerateSixD("vectors are parallel or second vector is zero")
    c1 = b_perp / nb
    c2 = np.cross(c0, c1)
    return np.column_stack([c0, c1, c2])


# --- z-rotation quotient metric -------------------------------------------


def _quotient_trace_max(m: np.ndarray) -> tuple[float, float, float]:
    """Return (p, q, m22) with tr(Rz(theta) @ m) = p cos + q sin + m22."""
    p = m[0, 0] + m[1, 1]
    q = m[0, 1] - m[1, 0]
    return float(p), float(q), float(m[2, 2])


def z_quotient_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """min over theta of geodesic_distance(Rz(theta) @ r1, r2).

    Dense 720-sample sweep of theta over [0, 2pi) followed by
    golden-section refinement of the trace maximum to 1e-8.
    """
    m = np.asarray(r1, dtype=float) @ np.asarray(r2, dtype=float).T
    p, q, m22 = _quotient_trace_max(m)

    def trace_at(theta: float | np.ndarray) -> np.ndarray:
        return p * np.cos(theta) + q * np.sin(theta) + m22

    thetas = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    k = int(np.argmax(trace_at(thetas)))
    step = 2.0 * np.pi / 720
    lo, hi = thetas[k] - step, thetas[k] + step
    # golden-section maximization of the trace
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = trace_at(x1), trace_at(x2)
    while hi - lo > 1e-8:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = trace_at(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = trace_at(x1)
    best = float(max(trace_at(0.5 * (lo + hi)), trace_at(thetas[k])))
    return float(np.arccos(np.clip((best - 1.0) / 2.0, -1.0, 1.0)))


def z_quotient_distances(r: np.ndarray, rs: np.ndarray) -> np.ndarray:
    """Vectorized quotient distance from ``r`` to a stack ``rs`` (k, 3, 3).

    Uses the closed-form maximum of p cos + q sin + m22, which the
    sweep + golden-section routine converges to; agreement is covered by
    tests.  Intended for clustering / classification inner loops.
    """
    r = np.asarray(r, dtype=float)
    rs = np.asarray(rs, dtype=float)
    m = np.einsum("ij,klj->kil", r, rs)  # r @ rs[k].T
    p = m[:, 0, 0] + m[:, 1, 1]
    q = m[:, 0, 1] - m[:, 1, 0]
    best = np.hypot(p, q) + m[:, 2, 2]
    return np.arccos(np.clip((best - 1.0) / 2.0, -1.0, 1.0))


def z_align(r: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rz(theta*) @ r with theta* minimizing the geodesic distance to
    ``target``; the canonical fiber representative nearest the target."""
    m = np.asarray(r, dtype=float) @ np.asarray(target, dtype=float).T
    p, q, _ = _quotient_trace_max(m)
    theta = float(np.arctan2(q, p))
    return rot_z(theta) @ r


def body_up_axis(r: np.ndarray) -> np.ndarray:
    """Body-frame direction that points world-up: r.T @ z-hat.  Invariant
    under left multiplication by any Rz(theta)."""
    return np.asarray(r, dtype=float).T @ np.array([0.0, 0.0, 1.0])
