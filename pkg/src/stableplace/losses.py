"""Differentiable loss kernels: geodesic Chamfer loss over orientation
sets and the auxiliary-plane refinement loss over displacement fields.

Both return analytic gradients suitable for finite-difference checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rotations import PolyCoeffs


class EmptySet(ValueError):
    """Chamfer loss received an empty orientation set."""


class EmptyField(ValueError):
    """Displacement field has no rows."""


@dataclass(frozen=True)
class RefineLossWeights:
    alpha: float = 1.0
    beta: float = 1.0
    smooth_l1_transition: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError("weights must be non-negative with alpha + beta > 0")
        if self.smooth_l1_transition <= 0:
            raise ValueError("smooth_l1_transition must be positive")


@dataclass
class DisplacementField:
    """Per-point displacement vectors toward an auxiliary-plane vector."""

    points: np.ndarray  # (M, 3)
    displacements: np.ndarray  # (M, 3)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.displacements = np.asarray(self.displacements, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise EmptyField(f"points must be (M, 3), got {self.points.shape}")
        if self.points.shape != self.displacements.shape:
            raise EmptyField("points and displacements must have equal shape")
        if self.points.shape[0] < 1:
            raise EmptyField("field must have at least one row")


def chamfer_geodesic_loss(
    sg: list[np.ndarray], st: list[np.ndarray], c: PolyCoeffs
) -> tuple[float, np.ndarray]:
    """Two-sided Chamfer sum of the polynomial geodesic surrogate.

    Returns (value, grads) where grads[i] is d value / d sg[i] entries.
    Gradient flows through each realized min; ties resolve to the lowest
    index so results are deterministic.
    """
    if len(sg) == 0 or len(st) == 0:
        raise EmptySet("orientation sets must be non-empty")
    a = np.stack([np.asarray(r, dtype=float) for r in sg])  # (n, 3, 3)
    b = np.stack([np.asarray(r, dtype=float) for r in st])  # (m, 3, 3)
    t = np.einsum("nij,mij->nm", a, b)  # traces of a[n] @ b[m].T
    d = (t - 3.0) * _polyval(c.a, t)
    dprime = _polyval(c.a, t) + (t - 3.0) * _polyval_deriv(c.a, t)

    value = 0.0
    grads = np.zeros_like(a)
    # generated -> nearest ground truth
    j_star = np.argmin(d, axis=1)
    for i, j in enumerate(j_star):
        value += d[i, j]
        grads[i] += dprime[i, j] * b[j]
    # ground truth -> nearest generated
    i_star = np.argmin(d, axis=0)
    for j, i in enumerate(i_star):
        value += d[i, j]
        grads[i] += dprime[i, j] * b[j]
    return float(value), grads


def _polyval(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(t)
    for ci in coeffs[::-1]:
        acc = acc * t + ci
    return acc


def _polyval_deriv(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(t)
    for i in range(len(coeffs) - 1, 0, -1):
        acc = acc * t + i * coeffs[i]
    return acc


def _smooth_l1(d: np.ndarray, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise smooth L1 and its derivative (quadratic below beta)."""
    ad = np.abs(d)
    quad = ad < beta
    val = np.where(quad, 0.5 * d * d / beta, ad - 0.5 * beta)
    grad = np.where(quad, d / beta, np.sign(d))
    return val, grad


def refine_loss(
    f: DisplacementField,
    v_gt: np.ndarray,
    w: RefineLossWeights = RefineLossWeights(),
) -> tuple[float, np.ndarray]:
    """Field + variance loss for auxiliary-plane regression.

    value = alpha * mean_i smoothL1((v_gt - p_i) - v_i) summed over the
    3 components, plus beta * mean_i |p_i + v_i - mean_j (p_j + v_j)|^2.
    Returns (value, grads) with grads (M, 3) with respect to the
    displacements.
    """
    v_gt = np.asarray(v_gt, dtype=float)
    p, v = f.points, f.displacements
    m = p.shape[0]

    resid = (v_gt[None, :] - p) - v
    sl1, sl1_grad = _smooth_l1(resid, w.smooth_l1_transition)
    field_term = float(sl1.sum()) / m

    q = p + v
    # shift by the first row so identical targets give an exact zero
    q0 = q - q[0]
    dev = q0 - q0.mean(axis=0)[None, :]
    var_term = float((dev * dev).sum()) / m

    value = w.alpha * field_term + w.beta * var_term
    # d resid / d v = -1; the mean cancels inside the variance gradient
    grads = -w.alpha / m * sl1_grad + w.beta / m * 2.0 * dev
    return value, grads


def predicted_plane_vector(f: DisplacementField) -> np.ndarray:
    """Mean over rows of p_i + v_i: the regressed auxiliary-plane vector."""
    return (f.points + f.displacements).mean(axis=0)
