"""
ANASTAARS Trust Region Module
Subspace trust-region subproblem, Cauchy decrease and the noise-aware ratio test
"""

import logging
from typing import Optional

import numpy as np
from numpy.linalg import norm

from interpolation import QuadraticSubspaceModel, evaluate_model

logger = logging.getLogger(__name__)

CURVATURE_FLOOR = 1e-12
REDUCTION_FLOOR = 1e-15
SECULAR_RTOL = 1e-10
MAX_SECULAR_ITER = 200


def model_reduction(model: QuadraticSubspaceModel, s: np.ndarray) -> float:
    """m(0) - m(s)"""
    return model.f0 - evaluate_model(model, s)


def cauchy_reduction(model: QuadraticSubspaceModel, delta: float) -> float:
    """Fraction-of-Cauchy bound 1/2 ||g|| min(delta, ||g|| / max(||H||, eps_H))"""
    gnorm = norm(model.g)
    hnorm = max(norm(model.H, 2), CURVATURE_FLOOR)
    return 0.5 * gnorm * min(delta, gnorm / hnorm)


def cauchy_point(model: QuadraticSubspaceModel, delta: float) -> np.ndarray:
    """Minimizer of the model along -g inside the ball of radius delta"""
    g = model.g
    gnorm = norm(g)
    if gnorm == 0.0:
        return np.zeros_like(g)
    u = g / gnorm
    curvature = u @ model.H @ u
    t = delta / gnorm
    if curvature > 0:
        t = min(t, 1.0 / curvature)
    return -t * g


def _step_for_shift(eigvals, eigvecs, coeffs, lam):
    return -eigvecs @ (coeffs / (eigvals + lam))


def _boundary_step(eigvals: np.ndarray, eigvecs: np.ndarray, coeffs: np.ndarray, delta: float) -> np.ndarray:
    """Solve ||s(lam)|| = delta for lam >= max(0, -lam_min) (More-Sorensen, eigen-based).

    Falls into the hard case when g has no component along the leftmost
    eigenspace and the shifted step stays inside the region.
    """
    lam_min = eigvals[0]
    gnorm = norm(coeffs)
    lo = max(0.0, -lam_min)

    leftmost = np.abs(eigvals - lam_min) <= 1e-12 * max(1.0, abs(lam_min))
    if lam_min <= 0 and np.all(np.abs(coeffs[leftmost]) <= 1e-12 * gnorm):
        rest = ~leftmost
        s = -eigvecs[:, rest] @ (coeffs[rest] / (eigvals[rest] + lo))
        snorm = norm(s)
        if snorm <= delta:
            tau = np.sqrt(max((delta - snorm) * (delta + snorm), 0.0))
            return s + tau * eigvecs[:, np.argmax(leftmost)]

    hi = lo + gnorm / delta
    lam = hi
    for _ in range(MAX_SECULAR_ITER):
        s = _step_for_shift(eigvals, eigvecs, coeffs, lam)
        snorm = norm(s)
        if abs(snorm - delta) <= SECULAR_RTOL * delta:
            break
        if snorm > delta:
            lo = lam
        else:
            hi = lam
        # Newton step on 1/||s|| - 1/delta
        denom = eigvals + lam
        unit = coeffs / denom / snorm
        dphi = np.sum(unit ** 2 / denom) / snorm
        candidate = lam - (1.0 / snorm - 1.0 / delta) / dphi if dphi > 0 else -np.inf
        lam = candidate if lo < candidate < hi else 0.5 * (lo + hi)
    else:
        logger.debug("Secular iteration hit its cap; using the last shift")

    s = _step_for_shift(eigvals, eigvecs, coeffs, lam)
    return s * (delta / norm(s))


def solve_tr_subproblem(model: QuadraticSubspaceModel, delta: float) -> np.ndarray:
    """Approximately minimize the model over ||s|| <= delta.

    Returns the exact solution when it is found and the Cauchy point whenever
    that point does better, so the fraction-of-Cauchy decrease always holds.
    A zero model gradient yields the zero step.
    """
    if delta <= 0:
        raise ValueError(f"Trust-region radius must be positive, got {delta}")
    g = model.g
    if norm(g) == 0.0:
        return np.zeros_like(g)

    eigvals, eigvecs = np.linalg.eigh(model.H)
    coeffs = eigvecs.T @ g

    step: Optional[np.ndarray] = None
    if eigvals[0] > 0:
        newton = _step_for_shift(eigvals, eigvecs, coeffs, 0.0)
        if norm(newton) <= delta:
            step = newton
    if step is None:
        step = _boundary_step(eigvals, eigvecs, coeffs, delta)

    cauchy = cauchy_point(model, delta)
    if not np.all(np.isfinite(step)) or model_reduction(model, step) < model_reduction(model, cauchy):
        return cauchy
    return step


def compute_rho_tilde(f0: float, fs: float, noise: float, r: float, reduction: float) -> float:
    """Noise-aware ratio (f0 - fs + r * noise) / (m(0) - m(s)); -inf when the model predicts no decrease"""
    if reduction <= REDUCTION_FLOOR:
        return -np.inf
    return (f0 - fs + r * noise) / reduction
