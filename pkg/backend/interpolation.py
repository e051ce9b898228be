"""
ANASTAARS Interpolation Model Module
Linear, minimum-Frobenius-norm and diagonal-Hessian subspace models built on poised
point sets, with incremental extension that reuses past function estimates
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

POISED_COND_MAX = 1e8
LAYOUT_TOL = 1e-12


class ModelKind(str, Enum):
    """Interpolation model family"""
    LINEAR = "linear"
    MFN = "mfn"
    DIAGONAL = "diagonal"


class PoisednessError(ValueError):
    """Raised when an interpolation system is singular or too ill-conditioned"""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class LayoutError(ValueError):
    """Raised when a diagonal-kind set is not laid out as {0} + {h e_i} + {-h e_i}"""


class RadiusError(ValueError):
    """Raised when a new interpolation coordinate violates 0 < |zeta| <= radius"""


@dataclass
class InterpolationSet:
    """Points s^0..s^m of a subspace (s^0 = 0) with their estimated values"""
    points: np.ndarray   # (m + 1, q)
    values: np.ndarray   # (m + 1,)
    radius: float        # bound on every point norm
    kind: ModelKind

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        self.kind = ModelKind(self.kind)
        if self.points.shape[0] != self.values.shape[0]:
            raise ValueError(f"{self.points.shape[0]} points but {self.values.shape[0]} values")
        if np.any(self.points[0] != 0.0):
            raise ValueError("The first interpolation point must be the subspace origin")
        if self.radius <= 0:
            raise ValueError(f"Set radius must be positive, got {self.radius}")

    @property
    def q(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]


@dataclass
class QuadraticSubspaceModel:
    """m(s) = f0 + g^T s + 1/2 s^T H s on R^q"""
    f0: float
    g: np.ndarray
    H: np.ndarray
    kind: ModelKind

    @property
    def q(self) -> int:
        return self.g.shape[0]

    def __call__(self, s: np.ndarray) -> float:
        return evaluate_model(self, s)


def q_hat(q: int) -> float:
    """Scaling sqrt(1 + 1/q) applied to reused points when q grows by one"""
    return math.sqrt(1.0 + 1.0 / q)


def evaluate_model(model: QuadraticSubspaceModel, s: np.ndarray) -> float:
    s = np.asarray(s, dtype=float)
    if s.shape != (model.q,):
        raise ValueError(f"Model lives in R^{model.q}, got a point of shape {s.shape}")
    return float(model.f0 + model.g @ s + 0.5 * s @ model.H @ s)


def generate_poised_set(q: int, delta: float, kind: ModelKind) -> np.ndarray:
    """Fresh interpolation layout: {0, delta e_i} (linear) or {0, +-delta e_i} (mfn, diagonal)"""
    if q < 1:
        raise ValueError(f"Subspace dimension must be at least 1, got {q}")
    if delta <= 0:
        raise ValueError(f"Radius must be positive, got {delta}")
    kind = ModelKind(kind)
    origin = np.zeros((1, q))
    plus = delta * np.eye(q)
    if kind is ModelKind.LINEAR:
        return np.vstack([origin, plus])
    return np.vstack([origin, plus, -plus])


def natural_basis_matrices(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rows (1, s) and (1/2 s_1^2, s_1 s_2, ..., 1/2 s_q^2) of the natural quadratic basis"""
    points = np.atleast_2d(points)
    m, q = points.shape
    M_L = np.hstack([np.ones((m, 1)), points])
    rows, cols = np.triu_indices(q)
    M_Q = points[:, rows] * points[:, cols]
    M_Q[:, rows == cols] *= 0.5
    return M_L, M_Q


def _hessian_from_coefficients(alpha_q: np.ndarray, q: int) -> np.ndarray:
    H = np.zeros((q, q))
    H[np.triu_indices(q)] = alpha_q
    return H + np.triu(H, 1).T


def _coefficients_from_hessian(H: np.ndarray) -> np.ndarray:
    return H[np.triu_indices(H.shape[0])]


def _mfn_kkt_matrix(scaled_points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduced saddle system [[M_Q M_Q^T, M_L], [M_L^T, 0]] of the MFN problem"""
    M_L, M_Q = natural_basis_matrices(scaled_points)
    n_lin = M_L.shape[1]
    kkt = np.block([
        [M_Q @ M_Q.T, M_L],
        [M_L.T, np.zeros((n_lin, n_lin))],
    ])
    return kkt, M_L, M_Q


def _diagonal_radii(points: np.ndarray) -> np.ndarray:
    """Per-coordinate radii h_i of a {0} + {h_i e_i} + {-h_i e_i} layout"""
    m, q = points.shape
    if m != 2 * q + 1:
        raise LayoutError(f"Diagonal layout needs {2 * q + 1} points, got {m}")
    plus = points[1:q + 1]
    minus = points[q + 1:]
    radii = np.diag(plus).copy()
    tol = LAYOUT_TOL * max(1.0, float(np.max(np.abs(points))))
    if np.any(radii <= 0):
        raise LayoutError("Diagonal layout needs positive radii along every axis")
    if np.max(np.abs(plus - np.diag(radii))) > tol or np.max(np.abs(minus + np.diag(radii))) > tol:
        raise LayoutError("Points are not laid out as {0} + {h e_i} + {-h e_i}")
    return radii


def check_poised(points: np.ndarray, kind: ModelKind, radius: float) -> float:
    """Return the condition estimate of the interpolation system for these points.

    Only geometry is inspected, so a candidate set can be rejected before any
    shots are spent on it.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    kind = ModelKind(kind)
    m, q = points.shape

    if kind is ModelKind.LINEAR:
        if m != q + 1:
            raise PoisednessError(f"Linear model needs {q + 1} points, got {m}", np.inf)
        condition = float(np.linalg.cond(points[1:]))
    elif kind is ModelKind.DIAGONAL:
        radii = _diagonal_radii(points)
        condition = float(np.max(radii) / np.min(radii))
    else:
        if not (q + 1 <= m <= (q + 1) * (q + 2) // 2):
            raise PoisednessError(f"MFN model needs between {q + 1} and {(q + 1) * (q + 2) // 2} points, got {m}",
                                  np.inf)
        kkt, _, _ = _mfn_kkt_matrix(points / radius)
        condition = float(np.linalg.cond(kkt))

    if not np.isfinite(condition) or condition > POISED_COND_MAX:
        raise PoisednessError(f"Interpolation set of kind '{kind.value}' is not poised", condition)
    return condition


def build_linear_model(iset: InterpolationSet) -> QuadraticSubspaceModel:
    """Solve L^T a = f(s^i) - f(s^0) for the model gradient"""
    if iset.kind is not ModelKind.LINEAR:
        raise ValueError(f"Expected a linear set, got '{iset.kind.value}'")
    check_poised(iset.points, iset.kind, iset.radius)
    g = np.linalg.solve(iset.points[1:], iset.values[1:] - iset.values[0])
    return QuadraticSubspaceModel(f0=float(iset.values[0]), g=g,
                                  H=np.zeros((iset.q, iset.q)), kind=ModelKind.LINEAR)


def extend_linear_model(prev_model: QuadraticSubspaceModel, zeta: float, delta_f: float) -> QuadraticSubspaceModel:
    """Closed-form (q+1)-dimensional linear model after a failed iteration.

    Reused points are scaled by q_hat, so the old gradient shrinks by 1/q_hat;
    the new coordinate's slope is delta_f / zeta.
    """
    if zeta == 0:
        raise RadiusError("The new interpolation coordinate must be nonzero")
    q = prev_model.q
    g = np.append(prev_model.g / q_hat(q), delta_f / zeta)
    return QuadraticSubspaceModel(f0=prev_model.f0, g=g, H=np.zeros((q + 1, q + 1)), kind=ModelKind.LINEAR)


def build_mfn_model(iset: InterpolationSet) -> QuadraticSubspaceModel:
    """Minimum Frobenius norm quadratic: min 1/2 ||alpha_Q||^2 s.t. the model interpolates.

    The system is solved in coordinates scaled by the set radius; every
    quadratic coefficient scales by the same factor so the minimizer is unchanged.
    """
    if iset.kind is not ModelKind.MFN:
        raise ValueError(f"Expected an mfn set, got '{iset.kind.value}'")
    check_poised(iset.points, iset.kind, iset.radius)

    h = iset.radius
    q, m = iset.q, iset.size
    kkt, M_L, M_Q = _mfn_kkt_matrix(iset.points / h)
    rhs = np.concatenate([iset.values, np.zeros(M_L.shape[1])])
    solution = np.linalg.solve(kkt, rhs)

    multipliers, alpha_l = solution[:m], solution[m:]
    alpha_q = M_Q.T @ multipliers
    H = _hessian_from_coefficients(alpha_q, q) / h / h
    return QuadraticSubspaceModel(f0=float(alpha_l[0]), g=alpha_l[1:] / h, H=H, kind=ModelKind.MFN)


def mfn_kkt_residual(iset: InterpolationSet, model: QuadraticSubspaceModel) -> float:
    """Largest KKT violation of the MFN problem for a candidate model.

    Feasibility is measured relative to max(1, |f|); stationarity asks that
    alpha_Q = M_Q^T lambda with M_L^T lambda = 0 for some lambda.
    """
    h = iset.radius
    M_L, M_Q = natural_basis_matrices(iset.points / h)
    alpha_l = np.concatenate([[model.f0], model.g * h])
    alpha_q = _coefficients_from_hessian(model.H * h * h)

    scale = max(1.0, float(np.max(np.abs(iset.values))))
    feasibility = np.max(np.abs(M_L @ alpha_l + M_Q @ alpha_q - iset.values)) / scale

    stacked = np.vstack([M_Q.T, M_L.T])
    target = np.concatenate([alpha_q, np.zeros(M_L.shape[1])])
    multipliers, *_ = np.linalg.lstsq(stacked, target, rcond=None)
    stationarity = np.max(np.abs(stacked @ multipliers - target), initial=0.0) / scale
    return float(max(feasibility, stationarity))


def build_diagonal_model(iset: InterpolationSet) -> QuadraticSubspaceModel:
    """Central-difference closed forms of the (2q+1)-point diagonal-Hessian system"""
    if iset.kind is not ModelKind.DIAGONAL:
        raise ValueError(f"Expected a diagonal set, got '{iset.kind.value}'")
    q = iset.q
    radii = _diagonal_radii(iset.points)
    v0 = iset.values[0]
    v_plus = iset.values[1:q + 1]
    v_minus = iset.values[q + 1:]
    g = (v_plus - v_minus) / (2.0 * radii)
    # radii ** 2 underflows below ~1e-154
    H = np.diag((v_plus + v_minus - 2.0 * v0) / radii / radii)
    return QuadraticSubspaceModel(f0=float(v0), g=g, H=H, kind=ModelKind.DIAGONAL)


def build_model(iset: InterpolationSet) -> QuadraticSubspaceModel:
    builders = {
        ModelKind.LINEAR: build_linear_model,
        ModelKind.MFN: build_mfn_model,
        ModelKind.DIAGONAL: build_diagonal_model,
    }
    return builders[iset.kind](iset)


def extension_points(prev: InterpolationSet, zeta: Optional[float] = None) -> np.ndarray:
    """New (q+1)-dimensional points an extension needs estimates for.

    Linear and mfn sets gain (0, zeta); diagonal sets gain (0, +-q_hat * radius).
    """
    q = prev.q
    if prev.kind is ModelKind.DIAGONAL:
        step = q_hat(q) * prev.radius
        new = np.zeros((2, q + 1))
        new[0, q], new[1, q] = step, -step
        return new

    if zeta is None or zeta == 0 or abs(zeta) > prev.radius:
        raise RadiusError(f"New coordinate zeta={zeta} must satisfy 0 < |zeta| <= {prev.radius}")
    new = np.zeros((1, q + 1))
    new[0, q] = zeta
    return new


def extend_interpolation_set(prev: InterpolationSet,
                             zeta: Optional[float],
                             new_values: Sequence[float]) -> InterpolationSet:
    """Lift every old point s to (q_hat s, 0), keep its value and append the new point(s)"""
    new_points = extension_points(prev, zeta)
    new_values = np.asarray(new_values, dtype=float).reshape(-1)
    if new_values.shape[0] != new_points.shape[0]:
        raise ValueError(f"Extension needs {new_points.shape[0]} new values, got {new_values.shape[0]}")

    q = prev.q
    scale = q_hat(q)
    lifted = np.hstack([scale * prev.points, np.zeros((prev.size, 1))])

    if prev.kind is ModelKind.DIAGONAL:
        points = np.vstack([lifted[:q + 1], new_points[:1], lifted[q + 1:], new_points[1:]])
        values = np.concatenate([prev.values[:q + 1], new_values[:1], prev.values[q + 1:], new_values[1:]])
        radius = scale * prev.radius
    else:
        points = np.vstack([lifted, new_points])
        values = np.concatenate([prev.values, new_values])
        radius = max(scale * prev.radius, abs(zeta))

    extended = InterpolationSet(points=points, values=values, radius=radius, kind=prev.kind)
    check_poised(extended.points, extended.kind, extended.radius)
    return extended
