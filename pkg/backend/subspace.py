"""
ANASTAARS Subspace Geometry Module
Samples and extends Haar-distributed random subspace embeddings and checks their alignment
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
from sklearn.random_projection import johnson_lindenstrauss_min_dim

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
COMPLEMENT_RETRY_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when a subspace dimension falls outside [1, d]"""


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal frame U (d x q) of a random affine subspace"""
    U: np.ndarray

    @property
    def d(self) -> int:
        return self.U.shape[0]

    @property
    def q(self) -> int:
        return self.U.shape[1]

    @property
    def scale(self) -> float:
        return math.sqrt(self.d / self.q)

    @property
    def Q(self) -> np.ndarray:
        """Scaled embedding sqrt(d/q) U used to map subspace steps into R^d"""
        return self.scale * self.U

    def embed(self, s: np.ndarray) -> np.ndarray:
        """Map a subspace vector s to the full-space displacement Q s"""
        return self.Q @ np.asarray(s, dtype=float)

    def orthogonality_error(self) -> float:
        return float(np.max(np.abs(self.U.T @ self.U - np.eye(self.q))))


def _check_dimensions(d: int, q: int):
    if d < 1:
        raise DimensionError(f"Ambient dimension must be positive, got d={d}")
    if q < 1 or q > d:
        raise DimensionError(f"Subspace dimension q={q} outside [1, {d}]")


def sample_haar_basis(d: int, q: int, rng: np.random.Generator) -> SubspaceBasis:
    """Draw the first q columns of a Haar-distributed d x d orthogonal matrix.

    A Gaussian d x q matrix is QR-factorized and each column of the orthogonal
    factor is multiplied by the sign of the matching diagonal entry of R, which
    makes the result exactly Haar on the Stiefel manifold.
    """
    _check_dimensions(d, q)
    gaussian = rng.standard_normal((d, q))
    u, r = np.linalg.qr(gaussian, mode='reduced')
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return SubspaceBasis(U=u * signs)


def extend_basis(basis: SubspaceBasis, rng: np.random.Generator) -> SubspaceBasis:
    """Append one unit column drawn uniformly from the orthogonal complement of span(U).

    The first q columns are kept bit-for-bit.
    """
    if basis.q >= basis.d:
        raise DimensionError(f"Cannot extend a full-dimensional basis (q = d = {basis.d})")

    U = basis.U
    while True:
        g = rng.standard_normal(basis.d)
        w = g - U @ (U.T @ g)
        norm_w = np.linalg.norm(w)
        if norm_w < COMPLEMENT_RETRY_TOL * np.linalg.norm(g):
            logger.debug("Complement draw nearly inside span(U), retrying")
            continue
        mu = w / norm_w
        # second projection pass keeps |mu^T U| at rounding level
        mu = mu - U @ (U.T @ mu)
        mu /= np.linalg.norm(mu)
        return SubspaceBasis(U=np.column_stack([U, mu]))


def alignment_ratio(basis: SubspaceBasis, v: np.ndarray) -> float:
    """Return ||Q^T v|| / ||v||"""
    v = np.asarray(v, dtype=float)
    if v.shape != (basis.d,):
        raise DimensionError(f"Vector of shape {v.shape} does not live in R^{basis.d}")
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        raise ValueError("Alignment ratio is undefined for the zero vector")
    return float(np.linalg.norm(basis.Q.T @ v) / norm_v)


def alignment_report(d: int,
                     q: int,
                     eps: float = 0.45,
                     beta: float = 0.45,
                     n_vectors: int = 10_000,
                     rng: np.random.Generator = None) -> Dict:
    """Monte-Carlo estimate of the well-alignment event for Haar embeddings.

    Each trial draws a fresh basis and a random unit vector and checks
    (1 - eps) <= ||Q^T v|| <= (1 + eps). The worst-case JL dimension for
    n_vectors points is reported next to it for comparison only.
    """
    rng = rng if rng is not None else np.random.default_rng()
    _check_dimensions(d, q)

    hits = 0
    squared = np.empty(n_vectors)
    for i in range(n_vectors):
        basis = sample_haar_basis(d, q, rng)
        v = rng.standard_normal(d)
        ratio = alignment_ratio(basis, v)
        squared[i] = ratio ** 2
        if (1.0 - eps) <= ratio <= (1.0 + eps):
            hits += 1

    probability = hits / n_vectors
    report = {
        'd': d,
        'q': q,
        'eps': eps,
        'beta': beta,
        'n_vectors': n_vectors,
        'event_probability': probability,
        'mean_squared_ratio': float(np.mean(squared)),
        'meets_target': probability >= 1.0 - beta,
        'jl_worst_case_dim': int(johnson_lindenstrauss_min_dim(n_samples=n_vectors, eps=eps)),
    }
    logger.info(f"Well-alignment at d={d}, q={q}: P={probability:.3f} (target {1.0 - beta:.2f})")
    return report
