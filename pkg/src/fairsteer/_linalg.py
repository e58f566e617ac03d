"""Small symmetric-matrix helpers shared by the multivariate code paths.

All routines assume real symmetric input and use numpy's eigendecomposition
for PD checks, square roots, and PSD projection. Eigenvalue floors guard the
inversions that the steering formulas perform.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularCovariance

# Eigenvalue floor below which a covariance counts as singular.
EPS_PD = 1e-10

SYM_TOL = 1e-10


def as_matrix(m: np.ndarray) -> np.ndarray:
    out = np.asarray(m, dtype=float)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise SingularCovariance(f"expected a square matrix, got shape {out.shape}")
    return out


def check_symmetric(m: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    m = as_matrix(m)
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > tol * scale:
        raise SingularCovariance("matrix is not symmetric")
    return 0.5 * (m + m.T)


def eigh_pd(m: np.ndarray, floor: float = EPS_PD) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, rejecting eigenvalues <= floor."""
    m = check_symmetric(m)
    vals, vecs = np.linalg.eigh(m)
    if vals.min() <= floor:
        raise SingularCovariance(
            f"matrix has eigenvalue {vals.min():.3e} <= positive-definite floor {floor:.0e}"
    )
    return vals, vecs


def sym_sqrt(m: np.ndarray, floor: float = EPS_PD) -> np.ndarray:
    vals, vecs = eigh_pd(m, floor)
    return (vecs * np.sqrt(vals)) @ vecs.T


def sym_inv_sqrt(m: np.ndarray, floor: float = EPS_PD) -> np.ndarray:
    vals, vecs = eigh_pd(m, floor)
    return (vecs / np.sqrt(vals)) @ vecs.T


def sym_inv(m: np.ndarray, floor: float = EPS_PD) -> np.ndarray:
    vals, vecs = eigh_pd(m, floor)
    return (vecs / vals) @ vecs.T


def logdet_pd(m: np.ndarray, floor: float = EPS_PD) -> float:
    vals, _ = eigh_pd(m, floor)
    return float(np.sum(np.log(vals)))


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: symmetrize, then clip eigenvalues at 0."""
    m = np.asarray(m, dtype=float)
    sym = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(sym)
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.T
