"""Dense symmetric eigendecomposition and SVD with the ordering conventions
used throughout the package (descending values).  LAPACK does the work."""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def sym_eig(a, sym_tol: float = 1e-12):
    """Eigenvalues in descending order and matching orthonormal eigenvectors (columns)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"sym_eig needs a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ValidationError("sym_eig: matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def svd(a):
    """Thin SVD ``a = U diag(s) Vt`` with ``s`` descending."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValidationError(f"svd needs a matrix, got shape {a.shape}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return s, u, vt


def top_eigpair(a):
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return w[-1], v[:, -1]


def psd_sqrt(a):
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def is_psd(a, tol: float = 1e-9) -> bool:
    a = np.asarray(a, dtype=float)
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (a + a.T))[0] >= -tol)
