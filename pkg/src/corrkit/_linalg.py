"""Small numerical helpers used across modules."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

RANK_TOL = 1e-9


def as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=complex)


def rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    mat = np.atleast_2d(mat)
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def independent_columns(mat: np.ndarray, tol: float = RANK_TOL) -> list[int]:
    """Greedy left-to-right choice of linearly independent columns."""
    mat = np.atleast_2d(mat)
    chosen: list[int] = []
    q = np.zeros((mat.shape[0], 0), dtype=complex)
    scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
    for j in range(mat.shape[1]):
        v = mat[:, j].astype(complex)
        for _ in range(2):  # re-orthogonalise once for stability
            v = v - q @ (q.conj().T @ v)
        nv = np.linalg.norm(v)
        if nv > tol * scale:
            chosen.append(j)
            q = np.column_stack([q, v / nv])
    return chosen


def orth_basis(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column span."""
    mat = np.atleast_2d(mat)
    if mat.size == 0 or mat.shape[1] == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    return sla.orth(mat, rcond=tol)


def null_space(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    mat = np.atleast_2d(mat)
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1], dtype=complex)
    return sla.null_space(mat, rcond=tol)


def span_residual(basis: np.ndarray, vecs: np.ndarray) -> float:
    """Largest distance from a column of ``vecs`` to span(basis)."""
    vecs = np.atleast_2d(vecs)
    if vecs.size == 0:
        return 0.0
    q = orth_basis(basis)
    rem = vecs - q @ (q.conj().T @ vecs)
    return float(np.abs(rem).max(initial=0.0))


def same_span(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric subspace mismatch; 0 when the column spans agree."""
    return max(span_residual(a, b), span_residual(b, a))


def opnorm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def maxabs(m) -> float:
    m = np.asarray(m)
    return float(np.abs(m).max(initial=0.0))
