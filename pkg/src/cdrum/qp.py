"""Nonnegative weighted least squares by the Lawson-Hanson active-set method.

Solves ``min_{z >= 0} (M z - b)^T Omega (M z - b)``.  A positive definite
``Omega = L L^T`` is folded in as ``min ||L^T M z - L^T b||^2``.  The result
carries a first-order (KKT) residual so callers can certify optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverStalled

KKT_TOL = 1e-10


@dataclass(frozen=True)
class NNLSResult:
    x: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int


def kkt_residual(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    """Largest violation of ``g >= 0`` and ``x_i g_i = 0`` for ``g = A^T (A x - b)``."""
    g = A.T @ (A @ x - b)
    dual = float(np.max(np.maximum(-g, 0.0), initial=0.0))
    comp = float(np.max(np.abs(g[x > 0]), initial=0.0))
    return max(dual, comp)


def nnls(A: np.ndarray, b: np.ndarray, max_iter: int | None = None, tol: float | None = None) -> NNLSResult:
    """Lawson-Hanson active set.  ``max_iter`` bounds outer iterations (default ``3 n``)."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * n + 10
    if tol is None:
        tol = 10 * np.finfo(float).eps * max(m, n) * max(1.0, np.abs(A).sum(axis=0).max(initial=0.0))
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    it = 0
    while it < max_iter:
        candidates = np.where(~passive & (w > tol))[0]
        if candidates.size == 0:
            break
        it += 1
        j = candidates[np.argmax(w[candidates])]
        passive[j] = True
        while True:
            z = np.zeros(n)
            idx = np.where(passive)[0]
            z[idx] = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if np.all(z[idx] > 0):
                x = z
                break
            neg = idx[z[idx] <= 0]
            alpha = np.min(x[neg] / (x[neg] - z[neg]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                break
        w = A.T @ (b - A @ x)
    r = A @ x - b
    return NNLSResult(x, float(r @ r), kkt_residual(A, b, x), it)


def weight_factor(omega, m: int) -> np.ndarray | None:
    """``L^T`` with ``Omega = L L^T``; ``None`` for the identity."""
    if omega is None:
        return None
    om = np.asarray(omega, dtype=np.float64)
    if om.ndim == 1:
        if om.shape != (m,) or np.any(om <= 0):
            raise ValueError("diagonal weights must be positive and match the row count")
        return np.sqrt(om)
    if om.shape != (m, m):
        raise ValueError("weight matrix has the wrong shape")
    return np.linalg.cholesky(om).T


def solve_weighted(M: np.ndarray, b: np.ndarray, omega=None, kkt_tol: float = KKT_TOL) -> NNLSResult:
    """Weighted NNLS; raises :class:`SolverStalled` if the KKT residual exceeds ``kkt_tol``."""
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    Lt = weight_factor(omega, M.shape[0])
    if Lt is None:
        A, rhs = M, b
    elif Lt.ndim == 1:
        A, rhs = M * Lt[:, None], b * Lt
    else:
        A, rhs = Lt @ M, Lt @ b
    res = nnls(A, rhs)
    if res.kkt_residual > kkt_tol:
        # one polishing pass from the reported support
        res2 = nnls(A, rhs, max_iter=6 * A.shape[1] + 20)
        if res2.kkt_residual > kkt_tol:
            raise SolverStalled(res2.kkt_residual)
        res = res2
    return res
