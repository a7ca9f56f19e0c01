"""Symmetric eigenvalues by cyclic Jacobi rotations and the graphon operator norm."""

from __future__ import annotations

import math

import numpy as np

from .graphon import StepGraphon

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


def jacobi_eigenvalues(A, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, ascending.

    Cyclic sweeps over all (p, q) pairs; stops once the off-diagonal Frobenius
    norm drops below ``tol`` (absolute, scaled by max(1, ||A||_F)).
    """
    a = np.array(A, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, rtol=0, atol=1e-13):
        raise ValueError("matrix must be square and symmetric")
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                diff = float(a[q, q] - a[p, p])
                if abs(apq) <= 1e-300 * max(1.0, abs(diff)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def operator_norm(f: StepGraphon) -> float:
    """||f||_op: top |eigenvalue| of A_ij = p_ij sqrt(gamma_i gamma_j)."""
    r = np.sqrt(f.gamma)
    A = f.values * np.outer(r, r)
    return float(np.max(np.abs(jacobi_eigenvalues(A))))
