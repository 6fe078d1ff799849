"""Nonnegative least squares by the active-set method of Lawson and Hanson.

Solves ``argmin_{x >= 0} ||A x - b||_2``. The per-frame systems this solver
sees are small (at most a few hundred unknowns with fewer rows), where the
classic active-set iteration is robust and each independent solve can run in
parallel with the others.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class NnlsResult(NamedTuple):
    x: np.ndarray
    rnorm: float
    converged: bool


def nnls(A: np.ndarray, b: np.ndarray, tol: float = 1e-10, max_iter: int | None = None) -> NnlsResult:
    """Lawson-Hanson active-set NNLS.

    Terminates when the Karush-Kuhn-Tucker conditions hold within ``tol``
    (scaled by the gradient magnitude at the origin) or when the iteration
    cap (default ``3 * n_cols``) is reached, in which case the best iterate
    so far is returned with ``converged=False``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"A must be a 2-D matrix with at least one row and column, got shape {A.shape}")
    if b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("A and b must be finite")

    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * n

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    resid = b.copy()
    w = A.T @ resid
    atol = tol * max(1.0, float(np.abs(w).max(initial=0.0)))

    iters = 0
    converged = True
    while True:
        w = A.T @ (b - A @ x)
        candidates = ~passive
        if not candidates.any() or w[candidates].max(initial=-np.inf) <= atol:
            break
        j = int(np.flatnonzero(candidates)[np.argmax(w[candidates])])
        passive[j] = True

        # inner loop: restore feasibility of the passive-set solution
        while True:
            iters += 1
            if iters > max_iter:
                converged = False
                break
            cols = np.flatnonzero(passive)
            z, *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
            if np.all(z > 0):
                x = np.zeros(n)
                x[cols] = z
                break
            # step toward z, stopping where the first coordinate hits zero
            nonpos = z <= 0
            alpha = np.min(x[cols][nonpos] / (x[cols][nonpos] - z[nonpos]))
            x_new = x.copy()
            x_new[cols] = x[cols] + alpha * (z - x[cols])
            x = x_new
            zeroed = cols[np.abs(x[cols]) <= np.finfo(np.float64).eps * 100]
            passive[zeroed] = False
            x[zeroed] = 0.0
        if not converged:
            break

    rnorm = float(np.linalg.norm(b - A @ x))
    return NnlsResult(x, rnorm, converged)
