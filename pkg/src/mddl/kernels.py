"""Hot numeric kernels: numba-compiled with pure-numpy mirrors.

Two inner loops dominate runtime: the ADMM iteration (`admm_iterate_*`) and
the coordinate-descent sweep used by the reference solver (`cd_solve_*`).
Each exists in a numba and a numpy variant with identical signatures and
semantics; `admm_iterate` / `cd_solve` point at the variant selected by
``mddl.backend`` (see the ``MDDL_BACKEND`` environment variable).

The ADMM kernel is fed precomputed per-iteration schedule arrays and a stack
of Cholesky factors so that the loop body is branch-light:

    x <- solve(G + rho_t I, Atb + inv_tau_t (z - y))      [via factors]
    z <- shrink(x + y, lam_tau_t)
    y <- y + dual_step_t (x - z)

When ``woodbury`` is set the factors are of the d-by-d matrix
(A A^T + rho I) and the solve goes through the matrix-inversion identity
    (A^T A + rho I)^{-1} v = (v - A^T (A A^T + rho I)^{-1} A v) / rho,
which is cheaper whenever d < m.

Returned diagnostics per iteration: the combined primal residual
``||x - z||_2`` and the recovery error ``||A z - b||_2 / max(||b||_2, 1)``.
A non-finite iterate aborts the loop and is reported through ``bad_iter``.
"""

import numpy as np
import scipy.linalg

from .backend import NUMBA_AVAILABLE, USE_NUMBA


def admm_iterate_numpy(A, b, Atb, factors, slots, inv_tau, rho, lam_tau,
                       dual_step, woodbury, tol):
    """Pure-numpy ADMM loop.  See module docstring for the update scheme.

    Returns (x, z, y, iterations, converged, primal_res, rec_err, bad_iter).
    """
    d, m = A.shape
    T = slots.shape[0]
    nb = max(np.linalg.norm(b), 1.0)
    x = np.zeros(m)
    z = np.zeros(m)
    y = np.zeros(m)
    primal_res = np.zeros(T)
    rec_err = np.zeros(T)
    iterations = 0
    converged = False
    bad_iter = -1
    for t in range(T):
        L = factors[slots[t]]
        rhs = Atb + inv_tau[t] * (z - y)
        if woodbury:
            u = scipy.linalg.cho_solve((L, True), A @ rhs, check_finite=False)
            x = (rhs - A.T @ u) / rho[t]
        else:
            x = scipy.linalg.cho_solve((L, True), rhs, check_finite=False)
        v = x + y
        z = np.sign(v) * np.maximum(np.abs(v) - lam_tau[t], 0.0)
        diff = x - z
        y = y + dual_step[t] * diff
        primal_res[t] = np.linalg.norm(diff)
        rec_err[t] = np.linalg.norm(A @ z - b) / nb
        iterations = t + 1
        if not (np.isfinite(x).all() and np.isfinite(z).all() and np.isfinite(y).all()):
            bad_iter = t
            break
        if rec_err[t] <= tol and np.max(np.abs(diff)) <= tol:
            converged = True
            break
    return x, z, y, iterations, converged, primal_res, rec_err, bad_iter


def cd_solve_numpy(A, b, lam, l2, max_sweeps, tol):
    """Cyclic coordinate descent for 0.5||Ax-b||^2 + lam||x||_1 + 0.5 l2||x||^2.

    Returns (x, sweeps, last_max_delta).  Columns of A must be nonzero.
    """
    d, m = A.shape
    denom = (A * A).sum(axis=0) + l2
    x = np.zeros(m)
    r = b.astype(np.float64).copy()
    sweeps = 0
    delta = np.inf
    for sweep in range(max_sweeps):
        delta = 0.0
        for j in range(m):
            xj = x[j]
            g = A[:, j] @ r + (denom[j] - l2) * xj
            new = np.sign(g) * max(abs(g) - lam, 0.0) / denom[j]
            if new != xj:
                r += A[:, j] * (xj - new)
                step = abs(new - xj)
                if step > delta:
                    delta = step
                x[j] = new
        sweeps = sweep + 1
        if delta <= tol:
            break
    return x, sweeps, delta


if NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True)
    def _cho_solve_lower(L, v, out):
        # Solves L L^T out = v with L lower triangular; out may alias nothing.
        p = L.shape[0]
        for i in range(p):
            acc = v[i]
            for j in range(i):
                acc -= L[i, j] * out[j]
            out[i] = acc / L[i, i]
        for i in range(p - 1, -1, -1):
            acc = out[i]
            for j in range(i + 1, p):
                acc -= L[j, i] * out[j]
            out[i] = acc / L[i, i]

    @njit(cache=True)
    def admm_iterate_numba(A, b, Atb, factors, slots, inv_tau, rho, lam_tau,
                           dual_step, woodbury, tol):
        d, m = A.shape
        T = slots.shape[0]
        nb = np.linalg.norm(b)
        if nb < 1.0:
            nb = 1.0
        x = np.zeros(m)
        z = np.zeros(m)
        y = np.zeros(m)
        rhs = np.zeros(m)
        u = np.zeros(d)
        primal_res = np.zeros(T)
        rec_err = np.zeros(T)
        iterations = 0
        converged = False
        bad_iter = -1
        for t in range(T):
            L = factors[slots[t]]
            for i in range(m):
                rhs[i] = Atb[i] + inv_tau[t] * (z[i] - y[i])
            if woodbury:
                Av = A @ rhs
                _cho_solve_lower(L, Av, u)
                Atu = A.T @ u
                for i in range(m):
                    x[i] = (rhs[i] - Atu[i]) / rho[t]
            else:
                _cho_solve_lower(L, rhs, x)
            ss = 0.0
            pinf = 0.0
            finite = True
            for i in range(m):
                v = x[i] + y[i]
                av = abs(v) - lam_tau[t]
                if av < 0.0:
                    av = 0.0
                zi = av if v >= 0.0 else -av
                z[i] = zi
                diff = x[i] - zi
                y[i] += dual_step[t] * diff
                ss += diff * diff
                ad = abs(diff)
                if ad > pinf:
                    pinf = ad
                if not (np.isfinite(x[i]) and np.isfinite(zi) and np.isfinite(y[i])):
                    finite = False
            Az = A @ z
            rr = 0.0
            for i in range(d):
                e = Az[i] - b[i]
                rr += e * e
            primal_res[t] = np.sqrt(ss)
            rec_err[t] = np.sqrt(rr) / nb
            iterations = t + 1
            if not finite:
                bad_iter = t
                break
            if rec_err[t] <= tol and pinf <= tol:
                converged = True
                break
        return x, z, y, iterations, converged, primal_res, rec_err, bad_iter

    @njit(cache=True)
    def cd_solve_numba(A, b, lam, l2, max_sweeps, tol):
        d, m = A.shape
        denom = np.zeros(m)
        for j in range(m):
            acc = 0.0
            for i in range(d):
                acc += A[i, j] * A[i, j]
            denom[j] = acc + l2
        x = np.zeros(m)
        r = b.copy()
        sweeps = 0
        delta = np.inf
        for sweep in range(max_sweeps):
            delta = 0.0
            for j in range(m):
                xj = x[j]
                acc = 0.0
                for i in range(d):
                    acc += A[i, j] * r[i]
                g = acc + (denom[j] - l2) * xj
                ag = abs(g) - lam
                if ag < 0.0:
                    ag = 0.0
                new = (ag if g >= 0.0 else -ag) / denom[j]
                if new != xj:
                    step = xj - new
                    for i in range(d):
                        r[i] += A[i, j] * step
                    if abs(step) > delta:
                        delta = abs(step)
                    x[j] = new
            sweeps = sweep + 1
            if delta <= tol:
                break
        return x, sweeps, delta

else:  # pragma: no cover - exercised only when numba is absent
    admm_iterate_numba = None
    cd_solve_numba = None


if USE_NUMBA:
    admm_iterate = admm_iterate_numba
    cd_solve = cd_solve_numba
else:
    admm_iterate = admm_iterate_numpy
    cd_solve = cd_solve_numpy


def warm_kernels():
    """Trigger JIT compilation on a tiny instance (no-op for numpy)."""
    if not USE_NUMBA:
        return
    A = np.eye(2)
    b = np.ones(2)
    factors = np.linalg.cholesky(A.T @ A + 2.0 * np.eye(2))[None, :, :]
    ones = np.ones(1)
    slots = np.zeros(1, dtype=np.int64)
    admm_iterate_numba(A, b, A.T @ b, factors, slots, ones, 2.0 * ones,
                       0.1 * ones, ones, False, 1e-12)
    admm_iterate_numba(A, b, A.T @ b, factors, slots, ones, 2.0 * ones,
                       0.1 * ones, ones, True, 1e-12)
    cd_solve_numba(A, b, 0.1, 0.0, 2, 1e-12)
