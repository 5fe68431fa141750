"""Independent reference solvers for validating the ADMM implementation.

Two deliberately different methods solve the same problem: cyclic
coordinate descent with exact per-coordinate soft-threshold updates, and a
fixed-step proximal-gradient iteration.  The test suite cross-checks them
against each other before either is trusted to judge the ADMM solver, and
`kkt_residual` gives a solver-agnostic optimality measure.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class OracleConfig:
    max_sweeps: int = 10_000
    tol: float = 1e-10

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be positive, got {self.max_sweeps}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


def lasso_cd(A, b, lam, cfg=None, l2_penalty=0.0):
    """Cyclic coordinate descent for 0.5||Ax-b||^2 + lam||x||_1 (+ 0.5 l2||x||^2).

    Runs until the largest per-sweep coordinate change drops below
    ``cfg.tol`` or ``cfg.max_sweeps`` is hit.  Columns of A must be nonzero
    (the coordinate step is undefined otherwise).
    """
    cfg = cfg or OracleConfig()
    A = np.asfortranarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise ValueError(f"inconsistent shapes A={A.shape}, b={b.shape}")
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if l2_penalty < 0:
        raise ValueError(f"l2_penalty must be nonnegative, got {l2_penalty}")
    colnorms = np.linalg.norm(A, axis=0)
    if np.any(colnorms == 0.0):
        raise ValueError(f"column {int(np.argmin(colnorms))} of A is zero")
    x, _, _ = kernels.cd_solve(A, b, float(lam), float(l2_penalty),
                               int(cfg.max_sweeps), float(cfg.tol))
    return x


def prox_gradient_lasso(A, b, lam, iters=20_000, l2_penalty=0.0):
    """Proximal gradient (ISTA) with fixed step 1/L, L = ||A||_2^2 + l2.

    Slow but structurally unrelated to coordinate descent, which makes it a
    useful second opinion in the oracle cross-check.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    L = np.linalg.norm(A, 2) ** 2 + l2_penalty
    step = 1.0 / L
    x = np.zeros(A.shape[1])
    thresh = lam * step
    for _ in range(iters):
        g = A.T @ (A @ x - b) + l2_penalty * x
        v = x - step * g
        x = np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)
    return x


def kkt_residual(A, b, lam, x, l2_penalty=0.0):
    """Largest violation of the Lasso stationarity conditions at ``x``.

    With g = A^T(Ax - b) + l2 x the conditions are ``|g_i| <= lam`` where
    ``x_i = 0`` and ``g_i = -lam sign(x_i)`` elsewhere; the returned value is
    zero exactly at an optimum.
    """
    A = np.asarray(A, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    g = A.T @ (A @ x - b) + l2_penalty * x
    zero = x == 0.0
    viol_zero = np.maximum(np.abs(g[zero]) - lam, 0.0)
    viol_active = np.abs(g[~zero] + lam * np.sign(x[~zero]))
    worst = 0.0
    if viol_zero.size:
        worst = max(worst, float(viol_zero.max()))
    if viol_active.size:
        worst = max(worst, float(viol_active.max()))
    return worst
