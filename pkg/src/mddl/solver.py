"""ADMM solvers for the Lasso and Elastic-Net, with factorization caching.

The solver minimizes

    0.5 ||A x - b||^2 + lam ||x||_1 + 0.5 l2 ||x||^2

by splitting x from the L1 term: a quadratic x-step (SPD linear solve), a
soft-shrinkage z-step, and a dual update.  The penalty is parametrized as
1/tau with tau following the geometric schedule

    tau_t = min(tau0 * tau_growth^t, tau_cap),

so the x-step matrix is (A^T A + (l2 + 1/tau_t) I).  One Cholesky factor per
distinct shift is computed through a `FactorCache` and reused across
iterations and across solves sharing the same effective dictionary.

The dual update defaults to the scaled-form ``y <- y + (x - z)``, which is
the fixed-point-consistent companion of the x- and z-steps above; the
variant ``y <- y + (1/tau)(x - z)`` is available as ``dual_update="paper"``
for comparison runs but carries no convergence claim.

The returned code is the final z iterate: it is the exactly sparse variable
produced by the shrinkage step, and at convergence it agrees with x to
within the primal tolerance.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .dictionary import check_query
from .weighting import build_weighting, weighted_dictionary

WEIGHTING_MODES = ("none", "softmax")
DUAL_UPDATES = ("scaled", "paper")


@dataclass
class SolverConfig:
    """Solver hyperparameters.

    ``lam`` is the L1 penalty; ``l2_penalty`` the Elastic-Net quadratic term
    (0 gives the vanilla Lasso).  ``tau_growth`` of 1 means a fixed tau.
    Convergence requires both the recovery error ``||Az - b|| / max(||b||, 1)``
    and the primal residual ``||x - z||_inf`` to drop below ``tol``.
    """

    lam: float = 1.0
    l2_penalty: float = 0.0
    tau0: float = 0.1
    tau_growth: float = 1.05
    tau_cap: float = 1e3
    max_iter: int = 200
    tol: float = 1e-3
    weighting_mode: str = "none"
    dual_update: str = "scaled"

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.l2_penalty < 0:
            raise ValueError(f"l2_penalty must be nonnegative, got {self.l2_penalty}")
        if self.tau0 <= 0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if self.tau_growth < 1:
            raise ValueError(f"tau_growth must be >= 1, got {self.tau_growth}")
        if self.tau_cap < self.tau0:
            raise ValueError(f"tau_cap must be >= tau0, got {self.tau_cap} < {self.tau0}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.weighting_mode not in WEIGHTING_MODES:
            raise ValueError(f"weighting_mode must be one of {WEIGHTING_MODES}")
        if self.dual_update not in DUAL_UPDATES:
            raise ValueError(f"dual_update must be one of {DUAL_UPDATES}")


@dataclass
class SolveResult:
    """Outcome of one solve.

    ``x`` is the sparse code (the final shrinkage iterate).  The history
    arrays hold, per iteration actually run, the combined primal residual
    ``||x - z||_2`` and the recovery error relative to ``max(||b||, 1)``.
    ``wall_time`` covers the solver only, including weighting construction
    and any factorizations performed during the call.
    """

    x: np.ndarray
    converged: bool
    iterations: int
    recovery_error: float
    wall_time: float
    primal_residuals: np.ndarray = field(repr=False, default=None)
    recovery_errors: np.ndarray = field(repr=False, default=None)


def soft_shrink(v, kappa):
    """Elementwise soft-shrinkage ``sign(v) * max(|v| - kappa, 0)``."""
    if kappa < 0:
        raise ValueError(f"shrinkage threshold must be nonnegative, got {kappa}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def tau_schedule(cfg):
    """Per-iteration arrays (tau, inv_tau, rho, lam_tau, dual_step)."""
    t = np.arange(cfg.max_iter)
    tau = np.minimum(cfg.tau0 * cfg.tau_growth ** t, cfg.tau_cap)
    inv_tau = 1.0 / tau
    rho = cfg.l2_penalty + inv_tau
    lam_tau = cfg.lam * tau
    dual_step = inv_tau.copy() if cfg.dual_update == "paper" else np.ones(cfg.max_iter)
    return tau, inv_tau, rho, lam_tau, dual_step


class FactorCache:
    """Cholesky factors of the x-step matrix, keyed by the diagonal shift.

    For an effective dictionary with d >= m the factors are of the m-by-m
    matrix (A^T A + rho I); for d < m they are of the d-by-d matrix
    (A A^T + rho I) and the solver applies the matrix-inversion identity.
    Factors are stored in one contiguous (K, p, p) stack so the iteration
    kernel can index them without copying.

    Instances may be shared read-only across solves with the same effective
    dictionary; populating the cache is not thread-safe.
    """

    def __init__(self, A_eff, woodbury=None):
        A = np.ascontiguousarray(A_eff, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError(f"effective dictionary must be a nonempty matrix, got {A.shape}")
        d, m = A.shape
        self.A = A
        self.woodbury = (d < m) if woodbury is None else bool(woodbury)
        base = A @ A.T if self.woodbury else A.T @ A
        self._base = base
        self._eye = np.eye(base.shape[0])
        self._slot_of = {}
        self._factor_list = []
        self._stack = np.empty((0,) + base.shape)
        self.n_factorizations = 0

    def ensure(self, rhos):
        """Factor any shifts not yet cached; return (stack, slot_indices)."""
        slots = np.empty(len(rhos), dtype=np.int64)
        grew = False
        for i, rho in enumerate(np.asarray(rhos, dtype=np.float64)):
            key = float(rho)
            slot = self._slot_of.get(key)
            if slot is None:
                if key <= 0:
                    raise ValueError(f"diagonal shift must be positive, got {key}")
                try:
                    L = np.linalg.cholesky(self._base + key * self._eye)
                except np.linalg.LinAlgError as exc:
                    raise FloatingPointError(
                        f"x-step matrix not numerically SPD at shift rho={key}: {exc}"
                    ) from exc
                slot = len(self._factor_list)
                self._factor_list.append(L)
                self._slot_of[key] = slot
                self.n_factorizations += 1
                grew = True
            slots[i] = slot
        if grew:
            self._stack = np.ascontiguousarray(np.stack(self._factor_list))
        return self._stack, slots


def solve_admm(A_eff, b, cfg, cache=None):
    """Solve the (Elastic-Net) Lasso over an explicit effective dictionary.

    Parameters
    ----------
    A_eff : ndarray, shape (d, m)
        Effective dictionary: the raw atoms, or the weighted product A_M @ M.
    b : ndarray, shape (d,)
    cfg : SolverConfig
    cache : FactorCache, optional
        Reusable factor cache for repeated solves against the same A_eff.
        A private one is built when omitted.

    Raises FloatingPointError if iterates become non-finite, reporting the
    iteration index.
    """
    A = np.ascontiguousarray(A_eff, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"A_eff must be 2-D, got shape {A.shape}")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")

    start = time.perf_counter()
    if cache is None:
        cache = FactorCache(A)
    elif cache.A.shape != A.shape:
        raise ValueError("factor cache was built for a different effective dictionary")
    _, inv_tau, rho, lam_tau, dual_step = tau_schedule(cfg)
    factors, slots = cache.ensure(rho)
    Atb = A.T @ b
    x, z, y, iterations, converged, primal_res, rec_err, bad_iter = kernels.admm_iterate(
        A, b, Atb, factors, slots, inv_tau, rho, lam_tau, dual_step,
        cache.woodbury, cfg.tol,
    )
    wall = time.perf_counter() - start
    if bad_iter >= 0:
        raise FloatingPointError(f"non-finite iterates at iteration {bad_iter}")
    nb = np.linalg.norm(b)
    residual = np.linalg.norm(A @ z - b)
    recovery = residual / nb if nb > 0 else residual
    return SolveResult(
        x=z,
        converged=bool(converged),
        iterations=int(iterations),
        recovery_error=float(recovery),
        wall_time=wall,
        primal_residuals=primal_res[:iterations].copy(),
        recovery_errors=rec_err[:iterations].copy(),
    )


def solve_query(dic, q, cfg, cache=None):
    """Solve one query against a dictionary under the configured weighting.

    With ``weighting_mode="none"`` the code has length n*s and ``cache`` may
    be shared across queries.  With ``"softmax"`` the per-query weighting is
    built first, the solve runs over the d-by-n product ``A_M @ M``, the code
    has length n, and the weighting used is returned for domain inference.

    Returns (SolveResult, WeightingMatrix or None).
    """
    q = check_query(dic, q)
    if cfg.weighting_mode == "none":
        return solve_admm(dic.data, q, cfg, cache=cache), None
    start = time.perf_counter()
    weighting = build_weighting(dic, q)
    A_eff = weighted_dictionary(dic, weighting)
    build_time = time.perf_counter() - start
    result = solve_admm(A_eff, q, cfg)
    result.wall_time += build_time
    return result, weighting


def lasso_objective(A, b, x, lam, l2_penalty=0.0):
    """Objective value 0.5||Ax-b||^2 + lam||x||_1 + 0.5 l2||x||^2."""
    r = A @ x - b
    val = 0.5 * float(r @ r) + lam * float(np.abs(x).sum())
    if l2_penalty:
        val += 0.5 * l2_penalty * float(x @ x)
    return val
