"""Sparse recovery of the compound channel from window observations.

Two solvers share one result type: CoSaMP (greedy, needs the sparsity k) and
basis pursuit denoising min ||h||_1 s.t. ||A h - y|| <= eps (first-order
primal-dual iteration; the algorithm is an implementation detail, the
feasibility/objective contract is what tests pin down). Both accept any
operator exposing apply/adjoint/columns/shape.
"""

from dataclasses import dataclass, field

import numpy as np

from .sensing import restricted_lstsq


@dataclass
class RecoveryResult:
    h_hat: np.ndarray
    user_energies: np.ndarray        # ||h_hat_u||^2 per user
    residual_norm: float             # ||A h_hat - y||
    iterations: int
    converged: bool
    d_norm: float | None = None      # ||h_hat - h_true|| when truth supplied
    rank_deficient: bool = False
    history: list = field(default_factory=list)  # (iteration, residual, nnz)


@dataclass(frozen=True)
class BpdnConfig:
    max_iter: int = 20000
    feas_tol: float = 1e-3
    obj_tol: float = 1e-3
    check_every: int = 25
    feas_floor: float = 1e-6    # absolute feasibility target, in units of ||y||;
                                # governs how tightly eps = 0 is honored
    step_balance: float = 0.05  # primal/dual step ratio: tau = b/L, sigma = 1/(bL);
                                # b < 1 favors feasibility, which dominates runtime


def _energies(h: np.ndarray, u_max: int, t_cp: int) -> np.ndarray:
    return np.sum(np.abs(h.reshape(u_max, t_cp)) ** 2, axis=1)


def _top(magnitudes: np.ndarray, count: int) -> np.ndarray:
    """Indices of the `count` largest magnitudes; ties break to the lowest
    index so reruns are deterministic."""
    if count >= len(magnitudes):
        return np.arange(len(magnitudes))
    order = np.lexsort((np.arange(len(magnitudes)), -magnitudes))
    return np.sort(order[:count])


def _result(op, h, y, iterations, converged, h_true=None, history=None,
            rank_deficient=False) -> RecoveryResult:
    residual = float(np.linalg.norm(op.apply(h) - y))
    d = None if h_true is None else float(np.linalg.norm(h - h_true))
    return RecoveryResult(h_hat=h, user_energies=_energies(h, op.u_max, op.t_cp),
                          residual_norm=residual, iterations=iterations,
                          converged=converged, d_norm=d,
                          rank_deficient=rank_deficient,
                          history=history or [])


# ---------------------------------------------------------------------------
# CoSaMP
# ---------------------------------------------------------------------------

def cosamp(op, y: np.ndarray, k: int, max_iter: int = 50, tol: float = 0.0,
           h_true: np.ndarray | None = None) -> RecoveryResult:
    """Standard CoSaMP: proxy top-2k merge, restricted least squares, prune
    to k, refit on the pruned support. Stops on residual <= tol, stagnation
    (relative change < 1e-6), or max_iter. A step that would increase the
    residual is rolled back, so the logged residuals are non-increasing.
    Output is exactly k-sparse."""
    y = np.asarray(y, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if not 1 <= k <= op.shape[0]:
        raise ValueError("need 1 <= k <= m")

    n_cols = op.shape[1]
    h = np.zeros(n_cols, dtype=complex)
    support = np.array([], dtype=int)
    residual = y.copy()
    res_norm = float(np.linalg.norm(residual))
    history = [(0, res_norm, 0)]
    converged = res_norm <= tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        proxy = op.adjoint(residual)
        merged = np.union1d(_top(np.abs(proxy), 2 * k), support)
        z, _ = restricted_lstsq(op, y, merged)
        new_support = _top(np.abs(z), k)
        # refit on the pruned support: keeps the residual defined by the
        # pure prune from blowing up when merged columns are coherent
        h_new, _ = restricted_lstsq(op, y, new_support)
        res_new = y - op.columns(new_support) @ h_new[new_support]
        rn = float(np.linalg.norm(res_new))
        if rn > res_norm * (1.0 + 1e-9):
            converged = True          # stagnated: keep the better iterate
            break
        rel_change = abs(res_norm - rn) / max(res_norm, 1e-300)
        h, support, residual, res_norm = h_new, new_support, res_new, rn
        history.append((it, res_norm, int(np.count_nonzero(h))))
        if res_norm <= tol or rel_change < 1e-6:
            converged = True
    return _result(op, h, y, it, converged, h_true, history)


# ---------------------------------------------------------------------------
# Basis pursuit denoising
# ---------------------------------------------------------------------------

def _soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    mag = np.abs(z)
    return z * np.maximum(1.0 - t / np.maximum(mag, 1e-300), 0.0)


def _operator_norm(op, iters: int = 40) -> float:
    """Largest singular value by power iteration on A*A (seeded, cached)."""
    cached = getattr(op, "_opnorm_cache", None)
    if cached is not None:
        return cached
    rng = np.random.default_rng(0)
    v = rng.standard_normal(op.shape[1]) + 1j * rng.standard_normal(op.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = op.adjoint(op.apply(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = np.sqrt(nw)
        v = w / nw
    est = float(est) * 1.01   # slack so tau*sigma*L^2 stays < 1
    try:
        op._opnorm_cache = est
    except AttributeError:
        pass
    return est


def bpdn(op, y: np.ndarray, eps: float, solver_cfg: BpdnConfig | None = None,
         h_true: np.ndarray | None = None) -> RecoveryResult:
    """min ||h||_1 subject to ||A h - y|| <= eps.

    Primal-dual (Chambolle-Pock) iteration with the exact projection onto
    the residual ball as the dual prox. The problem is solved on y/||y||,
    which makes the routine exactly positively homogeneous in (y, eps).
    Non-convergence is reported via converged=False, never silently.
    """
    y = np.asarray(y, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    cfg = solver_cfg or BpdnConfig()
    n_cols = op.shape[1]

    y_norm = float(np.linalg.norm(y))
    if eps >= y_norm:   # zero is feasible, hence l1-minimal
        return _result(op, np.zeros(n_cols, dtype=complex), y, 0, True, h_true)

    yn = y / y_norm
    epsn = eps / y_norm
    lip = _operator_norm(op)
    if lip == 0.0:
        return _result(op, np.zeros(n_cols, dtype=complex), y, 0, False, h_true)
    tau = 0.97 * cfg.step_balance / lip
    sigma = 0.97 / (cfg.step_balance * lip)

    h = np.zeros(n_cols, dtype=complex)
    h_bar = h.copy()
    w = np.zeros(op.shape[0], dtype=complex)
    history = []
    feas_target = max(epsn * (1.0 + cfg.feas_tol), cfg.feas_floor)
    obj_prev = np.inf
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        v = w + sigma * op.apply(h_bar)
        u = v / sigma
        diff = u - yn
        dn = float(np.linalg.norm(diff))
        proj = u if dn <= epsn else yn + diff * (epsn / dn)
        w = v - sigma * proj
        h_new = _soft_threshold(h - tau * op.adjoint(w), tau)
        h_bar = 2.0 * h_new - h
        h = h_new
        if it % cfg.check_every == 0 or it == cfg.max_iter:
            feas = float(np.linalg.norm(op.apply(h) - yn))
            obj = float(np.sum(np.abs(h)))
            history.append((it, feas * y_norm, int(np.count_nonzero(h))))
            if feas <= feas_target and \
                    abs(obj - obj_prev) <= max(cfg.obj_tol * 1e-2, 1e-9) * max(obj, 1e-15):
                converged = True
                break
            obj_prev = obj
    h_raw = h * y_norm
    result = _result(op, h_raw, y, it, converged, h_true, history)
    if not converged:
        result.converged = result.residual_norm <= feas_target * y_norm
    return result


def debias(op, y: np.ndarray, result: RecoveryResult, k: int) -> RecoveryResult:
    """Least-squares refit on the top-k nonzero entries of result.h_hat;
    energies and residual recomputed."""
    mags = np.abs(result.h_hat)
    nonzero = np.flatnonzero(mags)
    if nonzero.size == 0:
        return _result(op, np.zeros_like(result.h_hat), y, result.iterations,
                       result.converged, history=list(result.history))
    keep = nonzero[_top(mags[nonzero], k)]
    refit, flagged = restricted_lstsq(op, y, keep)
    return _result(op, refit, y, result.iterations, result.converged,
                   history=list(result.history), rank_deficient=flagged)
