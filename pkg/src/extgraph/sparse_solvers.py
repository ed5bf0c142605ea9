"""L1-penalized solvers on symmetric matrices.

Three entry points, all driven by the same cyclic coordinate-descent kernel:

* ``lasso_quadratic``: minimize  -2 A[l, -l] theta + theta' A[-l, -l] theta
  + rho ||theta||_1  for one index l,
* ``neighborhood_selection``: the per-row lasso supports combined by the
  OR rule into a symmetric sparsity pattern,
* ``graphical_lasso``: minimize  -log det Q + tr(A Q) + rho ||Q||_{1,off}
  by block coordinate descent on the working covariance (dual), one
  row/column at a time, each block being a lasso subproblem.

Soft thresholding produces exact zeros, so support extraction only guards
round-off (``zero_tol``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, InputError

DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8              # max absolute coordinate change per sweep
    max_iter: int = 10_000         # sweeps
    zero_tol: float = 1e-9         # support extraction threshold
    kkt_tol: float = 1e-6          # tolerance for KKT verification
    glasso_outer_tol: float = 1e-7  # max elementwise change of working cov
    glasso_max_outer: int = 1_000


DEFAULT_OPTS = SolverOptions()


@dataclass(frozen=True)
class LassoSolution:
    theta: np.ndarray
    active_set: np.ndarray   # indices (within the reduced p-1 problem)
    objective: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class GlassoSolution:
    q: np.ndarray
    objective: float
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _cd_quadratic(q, a, rho, theta, tol, max_sweeps):
    """Cyclic CD for min -2 a'theta + theta' q theta + rho ||theta||_1.

    Updates ``theta`` in place; returns (sweeps, status) with status 1 on
    convergence, 0 on sweep exhaustion, -1 on divergence (possible when q is
    indefinite).
    """
    p = a.shape[0]
    s = np.zeros(p)
    for j in range(p):
        if theta[j] != 0.0:
            for i in range(p):
                s[i] += q[i, j] * theta[j]
    half = 0.5 * rho
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for j in range(p):
            old = theta[j]
            c = a[j] - (s[j] - q[j, j] * old)
            if c > half:
                new = (c - half) / q[j, j]
            elif c < -half:
                new = (c + half) / q[j, j]
            else:
                new = 0.0
            if new != old:
                diff = new - old
                for i in range(p):
                    s[i] += q[i, j] * diff
                theta[j] = new
                if abs(diff) > delta:
                    delta = abs(diff)
        if delta < tol:
            return sweep, 1
        big = 0.0
        for j in range(p):
            if abs(theta[j]) > big:
                big = abs(theta[j])
        if big > DIVERGENCE_GUARD:
            return sweep, -1
    return max_sweeps, 0


@njit(cache=True)
def _glasso_cd(a_mat, rho, inner_tol, max_inner, outer_tol, max_outer):
    """Block CD on the working covariance; returns the assembled precision.

    Status: 1 converged, 0 sweep exhaustion, -1 inner divergence,
    -2 loss of positive definiteness.
    """
    p = a_mat.shape[0]
    w = a_mat.copy()
    betas = np.zeros((p, p - 1))
    q = np.empty((p - 1, p - 1))
    avec = np.empty(p - 1)
    sweeps = 0
    status = 0
    for outer in range(1, max_outer + 1):
        sweeps = outer
        delta = 0.0
        for col in range(p):
            for ii in range(p - 1):
                i_full = ii if ii < col else ii + 1
                avec[ii] = a_mat[i_full, col]
                for jj in range(p - 1):
                    j_full = jj if jj < col else jj + 1
                    q[ii, jj] = w[i_full, j_full]
            theta = betas[col]
            _, st = _cd_quadratic(q, avec, 2.0 * rho, theta, inner_tol, max_inner)
            if st == -1:
                return np.zeros((p, p)), sweeps, -1
            for ii in range(p - 1):
                acc = 0.0
                for jj in range(p - 1):
                    acc += q[ii, jj] * theta[jj]
                i_full = ii if ii < col else ii + 1
                change = abs(acc - w[i_full, col])
                if change > delta:
                    delta = change
                w[i_full, col] = acc
                w[col, i_full] = acc
        if delta < outer_tol:
            status = 1
            break
    prec = np.zeros((p, p))
    for col in range(p):
        theta = betas[col]
        denom = a_mat[col, col]
        for ii in range(p - 1):
            i_full = ii if ii < col else ii + 1
            denom -= w[i_full, col] * theta[ii]
        if denom <= 0.0:
            return prec, sweeps, -2
        qcc = 1.0 / denom
        prec[col, col] += qcc
        for ii in range(p - 1):
            i_full = ii if ii < col else ii + 1
            prec[i_full, col] += -0.5 * theta[ii] * qcc
            prec[col, i_full] += -0.5 * theta[ii] * qcc
    return prec, sweeps, status


# ---------------------------------------------------------------------------
# Lasso on one row/column
# ---------------------------------------------------------------------------

def _check_symmetric(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{name} must be square", reason="shape")
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise InputError(f"{name} must be symmetric", reason="asymmetric")
    return a


def _reduced_problem(a_mat, ell):
    p = a_mat.shape[0]
    keep = np.array([i for i in range(p) if i != ell])
    q = np.ascontiguousarray(a_mat[np.ix_(keep, keep)])
    avec = np.ascontiguousarray(a_mat[keep, ell])
    return q, avec, keep


def lasso_objective(q, avec, rho, theta):
    return float(-2.0 * avec @ theta + theta @ q @ theta
                 + rho * np.abs(theta).sum())


def lasso_quadratic(a_mat, ell, rho, opts=DEFAULT_OPTS, warm_start=None):
    """L1-penalized quadratic problem for row/column ``ell`` of ``a_mat``.

    Non-convergence is reported through ``converged=False`` on the returned
    solution, not raised.
    """
    a_mat = _check_symmetric(a_mat, "input matrix")
    p = a_mat.shape[0]
    if not 0 <= ell < p:
        raise InputError(f"index {ell} out of range", reason="index")
    if rho < 0:
        raise InputError("penalty must be >= 0", reason="penalty")
    q, avec, _ = _reduced_problem(a_mat, ell)
    if q.shape[0] and np.diag(q).min() <= 0:
        raise InputError("diagonal must be strictly positive off the target "
                         "index", reason="diagonal")
    theta = np.zeros(p - 1) if warm_start is None else np.array(warm_start, dtype=float)
    sweeps, status = _cd_quadratic(q, avec, float(rho), theta,
                                   opts.tol, opts.max_iter)
    return LassoSolution(
        theta=theta,
        active_set=np.nonzero(np.abs(theta) > opts.zero_tol)[0],
        objective=lasso_objective(q, avec, rho, theta),
        iterations=sweeps,
        converged=status == 1,
    )


def lasso_path(a_mat, ell, rho_grid, opts=DEFAULT_OPTS):
    """Solutions along a penalty grid, warm-started from sparse to dense.

    ``rho_grid`` may be in any order; results are returned in that order.
    """
    order = np.argsort(np.asarray(rho_grid, dtype=float))[::-1]
    sols = {}
    warm = None
    for pos in order:
        sol = lasso_quadratic(a_mat, ell, float(rho_grid[pos]), opts,
                              warm_start=warm)
        warm = sol.theta.copy()
        sols[int(pos)] = sol
    return [sols[i] for i in range(len(rho_grid))]


def lasso_kkt_violation(a_mat, ell, rho, theta, zero_tol=0.0):
    """Worst-case KKT residual of a candidate solution (0 at an optimum)."""
    a_mat = _check_symmetric(a_mat)
    q, avec, _ = _reduced_problem(a_mat, ell)
    grad = 2.0 * (q @ theta - avec)
    worst = 0.0
    for j in range(theta.size):
        if abs(theta[j]) > zero_tol:
            worst = max(worst, abs(grad[j] + rho * np.sign(theta[j])))
        else:
            worst = max(worst, max(abs(grad[j]) - rho, 0.0))
    return worst


# ---------------------------------------------------------------------------
# Neighborhood selection (per-row lassos, OR rule)
# ---------------------------------------------------------------------------

def neighborhood_selection(a_mat, rho, opts=DEFAULT_OPTS, and_rule=False):
    """Symmetric sparsity pattern from p row-wise lasso problems.

    ``rho`` is a scalar or one penalty per row.  Entry (i, j) is set when i
    is selected in row j's problem OR vice versa (AND available behind the
    ``and_rule`` switch, off by default).  Raises ConvergenceError if any
    row problem fails to converge.
    """
    a_mat = _check_symmetric(a_mat, "input matrix")
    p = a_mat.shape[0]
    if np.diag(a_mat).min() <= 0:
        raise InputError("diagonal must be strictly positive", reason="diagonal")
    rhos = np.broadcast_to(np.asarray(rho, dtype=float), (p,))
    if rhos.min() < 0:
        raise InputError("penalties must be >= 0", reason="penalty")
    selected = np.zeros((p, p), dtype=bool)
    failed = []
    for ell in range(p):
        sol = lasso_quadratic(a_mat, ell, rhos[ell], opts)
        if not sol.converged:
            failed.append(ell)
            continue
        others = [i for i in range(p) if i != ell]
        for pos in sol.active_set:
            selected[others[pos], ell] = True
    if failed:
        raise ConvergenceError(
            f"lasso did not converge for rows {failed}", last_iterate=selected)
    pattern = (selected & selected.T) if and_rule else (selected | selected.T)
    np.fill_diagonal(pattern, False)
    return pattern


# ---------------------------------------------------------------------------
# Graphical lasso
# ---------------------------------------------------------------------------

def glasso_objective(a_mat, q, rho):
    sign, logdet = np.linalg.slogdet(q)
    if sign <= 0:
        return np.inf
    off = np.abs(q).sum() - np.abs(np.diag(q)).sum()
    return float(-logdet + np.sum(a_mat * q) + rho * off)


def graphical_lasso(a_mat, rho, opts=DEFAULT_OPTS):
    """Off-diagonal L1-penalized precision estimate.

    The working covariance keeps the diagonal of ``a_mat`` (the penalty does
    not touch the diagonal) and each row/column is refit by the shared
    coordinate-descent kernel, warm-started across outer sweeps.
    """
    a_mat = _check_symmetric(a_mat, "input matrix")
    p = a_mat.shape[0]
    if rho < 0:
        raise InputError("penalty must be >= 0", reason="penalty")
    if np.diag(a_mat).min() <= 0:
        raise InputError("diagonal must be strictly positive", reason="diagonal")
    if rho == 0:
        try:
            np.linalg.cholesky(a_mat)
        except np.linalg.LinAlgError as exc:
            raise InputError("rho = 0 requires a positive definite input",
                             reason="not-pd") from exc
    if p == 1:
        q = np.array([[1.0 / a_mat[0, 0]]])
        return GlassoSolution(q=q, objective=glasso_objective(a_mat, q, rho),
                              iterations=0, converged=True)
    inner_tol = min(opts.tol, 1e-10)
    prec, sweeps, status = _glasso_cd(
        np.ascontiguousarray(a_mat), float(rho), inner_tol, opts.max_iter,
        opts.glasso_outer_tol, opts.glasso_max_outer)
    if status == -1:
        raise ConvergenceError("graphical lasso inner problem diverged "
                               "(input too far from positive definite?)")
    if status == -2:
        raise ConvergenceError("graphical lasso lost positive definiteness")
    if status != 1:
        raise ConvergenceError(
            f"graphical lasso did not converge in {sweeps} sweeps",
            last_iterate=prec)
    return GlassoSolution(q=prec, objective=glasso_objective(a_mat, prec, rho),
                          iterations=sweeps, converged=True)


def glasso_kkt_violation(a_mat, q, rho, zero_tol=0.0):
    """Worst-case stationarity residual of the graphical-lasso objective."""
    winv = np.linalg.inv(q)
    p = q.shape[0]
    worst = np.abs(np.diag(a_mat) - np.diag(winv)).max()
    for i in range(p):
        for j in range(p):
            if i == j:
                continue
            g = a_mat[i, j] - winv[i, j]
            if abs(q[i, j]) > zero_tol:
                worst = max(worst, abs(g + rho * np.sign(q[i, j])))
            else:
                worst = max(worst, max(abs(g) - rho, 0.0))
    return worst


def glasso_pattern(a_mat, rho, opts=DEFAULT_OPTS):
    """Sparsity pattern of the graphical-lasso solution."""
    sol = graphical_lasso(a_mat, rho, opts)
    pattern = np.abs(sol.q) > opts.zero_tol
    pattern &= pattern.T
    np.fill_diagonal(pattern, False)
    return pattern
