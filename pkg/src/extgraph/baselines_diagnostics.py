"""Baselines, the F-score metric, and recovery diagnostics.

The diagnostics quantify, for an exact model (variogram + its graph), how
favorable the geometry is for support recovery by each base learner: minimal
signal strength, restricted eigenvalues, operator-norm constants, and the
incoherence (irrepresentability) parameters whose positivity underwrites
consistency.  All operator norms are max absolute row sums.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError
from .hr_model import (
    Graph,
    farris_transform,
    graph_from_precision,
    make_graph,
    precision_from_gamma,
    validate_variogram,
)


# ---------------------------------------------------------------------------
# Extremal minimum spanning tree
# ---------------------------------------------------------------------------

class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def extremal_mst(gamma_hat):
    """Spanning tree minimizing the sum of variogram weights (Kruskal).

    Ties are broken by lexicographic edge order, making the output
    deterministic.
    """
    g = np.asarray(gamma_hat, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
        raise InputError("need a square matrix with d >= 2", reason="shape")
    if not np.all(np.isfinite(g)):
        raise InputError("weights must be finite", reason="non-finite")
    d = g.shape[0]
    edges = sorted((g[i, j], i, j) for i in range(d) for j in range(i + 1, d))
    uf = _UnionFind(d)
    tree = []
    for _, i, j in edges:
        if uf.union(i, j):
            tree.append((i, j))
            if len(tree) == d - 1:
                break
    return make_graph(d, tree)


# ---------------------------------------------------------------------------
# F-score
# ---------------------------------------------------------------------------

def f_score(true_graph, est_graph):
    """|E & Ê| / (|E & Ê| + (|Ê \\ E| + |E \\ Ê|) / 2); empty vs empty is 1."""
    if true_graph.dim != est_graph.dim:
        raise InputError("graphs have different dimensions", reason="dim")
    tp = len(true_graph.edges & est_graph.edges)
    fp = len(est_graph.edges - true_graph.edges)
    fn = len(true_graph.edges - est_graph.edges)
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    denom = tp + 0.5 * (fp + fn)
    return tp / denom if denom > 0 else 0.0


def confusion_counts(true_graph, est_graph):
    if true_graph.dim != est_graph.dim:
        raise InputError("graphs have different dimensions", reason="dim")
    d = true_graph.dim
    tp = len(true_graph.edges & est_graph.edges)
    fp = len(est_graph.edges - true_graph.edges)
    fn = len(true_graph.edges - est_graph.edges)
    tn = d * (d - 1) // 2 - tp - fp - fn
    return {"tp": tp, "fp": fp, "fn": fn, "tn": tn}


# ---------------------------------------------------------------------------
# Recovery diagnostics
# ---------------------------------------------------------------------------

@dataclass
class RecoveryDiagnostics:
    """Constants controlling exact recovery; NaN where not computed.

    ``eta_ns_pairs`` keeps the full per-(root, row) incoherence table so the
    worst pairs can be inspected; the scalar summaries use the global
    minima/maxima.
    """

    dim: int
    s: int                       # max degree of the graph
    rho_min: float
    rho_max: float
    # neighborhood selection
    theta_min_ns: float = np.nan
    lambda_min: float = np.nan
    kappa: float = np.nan
    vartheta: float = np.nan
    eta_ns: float = np.nan
    c_ns: float = np.nan
    eta_ns_pairs: np.ndarray | None = None
    # graphical lasso
    theta_min_gl: float = np.nan
    kappa_sigma: float = np.nan
    kappa_omega: float = np.nan
    eta_gl: float = np.nan
    chi0: float = np.nan
    c_gl: float = np.nan
    eta_gl_roots: np.ndarray | None = None

    def to_json(self):
        out = asdict(self)
        for key in ("eta_ns_pairs", "eta_gl_roots"):
            if out[key] is not None:
                out[key] = np.asarray(out[key]).tolist()
        return out


def _op_norm_inf(mat):
    """Max absolute row sum; 0 for an empty block."""
    a = np.atleast_2d(np.asarray(mat, dtype=float))
    if a.size == 0:
        return 0.0
    return float(np.abs(a).sum(axis=1).max())


def _checked_model(gamma, g):
    gamma = validate_variogram(gamma)
    theta = precision_from_gamma(gamma)
    implied = graph_from_precision(theta)
    if implied.edges != g.edges:
        raise InputError("graph does not match the precision sparsity of the "
                         "variogram", reason="graph-mismatch")
    return gamma, theta


def _check_bounds(rho_bounds):
    rho_min, rho_max = (float(rho_bounds[0]), float(rho_bounds[1]))
    if not 0 <= rho_min <= rho_max:
        raise InputError("need 0 <= rho_min <= rho_max", reason="penalty")
    return rho_min, rho_max


def ns_diagnostics(gamma, g, rho_bounds):
    """Neighborhood-selection recovery constants for an exact model.

    For each ordered pair (m, ell) the support S is the set of neighbors of
    ell other than m; pairs with empty S are skipped.  The incoherence of a
    pair compares the rows of the rooted covariance outside {m, ell} and S
    against the S-block; the recovery radius combines the worst constants
    with the penalty window [rho_min, rho_max].
    """
    gamma, theta = _checked_model(gamma, g)
    rho_min, rho_max = _check_bounds(rho_bounds)
    d = gamma.shape[0]
    adj = g.adjacency()
    degrees = g.degrees()
    s = int(degrees.max()) if g.n_edges else 0

    diag_theta = np.diag(theta)
    signal = [abs(theta[i, j]) / diag_theta[j]
              for i in range(d) for j in range(d) if i != j and adj[i, j]]
    theta_min_ns = float(min(signal)) if signal else np.nan

    lam = np.inf
    kappa = 0.0
    vartheta = 0.0
    eta_pairs = np.full((d, d), np.nan)
    for m in range(d):
        sigma = farris_transform(gamma, m)
        for ell in range(d):
            if ell == m:
                continue
            support = [i for i in range(d) if i not in (m, ell) and adj[i, ell]]
            if not support:
                continue  # the constants are undefined on an empty index set
            rest = [i for i in range(d)
                    if i not in (m, ell) and not adj[i, ell]]
            block = sigma[np.ix_(support, support)]
            lam = min(lam, float(np.linalg.eigvalsh(block).min()))
            inv = np.linalg.inv(block)
            vartheta = max(vartheta, _op_norm_inf(inv))
            cross = sigma[np.ix_(rest, support)]
            kappa = max(kappa, _op_norm_inf(cross))
            eta_pairs[m, ell] = 1.0 - _op_norm_inf(cross @ inv)
    eta_ns = float(np.nanmin(eta_pairs)) if np.any(~np.isnan(eta_pairs)) else np.nan

    c_ns = np.nan
    if s > 0 and np.isfinite(eta_ns):
        one_kv = 1.0 + kappa * vartheta
        c_ns = (2.0 / 3.0) * min(
            lam / (2.0 * s),
            eta_ns / (4.0 * vartheta * one_kv * s),
            (theta_min_ns - vartheta * rho_max) / (2.0 * vartheta * one_kv),
            rho_min * eta_ns / (8.0 * one_kv ** 2),
        )
    return RecoveryDiagnostics(
        dim=d, s=s, rho_min=rho_min, rho_max=rho_max,
        theta_min_ns=theta_min_ns, lambda_min=float(lam), kappa=float(kappa),
        vartheta=float(vartheta), eta_ns=eta_ns, c_ns=float(c_ns),
        eta_ns_pairs=eta_pairs,
    )


def _pair_index(d_sub):
    """Row-major flattening of (i, j) pairs over the reduced node set."""
    return lambda i, j: i * d_sub + j


def gl_diagnostics(gamma, g, rho_bounds):
    """Graphical-lasso recovery constants for an exact model.

    The per-root incoherence lives on the Kronecker square of the rooted
    covariance submatrix, indexed row-major by node pairs; the support
    includes the diagonal pairs (self loops).
    """
    gamma, theta = _checked_model(gamma, g)
    rho_min, rho_max = _check_bounds(rho_bounds)
    d = gamma.shape[0]
    adj = g.adjacency()
    degrees = g.degrees()
    s = int(degrees.max()) if g.n_edges else 0

    off = [abs(theta[i, j]) for i in range(d) for j in range(i + 1, d)
           if adj[i, j]]
    theta_min_gl = float(min(off)) if off else np.nan

    kappa_sigma = 0.0
    kappa_omega = 0.0
    eta_roots = np.full(d, np.nan)
    for m in range(d):
        keep = [i for i in range(d) if i != m]
        sub = farris_transform(gamma, m)[np.ix_(keep, keep)]
        kappa_sigma = max(kappa_sigma, _op_norm_inf(sub))
        omega = np.kron(sub, sub)
        p = len(keep)
        idx = _pair_index(p)
        support, rest = [], []
        for a, i in enumerate(keep):
            for b, j in enumerate(keep):
                flat = idx(a, b)
                if i == j or adj[i, j]:
                    support.append(flat)
                else:
                    rest.append(flat)
        block_inv = np.linalg.inv(omega[np.ix_(support, support)])
        kappa_omega = max(kappa_omega, _op_norm_inf(block_inv))
        cross = omega[np.ix_(rest, support)]
        eta_roots[m] = 1.0 - _op_norm_inf(cross @ block_inv)
    eta_gl = float(eta_roots.min())

    sigma_diag_min = min(
        farris_transform(gamma, m)[i, i]
        for m in range(d) for i in range(d) if i != m)

    chi0 = np.nan
    c_gl = np.nan
    if eta_gl > 0:
        chi0 = 6.0 * kappa_sigma * kappa_omega * max(
            1.0, 9.0 * kappa_sigma ** 2 * kappa_omega / eta_gl)
        if s > 0:
            c_gl = (2.0 / 3.0) * min(
                sigma_diag_min,
                eta_gl * rho_min / 8.0,
                1.0 / (chi0 * s) - rho_max,
                theta_min_gl / (4.0 * kappa_omega) - rho_max,
            )
    return RecoveryDiagnostics(
        dim=d, s=s, rho_min=rho_min, rho_max=rho_max,
        theta_min_gl=theta_min_gl, kappa_sigma=float(kappa_sigma),
        kappa_omega=float(kappa_omega), eta_gl=eta_gl, chi0=float(chi0),
        c_gl=float(c_gl), eta_gl_roots=eta_roots,
    )


# ---------------------------------------------------------------------------
# Sign checks on the precision matrix
# ---------------------------------------------------------------------------

def _offdiag_tol(theta, tol):
    if tol is not None:
        return float(tol)
    t = np.asarray(theta, dtype=float)
    mask = ~np.eye(t.shape[0], dtype=bool)
    scale = np.abs(t[mask]).max() if t[mask].size else 0.0
    return 1e-10 * max(scale, 1.0)


def emtp2_check(theta, tol=None):
    """True iff every off-diagonal precision entry is <= tol."""
    t = np.asarray(theta, dtype=float)
    tol = _offdiag_tol(t, tol)
    mask = ~np.eye(t.shape[0], dtype=bool)
    return bool(np.all(t[mask] <= tol))
