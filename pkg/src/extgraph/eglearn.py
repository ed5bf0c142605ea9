"""Majority-voting graph estimation from a variogram estimate.

For every root m the Farris transform of the input is handed to a base
learner (neighborhood selection or graphical lasso) that estimates the
sparsity pattern of the rooted precision submatrix.  The d patterns are
votes: edge {i, j} enters the final graph iff strictly more than half of the
d - 2 informative roots (all m outside {i, j}) vote for it.

The input does not have to be a valid variogram; any symmetric zero-diagonal
matrix (e.g. the empirical extremal variogram) is accepted.  Roots whose
transformed submatrix has a non-positive diagonal abstain with a warning and
the majority denominator is reduced accordingly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InputError
from .hr_model import Graph, farris_transform, make_graph
from .sparse_solvers import (
    DEFAULT_OPTS,
    glasso_pattern,
    lasso_path,
    neighborhood_selection,
)

BASE_LEARNERS = ("ns", "gl")
IC_PENALTIES = ("aic", "bic", "mbic")


@dataclass(frozen=True)
class LearnerConfig:
    """Base learner choice plus penalties.

    ``rho`` is a shared scalar, or a table of per-root penalties: shape (d,)
    for the graphical lasso, shape (d, d-1) for neighborhood selection
    (one penalty per row problem within each root).
    """

    base: str = "ns"
    rho: float | np.ndarray = 0.0
    opts: object = DEFAULT_OPTS
    and_rule: bool = False

    def __post_init__(self):
        if self.base not in BASE_LEARNERS:
            raise InputError(f"unknown base learner {self.base!r}", reason="base")


@dataclass(frozen=True)
class EglearnResult:
    graph: Graph
    votes: np.ndarray        # (d, d, d) bool; votes[m] is the augmented layer
    abstained: tuple         # roots that did not vote


@dataclass(frozen=True)
class GraphPath:
    rhos: np.ndarray
    graphs: list
    connected: list
    densities: np.ndarray

    def __len__(self):
        return len(self.graphs)


@dataclass(frozen=True)
class ICReport:
    criterion: str
    rho_grid: np.ndarray
    selected: np.ndarray     # (d, d-1) chosen penalty per (root, row); NaN = abstained
    graph: Graph
    votes: np.ndarray
    abstained: tuple


def _check_square_input(gamma_hat):
    g = np.asarray(gamma_hat, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InputError("variogram estimate must be square", reason="shape")
    if not np.all(np.isfinite(g)):
        raise InputError("variogram estimate has non-finite entries",
                         reason="non-finite")
    scale = max(1.0, np.abs(g).max())
    if not np.allclose(g, g.T, atol=1e-10 * scale):
        raise InputError("variogram estimate must be symmetric", reason="asymmetric")
    if np.abs(np.diag(g)).max() > 1e-10 * scale:
        raise InputError("variogram estimate must have zero diagonal",
                         reason="nonzero-diagonal")
    if g.shape[0] < 3:
        raise InputError("majority voting needs d >= 3", reason="dim")
    return g


def _root_penalty(cfg, m, d):
    rho = cfg.rho
    if np.isscalar(rho):
        return float(rho) if cfg.base == "gl" else np.full(d - 1, float(rho))
    rho = np.asarray(rho, dtype=float)
    if cfg.base == "gl":
        if rho.shape != (d,):
            raise InputError(f"per-root penalties must have shape ({d},)",
                             reason="penalty-shape")
        return float(rho[m])
    if rho.shape != (d, d - 1):
        raise InputError(f"per-(root,row) penalties must have shape ({d}, {d - 1})",
                         reason="penalty-shape")
    return rho[m]


def _rooted_submatrix(g, m):
    keep = [i for i in range(g.shape[0]) if i != m]
    return farris_transform(g, m)[np.ix_(keep, keep)], keep


def _vote(votes, d, voting):
    """Strict majority over informative, non-abstaining roots."""
    edges = []
    for i in range(d):
        for j in range(i + 1, d):
            voters = [m for m in range(d) if m != i and m != j and voting[m]]
            if not voters:
                continue
            ones = sum(1 for m in voters if votes[m, i, j])
            if ones / len(voters) > 0.5:
                edges.append((i, j))
    return make_graph(d, edges)


def eglearn(gamma_hat, cfg):
    """Run the majority-voting estimator; returns graph, votes, abstentions."""
    g = _check_square_input(gamma_hat)
    d = g.shape[0]
    votes = np.zeros((d, d, d), dtype=bool)
    voting = np.ones(d, dtype=bool)
    for m in range(d):
        sub, keep = _rooted_submatrix(g, m)
        if np.diag(sub).min() <= 0:
            warnings.warn(f"root {m} abstains: non-positive diagonal in its "
                          "transformed submatrix", stacklevel=2)
            voting[m] = False
            continue
        try:
            if cfg.base == "ns":
                pattern = neighborhood_selection(sub, _root_penalty(cfg, m, d),
                                                 cfg.opts, and_rule=cfg.and_rule)
            else:
                pattern = glasso_pattern(sub, _root_penalty(cfg, m, d), cfg.opts)
        except ConvergenceError as exc:
            raise ConvergenceError(f"base learner failed at root {m}: {exc}") from exc
        votes[m][np.ix_(keep, keep)] = pattern
    graph = _vote(votes, d, voting)
    return EglearnResult(graph=graph, votes=votes,
                         abstained=tuple(int(m) for m in np.nonzero(~voting)[0]))


def is_connected(g):
    """Breadth-first reachability of every node from node 0."""
    if g.dim == 1:
        return True
    adj = [[] for _ in range(g.dim)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return len(seen) == g.dim


def eglearn_path(gamma_hat, base, rho_grid, opts=DEFAULT_OPTS, and_rule=False):
    """One eglearn run per grid value (shared scalar penalty)."""
    rhos = np.asarray(rho_grid, dtype=float)
    if rhos.ndim != 1 or rhos.size == 0:
        raise InputError("penalty grid must be a non-empty vector", reason="grid")
    if np.any(rhos < 0) or np.any(np.diff(rhos) <= 0):
        raise InputError("penalty grid must be strictly increasing and >= 0",
                         reason="grid")
    graphs = []
    for rho in rhos:
        res = eglearn(gamma_hat, LearnerConfig(base=base, rho=float(rho),
                                               opts=opts, and_rule=and_rule))
        graphs.append(res.graph)
    return GraphPath(
        rhos=rhos,
        graphs=graphs,
        connected=[is_connected(gr) for gr in graphs],
        densities=np.array([gr.density for gr in graphs]),
    )


def default_rho_grid(gamma_hat, base="ns", count=30, opts=DEFAULT_OPTS):
    """Geometric grid spanning [rho_max / 100, rho_max].

    ``rho_max`` is found by doubling a small seed penalty until the estimated
    graph is empty; the seed is scale-aware (1/1024 of the penalty that
    silences every row problem outright).
    """
    g = _check_square_input(gamma_hat)
    d = g.shape[0]
    bound = 0.0
    for m in range(d):
        sub, _ = _rooted_submatrix(g, m)
        off = np.abs(sub[~np.eye(d - 1, dtype=bool)])
        if off.size:
            bound = max(bound, off.max())
    bound *= 2.0 if base == "ns" else 1.0
    if bound <= 0:
        raise InputError("degenerate input: no off-diagonal signal", reason="degenerate")
    rho = bound / 1024.0
    for _ in range(22):
        try:
            res = eglearn(g, LearnerConfig(base=base, rho=rho, opts=opts))
            if res.graph.n_edges == 0:
                break
        except ConvergenceError:
            pass  # too small a penalty for this input; keep doubling
        rho *= 2.0
    return np.geomspace(rho / 100.0, rho, count)


def _rss(sub, ell, theta, k):
    keep = [i for i in range(sub.shape[0]) if i != ell]
    a = sub[keep, ell]
    q = sub[np.ix_(keep, keep)]
    return k * (sub[ell, ell] - 2.0 * a @ theta + theta @ q @ theta)


def ic_penalty(criterion, k, d):
    if criterion == "aic":
        return 2.0
    if criterion == "bic":
        return math.log(k)
    if criterion == "mbic":
        if d - 1 < 3:
            raise InputError("mbic needs d >= 4", reason="dim")
        return math.log(k) * math.log(math.log(d - 1))
    raise InputError(f"unknown criterion {criterion!r}", reason="criterion")


def select_ic(gamma_hat, rho_grid, criterion, k, opts=DEFAULT_OPTS):
    """Per-(root, row) information-criterion tuning for neighborhood selection.

    For every root m and row ell, the lasso path over ``rho_grid`` is scored
    by RSS + penalty * support size and the best grid point is kept (ties go
    to the larger penalty).  The selected supports vote exactly as in
    ``eglearn``.
    """
    g = _check_square_input(gamma_hat)
    d = g.shape[0]
    k = int(k)
    if k < 2:
        raise InputError("effective sample size k must be >= 2", reason="k")
    criterion = criterion.lower()
    pen = ic_penalty(criterion, k, d)
    rhos = np.asarray(rho_grid, dtype=float)
    if np.any(rhos < 0):
        raise InputError("penalty grid must be >= 0", reason="grid")
    desc = np.argsort(rhos)[::-1]
    votes = np.zeros((d, d, d), dtype=bool)
    voting = np.ones(d, dtype=bool)
    selected = np.full((d, d - 1), np.nan)
    for m in range(d):
        sub, keep = _rooted_submatrix(g, m)
        if np.diag(sub).min() <= 0:
            warnings.warn(f"root {m} abstains: non-positive diagonal in its "
                          "transformed submatrix", stacklevel=2)
            voting[m] = False
            continue
        pattern = np.zeros((d - 1, d - 1), dtype=bool)
        for ell in range(d - 1):
            sols = lasso_path(sub, ell, rhos, opts)
            if not all(sol.converged for sol in sols):
                raise ConvergenceError(
                    f"base learner failed at root {m} (row {ell})")
            best_score, best_pos = np.inf, None
            for pos in desc:  # largest penalty first: ties resolve sparser
                sol = sols[pos]
                score = _rss(sub, ell, sol.theta, k) + pen * sol.active_set.size
                if score < best_score:
                    best_score, best_pos = score, pos
            selected[m, ell] = rhos[best_pos]
            others = [i for i in range(d - 1) if i != ell]
            for pos in sols[best_pos].active_set:
                pattern[others[pos], ell] = True
        pattern |= pattern.T
        votes[m][np.ix_(keep, keep)] = pattern
    graph = _vote(votes, d, voting)
    return ICReport(criterion=criterion, rho_grid=rhos, selected=selected,
                    graph=graph, votes=votes,
                    abstained=tuple(int(m) for m in np.nonzero(~voting)[0]))


def sparsest_connected(path):
    """Connected graph at the largest penalty in the path, or None."""
    best = None
    for rho, graph, conn in zip(path.rhos, path.graphs, path.connected):
        if conn:
            best = graph
    return best
