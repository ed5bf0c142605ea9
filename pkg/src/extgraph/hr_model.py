"""Husler-Reiss parametrizations and the transforms between them.

A d-variate Husler-Reiss model is parametrized by a variogram matrix: a
symmetric, zero-diagonal matrix with positive off-diagonal entries that is
strictly conditionally negative definite.  Equivalent parametrizations are

* the rooted covariances ``sigma[m]`` (Farris transform at root m),
* the rooted precisions ``theta[m]`` (inverse of the rooted covariance), and
* the rank-(d-1) precision matrix ``theta`` with zero row sums, whose
  off-diagonal zero pattern is exactly the conditional-independence graph.

Node indices are 0-based everywhere in this package; serialized formats
(JSON/CSV, see the bottom of this module) use 1-based labels.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InputError

# Scale-invariant cutoff: eigenvalues below RANK_RTOL * lambda_max are
# treated as exactly zero when pseudo-inverting.
RANK_RTOL = 1e-10

# Default zero threshold for reading a graph off a precision matrix,
# relative to max |off-diagonal| (precision entries scale like 1/gamma).
GRAPH_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes 0..dim-1.

    ``edges`` is a frozenset of (i, j) tuples with i < j.
    """

    dim: int
    edges: frozenset

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("graph needs at least one node", reason="dim")
        for e in self.edges:
            i, j = e
            if not (0 <= i < j < self.dim):
                raise InputError(f"edge {e} out of range for dim {self.dim}",
                                 reason="edge-range")

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def density(self):
        possible = self.dim * (self.dim - 1) // 2
        return len(self.edges) / possible if possible else 0.0

    def degrees(self):
        deg = np.zeros(self.dim, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self):
        a = np.zeros((self.dim, self.dim), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edges


def make_graph(dim, edges):
    """Build a Graph from any iterable of (i, j) pairs (0-based)."""
    norm_edges = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise InputError(f"self-loop at node {i}", reason="self-loop")
        norm_edges.add((min(i, j), max(i, j)))
    return Graph(dim=int(dim), edges=frozenset(norm_edges))


def complete_graph(dim):
    return make_graph(dim, [(i, j) for i in range(dim) for j in range(i + 1, dim)])


# ---------------------------------------------------------------------------
# Variogram validation
# ---------------------------------------------------------------------------

def _as_square(mat, name="matrix"):
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{name} must be square, got shape {a.shape}", reason="shape")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries", reason="non-finite")
    return a


def _ones_complement_basis(d):
    """Orthonormal basis of the orthogonal complement of the all-ones vector."""
    ones = np.ones((d, 1)) / math.sqrt(d)
    # Full QR of [1 | I] yields 1/sqrt(d) in the first column and a basis of
    # its complement in the remaining ones.
    q, _ = np.linalg.qr(np.hstack([ones, np.eye(d)]))
    return q[:, 1:d]


def restricted_spectrum(gamma):
    """Eigenvalues of -gamma/2 restricted to the subspace orthogonal to 1.

    All strictly positive iff gamma is strictly conditionally negative
    definite.
    """
    g = _as_square(gamma, "variogram")
    d = g.shape[0]
    u = _ones_complement_basis(d)
    return np.linalg.eigvalsh(u.T @ (-g / 2.0) @ u)


def validate_variogram(candidate, tol=None):
    """Check that ``candidate`` is a valid variogram matrix and return it.

    Failure modes are reported distinctly through InputError.reason:
    ``asymmetric``, ``nonzero-diagonal``, ``nonpositive-offdiag``, ``not-cnd``.

    ``tol`` is the eigenvalue cutoff for conditional negative definiteness,
    relative to the largest restricted eigenvalue; defaults to RANK_RTOL.
    """
    g = _as_square(candidate, "variogram")
    d = g.shape[0]
    if d < 2:
        raise InputError("variogram must have dimension >= 2", reason="dim")
    if not np.allclose(g, g.T, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise InputError("variogram is not symmetric", reason="asymmetric")
    if np.abs(np.diag(g)).max() > 0:
        raise InputError("variogram diagonal must be zero", reason="nonzero-diagonal")
    off = g[~np.eye(d, dtype=bool)]
    if off.min() <= 0:
        raise InputError("variogram off-diagonal entries must be strictly positive",
                         reason="nonpositive-offdiag")
    spec = restricted_spectrum(g)
    cut = (RANK_RTOL if tol is None else tol) * max(spec.max(), 0.0)
    if spec.min() <= cut:
        raise InputError(
            "variogram is not strictly conditionally negative definite "
            f"(restricted eigenvalues {spec})", reason="not-cnd")
    return g


# ---------------------------------------------------------------------------
# Farris transform and rooted matrices
# ---------------------------------------------------------------------------

def farris_transform(gamma, m):
    """Rooted covariance at node m: sigma_ij = (g_im + g_jm - g_ij) / 2.

    Row and column m of the result are identically zero.
    """
    g = _as_square(gamma, "variogram")
    d = g.shape[0]
    if not 0 <= m < d:
        raise InputError(f"root {m} out of range for dim {d}", reason="root")
    col = g[:, m]
    return (col[:, None] + col[None, :] - g) / 2.0


def inverse_farris(sigma):
    """Map a PSD matrix back to a variogram: g_ij = s_ii + s_jj - 2 s_ij.

    The same map for every root; extended to arbitrary symmetric PSD input.
    """
    s = _as_square(sigma, "covariance")
    dg = np.diag(s)
    out = dg[:, None] + dg[None, :] - 2.0 * s
    np.fill_diagonal(out, 0.0)
    return out


def rooted_precision(gamma, m):
    """Inverse of the rooted covariance submatrix, with zeros re-inserted
    in row/column m."""
    g = _as_square(gamma, "variogram")
    d = g.shape[0]
    sigma = farris_transform(g, m)
    keep = [i for i in range(d) if i != m]
    sub = sigma[np.ix_(keep, keep)]
    try:
        inv = np.linalg.inv(sub)
    except np.linalg.LinAlgError as exc:
        raise InputError(f"rooted covariance at m={m} is singular",
                         reason="singular") from exc
    cond = np.linalg.cond(sub)
    if not np.isfinite(cond) or cond > 1e14:
        raise InputError(f"rooted covariance at m={m} is numerically singular "
                         f"(cond={cond:.2e})", reason="singular")
    theta = np.zeros((d, d))
    theta[np.ix_(keep, keep)] = (inv + inv.T) / 2.0
    return theta


# ---------------------------------------------------------------------------
# The rank-(d-1) precision matrix
# ---------------------------------------------------------------------------

def centering_matrix(d):
    """P = I - 11^T / d."""
    return np.eye(d) - np.full((d, d), 1.0 / d)


def precision_from_gamma(gamma, rank_rtol=RANK_RTOL):
    """Precision matrix as the pseudo-inverse of P(-gamma/2)P.

    Eigenvalues below ``rank_rtol`` times the largest one are zeroed; exactly
    one zero eigenvalue (eigenvector 1/sqrt(d)) must remain or an InputError
    is raised.
    """
    g = _as_square(gamma, "variogram")
    d = g.shape[0]
    p = centering_matrix(d)
    s = p @ (-g / 2.0) @ p
    w, v = np.linalg.eigh((s + s.T) / 2.0)
    cut = rank_rtol * max(w.max(), 0.0)
    pos = w > cut
    if pos.sum() != d - 1 or w.min() < -cut:
        raise InputError(
            f"projected variogram has rank {int(pos.sum())}, expected {d - 1}",
            reason="rank")
    theta = (v[:, pos] / w[pos]) @ v[:, pos].T
    return (theta + theta.T) / 2.0


def gamma_from_precision(theta, rank_rtol=RANK_RTOL):
    """Variogram from a precision matrix via its pseudo-inverse."""
    t = _as_square(theta, "precision")
    d = t.shape[0]
    w, v = np.linalg.eigh((t + t.T) / 2.0)
    cut = rank_rtol * max(w.max(), 0.0)
    pos = w > cut
    if pos.sum() != d - 1 or w.min() < -cut:
        raise InputError(
            f"precision matrix has rank {int(pos.sum())}, expected {d - 1}",
            reason="rank")
    pinv = (v[:, pos] / w[pos]) @ v[:, pos].T
    return inverse_farris((pinv + pinv.T) / 2.0)


def graph_from_precision(theta, tol=None):
    """Edge {i, j} present iff |theta_ij| > tol (default GRAPH_RTOL-relative)."""
    t = _as_square(theta, "precision")
    d = t.shape[0]
    off = np.abs(t[~np.eye(d, dtype=bool)])
    if tol is None:
        tol = GRAPH_RTOL * (off.max() if off.size else 0.0)
    edges = [(i, j) for i in range(d) for j in range(i + 1, d)
             if abs(t[i, j]) > tol]
    return make_graph(d, edges)


# ---------------------------------------------------------------------------
# Bivariate closed forms (test oracles)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BivariateTail:
    """Closed-form bivariate tail functions for a Husler-Reiss pair.

    ``lam`` is sqrt(gamma_ij)/2, so the extremal coefficient L(1, 1) equals
    2 * Phi(sqrt(gamma_ij)/2).
    """

    gamma: float
    lam: float

    def stdf(self, x, y):
        """Stable tail dependence function L(x, y)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.log(x / y) / (2.0 * self.lam)
        term_x = np.where(x > 0, x * norm.cdf(self.lam + z), 0.0)
        term_y = np.where(y > 0, y * norm.cdf(self.lam - z), 0.0)
        out = np.where(x == 0, y, np.where(y == 0, x, term_x + term_y))
        return out if out.ndim else float(out)

    def r(self, x, y):
        """Joint tail function R(x, y) = x + y - L(x, y)."""
        return x + y - self.stdf(x, y)

    def density(self, x, y):
        """Mixed partial of R; symmetric in (x, y)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        lam = self.lam
        expo = -lam ** 2 / 2.0 - (np.log(x) - np.log(y)) ** 2 / (8.0 * lam ** 2)
        out = np.exp(expo) / (2.0 * math.sqrt(2.0 * math.pi) * lam * np.sqrt(x * y))
        return out if out.ndim else float(out)


def hr_bivariate(gamma_ij):
    """Bivariate tail oracle for a pair with variogram value gamma_ij > 0."""
    gamma_ij = float(gamma_ij)
    if gamma_ij <= 0:
        raise InputError("bivariate parameter must be > 0", reason="nonpositive-offdiag")
    return BivariateTail(gamma=gamma_ij, lam=math.sqrt(gamma_ij) / 2.0)


# ---------------------------------------------------------------------------
# Serialization: matrices to CSV/JSON, graphs to JSON (1-based externally)
# ---------------------------------------------------------------------------

def matrix_to_json(mat):
    a = _as_square(mat)
    return {"dim": int(a.shape[0]), "entries": [float(x) for x in a.ravel()]}


def matrix_from_json(obj):
    d = int(obj["dim"])
    entries = np.asarray(obj["entries"], dtype=float)
    if entries.size != d * d:
        raise InputError(f"expected {d * d} entries, got {entries.size}",
                         reason="shape")
    return entries.reshape(d, d)


def matrix_to_csv(mat):
    a = _as_square(mat)
    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in a:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def matrix_from_csv(text):
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    try:
        a = np.asarray([[float(x) for x in row] for row in rows])
    except ValueError as exc:
        raise InputError("matrix CSV contains non-numeric entries",
                         reason="non-numeric") from exc
    return _as_square(a)


def graph_to_json(g):
    edges = sorted(g.edges)
    return {"dim": g.dim, "edges": [[i + 1, j + 1] for i, j in edges]}


def graph_from_json(obj):
    d = int(obj["dim"])
    return make_graph(d, [(i - 1, j - 1) for i, j in obj["edges"]])


def save_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
