"""Random models and exact samplers for the simulation studies.

Randomness is driven by the counter-based 64-bit Philox generator.  Every
operation draws from its own named stream derived from the user seed via
``SeedSequence(seed, spawn_key=(code, *key))``; stream codes are listed in
``STREAM_CODES``.  The samplers additionally split the sample index space
into chunks of ``SAMPLE_CHUNK`` with one stream per chunk, so outputs are
reproducible bit-for-bit regardless of how chunks are scheduled, and the
first n rows do not change when more samples are requested.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, InputError
from .hr_model import (
    Graph,
    complete_graph,
    farris_transform,
    gamma_from_precision,
    graph_from_precision,
    inverse_farris,
    make_graph,
    precision_from_gamma,
    validate_variogram,
)

STREAM_CODES = {
    "ba": 1,          # preferential-attachment graph
    "laplacian": 2,   # edge weights of the Laplacian construction
    "block": 3,       # clique correlation matrices of the block model
    "mpd": 4,         # multivariate Pareto sampler, keyed by chunk
    "maxstable": 5,   # max-stable sampler, keyed by chunk
    "task": 6,        # per-task seeds derived by the CLI
}

SAMPLE_CHUNK = 4096
MAX_PROPOSAL_BATCH = 1 << 17


def rng_stream(seed, op, *key):
    """Philox generator for a named substream of ``seed``."""
    seed = int(seed)
    if seed < 0:
        raise InputError("seed must be non-negative", reason="seed")
    if op not in STREAM_CODES:
        raise InputError(f"unknown stream {op!r}", reason="stream")
    ss = np.random.SeedSequence(entropy=seed,
                                spawn_key=(STREAM_CODES[op], *map(int, key)))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# Random graphs
# ---------------------------------------------------------------------------

def barabasi_albert(d, q, seed):
    """Preferential attachment graph with q edges per new node.

    Convention: the seed component is a q-clique; each newcomer attaches to
    q distinct existing nodes drawn proportionally to current degree
    (uniformly while all degrees are zero, which only happens for q = 1 at
    the first step).  Connected by construction.
    """
    d, q = int(d), int(q)
    if not 1 <= q < d:
        raise InputError(f"need 1 <= q < d, got q={q}, d={d}", reason="ba")
    rng = rng_stream(seed, "ba")
    edges = [(i, j) for i in range(q) for j in range(i + 1, q)]
    deg = np.zeros(d, dtype=float)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    for v in range(q, d):
        candidates = list(range(v))
        targets = []
        for _ in range(q):
            weights = deg[candidates]
            total = weights.sum()
            if total <= 0:
                probs = np.full(len(candidates), 1.0 / len(candidates))
            else:
                probs = weights / total
            pick = int(rng.choice(len(candidates), p=probs))
            targets.append(candidates.pop(pick))
        for t in targets:
            edges.append((t, v))
            deg[t] += 1
            deg[v] += 1
    return make_graph(d, edges)


# ---------------------------------------------------------------------------
# Random parameter matrices
# ---------------------------------------------------------------------------

def laplacian_gamma(g, weight_range=(2.0, 5.0), seed=0):
    """Variogram and precision from a random weighted graph Laplacian.

    Edge weights are independent Unif[low, high] draws (edges visited in
    lexicographic order); the precision is the weighted Laplacian, so all
    its off-diagonal entries are non-positive.
    """
    low, high = float(weight_range[0]), float(weight_range[1])
    if not 0 < low <= high:
        raise InputError("weight range must satisfy 0 < low <= high",
                         reason="weights")
    rng = rng_stream(seed, "laplacian")
    d = g.dim
    w = np.zeros((d, d))
    for i, j in sorted(g.edges):
        w[i, j] = w[j, i] = rng.uniform(low, high)
    theta = np.diag(w.sum(axis=1)) - w
    try:
        gamma = gamma_from_precision(theta)
    except InputError as exc:
        raise InputError("graph must be connected (Laplacian rank too low)",
                         reason="disconnected") from exc
    if graph_from_precision(theta).edges != g.edges:
        raise InputError("Laplacian sparsity does not match the graph",
                         reason="graph-mismatch")
    return gamma, theta


def random_correlation(dim, eta, rng):
    """Random correlation matrix by the onion construction.

    Off-diagonal entries have Beta(eta - 1 + dim/2, eta - 1 + dim/2)
    marginals rescaled to (-1, 1).
    """
    dim = int(dim)
    if dim < 1:
        raise InputError("dimension must be >= 1", reason="dim")
    if eta <= 0:
        raise InputError("concentration must be > 0", reason="eta")
    if dim == 1:
        return np.ones((1, 1))
    beta = eta + (dim - 2) / 2.0
    r12 = 2.0 * rng.beta(beta, beta) - 1.0
    corr = np.array([[1.0, r12], [r12, 1.0]])
    for k in range(2, dim):
        beta -= 0.5
        y = rng.beta(k / 2.0, beta)
        u = rng.standard_normal(k)
        u /= np.linalg.norm(u)
        z = np.linalg.cholesky(corr) @ (np.sqrt(y) * u)
        corr = np.block([[corr, z[:, None]], [z[None, :], np.ones((1, 1))]])
    return corr


def block_model_layout(n_c, n_n):
    """Node sets of the chained cliques (consecutive cliques share one node)."""
    n_c, n_n = int(n_c), int(n_n)
    if n_c < 1 or n_n < 2:
        raise InputError("need n_c >= 1 cliques of n_n >= 2 nodes", reason="bm")
    return [list(range(c * (n_n - 1), c * (n_n - 1) + n_n)) for c in range(n_c)]


def block_model_gamma(n_c, n_n, alpha, seed):
    """Random variogram factorizing on a chain of fully connected cliques.

    Each clique block is the inverse Farris image of a random correlation
    matrix (regenerated, up to 100 times, if it fails strict conditional
    negative definiteness); entries across cliques follow by additivity along
    the separator path.
    """
    if alpha <= 0:
        raise InputError("alpha must be > 0", reason="alpha")
    cliques = block_model_layout(n_c, n_n)
    n_c, n_n = len(cliques), len(cliques[0])
    d = cliques[-1][-1] + 1
    rng = rng_stream(seed, "block")
    gamma = np.zeros((d, d))
    for nodes in cliques:
        for attempt in range(100):
            block = inverse_farris(random_correlation(n_n, alpha, rng))
            try:
                validate_variogram(block)
                break
            except InputError:
                continue
        else:
            raise ConvergenceError("could not draw a valid clique block in "
                                   "100 attempts")
        gamma[np.ix_(nodes, nodes)] = block
    # Separator path additivity for cross-clique entries.
    seps = [cliques[c][-1] for c in range(n_c - 1)]
    for a in range(n_c):
        for b in range(a + 1, n_c):
            between = sum(gamma[seps[c - 1], seps[c]] for c in range(a + 1, b))
            for u in cliques[a]:
                for v in cliques[b]:
                    if gamma[u, v] != 0 or u == v:
                        continue  # already set by a clique block
                    gamma[u, v] = gamma[u, seps[a]] + between + gamma[seps[b - 1], v]
                    gamma[v, u] = gamma[u, v]
    edges = [(i, j) for nodes in cliques
             for i in nodes for j in nodes if i < j]
    return validate_variogram(gamma), make_graph(d, edges)


# ---------------------------------------------------------------------------
# Exact samplers
# ---------------------------------------------------------------------------

def _rooted_gaussians(gamma):
    """Per-root mean vectors and Cholesky factors of the rooted covariances."""
    d = gamma.shape[0]
    means, chols, keeps = [], [], []
    for m in range(d):
        keep = [i for i in range(d) if i != m]
        sub = farris_transform(gamma, m)[np.ix_(keep, keep)]
        means.append(-gamma[keep, m] / 2.0)
        chols.append(np.linalg.cholesky(sub))
        keeps.append(keep)
    return means, chols, keeps


def sample_mpd_hr(gamma, n, seed):
    """Exact multivariate Pareto sample (support: some coordinate > 1).

    Proposal: pick a root uniformly (the extremal-function masses are equal
    under standardized margins), set that coordinate to a standard Pareto
    draw and the log-ratios of the others to a Gaussian with mean
    -gamma[., m]/2 and the rooted covariance; accept when the proposal root
    is the first coordinate exceeding 1.  Accepted draws follow the target
    exactly.
    """
    gamma = validate_variogram(gamma)
    n = int(n)
    if n < 1:
        raise InputError("need n >= 1", reason="n")
    d = gamma.shape[0]
    means, chols, keeps = _rooted_gaussians(gamma)
    out = np.empty((n, d))
    for chunk in range(0, n, SAMPLE_CHUNK):
        # Always fill the whole chunk so row i never depends on n.
        rng = rng_stream(seed, "mpd", chunk // SAMPLE_CHUNK)
        block = np.empty((SAMPLE_CHUNK, d))
        got = 0
        while got < SAMPLE_CHUNK:
            batch = min(max(1024, 2 * d * (SAMPLE_CHUNK - got)),
                        MAX_PROPOSAL_BATCH)
            roots = rng.integers(0, d, size=batch)
            pareto = 1.0 / (1.0 - rng.random(batch))
            eps = rng.standard_normal((batch, d - 1))
            y = np.empty((batch, d))
            for m in range(d):
                rows = np.nonzero(roots == m)[0]
                if rows.size == 0:
                    continue
                logy = (np.log(pareto[rows])[:, None] + means[m][None, :]
                        + eps[rows] @ chols[m].T)
                y[np.ix_(rows, keeps[m])] = np.exp(logy)
                y[rows, m] = pareto[rows]
            exceed = y > 1.0
            accept = exceed.any(axis=1) & (np.argmax(exceed, axis=1) == roots)
            rows = np.nonzero(accept)[0][:SAMPLE_CHUNK - got]
            block[got:got + rows.size] = y[rows]
            got += rows.size
        take = min(SAMPLE_CHUNK, n - chunk)
        out[chunk:chunk + take] = block[:take]
    return out


def sample_maxstable_hr(gamma, n, seed):
    """Exact max-stable sample with standard Frechet margins.

    Record-breaking sweep over coordinates: for each coordinate, Poisson
    arrivals 1/zeta propose log-Gaussian profiles normalized at that
    coordinate; a profile enters the running maximum only if it is not
    already dominated at the previous coordinates.
    """
    gamma = validate_variogram(gamma)
    n = int(n)
    if n < 1:
        raise InputError("need n >= 1", reason="n")
    d = gamma.shape[0]
    means, chols, keeps = _rooted_gaussians(gamma)
    out = np.empty((n, d))
    for chunk in range(0, n, SAMPLE_CHUNK):
        # Always fill the whole chunk so row i never depends on n.
        rng = rng_stream(seed, "maxstable", chunk // SAMPLE_CHUNK)
        z = np.zeros((SAMPLE_CHUNK, d))
        for k in range(d):
            zeta = rng.exponential(size=SAMPLE_CHUNK)
            active = 1.0 / zeta > z[:, k]
            while active.any():
                idx = np.nonzero(active)[0]
                eps = rng.standard_normal((idx.size, d - 1))
                y = np.empty((idx.size, d))
                y[:, keeps[k]] = np.exp(means[k][None, :] + eps @ chols[k].T)
                y[:, k] = 1.0
                if k > 0:
                    ok = np.all(y[:, :k] / zeta[idx, None] < z[idx, :k], axis=1)
                else:
                    ok = np.ones(idx.size, dtype=bool)
                upd = idx[ok]
                z[upd] = np.maximum(z[upd], y[ok] / zeta[upd, None])
                zeta[idx] += rng.exponential(size=idx.size)
                active[idx] = 1.0 / zeta[idx] > z[idx, k]
        take = min(SAMPLE_CHUNK, n - chunk)
        out[chunk:chunk + take] = z[:take]
    return out


# ---------------------------------------------------------------------------
# Sign summary of a precision matrix
# ---------------------------------------------------------------------------

def positive_offdiag_fraction(theta, tol=None):
    """Share of strictly positive off-diagonal entries among all node pairs."""
    t = np.asarray(theta, dtype=float)
    d = t.shape[0]
    if t.ndim != 2 or t.shape[1] != d or d < 2:
        raise InputError("need a square matrix with d >= 2", reason="shape")
    if tol is None:
        mask = ~np.eye(d, dtype=bool)
        scale = np.abs(t[mask]).max() if t[mask].size else 0.0
        tol = 1e-10 * max(scale, 1.0)
    count = sum(1 for i in range(d) for j in range(i + 1, d) if t[i, j] > tol)
    return count / (d * (d - 1) // 2)
