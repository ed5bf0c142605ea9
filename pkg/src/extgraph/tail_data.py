"""From raw samples to the empirical extremal variogram.

The estimator only sees ranks: each column is mapped to pseudo-observations
``u = (n + 1 - rank) / n`` (rank ascending, 1-based), the left-continuous
empirical-CDF convention, so ``u = 1/n`` for the column maximum.  For each
root m the k samples with the largest column-m values are selected and the
rooted variogram entry (i, j) is the empirical variance (divisor k) of
``log u_i - log u_j`` over the selection.  The pooled estimate averages the
d rooted matrices.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .hr_model import inverse_farris

CHUNK = 4096  # samples per RNG stream in the consistency probe


def default_k(n):
    """Default number of exceedances, floor(n^0.7)."""
    n = int(n)
    if n < 2:
        raise InputError("need at least two samples", reason="n")
    return max(1, min(n - 1, math.floor(n ** 0.7)))


def ensure_data_matrix(data):
    a = np.asarray(data, dtype=float)
    if a.ndim != 2:
        raise InputError(f"data must be an n x d matrix, got shape {a.shape}",
                         reason="shape")
    if a.shape[0] < 2:
        raise InputError("need at least two samples", reason="n")
    if not np.all(np.isfinite(a)):
        raise InputError("data contains non-finite entries", reason="non-finite")
    return a


def rank_transform(data):
    """Pseudo-observations 1 - F(x) = (n + 1 - rank) / n, columnwise.

    Ties are broken by first occurrence (stable sort) and flagged with a
    warning; a constant column is an error.
    """
    a = ensure_data_matrix(data)
    n, d = a.shape
    out = np.empty_like(a)
    tied_cols = []
    for j in range(d):
        col = a[:, j]
        if col.max() == col.min():
            raise InputError(f"column {j} is constant", reason="constant-column")
        if np.unique(col).size < n:
            tied_cols.append(j)
        order = np.argsort(col, kind="stable")
        ranks = np.empty(n, dtype=float)
        ranks[order] = np.arange(1, n + 1)
        out[:, j] = (n + 1 - ranks) / n
    if tied_cols:
        warnings.warn(f"ties detected in columns {tied_cols}; "
                      "broken by first occurrence", stacklevel=2)
    return out


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Empirical extremal variogram: pooled matrix, per-root matrices, k, n."""

    pooled: np.ndarray
    rooted: np.ndarray  # shape (d, d, d); rooted[m] is the root-m estimate
    k: int
    n: int


def _top_k_rows(col, k):
    """Indices of the k largest entries, ties by first occurrence."""
    return np.argsort(-col, kind="stable")[:k]


def empirical_variogram(data, k=None):
    """Empirical extremal variogram of an n x d sample with k exceedances."""
    a = ensure_data_matrix(data)
    n, d = a.shape
    if d < 2:
        raise InputError("need at least two columns", reason="dim")
    k = default_k(n) if k is None else int(k)
    if not 1 <= k < n:
        raise InputError(f"k must satisfy 1 <= k < n, got k={k}, n={n}",
                         reason="k")
    logu = np.log(rank_transform(a))
    rooted = np.empty((d, d, d))
    for m in range(d):
        col = a[:, m]
        sel = _top_k_rows(col, k)
        boundary = np.partition(col, n - k)
        if k < n and boundary[n - k] == boundary[n - k - 1]:
            warnings.warn(f"tie at the k-th largest value of column {m}; "
                          "selection resolved by first occurrence", stacklevel=2)
        block = logu[sel]
        centered = block - block.mean(axis=0)
        second = centered.T @ centered / k
        # var(x_i - x_j) = m_ii + m_jj - 2 m_ij: the inverse Farris map of the
        # second-moment matrix.
        rooted[m] = inverse_farris(second)
    return EmpiricalVariogram(pooled=rooted.mean(axis=0), rooted=rooted, k=k, n=n)


def empirical_stdf_pair(data, k, i, j):
    """Nonparametric estimate of the pairwise extremal coefficient L(1, 1).

    Counts samples where either coordinate ranks among its k largest,
    scaled by 1/k.
    """
    a = ensure_data_matrix(data)
    n = a.shape[0]
    if not 1 <= k < n:
        raise InputError(f"k must satisfy 1 <= k < n, got k={k}", reason="k")
    u = rank_transform(a[:, [i, j]])
    thresh = k / n
    hit = (u[:, 0] <= thresh) | (u[:, 1] <= thresh)
    return hit.sum() / k


def invert_default_k(k):
    """Smallest n with floor(n^0.7) >= k."""
    k = int(k)
    n = max(2, math.ceil(k ** (1 / 0.7)) - 2)
    while math.floor(n ** 0.7) < k:
        n += 1
    return n


@dataclass(frozen=True)
class ProbeRow:
    k: int
    n: int
    mean_max_error: float


def variogram_consistency_probe(gamma, sampler, k_grid, reps=20, seed=0):
    """Monte Carlo study of max_m ||rooted_m - gamma||_inf against k.

    ``sampler(n, seed)`` must return an n x d sample whose extremal variogram
    is ``gamma``; for each k the sample size is the smallest n with
    floor(n^0.7) >= k.  Returns one ProbeRow per k with errors averaged over
    ``reps`` replications.
    """
    g = np.asarray(gamma, dtype=float)
    rows = []
    for ki, k in enumerate(k_grid):
        n = invert_default_k(k)
        errs = []
        for rep in range(reps):
            data = sampler(n, seed + 1_000_003 * ki + rep)
            ev = empirical_variogram(data, k=k)
            errs.append(np.abs(ev.rooted - g[None, :, :]).max())
        rows.append(ProbeRow(k=int(k), n=n, mean_max_error=float(np.mean(errs))))
    return rows


def loglog_slope(rows):
    """Least-squares slope of log(error) against log(k) for probe output."""
    x = np.log([r.k for r in rows])
    y = np.log([r.mean_max_error for r in rows])
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# CSV input (optional single header row, auto-detected)
# ---------------------------------------------------------------------------

def parse_data_csv(text):
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise InputError("empty CSV", reason="empty")
    start = 0
    try:
        [float(x) for x in rows[0]]
    except ValueError:
        start = 1  # header row
    if len(rows) - start < 2:
        raise InputError("need at least two data rows", reason="n")
    width = len(rows[start])
    out = np.empty((len(rows) - start, width))
    for t, row in enumerate(rows[start:]):
        if len(row) != width:
            raise InputError(f"ragged CSV row {t + start + 1}", reason="shape")
        for j, x in enumerate(row):
            if x.strip() == "":
                raise InputError(f"missing value at row {t + start + 1}, "
                                 f"column {j + 1}", reason="missing")
            try:
                out[t, j] = float(x)
            except ValueError as exc:
                raise InputError(f"non-numeric value {x!r} at row "
                                 f"{t + start + 1}", reason="non-numeric") from exc
    return ensure_data_matrix(out)


def read_data_csv(path):
    with open(path, encoding="utf-8") as fh:
        return parse_data_csv(fh.read())


def write_data_csv(data, path):
    a = ensure_data_matrix(data)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"v{j + 1}" for j in range(a.shape[1])])
        for row in a:
            writer.writerow([repr(float(x)) for x in row])
