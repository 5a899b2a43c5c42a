"""Sequential quantizer design: choose decision thresholds among energy-bin
edges to maximize the backscatter mutual information.

A partition of ``n_bins`` consecutive bins into ``L`` contiguous regions is
described by its *boundaries* ``s_0 = 0 < s_1 < ... < s_L = n_bins``; region
``l`` holds bins ``s_l .. s_{l+1} - 1``.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .detector import ThresholdCandidates, transition_matrix

log = logging.getLogger(__name__)

BRUTE_FORCE_CAP = 10 ** 6


class InfeasibleError(ValueError):
    pass


class DegenerateHypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class QuantizerResult:
    boundaries: np.ndarray  # bin indices, length L + 1
    thresholds: np.ndarray  # energies, length L + 1, from 0 to inf
    objective: float  # backscatter MI in nats
    status: str = "ok"


def bin_masses(variances, edges, n_samples: int) -> np.ndarray:
    """Mass of each hypothesis in each bin, shape (L, n_bins).

    ``edges`` may be a :class:`ThresholdCandidates` or an explicit edge vector
    from 0 to inf.
    """
    if isinstance(edges, ThresholdCandidates):
        edges = edges.bin_edges()
    return transition_matrix(variances, edges, n_samples)


def _region_terms(mass, p):
    """Region contribution for region masses ``mass`` (L, ...) along axis 0."""
    r = np.tensordot(p, mass, axes=(0, 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mass > 0, mass * np.log(mass / r), 0.0)
    return np.tensordot(p, terms, axes=(0, 0))


def region_contribution(first: int, last: int, beta, p) -> float:
    """Backscatter-MI share of one region made of bins ``first..last``."""
    if first > last:
        raise ValueError("empty region")
    beta = np.asarray(beta, dtype=float)
    p = np.asarray(p, dtype=float)
    used = p > 0
    mass = beta[used, first:last + 1].sum(axis=1)
    return float(_region_terms(mass, p[used]))


def region_matrix(beta, p) -> np.ndarray:
    """``W[a, b]`` = contribution of the region spanning bins ``a..b``; ``-inf`` for ``a > b``."""
    beta = np.asarray(beta, dtype=float)
    p = np.asarray(p, dtype=float)
    used = p > 0
    beta, p = beta[used], p[used]
    n = beta.shape[1]
    cum = np.concatenate([np.zeros((beta.shape[0], 1)), np.cumsum(beta, axis=1)], axis=1)
    out = np.full((n, n), -np.inf)
    for a in range(n):
        mass = np.clip(cum[:, a + 1:] - cum[:, a:a + 1], 0.0, None)
        out[a, a:] = _region_terms(mass, p)
    return out


def _partition_value(W, bounds) -> float:
    return float(sum(W[bounds[i], bounds[i + 1] - 1] for i in range(len(bounds) - 1)))


def _result(bounds, edges, value, status="ok") -> QuantizerResult:
    bounds = np.asarray(bounds, dtype=int)
    t = np.concatenate([[0.0], edges[bounds[1:-1]], [np.inf]])
    return QuantizerResult(bounds, t, max(float(value), 0.0), status)


def _edges(beta, edges):
    if edges is None:
        # placeholder energies: bin index k marks the start of bin k
        n = np.asarray(beta).shape[1]
        return np.concatenate([[0.0], np.arange(1, n, dtype=float), [np.inf]])
    if isinstance(edges, ThresholdCandidates):
        return edges.bin_edges()
    return np.asarray(edges, dtype=float)


def _check(beta, n_regions):
    n = np.asarray(beta).shape[1]
    if n_regions < 1 or n < n_regions:
        raise InfeasibleError(f"cannot split {n} bins into {n_regions} regions")
    return n


def solve_dp(beta, p, n_regions: int, edges=None, W=None) -> QuantizerResult:
    """Exact grid-optimal contiguous partition by dynamic programming."""
    n = _check(beta, n_regions)
    W = region_matrix(beta, p) if W is None else W
    best = W[0].copy()  # best[j]: one region covering bins 0..j
    choice = []
    for _ in range(1, n_regions):
        # cand[i, j] = best[i] + W[i + 1, j]
        cand = best[:-1, None] + W[1:, :]
        arg = np.argmax(cand, axis=0)
        nxt = np.full(n, -np.inf)
        nxt[1:] = cand[arg[1:], np.arange(1, n)]
        choice.append(arg)
        best = nxt
    bounds = [n]
    j = n - 1
    for arg in reversed(choice):
        i = int(arg[j])
        bounds.append(i + 1)
        j = i
    bounds.append(0)
    bounds = bounds[::-1]
    return _result(bounds, _edges(beta, edges), best[n - 1])


def _smawk(rows, cols, value):
    """Row-wise leftmost argmax of a totally monotone matrix given by ``value(r, c)``."""
    result = {}

    def recurse(rows, cols):
        if not rows:
            return
        stack = []
        for c in cols:
            while stack:
                r = rows[len(stack) - 1]
                if value(r, stack[-1]) >= value(r, c):
                    break
                stack.pop()
            if len(stack) < len(rows):
                stack.append(c)
        cols = stack
        pos = {c: i for i, c in enumerate(cols)}
        recurse(rows[1::2], cols)
        start = 0
        for i in range(0, len(rows), 2):
            r = rows[i]
            stop = pos[result[rows[i + 1]]] if i + 1 < len(rows) else len(cols) - 1
            best, best_val = cols[start], value(r, cols[start])
            for idx in range(start + 1, stop + 1):
                v = value(r, cols[idx])
                if v > best_val:
                    best, best_val = cols[idx], v
            result[r] = best
            start = pos[best]

    recurse(list(rows), list(cols))
    return result


def is_monge(W, rtol: float = 1e-12) -> bool:
    """Adjacent quadrangle check ``W[a,b] + W[a+1,b+1] >= W[a,b+1] + W[a+1,b]`` over feasible cells."""
    n = W.shape[0]
    if n < 3:
        return True
    a = np.arange(n - 2)[:, None]
    b = np.arange(1, n - 1)[None, :]
    ok = a + 1 <= b
    aa, bb = np.broadcast_arrays(a, b)
    aa, bb = aa[ok], bb[ok]
    lhs = W[aa, bb] + W[aa + 1, bb + 1]
    rhs = W[aa, bb + 1] + W[aa + 1, bb]
    scale = rtol * (1 + np.abs(lhs) + np.abs(rhs))
    return bool(np.all(lhs >= rhs - scale))


def solve_smawk(beta, p, n_regions: int, edges=None, W=None) -> QuantizerResult:
    """Layered DP whose row maxima come from SMAWK.

    Requires the region matrix to satisfy the quadrangle inequality; the check is
    exhaustive over adjacent cells and a violation falls back to :func:`solve_dp`.
    """
    n = _check(beta, n_regions)
    W = region_matrix(beta, p) if W is None else W
    if not is_monge(W):
        log.warning("quadrangle inequality violated; falling back to plain DP")
        res = solve_dp(beta, p, n_regions, edges, W)
        return QuantizerResult(res.boundaries, res.thresholds, res.objective, "fallback")
    finite = W[np.isfinite(W)]
    best = W[0].copy()
    choice = []
    for k in range(1, n_regions):
        lo = k - 1  # previous layer covers at least k bins: i >= k - 1
        prev = best
        span = float(prev[lo:].max() - prev[lo:].min()) if n > lo else 0.0
        penalty = 10.0 * (1.0 + np.abs(finite).max() + span)

        def value(j, i, prev=prev, penalty=penalty):
            if i < j:
                return prev[i] + W[i + 1, j]
            return prev[i] - penalty * (i + 1 - j) ** 2

        rows = range(k, n)
        arg = _smawk(rows, range(lo, n - 1), value)
        nxt = np.full(n, -np.inf)
        argv = np.zeros(n, dtype=int)
        for j in rows:
            argv[j] = arg[j]
            nxt[j] = prev[arg[j]] + W[arg[j] + 1, j]
        choice.append(argv)
        best = nxt
    bounds = [n]
    j = n - 1
    for argv in reversed(choice):
        i = int(argv[j])
        bounds.append(i + 1)
        j = i
    bounds.append(0)
    return _result(bounds[::-1], _edges(beta, edges), best[n - 1])


def _region_value(beta, p, a, b, cache):
    key = (a, b)
    if key not in cache:
        cache[key] = float(_region_terms(beta[:, a:b + 1].sum(axis=1), p))
    return cache[key]


def repair_boundaries(bounds, n_bins: int) -> np.ndarray:
    """Force ``0 = s_0 < s_1 < ... < s_L = n_bins`` with the fewest moves."""
    s = np.asarray(bounds, dtype=int).copy()
    L = len(s) - 1
    s[0], s[-1] = 0, n_bins
    for i in range(1, L):
        s[i] = min(max(s[i], s[i - 1] + 1), n_bins - (L - i))
    return s


def solve_bisection(beta, p, n_regions: int, initial=None, edges=None,
                    max_sweeps: int = 100) -> QuantizerResult:
    """Cyclic coordinate ascent over single boundaries.

    Each boundary, with its neighbours held, is placed by bisection on the sign
    of the forward difference of the two-region value; the move is kept only if
    it improves the objective.  Stops when a full sweep moves nothing.
    """
    n = _check(beta, n_regions)
    beta = np.asarray(beta, dtype=float)
    p = np.asarray(p, dtype=float)
    used = p > 0
    b_used, p_used = beta[used], p[used]
    if initial is None:
        initial = np.round(np.linspace(0, n, n_regions + 1)).astype(int)
    s = repair_boundaries(initial, n)
    cache: dict = {}

    def pair(l, x):
        return (_region_value(b_used, p_used, s[l - 1], x - 1, cache)
                + _region_value(b_used, p_used, x, s[l + 1] - 1, cache))

    for _ in range(max_sweeps):
        moved = False
        for l in range(1, n_regions):
            lo, hi = s[l - 1] + 1, s[l + 1] - 1
            if lo >= hi:
                continue
            # first x in [lo, hi) whose forward difference is nonpositive
            a, b = lo, hi
            while a < b:
                mid = (a + b) // 2
                if pair(l, mid + 1) - pair(l, mid) > 0:
                    a = mid + 1
                else:
                    b = mid
            if pair(l, a) > pair(l, s[l]) + 1e-15:
                s[l] = a
                moved = True
        if not moved:
            break
    value = sum(_region_value(b_used, p_used, s[i], s[i + 1] - 1, cache) for i in range(n_regions))
    return _result(s, _edges(beta, edges), value)


def ml_thresholds(variances, n_samples: int, grid=None, strict: bool = True) -> np.ndarray:
    """Likelihood-crossing thresholds between consecutive ascending variances.

    With ``grid`` given, each threshold snaps to the nearest interior bin edge.
    Equal neighbours raise unless ``strict`` is False, in which case the
    threshold sits at the common mean energy ``N * var``.
    """
    v = np.asarray(variances, dtype=float)
    if np.any(np.diff(v) < 0):
        raise ValueError("variances must be ascending")
    lo, hi = v[:-1], v[1:]
    equal = hi <= lo
    if strict and np.any(equal):
        raise DegenerateHypothesisError("equal adjacent variances")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = n_samples * lo * hi / (hi - lo) * np.log(hi / lo)
    t = np.where(equal, n_samples * lo, t)
    if grid is not None:
        edges = grid.bin_edges() if isinstance(grid, ThresholdCandidates) else np.asarray(grid)
        inner = edges[1:-1]
        if len(inner):
            t = inner[np.argmin(np.abs(t[:, None] - inner[None, :]), axis=1)]
    return np.concatenate([[0.0], np.maximum.accumulate(t) if len(t) else t, [np.inf]])


def boundaries_from_thresholds(thresholds, edges) -> np.ndarray:
    """Nearest bin-boundary indices for a threshold vector (not repaired)."""
    edges = edges.bin_edges() if isinstance(edges, ThresholdCandidates) else np.asarray(edges)
    inner = np.asarray(thresholds, dtype=float)[1:-1]
    idx = np.searchsorted(edges, inner)
    idx = np.clip(idx, 1, len(edges) - 2)
    return np.concatenate([[0], idx, [len(edges) - 1]])


def brute_force_thresholds(beta, p, n_regions: int, edges=None) -> QuantizerResult:
    """Exhaustive search over all contiguous partitions (test oracle)."""
    n = _check(beta, n_regions)
    if math.comb(n - 1, n_regions - 1) > BRUTE_FORCE_CAP:
        raise InfeasibleError("too many partitions for brute force")
    beta = np.asarray(beta, dtype=float)
    p = np.asarray(p, dtype=float)
    used = p > 0
    b_used, p_used = beta[used], p[used]
    best_val, best = -np.inf, None
    for cut in itertools.combinations(range(1, n), n_regions - 1):
        bounds = (0,) + cut + (n,)
        val = sum(float(_region_terms(b_used[:, bounds[i]:bounds[i + 1]].sum(axis=1), p_used))
                  for i in range(n_regions))
        if val > best_val:
            best_val, best = val, bounds
    return _result(best, _edges(beta, edges), best_val)
