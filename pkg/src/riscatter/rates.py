"""Mutual-information bookkeeping.  Everything is in nats; convert with
:func:`to_bits` only when reporting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = np.log(2.0)


def to_bits(nats):
    return np.asarray(nats) / LN2 if np.ndim(nats) else float(nats) / LN2


def xlogx_ratio(q, r):
    """Elementwise ``q * ln(q / r)`` with ``0 * ln(0 / r) = 0`` for any ``r >= 0``.

    A positive ``q`` against ``r = 0`` has no finite value and raises.
    """
    q, r = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(r, dtype=float))
    pos = q > 0
    if np.any(pos & ~(r > 0)):
        raise ValueError("positive mass against zero reference probability")
    out = np.zeros(q.shape)
    out[pos] = q[pos] * np.log(q[pos] / r[pos])
    return out


def output_distribution(q, p):
    return np.asarray(p, dtype=float) @ np.asarray(q, dtype=float)


def row_self_info(q):
    """``sum_l q ln q`` of every transition row (0 ln 0 = 0)."""
    q = np.asarray(q, dtype=float)
    return np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0).sum(axis=1)


def backscatter_info(q, p, row=None, self_info=None):
    """Divergence of each transition row from the output distribution.

    Returns the value for ``row`` only when given, else one value per input.
    ``self_info`` may carry a precomputed :func:`row_self_info` of ``q``.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    r = output_distribution(q, p)
    if row is not None:
        return float(xlogx_ratio(q[row], r).sum())
    hole = (q > 0) & ~(r > 0)
    if self_info is None:
        self_info = row_self_info(q)
    logr = np.log(np.where(r > 0, r, 1.0))
    out = self_info - q @ logr
    if np.any(hole):
        # r >= p_k q_kl, so a hole met by a used input is product underflow;
        # bound ln(q / r) by -ln p_k there
        neg_logp = -np.log(np.where(p > 0, p, 1.0))
        out = out + np.where(hole, q, 0.0).sum(axis=1) * neg_logp
        # an input never used by p that puts mass where r = 0 has value +inf
        out = np.where(np.any(hole, axis=1) & ~(p > 0), np.inf, out)
    return out


def backscatter_mi(q, p) -> float:
    p = np.asarray(p, dtype=float)
    used = p > 0
    if used.sum() <= 1:
        return 0.0  # a deterministic input carries no information
    info = backscatter_info(q, p)
    return float(max(np.dot(p[used], info[used]), 0.0))


def primary_info(h, w, noise_var):
    """``ln(1 + |h @ w|**2 / noise_var)`` per row-form channel."""
    snr = np.abs(np.asarray(h, dtype=complex) @ np.asarray(w, dtype=complex)) ** 2 / noise_var
    out = np.log1p(snr)
    return float(out) if np.ndim(out) == 0 else out


def primary_mi(p, table, w, noise_var) -> float:
    return float(np.dot(np.asarray(p, dtype=float), primary_info(table, w, noise_var)))


def weighted_mi(rho, primary, backscatter):
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    return rho * primary + (1 - rho) * backscatter


weighted_info = weighted_mi  # the per-tuple form is the same affine combination


def marginal_info(dists, info_per_tuple, nodes=None) -> list[np.ndarray]:
    """Weighted marginal information of every state of every node.

    ``info_per_tuple`` follows the tuple enumeration; node ``k``'s entry is the
    expectation over the other nodes' product distribution.  ``nodes`` limits
    the output to the listed node indices.
    """
    dists = [np.asarray(p, dtype=float) for p in dists]
    n_nodes = len(dists)
    arr = np.asarray(info_per_tuple, dtype=float).reshape(tuple(len(p) for p in dists))
    out = []
    for k in (range(n_nodes) if nodes is None else nodes):
        others = np.ones(1)
        for j, p in enumerate(dists):
            if j != k:
                others = np.multiply.outer(others, p).ravel()
        out.append(np.moveaxis(arr, k, 0).reshape(len(dists[k]), -1) @ others)
    return out


@dataclass(frozen=True)
class InfoBreakdown:
    rho: float
    primary_per_tuple: np.ndarray
    backscatter_per_tuple: np.ndarray
    primary: float
    backscatter: float

    @property
    def weighted_per_tuple(self) -> np.ndarray:
        return weighted_info(self.rho, self.primary_per_tuple, self.backscatter_per_tuple)

    @property
    def total(self) -> float:
        return weighted_mi(self.rho, self.primary, self.backscatter)


def info_breakdown(rho, joint, q, table, w, noise_var) -> InfoBreakdown:
    joint = np.asarray(joint, dtype=float)
    ip = primary_info(table, w, noise_var)
    ib = backscatter_info(q, joint)
    # unreachable rows carry no weight; keep them finite for marginal sums
    ib = np.where(np.isfinite(ib), ib, 0.0)
    return InfoBreakdown(rho, np.atleast_1d(ip), ib, float(np.dot(joint, ip)),
                         backscatter_mi(q, joint))
