"""Input-distribution design for a fixed beamformer and fixed thresholds.

The channel seen by the inputs is summarized by two arrays over the tuple
enumeration: ``primary`` (primary information of every tuple, nats) and the
transition matrix ``q`` (tuple -> decision region).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .node import enumerate_tuples, joint_distribution
from .rates import (backscatter_info, marginal_info, primary_info, row_self_info, weighted_info,
                    weighted_mi)

SUPPORT_THRESHOLD = 1e-8
LATTICE_CAP = 5 * 10 ** 6


@dataclass(frozen=True)
class InputSolverParams:
    tolerance: float = 1e-7  # on the KKT residual
    stall_tolerance: float = 1e-15  # on the per-sweep gain
    max_iterations: int = 20000
    exponent_mode: str = "blahut_arimoto"  # or "paper_printed"
    exhaust_resolution: float = 1e-2

    def __post_init__(self):
        if self.tolerance <= 0 or self.stall_tolerance < 0:
            raise ValueError("tolerances must be positive")
        if self.exponent_mode not in ("blahut_arimoto", "paper_printed"):
            raise ValueError(f"unknown exponent mode {self.exponent_mode!r}")
        if not 0 < self.exhaust_resolution < 1:
            raise ValueError("exhaustive resolution must lie in (0, 1)")


@dataclass
class InputSolution:
    dists: list
    joint: np.ndarray
    trace: list = field(default_factory=list)  # (I_P, I_B, I) per iteration, nats
    converged: bool = True

    @property
    def objective(self) -> float:
        return self.trace[-1][2]


def exponent(rho: float, mode: str) -> float:
    if rho >= 1:
        raise ValueError("rho = 1 has no finite update; use solve_degenerate_rho1")
    return rho / (1 - rho) if mode == "paper_printed" else 1 / (1 - rho)


def evaluate(dists, q, primary, rho, self_info=None):
    """``(I_P, I_B, I, per-tuple weighted info)`` for product-form inputs."""
    joint = joint_distribution(dists)
    ib_tuple = backscatter_info(q, joint, self_info=self_info)
    ib_tuple = np.where(np.isfinite(ib_tuple), ib_tuple, 0.0)
    ip = float(np.dot(joint, primary))
    used = joint > 0
    ib = max(float(np.dot(joint[used], ib_tuple[used])), 0.0)
    return ip, ib, weighted_mi(rho, ip, ib), weighted_info(rho, primary, ib_tuple)


def kkt_update(dists, q, primary, rho: float, mode: str = "blahut_arimoto",
               self_info=None) -> list:
    """One sweep of the multiplicative update, node by node.

    Node ``k`` sees nodes ``0..k-1`` already updated in this sweep.
    """
    eta = exponent(rho, mode)
    if self_info is None:
        self_info = row_self_info(q)
    dists = [np.asarray(p, dtype=float).copy() for p in dists]
    for k in range(len(dists)):
        info = evaluate(dists, q, primary, rho, self_info)[3]
        marg = marginal_info(dists, info, [k])[0]
        logw = np.log(dists[k]) + eta * marg
        w = np.exp(logw - logw.max())
        dists[k] = w / w.sum()
    return dists


def kkt_residual(dists, marginals, total: float, support: float = SUPPORT_THRESHOLD) -> float:
    """Largest violation of the equal-marginal-information optimality condition."""
    worst = 0.0
    for p, m in zip(dists, marginals):
        gap = np.asarray(m) - total
        on = np.asarray(p) > support
        if np.any(on):
            worst = max(worst, float(np.abs(gap[on]).max()))
        if np.any(~on):
            worst = max(worst, float(np.clip(gap[~on], 0, None).max()))
    return worst


def residual_of(dists, q, primary, rho) -> float:
    _, _, total, info = evaluate(dists, q, primary, rho)
    return kkt_residual(dists, marginal_info(dists, info), total)


def _positive(p, floor=1e-12):
    p = np.maximum(np.asarray(p, dtype=float), floor)
    return p / p.sum()


def solve_input_distribution(q, primary, rho: float, n_nodes: int, order: int,
                             params: InputSolverParams = InputSolverParams(),
                             init=None) -> InputSolution:
    """Iterate :func:`kkt_update` until the KKT residual reaches the tolerance
    (or the per-sweep gain stalls).

    ``init`` defaults to uniform; a warm start is floored at 1e-12 to stay
    strictly positive.
    """
    if init is None:
        dists = [np.full(order, 1.0 / order) for _ in range(n_nodes)]
    else:
        dists = [_positive(p) for p in init]
    self_info = row_self_info(q)
    ip, ib, total, info = evaluate(dists, q, primary, rho, self_info)
    sol = InputSolution(dists, joint_distribution(dists), [(ip, ib, total)], converged=False)
    best = (total, dists)
    for _ in range(params.max_iterations):
        if kkt_residual(dists, marginal_info(dists, info), total) <= params.tolerance:
            sol.converged = True
            break
        dists = kkt_update(dists, q, primary, rho, params.exponent_mode, self_info)
        ip, ib, new, info = evaluate(dists, q, primary, rho, self_info)
        sol.trace.append((ip, ib, new))
        if new > best[0]:
            best = (new, dists)
        if new - total <= params.stall_tolerance:
            sol.converged = True
            break
        total = new
    sol.dists = best[1]
    sol.joint = joint_distribution(best[1])
    return sol


def cooperative_solve(q, primary, rho: float, params: InputSolverParams = InputSolverParams(),
                      init=None) -> InputSolution:
    """Joint encoding: one augmented node whose states are all the tuples."""
    n = np.asarray(q).shape[0]
    enumerate_tuples(1, n)  # enforces the tuple cap
    return solve_input_distribution(q, primary, rho, 1, n, params,
                                    None if init is None else [np.ravel(init)])


def _lattice(order: int, steps: int):
    count = math.comb(steps + order - 1, order - 1)
    if count > LATTICE_CAP:
        raise ValueError(f"{count} lattice points exceed the cap")
    pts = np.empty((count, order))
    for i, bars in enumerate(itertools.combinations(range(steps + order - 1), order - 1)):
        edges = (-1,) + bars + (steps + order - 1,)
        pts[i] = np.diff(edges) - 1
    return pts / steps


def exhaustive_search(q, primary, rho: float, resolution: float = 1e-2):
    """Best single-node distribution on the simplex lattice of spacing ``resolution``.

    Returns ``(p, weighted MI)``.
    """
    q = np.asarray(q, dtype=float)
    order = q.shape[0]
    steps = int(round(1 / resolution))
    pts = _lattice(order, steps)
    with np.errstate(divide="ignore", invalid="ignore"):
        neg_ent = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0).sum(axis=1)
        r = pts @ q
        out_ent = -np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0).sum(axis=1)
    ib = pts @ neg_ent + out_ent
    val = rho * (pts @ np.asarray(primary, dtype=float)) + (1 - rho) * ib
    i = int(np.argmax(val))
    return pts[i], float(val[i])


def solve_degenerate_rho1(table, w, noise_var, n_nodes: int, order: int):
    """Point masses on the tuple with the largest primary information (ties: lowest index)."""
    best = int(np.argmax(primary_info(table, w, noise_var)))
    tup = enumerate_tuples(n_nodes, order)[best]
    return [np.eye(order)[m] for m in tup]
