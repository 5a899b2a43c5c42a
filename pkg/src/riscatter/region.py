"""Block coordinate descent over (input distribution, beamformer, thresholds),
the rho sweep that traces the primary/backscatter rate region, and the
benchmark schemes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import beam_solver as bs
from . import input_solver as ins
from . import threshold_solver as ts
from .channel import ChannelDraw
from .config import ExperimentConfig
from .detector import candidate_grid, hypothesis_order, receive_variance, transition_matrix
from .node import build_constellation, composite_table, joint_distribution, marginalize
from .rates import backscatter_mi, primary_info, primary_mi

log = logging.getLogger(__name__)


@dataclass
class BcdState:
    dists: list
    joint: np.ndarray
    w: np.ndarray
    thresholds: np.ndarray
    order: np.ndarray  # tuple indices by ascending receive variance
    primary: float = 0.0
    backscatter: float = 0.0
    objective: float = 0.0
    iterations: int = 0
    converged: bool = False
    trace: list = field(default_factory=list)  # weighted MI after each outer iteration
    input_traces: list = field(default_factory=list)
    beam_traces: list = field(default_factory=list)


@dataclass
class RegionPoint:
    rho: float
    primary: float  # nats per channel use
    backscatter: float  # nats per backscatter block
    backscatter_per_pb: float  # nats per primary block
    state: BcdState


@dataclass
class RegionResult:
    points: list
    benchmarks: dict

    @property
    def rhos(self):
        return [pt.rho for pt in self.points]


def system_table(channels: ChannelDraw, cfg: ExperimentConfig) -> np.ndarray:
    const = build_constellation(cfg.order, cfg.amplitude)
    return composite_table(channels.h_d, channels.h_c, const)


def _initial_beam(channels: ChannelDraw, power: float) -> np.ndarray:
    cascade = channels.h_c.sum(axis=0) if channels.n_nodes else np.zeros(channels.n_antennas)
    if np.linalg.norm(cascade) > 0:
        return bs.mrt(cascade, power)
    if np.linalg.norm(channels.h_d) > 0:
        return bs.mrt(channels.h_d, power)
    return np.full(channels.n_antennas, np.sqrt(power / channels.n_antennas), dtype=complex)


def threshold_block(table, joint, w, cfg: ExperimentConfig, current=None, scheme=None):
    """Re-sort hypotheses, rebuild the candidate grid and re-solve the thresholds.

    For the optimizing schemes the current thresholds are kept whenever the new
    ones would lower the backscatter MI (grids move with the beamformer).
    """
    scheme = scheme or cfg.threshold_scheme
    n = cfg.spreading
    L = len(table)
    var = receive_variance(table, w, cfg.noise_var)
    order = hypothesis_order(var)
    if L == 1:
        return np.array([0.0, np.inf]), order
    if scheme == "ml":
        return ts.ml_thresholds(var[order], n, strict=False), order
    grid = candidate_grid(var.min(), var.max(), n, cfg.bits, cfg.confidence)
    if grid.degenerate or grid.n_bins < L:
        thresholds = ts.ml_thresholds(var[order], n, strict=False)
    else:
        beta = ts.bin_masses(var, grid, n)
        if scheme == "dp":
            res = ts.solve_dp(beta, joint, L, grid)
        elif scheme == "smawk":
            res = ts.solve_smawk(beta, joint, L, grid)
        else:
            start = ts.boundaries_from_thresholds(ts.ml_thresholds(var[order], n, strict=False),
                                                  grid)
            res = ts.solve_bisection(beta, joint, L, start, grid)
        thresholds = res.thresholds
    if current is not None:
        old = backscatter_mi(transition_matrix(var, current, n), joint)
        new = backscatter_mi(transition_matrix(var, thresholds, n), joint)
        if new < old:
            thresholds = current
    return thresholds, order


def _evaluate(state: BcdState, table, cfg: ExperimentConfig, rho: float):
    var = receive_variance(table, state.w, cfg.noise_var)
    q = transition_matrix(var, state.thresholds, cfg.spreading)
    state.primary = primary_mi(state.joint, table, state.w, cfg.noise_var)
    state.backscatter = backscatter_mi(q, state.joint)
    state.objective = rho * state.primary + (1 - rho) * state.backscatter
    return q


def _input_block(state, table, cfg, rho, q):
    prim = primary_info(table, state.w, cfg.noise_var)
    K, M = cfg.n_nodes, cfg.order
    scheme = cfg.input_scheme
    if scheme == "equiprobable" or K == 0:
        return
    current = rho * float(np.dot(state.joint, prim)) + (1 - rho) * backscatter_mi(q, state.joint)
    # warm starts are floored away from zero, so keep the incumbent unless beaten
    if scheme == "kkt":
        sol = ins.solve_input_distribution(q, prim, rho, K, M, cfg.input_params, state.dists)
        state.input_traces.append(sol.trace)
        if max(t[2] for t in sol.trace) >= current:
            state.dists, state.joint = sol.dists, sol.joint
    elif scheme == "cooperative":
        sol = ins.cooperative_solve(q, prim, rho, cfg.input_params, state.joint)
        state.input_traces.append(sol.trace)
        if max(t[2] for t in sol.trace) >= current:
            state.joint = sol.joint
            state.dists = marginalize(sol.joint, K, M)
    else:
        p, val = ins.exhaustive_search(q, prim, rho, cfg.input_params.exhaust_resolution)
        if val > current:
            state.dists, state.joint = [p], p.copy()


def _beam_block(state, table, cfg, rho, channels):
    if cfg.beam_scheme == "ergodic_mrt":
        h = state.joint @ table
        state.w = bs.mrt(h, cfg.power) if np.linalg.norm(h) > 0 else state.w
        return
    if cfg.beam_scheme == "direct_mrt":
        state.w = _initial_beam(ChannelDraw(channels.h_d, channels.h_f[:0], channels.h_b[:0],
                                            channels.h_c[:0]), cfg.power)
        return
    sol = bs.solve_beamformer(table, state.joint, state.thresholds, rho, cfg.noise_var,
                              cfg.spreading, cfg.power, state.w, cfg.pga_params)
    state.w = sol.w
    state.beam_traces.append(sol.trace)


def ris_optimum(table, power: float, noise_var: float):
    """Exhaustive best deterministic tuple with MRT to its composite channel.

    Returns ``(tuple index, w, primary rate in nats)``.
    """
    gains = np.linalg.norm(np.asarray(table), axis=1)
    best = int(np.argmax(gains))
    if gains[best] == 0:
        w = np.full(table.shape[1], np.sqrt(power / table.shape[1]), dtype=complex)
        return best, w, 0.0
    return best, bs.mrt(table[best], power), float(np.log1p(power * gains[best] ** 2 / noise_var))


def ris_alternating(table, power: float, noise_var: float, w0, max_iterations: int = 100):
    """Alternate best-tuple selection and MRT until the tuple stops changing."""
    w = bs.project_power(w0, power)
    best = -1
    for _ in range(max_iterations):
        nxt = int(np.argmax(np.abs(table @ w)))
        if nxt == best:
            break
        best = nxt
        w = bs.mrt(table[best], power)
    return best, w, float(primary_info(table[best], w, noise_var))


def bcd_solve(channels: ChannelDraw, cfg: ExperimentConfig, rho: float,
              warm: BcdState | None = None, table=None) -> BcdState:
    """Weighted-sum maximization at one rho by cycling the three blocks."""
    table = system_table(channels, cfg) if table is None else table
    K, M = cfg.n_nodes, cfg.order
    if rho >= 1:
        idx, w, _ = ris_optimum(table, cfg.power, cfg.noise_var)
        dists = ins.solve_degenerate_rho1(table, w, cfg.noise_var, K, M)
        if K == 0:
            dists = []
        joint = joint_distribution(dists) if K else np.ones(1)
        t, order = threshold_block(table, joint, w, cfg)
        state = BcdState(dists, joint, w, t, order, iterations=1, converged=True)
        _evaluate(state, table, cfg, 1.0)
        state.trace.append(state.objective)
        return state

    if warm is None:
        dists = [np.full(M, 1.0 / M) for _ in range(K)]
        w = _initial_beam(channels, cfg.power)
        if cfg.beam_scheme == "direct_mrt":
            w = _initial_beam(ChannelDraw(channels.h_d, channels.h_f[:0], channels.h_b[:0],
                                          channels.h_c[:0]), cfg.power)
        joint = joint_distribution(dists) if K else np.ones(1)
        t, order = threshold_block(table, joint, w, cfg)
    else:
        dists = [np.asarray(p, dtype=float).copy() for p in warm.dists]
        joint = warm.joint.copy()
        w, t, order = warm.w.copy(), warm.thresholds.copy(), warm.order.copy()
    state = BcdState(dists, joint, w, t, order)
    q = _evaluate(state, table, cfg, rho)
    state.trace.append(state.objective)
    for it in range(cfg.bcd_max_iterations):
        prev = state.objective
        _input_block(state, table, cfg, rho, q)
        _beam_block(state, table, cfg, rho, channels)
        current = None if cfg.threshold_scheme == "ml" else state.thresholds
        state.thresholds, state.order = threshold_block(table, state.joint, state.w, cfg, current)
        q = _evaluate(state, table, cfg, rho)
        state.trace.append(state.objective)
        state.iterations = it + 1
        if state.objective - prev <= cfg.bcd_tolerance:
            state.converged = True
            break
    return state


def evaluate_on(channels: ChannelDraw, cfg: ExperimentConfig, state: BcdState):
    """Rates achieved by a solved state on (possibly different, true) channels."""
    table = system_table(channels, cfg)
    var = receive_variance(table, state.w, cfg.noise_var)
    q = transition_matrix(var, state.thresholds, cfg.spreading)
    return primary_mi(state.joint, table, state.w, cfg.noise_var), backscatter_mi(q, state.joint)


def rate_region(channels: ChannelDraw, cfg: ExperimentConfig, rhos=None,
                design_channels: ChannelDraw | None = None) -> RegionResult:
    """Boundary points for ascending rho, each warm-started from the previous one.

    ``design_channels`` (an imperfect estimate) drives the optimization while
    the reported rates are evaluated on ``channels``.
    """
    rhos = cfg.rhos if rhos is None else tuple(rhos)
    if not rhos or rhos[0] != 0 or any(b < a for a, b in zip(rhos, rhos[1:])):
        raise ValueError("rho grid must be ascending and start at 0")
    design = design_channels or channels
    table = system_table(design, cfg)
    points = []
    warm = None
    for rho in rhos:
        state = bcd_solve(design, cfg, rho, warm, table)
        if design_channels is None:
            ip, ib = state.primary, state.backscatter
        else:
            ip, ib = evaluate_on(channels, cfg, state)
        points.append(RegionPoint(rho, ip, ib, ib / cfg.spreading, state))
        if rho < 1:
            warm = state
    return RegionResult(points, benchmarks(channels, cfg))


# --- benchmark schemes -----------------------------------------------------

def benchmark_legacy(channels: ChannelDraw, power: float, noise_var: float) -> float:
    return float(np.log1p(power * np.linalg.norm(channels.h_d) ** 2 / noise_var))


def benchmark_bbc(cfg: ExperimentConfig, channels: ChannelDraw | None = None,
                  finite: bool = False):
    """``(0, K ln M)``; with ``finite`` the detector-pipeline MI at uniform inputs."""
    limit = cfg.n_nodes * np.log(cfg.order)
    if not finite or channels is None or cfg.n_nodes == 0:
        return 0.0, float(limit)
    table = system_table(channels, cfg)
    joint = np.full(len(table), 1.0 / len(table))
    w = _initial_beam(channels, cfg.power)
    t, _ = threshold_block(table, joint, w, cfg, scheme="dp")
    q = transition_matrix(receive_variance(table, w, cfg.noise_var), t, cfg.spreading)
    return 0.0, backscatter_mi(q, joint)


def ambc_interference(channels: ChannelDraw, w, amplitude) -> float:
    amp = np.broadcast_to(np.asarray(amplitude, dtype=float), (channels.n_nodes,))
    return float(np.sum(np.abs(amp * (channels.h_c @ w)) ** 2))


def benchmark_ambc(channels: ChannelDraw, cfg: ExperimentConfig, w=None):
    """Primary treats the scattered signal as interference; backscatter uses
    uniform inputs and likelihood-crossing thresholds."""
    if w is None:
        w = _initial_beam(ChannelDraw(channels.h_d, channels.h_f[:0], channels.h_b[:0],
                                      channels.h_c[:0]), cfg.power)
    interference = ambc_interference(channels, w, cfg.amplitude)
    primary = float(np.log1p(np.abs(channels.h_d @ w) ** 2 / (interference + cfg.noise_var)))
    if cfg.n_nodes == 0:
        return primary, 0.0
    table = system_table(channels, cfg)
    joint = np.full(len(table), 1.0 / len(table))
    var = receive_variance(table, w, cfg.noise_var)
    order = hypothesis_order(var)
    t = ts.ml_thresholds(var[order], cfg.spreading, strict=False)
    return primary, backscatter_mi(transition_matrix(var, t, cfg.spreading), joint)


def benchmark_sr(channels: ChannelDraw, cfg: ExperimentConfig, w=None):
    if w is None:
        w = _initial_beam(ChannelDraw(channels.h_d, channels.h_f[:0], channels.h_b[:0],
                                      channels.h_c[:0]), cfg.power)
    table = system_table(channels, cfg)
    joint = np.full(len(table), 1.0 / len(table))
    return primary_mi(joint, table, w, cfg.noise_var), float(cfg.n_nodes * np.log(cfg.order))


def benchmark_ris(channels: ChannelDraw, cfg: ExperimentConfig) -> float:
    return ris_optimum(system_table(channels, cfg), cfg.power, cfg.noise_var)[2]


def benchmarks(channels: ChannelDraw, cfg: ExperimentConfig) -> dict:
    """All benchmark points as ``name -> (primary nats, backscatter nats/BB)``."""
    return {
        "legacy": (benchmark_legacy(channels, cfg.power, cfg.noise_var), 0.0),
        "bbc": benchmark_bbc(cfg),
        "ambc": benchmark_ambc(channels, cfg),
        "sr": benchmark_sr(channels, cfg),
        "ris": (benchmark_ris(channels, cfg), 0.0),
    }
