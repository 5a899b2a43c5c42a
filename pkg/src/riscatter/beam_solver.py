"""Transmit beamforming by projected gradient ascent on the weighted sum MI.

Gradients are Wirtinger derivatives with respect to ``conj(w)``: for a real
objective ``f(x + jy)`` the returned vector is ``(df/dx + j df/dy) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .detector import check_thresholds, receive_variance, transition_matrix
from .rates import backscatter_mi, primary_info, weighted_mi


@dataclass(frozen=True)
class PgaParams:
    initial_step: float | None = None  # None: sqrt(P) / |grad| at the start point
    alpha: float = 0.1
    beta: float = 0.5
    tolerance: float = 1e-6  # on |w_new - w_old| / sqrt(P)
    max_iterations: int = 200
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")


@dataclass
class BeamSolution:
    w: np.ndarray
    power: float
    trace: list = field(default_factory=list)  # (objective nats, accepted step)
    converged: bool = True

    @property
    def objective(self) -> float:
        return self.trace[-1][0]


def g_component(t, var, n_samples: int):
    """``t exp(-t/var) (-1 + sum_{n=1}^{N-1} (n - t/var)(t/var)^(n-1)/n!)``.

    The sum telescopes to ``-(t/var)^(N-1)/(N-1)!``, which is what gets
    evaluated (in the log domain).  Zero at ``t = 0`` and ``t = inf``.
    """
    t, var = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(var, dtype=float))
    x = t / var
    ok = (t > 0) & np.isfinite(t)
    xs = np.where(ok, x, 1.0)
    ts = np.where(ok, t, 1.0)
    logmag = np.log(ts) - xs + (n_samples - 1) * np.log(xs) - gammaln(n_samples)
    out = np.where(ok, -np.exp(logmag), 0.0)
    return float(out) if out.ndim == 0 else out


def g_component_series(t, var, n_samples: int) -> float:
    """Direct evaluation of the printed sum form (reference for tests)."""
    if t == 0 or np.isinf(t):
        return 0.0
    x = t / var
    s = -1.0
    fact = 1.0
    for n in range(1, n_samples):
        fact *= n
        s += (n - x) * x ** (n - 1) / fact
    return t * np.exp(-x) * s


def q_gradient(h, w, var, n_samples: int, t_lo, t_hi) -> np.ndarray:
    """Gradient of one transition probability with respect to ``conj(w)``."""
    h = np.asarray(h, dtype=complex)
    amp = h @ np.asarray(w, dtype=complex)
    diff = g_component(t_hi, var, n_samples) - g_component(t_lo, var, n_samples)
    return np.conj(h) * amp / var ** 2 * diff


def objective(w, joint, table, thresholds, rho, noise_var, n_samples) -> float:
    """Weighted sum MI for the given beamformer (nats)."""
    var = receive_variance(table, w, noise_var)
    ip = float(np.dot(joint, primary_info(table, w, noise_var)))
    ib = backscatter_mi(transition_matrix(var, thresholds, n_samples), joint) if rho < 1 else 0.0
    return weighted_mi(rho, ip, ib)


def mi_gradient(w, joint, table, thresholds, rho, noise_var, n_samples) -> np.ndarray:
    """Gradient of the weighted sum MI with respect to ``conj(w)``."""
    t = check_thresholds(thresholds)
    table = np.asarray(table, dtype=complex)
    p = np.asarray(joint, dtype=float)
    amp = table @ np.asarray(w, dtype=complex)
    var = np.abs(amp) ** 2 + noise_var
    hhw = np.conj(table) * amp[:, None]  # (L, Q)
    grad = rho * (p / var) @ hhw
    if rho == 1:
        return grad
    q = transition_matrix(var, t, n_samples)  # (L, R)
    g = g_component(t[None, :], var[:, None], n_samples)
    dg = g[:, 1:] - g[:, :-1]  # (L, R); dQ[m, l] = hhw[m] / var[m]^2 * dg[m, l]
    r = p @ q
    pos = (q > 0) & (r[None, :] > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(pos, np.log(q / np.where(r > 0, r, 1.0)[None, :]) + 1.0, 0.0)
    scale = 1.0 / var ** 2
    # first term: sum_m p_m sum_l coef_ml dQ_ml
    first = (p * scale * (coef * dg).sum(axis=1)) @ hhw
    # second term: sum_m p_m sum_l Q_ml S_l / r_l with S_l = sum_m' p_m' dQ_m'l
    s = ((p * scale)[:, None] * dg).T @ hhw  # (R, Q)
    ratio = np.where(r > 0, (p @ q) / np.where(r > 0, r, 1.0), 0.0)
    second = ratio @ s
    return grad + (1 - rho) * (first - second)


def project_power(w, power: float) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if power <= 0:
        raise ValueError("power budget must be positive")
    root = np.sqrt(power)
    return root * w / max(root, float(np.linalg.norm(w)))


def mrt(h, power: float) -> np.ndarray:
    """Maximum-ratio beamformer for a row-form channel: ``h @ w = sqrt(P) |h|``."""
    h = np.asarray(h, dtype=complex)
    norm = float(np.linalg.norm(h))
    if norm == 0:
        raise ValueError("cannot steer towards a zero channel")
    return np.sqrt(power) * np.conj(h) / norm


def ergodic_mrt(joint, table, power: float) -> np.ndarray:
    return mrt(np.asarray(joint, dtype=float) @ np.asarray(table, dtype=complex), power)


def sum_cascade_mrt(h_c, power: float) -> np.ndarray:
    return mrt(np.asarray(h_c, dtype=complex).sum(axis=0), power)


def solve_beamformer(table, joint, thresholds, rho, noise_var, n_samples, power, w0,
                     params: PgaParams = PgaParams()) -> BeamSolution:
    """Projected gradient ascent with backtracking line search.

    A step is accepted once ``I_new >= I_old + alpha Re<grad, w_new - w>``, the
    projected form of ``I_old + alpha g |grad|^2``; when no step passes within
    ``max_backtracks`` shrinks the current point is returned as converged.
    """
    args = (joint, table, thresholds, rho, noise_var, n_samples)
    w = project_power(w0, power)
    cur = objective(w, *args)
    sol = BeamSolution(w, power, [(cur, 0.0)], converged=False)
    grad = mi_gradient(w, *args)
    gnorm2 = float(np.vdot(grad, grad).real)
    step0 = params.initial_step
    if step0 is None:
        step0 = np.sqrt(power) / np.sqrt(gnorm2) if gnorm2 > 0 else 1.0
    tol = params.tolerance * np.sqrt(power)
    for _ in range(params.max_iterations):
        if gnorm2 == 0:
            sol.converged = True
            break
        step = step0
        for _ in range(params.max_backtracks):
            cand = project_power(w + step * grad, power)
            val = objective(cand, *args)
            # equals alpha * step * |grad|^2 whenever the projection is inactive
            if val >= cur + params.alpha * float(np.vdot(grad, cand - w).real):
                break
            step *= params.beta
        else:
            sol.converged = True
            break
        moved = float(np.linalg.norm(cand - w))
        w, cur = cand, val
        sol.trace.append((cur, step))
        step0 = step / params.beta  # next search starts one expansion above the last step
        if moved <= tol:
            sol.converged = True
            break
        grad = mi_gradient(w, *args)
        gnorm2 = float(np.vdot(grad, grad).real)
    sol.w = w
    return sol
