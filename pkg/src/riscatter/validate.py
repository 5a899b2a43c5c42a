"""Oracle suite: each check compares a solver against an independent reference
(quadrature, finite differences, enumeration, closed forms)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import beam_solver as bs
from . import input_solver as ins
from . import threshold_solver as ts
from .detector import candidate_grid, gamma_energy_pdf, reg_inc_gamma, transition_matrix
from .rates import backscatter_mi

Z_CHANNEL = np.array([[1.0, 0.0], [0.5, 0.5]])
Z_CAPACITY = math.log(1.25)  # nats, attained at p = (0.6, 0.4)


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


def _check(name, value, tol, detail="", passed=None):
    ok = value <= tol if passed is None else passed
    return Check(name, float(value), float(tol), bool(ok), detail)


def check_gamma_kernel(n_pairs=100, orders=(1, 5, 20), seed=0, tol=1e-10) -> Check:
    """Finite-series incomplete Gamma against adaptive quadrature of the density."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in orders:
        for _ in range(n_pairs):
            a, b = np.sort(rng.uniform(0, 3 * n + 5, 2))
            # split at the mode so quad sees the peak
            pts = [x for x in (max(n - 1, 0),) if a < x < b]
            ref = quad(gamma_energy_pdf, a, b, args=(n, 1.0), points=pts or None,
                       epsabs=1e-14, epsrel=1e-13, limit=200)[0]
            worst = max(worst, abs(reg_inc_gamma(n, a, b) - ref))
    return _check("gamma kernel vs quadrature", worst, tol,
                  f"{n_pairs} pairs x N in {tuple(orders)}")


def random_beam_instance(rng, q_max=4, k_max=2, m_max=4, n_max=20):
    q = int(rng.integers(1, q_max + 1))
    k = int(rng.integers(1, k_max + 1))
    m = int(rng.integers(2, m_max + 1))
    n = int(rng.integers(1, n_max + 1))
    hyp = m ** k
    table = (rng.standard_normal((hyp, q)) + 1j * rng.standard_normal((hyp, q))) / np.sqrt(2)
    w = rng.standard_normal(q) + 1j * rng.standard_normal(q)
    joint = rng.dirichlet(np.ones(hyp))
    noise = 0.5
    var = np.abs(table @ w) ** 2 + noise
    # thresholds strictly inside the energy range so every gradient term is live
    inner = np.sort(rng.uniform(0.3, 2.0, hyp - 1)) * n * np.median(var)
    thresholds = np.concatenate([[0.0], inner, [np.inf]])
    rho = float(rng.uniform(0, 1))
    return w, (joint, table, thresholds, rho, noise, n)


def fd_gradient(f, w, step=1e-6):
    """Central differences packed as the conj(w) Wirtinger gradient (df/dx + j df/dy) / 2."""
    g = np.zeros(len(w), dtype=complex)
    h = step * max(1.0, float(np.linalg.norm(w)))
    for i in range(len(w)):
        e = np.zeros(len(w), dtype=complex)
        e[i] = h
        dx = (f(w + e) - f(w - e)) / (2 * h)
        dy = (f(w + 1j * e) - f(w - 1j * e)) / (2 * h)
        g[i] = (dx + 1j * dy) / 2
    return g


def check_gradient(n_instances=10, seed=1, tol=1e-5, gradient=None) -> Check:
    """Analytic beamformer gradient against central finite differences.

    ``gradient`` replaces the analytic routine (used for mutation testing).
    """
    gradient = gradient or bs.mi_gradient
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        w, args = random_beam_instance(rng)
        ref = fd_gradient(lambda x: bs.objective(x, *args), w)
        got = gradient(w, *args)
        worst = max(worst, float(np.linalg.norm(got - ref) / max(np.linalg.norm(ref), 1e-300)))
    return _check("beam gradient vs finite differences", worst, tol,
                  f"{n_instances} instances, relative 2-norm error")


def check_z_channel(tol_rate=1e-4, tol_p=1e-3, tol_residual=1e-6) -> list:
    sol = ins.solve_input_distribution(Z_CHANNEL, np.zeros(2), 0.0, 1, 2)
    p = sol.dists[0]
    rate = backscatter_mi(Z_CHANNEL, p)
    res = ins.residual_of(sol.dists, Z_CHANNEL, np.zeros(2), 0.0)
    return [
        _check("Z-channel capacity", abs(rate - Z_CAPACITY), tol_rate, f"I_B = {rate:.6f} nats"),
        _check("Z-channel input", float(np.abs(p - [0.6, 0.4]).max()), tol_p,
               f"p = ({p[0]:.5f}, {p[1]:.5f})"),
        _check("Z-channel KKT residual", res, tol_residual),
    ]


def lattice_bound(q, primary, rho, resolution) -> float:
    """Worst-case loss of the best simplex-lattice point against the continuous optimum.

    Rounding the optimum moves at most ``delta = (M - 1) * resolution`` of l1 mass; the
    linear part then moves by ``delta/2 * spread`` and the output entropy by a
    continuity (Fannes-type) bound.
    """
    q = np.asarray(q, dtype=float)
    m, n_out = q.shape
    delta = min((m - 1) * resolution, 2.0)
    neg_ent = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0).sum(axis=1)
    c = rho * np.asarray(primary, dtype=float) + (1 - rho) * neg_ent
    half = delta / 2
    h2 = 0.0 if half in (0, 1) else -half * math.log(half) - (1 - half) * math.log(1 - half)
    return half * float(np.ptp(c)) + (1 - rho) * (half * math.log(max(n_out - 1, 1)) + h2)


def check_kkt_vs_exhaustive(n_instances=5, seed=2, resolution=1e-2, slack=1e-4) -> Check:
    """K = 1, M = 4: iterative solution against a simplex-lattice search."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    params = ins.InputSolverParams(tolerance=1e-12, max_iterations=20000)
    for _ in range(n_instances):
        q = rng.dirichlet(np.full(5, 0.5), size=4)
        primary = rng.uniform(0, 3, 4)
        rho = float(rng.choice([0.0, rng.uniform(0, 0.95)]))
        sol = ins.solve_input_distribution(q, primary, rho, 1, 4, params)
        _, val = ins.exhaustive_search(q, primary, rho, resolution)
        gap = abs(sol.objective - val) - lattice_bound(q, primary, rho, resolution)
        worst = max(worst, gap)
    return _check("KKT vs exhaustive search (K=1, M=4)", max(worst, 0.0), slack,
                  "excess over the lattice bound", passed=worst <= slack)


def random_quantizer_instance(rng, max_bins=18, max_regions=4):
    """Gamma-derived bin masses: random variances, random candidate edges."""
    n_reg = int(rng.integers(2, max_regions + 1))
    n_bins = int(rng.integers(n_reg, max_bins + 1))
    n = int(rng.integers(1, 21))
    var = np.sort(rng.uniform(0.5, 5.0, n_reg))
    inner = np.sort(rng.uniform(0.2, 6.0, n_bins - 1)) * n
    edges = np.concatenate([[0.0], inner, [np.inf]])
    beta = ts.bin_masses(var, edges, n)
    skew = rng.random() < 0.5
    p = rng.dirichlet(np.full(n_reg, 0.3 if skew else 3.0))
    return var, n, edges, beta, p


def check_quantizers(n_instances=200, seed=3, tol=1e-12) -> list:
    rng = np.random.default_rng(seed)
    worst_bf = worst_smawk = 0.0
    ml_violation = 0.0
    strict = 0
    for _ in range(n_instances):
        var, n, edges, beta, p = random_quantizer_instance(rng)
        L = len(var)
        dp = ts.solve_dp(beta, p, L, edges)
        bf = ts.brute_force_thresholds(beta, p, L, edges)
        sm = ts.solve_smawk(beta, p, L, edges)
        worst_bf = max(worst_bf, abs(dp.objective - bf.objective))
        worst_smawk = max(worst_smawk, abs(sm.objective - dp.objective))
        ml = ts.ml_thresholds(var, n, edges)
        ml_val = backscatter_mi(transition_matrix(var, ml, n), p)
        ml_violation = max(ml_violation, ml_val - dp.objective)
        strict += dp.objective > ml_val + 1e-9
    return [
        _check("DP = brute force", worst_bf, tol, f"{n_instances} instances"),
        _check("SMAWK = DP", worst_smawk, tol, f"{n_instances} instances"),
        _check("DP >= ML thresholds", max(ml_violation, 0.0), tol,
               f"strictly better on {strict} instances", passed=ml_violation <= tol and strict > 0),
    ]


def check_ml_crossing(n_pairs=100, seed=4, tol=1e-9) -> list:
    """ML threshold is where the two Gamma densities meet; (1, e) at N = 1 is e/(e-1)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        n = int(rng.integers(1, 50))
        v = np.sort(rng.uniform(0.1, 10.0, 2))
        t = ts.ml_thresholds(v, n)[1]
        f0, f1 = gamma_energy_pdf(t, n, v[0]), gamma_energy_pdf(t, n, v[1])
        worst = max(worst, abs(f0 - f1) / max(f0, f1))
    e_case = abs(ts.ml_thresholds([1.0, math.e], 1)[1] - math.e / (math.e - 1))
    return [_check("ML threshold = density crossing", worst, tol,
                   f"{n_pairs} pairs, relative density gap"),
            _check("ML threshold (1, e), N = 1", e_case, 1e-12)]


def check_kkt_residual(n_instances=5, seed=5, tol=1e-6) -> Check:
    """Equal-marginal-information condition at convergence on random product inputs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    params = ins.InputSolverParams(tolerance=1e-14, max_iterations=50000)
    for _ in range(n_instances):
        k, m = 2, 2
        q = rng.dirichlet(np.full(4, 0.7), size=m ** k)
        primary = rng.uniform(0, 2, m ** k)
        rho = float(rng.uniform(0, 0.9))
        sol = ins.solve_input_distribution(q, primary, rho, k, m, params)
        worst = max(worst, ins.residual_of(sol.dists, q, primary, rho))
    return _check("KKT residual at convergence", worst, tol, f"{n_instances} instances")


def run_suite(gradient=None, quick=False) -> list:
    scale = 0.2 if quick else 1.0
    checks = [check_gamma_kernel(n_pairs=max(10, int(100 * scale))),
              check_gradient(gradient=gradient)]
    checks += check_z_channel()
    checks.append(check_kkt_vs_exhaustive())
    checks += check_quantizers(n_instances=max(20, int(200 * scale)))
    checks += check_ml_crossing()
    checks.append(check_kkt_residual())
    return checks


def format_report(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'value':>10}  {'tol':>8}  result"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {c.value:>10.3e}  {c.tolerance:>8.1e}  "
                     f"{'PASS' if c.passed else 'FAIL'}  {c.detail}")
    return "\n".join(lines)
