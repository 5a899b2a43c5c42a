import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riscatter import input_solver as ins
from riscatter.node import build_constellation, composite_table, joint_distribution
from riscatter.rates import backscatter_mi, marginal_info

Z = np.array([[1.0, 0.0], [0.5, 0.5]])
TIGHT = ins.InputSolverParams(tolerance=1e-9, max_iterations=50_000)


def test_exponent_modes():
    assert ins.exponent(0.0, "blahut_arimoto") == 1.0
    assert ins.exponent(0.0, "paper_printed") == 0.0
    assert ins.exponent(0.5, "paper_printed") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ins.exponent(1.0, "blahut_arimoto")


def test_flat_information_leaves_inputs():
    q = np.tile([0.3, 0.7], (4, 1))
    dists = [np.array([0.2, 0.8]), np.array([0.6, 0.4])]
    out = ins.kkt_update(dists, q, np.full(4, 1.3), 0.4)
    for a, b in zip(dists, out):
        assert np.allclose(a, b, atol=1e-15)


def test_printed_mode_freezes_at_rho0():
    p = [np.array([0.3, 0.7])]
    out = ins.kkt_update(p, Z, np.zeros(2), 0.0, mode="paper_printed")
    assert np.allclose(out[0], p[0], atol=1e-15)


def test_sequential_update_uses_fresh_nodes(rng):
    q = rng.dirichlet(np.ones(3), size=4)
    prim = rng.uniform(0, 1, 4)
    dists = [np.array([0.5, 0.5]), np.array([0.3, 0.7])]
    out = ins.kkt_update(dists, q, prim, 0.3)
    eta = 1 / 0.7
    info = ins.evaluate([out[0], dists[1]], q, prim, 0.3)[3]
    m = marginal_info([out[0], dists[1]], info)[1]
    expect = dists[1] * np.exp(eta * m)
    assert np.allclose(out[1], expect / expect.sum(), atol=1e-14)


def test_z_channel_optimum():
    sol = ins.solve_input_distribution(Z, np.zeros(2), 0.0, 1, 2, TIGHT)
    assert np.allclose(sol.dists[0], [0.6, 0.4], atol=1e-4)
    assert backscatter_mi(Z, sol.dists[0]) == pytest.approx(math.log(1.25), abs=1e-4)
    assert sol.converged


def test_identity_channel_uniform():
    sol = ins.solve_input_distribution(np.eye(2), np.zeros(2), 0.0, 1, 2,
                                       init=[np.array([0.9, 0.1])])
    assert np.allclose(sol.dists[0], 0.5, atol=1e-5)
    assert sol.objective == pytest.approx(math.log(2), abs=1e-8)


def test_residual_examples():
    exact = [np.array([0.6, 0.4])]
    assert ins.residual_of(exact, Z, np.zeros(2), 0.0) <= 1e-6
    q = np.array([[0.8, 0.2], [0.2, 0.8]])
    assert ins.residual_of([np.array([0.5, 0.5])], q, np.zeros(2), 0.0) <= 1e-10
    moved = [np.array([0.7, 0.3])]
    assert ins.residual_of(moved, Z, np.zeros(2), 0.0) > 1e-3


def test_residual_off_support_rule():
    # state 1 unused and worse than the total: no violation
    assert ins.kkt_residual([np.array([1.0, 0.0])], [np.array([1.0, 0.5])], 1.0) == 0.0
    # unused but better: violation of its excess
    assert ins.kkt_residual([np.array([1.0, 0.0])], [np.array([1.0, 1.5])], 1.0) == 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(2, 3), st.floats(0, 0.95), st.integers(0, 2 ** 32 - 1))
def test_trace_monotone_and_simplex(k, m, rho, seed):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.full(4, 0.6), size=m ** k)
    prim = rng.uniform(0, 2, m ** k)
    params = ins.InputSolverParams(max_iterations=300)
    sol = ins.solve_input_distribution(q, prim, rho, k, m, params)
    vals = np.array([t[2] for t in sol.trace])
    assert np.all(np.diff(vals) >= -1e-12)
    for p in sol.dists:
        assert abs(p.sum() - 1) <= 1e-12 and np.all(p > 0)


def test_printed_mode_same_fixed_point(rng):
    q = rng.dirichlet(np.ones(3), size=2)
    prim = np.array([0.4, 1.0])
    a = ins.solve_input_distribution(q, prim, 0.5, 1, 2, TIGHT)
    b = ins.solve_input_distribution(q, prim, 0.5, 1, 2,
                                     ins.InputSolverParams(1e-9, max_iterations=50_000,
                                                           exponent_mode="paper_printed"))
    assert np.allclose(a.dists[0], b.dists[0], atol=1e-5)
    assert ins.residual_of(b.dists, q, prim, 0.5) <= 1e-6


def test_warm_start_floored():
    sol = ins.solve_input_distribution(Z, np.zeros(2), 0.0, 1, 2, init=[np.array([1.0, 0.0])])
    assert np.allclose(sol.dists[0], [0.6, 0.4], atol=1e-3)


def test_exhaustive_examples():
    p, v = ins.exhaustive_search(np.eye(2), np.zeros(2), 0.0)
    assert np.allclose(p, 0.5) and v == pytest.approx(math.log(2))
    p, v = ins.exhaustive_search(Z, np.zeros(2), 0.0, 1e-2)
    assert np.allclose(p, [0.6, 0.4], atol=1e-12)


def test_exhaustive_brackets_solver(rng):
    for _ in range(5):
        q = rng.dirichlet(np.ones(4), size=3)
        prim = rng.uniform(0, 1, 3)
        sol = ins.solve_input_distribution(q, prim, 0.2, 1, 3, TIGHT)
        _, v = ins.exhaustive_search(q, prim, 0.2, 1e-2)
        assert v <= sol.objective + 1e-9
        assert v >= sol.objective - 1e-2


def test_lattice_cap():
    with pytest.raises(ValueError):
        ins.exhaustive_search(np.eye(6), np.zeros(6), 0.0, 1e-3)


def test_cooperation_cases(rng):
    a = ins.solve_input_distribution(Z, np.zeros(2), 0.0, 1, 2, TIGHT)
    b = ins.cooperative_solve(Z, np.zeros(2), 0.0, TIGHT)
    assert np.allclose(a.joint, b.joint, atol=1e-12)
    q = rng.dirichlet(np.full(5, 0.5), size=4)
    prim = rng.uniform(0, 1, 4)
    ind = ins.solve_input_distribution(q, prim, 0.3, 2, 2, TIGHT)
    coop = ins.cooperative_solve(q, prim, 0.3, TIGHT)
    assert coop.objective >= ind.objective - 1e-9
    flat = np.tile([0.5, 0.5], (4, 1))
    assert ins.cooperative_solve(flat, np.zeros(4), 0.0).objective == pytest.approx(0, abs=1e-15)


def test_degenerate_rho1():
    const = build_constellation(4, 0.5)
    h_d = np.array([1.0 + 0j])
    h_c = np.array([[0.0 + 1.0j]])
    table = composite_table(h_d, h_c, const)
    best = int(np.argmax(np.abs(table[:, 0])))
    dists = ins.solve_degenerate_rho1(table, np.array([1.0 + 0j]), 1.0, 1, 4)
    assert dists[0].tolist() == np.eye(4)[best].tolist()
    # two nodes: point masses factor the best tuple
    table2 = composite_table(h_d, np.array([[0.3 + 0j], [0.0 + 0.5j]]), const)
    d2 = ins.solve_degenerate_rho1(table2, np.array([1.0 + 0j]), 1.0, 2, 4)
    joint = joint_distribution(d2)
    assert joint.max() == 1.0 and int(np.argmax(joint)) == int(np.argmax(np.abs(table2[:, 0])))


def test_degenerate_tie_lowest_index():
    table = np.ones((4, 1), dtype=complex)
    d = ins.solve_degenerate_rho1(table, np.array([1.0 + 0j]), 1.0, 2, 2)
    assert [p.tolist() for p in d] == [[1.0, 0.0], [1.0, 0.0]]
