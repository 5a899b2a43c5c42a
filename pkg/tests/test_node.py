import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riscatter.node import (CapacityError, build_constellation, composite_channel,
                            composite_table, enumerate_tuples, joint_distribution, marginalize,
                            reflection_matrix)


def test_qpsk_reflection():
    g = build_constellation(4, 0.5).reflection
    expected = 0.5 * np.array([-1 - 1j, -1 + 1j, 1 - 1j, 1 + 1j]) / np.sqrt(2)
    assert np.allclose(np.sort_complex(g), np.sort_complex(expected), atol=1e-15)
    assert np.allclose(np.abs(g), 0.5)


def test_antipodal():
    assert np.array_equal(build_constellation(2, 1.0).reflection, [1.0, -1.0])


def test_16qam_moduli():
    mod = np.abs(build_constellation(16, 0.7).reflection)
    levels = 0.7 * np.sqrt([2, 10, 18]) / np.sqrt(18)
    counts = [np.sum(np.isclose(mod, v)) for v in levels]
    assert counts == [4, 8, 4]


@pytest.mark.parametrize("order", [2, 4, 16, 64])
@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_max_modulus_is_alpha(order, alpha):
    assert np.max(np.abs(build_constellation(order, alpha).reflection)) == pytest.approx(alpha,
                                                                                       rel=1e-15)


@pytest.mark.parametrize("order,alpha", [(3, 0.5), (8, 0.5), (4, 0.0), (4, 1.5)])
def test_bad_constellations(order, alpha):
    with pytest.raises(ValueError):
        build_constellation(order, alpha)


def test_enumeration_order():
    assert enumerate_tuples(1, 4).tolist() == [[0], [1], [2], [3]]
    assert enumerate_tuples(2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    t = enumerate_tuples(3, 4)
    assert len(t) == 64 and len({tuple(r) for r in t}) == 64


def test_tuple_cap():
    with pytest.raises(CapacityError):
        enumerate_tuples(13, 2)
    assert len(enumerate_tuples(12, 2)) == 4096


def test_composite_channel_cases(rng):
    h_d = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h_c = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    assert np.array_equal(composite_channel(h_d, np.zeros((0, 3)), []), h_d)
    assert np.array_equal(composite_channel(h_d, h_c, [0, 0]), h_d)
    assert np.allclose(composite_channel(h_d, h_c[:1], [1.0]), h_d + h_c[0])
    with pytest.raises(ValueError):
        composite_channel(h_d, h_c, [1.0])


def test_composite_channel_affine(rng):
    h_d = rng.standard_normal(2) + 0j
    h_c = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    a, b = 0.3 - 0.2j, -0.1 + 0.4j
    f = lambda g: composite_channel(h_d, h_c, [0.2, g, -0.5j])
    assert np.allclose(f(a) + f(b) - f(0), f(a + b), atol=1e-14)


def test_composite_table_rows(rng):
    const = build_constellation(4, 0.5)
    h_d = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    h_c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    table = composite_table(h_d, h_c, const)
    for i, tup in enumerate(itertools.product(range(4), repeat=2)):
        expect = composite_channel(h_d, h_c, const.reflection[list(tup)])
        assert np.allclose(table[i], expect, atol=1e-15)


def test_per_node_amplitude():
    const = build_constellation(2, 0.5)
    gam = reflection_matrix(2, const, amplitude=[0.2, 1.0])
    assert np.allclose(np.abs(gam[:, 0]), 0.2) and np.allclose(np.abs(gam[:, 1]), 1.0)


def test_joint_examples():
    assert np.allclose(joint_distribution([[0.5, 0.5], [0.5, 0.5]]), 0.25)
    j = joint_distribution([[1.0, 0.0], [0.3, 0.7]])
    assert np.all(j[2:] == 0)
    j = joint_distribution([[0.3, 0.7], [0.6, 0.4]])
    assert j[2] == pytest.approx(0.42, abs=1e-15)  # tuple (second state, first state)


def test_joint_rejects_non_simplex():
    with pytest.raises(ValueError):
        joint_distribution([[0.5, 0.6]])
    with pytest.raises(ValueError):
        joint_distribution([[1.1, -0.1]])


def test_marginal_examples():
    m = marginalize(np.array([0.5, 0.0, 0.0, 0.5]), 2, 2)
    assert np.allclose(m, [[0.5, 0.5], [0.5, 0.5]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_product_round_trip(k, m, seed):
    rng = np.random.default_rng(seed)
    dists = [rng.dirichlet(np.ones(m)) for _ in range(k)]
    joint = joint_distribution(dists)
    assert joint.sum() == pytest.approx(1.0, abs=1e-12)
    for p, q in zip(dists, marginalize(joint, k, m)):
        assert np.allclose(p, q, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_joint_marginals_conserve(seed):
    rng = np.random.default_rng(seed)
    joint = rng.dirichlet(np.ones(27))
    for p in marginalize(joint, 3, 3):
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
