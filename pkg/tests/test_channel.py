import numpy as np
import pytest

from riscatter.channel import (FadingConfig, GeometryConfig, draw_rician, generate_channels,
                               path_loss, perturb_csi, stream)

FADING = FadingConfig()
GEOM = GeometryConfig()


def test_path_loss_reference_point():
    assert path_loss(FADING.reference_distance, FADING, 2.6) == pytest.approx(1e-3, rel=1e-15)


def test_path_loss_direct_link_value():
    # 1e-3 * (1/10)**2.6 = 10**-5.6
    assert path_loss(10.0, FADING, 2.6) == pytest.approx(10 ** -5.6, rel=1e-12)
    assert path_loss(10.0, FADING, 2.6) == pytest.approx(2.512e-6, rel=1e-3)


def test_path_loss_zero_exponent():
    assert path_loss(np.array([0.3, 7.0, 1e4]), FADING, 0.0) == pytest.approx(1e-3)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_nonpositive(d):
    with pytest.raises(ValueError):
        path_loss(d, FADING, 2.0)


def test_rician_los_limit():
    h = draw_rician(3, 4, 1e12, stream(0, 0, 0))
    assert np.allclose(np.abs(h), 1.0, atol=1e-5)
    assert np.array_equal(draw_rician(2, 2, np.inf, stream(0, 0, 0)), np.ones((2, 2)))


def test_rician_rayleigh_unit_power():
    h = draw_rician(1, 100_000, 0.0, stream(3, 0, 0))
    assert 0.99 <= np.mean(np.abs(h) ** 2) <= 1.01


def test_rician_unit_power_any_kappa():
    h = draw_rician(1, 200_000, 5.0, stream(4, 0, 0))
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.01)


def test_rician_repeatable_and_negative_kappa():
    a = draw_rician(4, 4, 5.0, stream(9, 1, 2))
    b = draw_rician(4, 4, 5.0, stream(9, 1, 2))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        draw_rician(1, 1, -0.1, stream(0, 0, 0))


def test_streams_independent_of_order():
    s1 = stream(5, 2, 7).random(3)
    _ = stream(5, 0, 0).random(100)
    assert np.array_equal(s1, stream(5, 2, 7).random(3))
    assert not np.array_equal(s1, stream(5, 2, 8).random(3))


def test_no_nodes():
    draw = generate_channels(GEOM, FADING, 4, 0, seed=1)
    assert draw.h_d.shape == (4,)
    assert draw.h_c.shape == (0, 4) and draw.n_nodes == 0


def test_same_seed_same_draw():
    a = generate_channels(GEOM, FADING, 4, 3, seed=11, realization=2)
    b = generate_channels(GEOM, FADING, 4, 3, seed=11, realization=2)
    for x, y in zip((a.h_d, a.h_f, a.h_b, a.h_c), (b.h_d, b.h_f, b.h_b, b.h_c)):
        assert np.array_equal(x, y)


def test_cascade_consistency():
    d = generate_channels(GEOM, FADING, 4, 2, seed=2)
    for k in range(2):
        assert np.array_equal(d.h_c[k], d.h_b[k] * d.h_f[k])
        assert np.allclose(np.abs(d.h_c[k]), np.abs(d.h_b[k]) * np.abs(d.h_f[k]), rtol=1e-14)


def test_link_power_matches_path_loss():
    geom = GeometryConfig(ap_node_distances=(10.0,), node_user_distances=(2.0,))
    cfg = FadingConfig(kappa_direct=0.0)
    pd = np.array([np.abs(generate_channels(geom, cfg, 1, 1, 0, r).h_d[0]) ** 2
                   for r in range(20_000)])
    pf = np.array([np.abs(generate_channels(geom, cfg, 1, 1, 0, r).h_f[0, 0]) ** 2
                   for r in range(20_000)])
    assert pd.mean() == pytest.approx(path_loss(10.0, cfg, cfg.exponent_direct), rel=0.03)
    assert pf.mean() == pytest.approx(path_loss(10.0, cfg, cfg.exponent_forward), rel=0.03)


def test_disk_drop_geometry():
    rng = np.random.default_rng(0)
    d_an, d_nu = GEOM.node_distances(10_000, rng)
    assert np.all(d_nu <= GEOM.node_radius) and np.all(d_nu > 0)
    # AP-node distance obeys the triangle inequality through the user
    assert np.all(np.abs(d_an - GEOM.ap_user_distance) <= d_nu + 1e-12)
    # uniform in the disk: P(radius < r/2) = 1/4
    assert np.mean(d_nu < GEOM.node_radius / 2) == pytest.approx(0.25, abs=0.015)


def test_geometry_validation():
    with pytest.raises(ValueError):
        GeometryConfig(ap_node_distances=(1.0,))
    with pytest.raises(ValueError):
        GeometryConfig(ap_node_distances=(1.0,), node_user_distances=(0.0,))
    with pytest.raises(ValueError):
        FadingConfig(kappa_direct=-1.0)


def test_perturb_zero_error_exact():
    d = generate_channels(GEOM, FADING, 4, 2, seed=2)
    assert np.array_equal(perturb_csi(d.h_c, 0.0, 1.0, stream(0, 0, 0)), d.h_c)


def test_perturb_error_variance():
    h = np.zeros(100_000, dtype=complex)
    lam = 3e-7
    est = perturb_csi(h, 0.2, lam, stream(1, 0, 0))
    assert np.mean(np.abs(est) ** 2) == pytest.approx(0.2 * lam, rel=0.02)
    # circular symmetry: real and imaginary halves share the variance
    assert np.var(est.real) == pytest.approx(0.1 * lam, rel=0.03)


def test_perturb_repeatable_and_validated():
    h = np.ones(4, dtype=complex)
    assert np.array_equal(perturb_csi(h, 0.1, 1.0, stream(2, 0, 9)),
                          perturb_csi(h, 0.1, 1.0, stream(2, 0, 9)))
    with pytest.raises(ValueError):
        perturb_csi(h, -0.1, 1.0, stream(2, 0, 9))
