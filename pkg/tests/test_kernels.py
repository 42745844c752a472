import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqgobstacle.errors import DomainError
from sqgobstacle.kernels import (
    BLEND_PROFILES, C, KernelConfig, constant_c, cutoff_chi, cutoff_chi_delta, eval_G, eval_G_delta,
    eval_grad_G_delta, eval_K, G_delta_radial, gradient_bound_constant, outer_cutoff,
)


def test_constant_c():
    assert constant_c() == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-15)
    assert 2.0 * np.pi * constant_c() == pytest.approx(1.0, rel=1e-15)


def test_eval_G_values():
    assert eval_G(np.array([1.0, 0.0])) == pytest.approx(1.0 / (2.0 * np.pi))
    assert eval_G(np.array([0.0, 2.0])) == pytest.approx(1.0 / (4.0 * np.pi))
    with pytest.raises(DomainError):
        eval_G(np.zeros(2))


@given(st.floats(0.1, 10.0), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_G_rotation_invariant(r, a, b):
    x = r * np.array([np.cos(a), np.sin(a)])
    y = r * np.array([np.cos(b), np.sin(b)])
    assert eval_G(x) == pytest.approx(eval_G(y), rel=1e-13)


def test_eval_K_counter_clockwise():
    # x_perp = (-x2, x1): at (1, 0) the kernel points along -e2
    np.testing.assert_allclose(eval_K(np.array([1.0, 0.0])), [0.0, -C], atol=1e-17)
    with pytest.raises(DomainError):
        eval_K(np.zeros(2))


@given(st.floats(0.2, 8.0), st.floats(-np.pi, np.pi))
def test_K_odd_and_orthogonal(r, a):
    x = r * np.array([np.cos(a), np.sin(a)])
    np.testing.assert_allclose(eval_K(-x), -eval_K(x), rtol=1e-14)
    assert abs(eval_K(x) @ x) <= 1e-14 * np.linalg.norm(eval_K(x)) * r


def _fd_perp_grad(f, x, h=1e-5):
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    d1 = (f(x + e1) - f(x - e1)) / (2 * h)
    d2 = (f(x + e2) - f(x - e2)) / (2 * h)
    return np.array([-d2, d1])


def test_K_is_perp_gradient_of_G():
    rng = np.random.default_rng(3)
    worst = 0.0
    for r in np.linspace(0.5, 5.0, 40):
        a = rng.uniform(0, 2 * np.pi)
        x = r * np.array([np.cos(a), np.sin(a)])
        k = eval_K(x)
        worst = max(worst, np.linalg.norm(_fd_perp_grad(eval_G, x) - k) / np.linalg.norm(k))
    assert worst <= 1e-6


@pytest.mark.parametrize("delta", [0.05, 0.1, 0.4, 1.0])
def test_grad_G_delta_matches_finite_differences(delta):
    cfg = KernelConfig(delta, 0.5)
    for r in np.linspace(0.01 * delta, 3 * delta, 31):
        x = r * np.array([0.6, 0.8])
        g = eval_grad_G_delta(x, cfg)
        h = 1e-5 * delta
        fd = np.array([
            (eval_G_delta(x + [h, 0], cfg) - eval_G_delta(x - [h, 0], cfg)) / (2 * h),
            (eval_G_delta(x + [0, h], cfg) - eval_G_delta(x - [0, h], cfg)) / (2 * h),
        ])
        assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g)


@pytest.mark.parametrize("profile", sorted(BLEND_PROFILES))
def test_blend_bullets(profile):
    delta = 0.1
    cfg = KernelConfig(delta, 0.5, profile)
    r = np.linspace(0.0, 5.0 * delta, 200001)
    g = G_delta_radial(r, delta, cfg.blend)
    # radial and non-increasing
    assert np.all(np.diff(g) <= 1e-15 * g[:-1])
    # equal to G beyond delta
    far = r >= delta
    np.testing.assert_allclose(g[far], C / r[far], rtol=1e-14)
    # G_delta(0) <= 2 G_delta(delta u)
    assert g[0] <= 2.0 * C / delta
    # gradient bounded by C'/delta^2, C' independent of delta
    grad = np.abs(np.gradient(g, r))
    cb = gradient_bound_constant(cfg)
    assert grad.max() <= cb / delta**2 * (1 + 1e-3)
    assert cb == pytest.approx(gradient_bound_constant(KernelConfig(0.37, 0.5, profile)))


def test_G_delta_exact_outside_delta():
    cfg = KernelConfig(0.1, 0.5)
    x = np.array([0.2, 0.0])
    assert eval_G_delta(x, cfg) == eval_G(x)
    assert eval_G_delta(np.zeros(2), cfg) <= 2 * C / 0.1


def test_cutoffs():
    a = 0.5
    assert cutoff_chi(-1.0, a) == 1.0
    assert cutoff_chi(a + 0.1, a) == 0.0
    d = 0.1
    v = cutoff_chi_delta(1.5 * d, d)
    assert 0.0 < v < 1.0
    assert cutoff_chi_delta(d, d) == 1.0 and cutoff_chi_delta(2 * d, d) == 0.0
    r = np.linspace(-1, 2, 1001)
    assert np.all(np.diff(cutoff_chi(r, a)) <= 0)
    assert outer_cutoff(1.0 / d, d) == 1.0 and outer_cutoff(2.0 / d, d) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(0.0, 0.5)
    with pytest.raises(ValueError):
        KernelConfig(0.1, -1.0)
    with pytest.raises(ValueError):
        KernelConfig(0.1, 0.5, "nope")
