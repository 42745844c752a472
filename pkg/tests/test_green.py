import numpy as np
import pytest

from sqgobstacle.errors import DomainError
from sqgobstacle.fields import GridSpec, ScalarField
from sqgobstacle.green import (
    ObstacleGeometry, apply_G_F_delta, apply_K_F_delta, boundary_vanishing, eval_G_exterior, eval_H,
    grad_H, green_parts, ring_operator,
)
from sqgobstacle.kernels import C, KernelConfig

GEOM = ObstacleGeometry(1.0)


def _pt(r, a):
    return np.array([r * np.cos(a), r * np.sin(a)])


def test_parts_are_consistent():
    x, y = _pt(1.7, 0.3), _pt(2.9, -1.1)
    ev = eval_G_exterior(x, y, GEOM)
    assert ev.value == pytest.approx(ev.whole_plane_part - ev.regular_part, rel=1e-12)
    assert ev.whole_plane_part == pytest.approx(C / np.linalg.norm(x - y))
    assert eval_H(x, y, GEOM) == pytest.approx(ev.regular_part)
    assert 0.0 < ev.value < ev.whole_plane_part


def test_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = _pt(rng.uniform(1.01, 6), rng.uniform(0, 6.3))
        y = _pt(rng.uniform(1.01, 6), rng.uniform(0, 6.3))
        a = eval_G_exterior(x, y, GEOM).value
        b = eval_G_exterior(y, x, GEOM).value
        assert a == pytest.approx(b, rel=1e-12)


def test_vanishes_on_and_inside_disk():
    assert boundary_vanishing(GEOM) <= 1e-10
    assert boundary_vanishing(ObstacleGeometry(2.3)) <= 1e-10
    x = _pt(2.0, 0.4)
    assert eval_G_exterior(x, _pt(0.5, 1.0), GEOM).value == 0.0


def test_vanishes_at_infinity_relative_to_G():
    # G_F / G -> 1 when both points are far from the disk
    x, y = _pt(400.0, 0.0), _pt(401.0, 0.0)
    ev = eval_G_exterior(x, y, GEOM)
    assert ev.value / ev.whole_plane_part == pytest.approx(1.0, abs=1e-2)


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_G_exterior(_pt(0.5, 0), _pt(2, 0), GEOM)
    with pytest.raises(DomainError):
        eval_G_exterior(_pt(2, 0), _pt(2, 0), GEOM)


def test_grad_H_finite_differences():
    y = _pt(2.2, 1.0)
    for x in (_pt(1.3, -0.4), _pt(3.0, 2.0), _pt(1.05, 1.2)):
        g = grad_H(x, y, 1.0)
        h = 1e-6
        fd = [(green_parts(x + e, y, 1.0)[2] - green_parts(x - e, y, 1.0)[2]) / (2 * h)
              for e in (np.array([h, 0]), np.array([0, h]))]
        np.testing.assert_allclose(g, fd, rtol=1e-6)


def _density(grid):
    r, t = grid.rr, grid.tt
    return ScalarField(grid, np.exp(-((r - 2.2) ** 2) / 0.1) * (1 + 0.3 * np.cos(2 * t)))


def test_ring_operator_matches_direct_sum():
    grid = GridSpec(1.0, 4.0, 32, 64)
    cfg = KernelConfig(0.25, 0.5)
    f = _density(grid)
    op = ring_operator(grid, cfg.delta, cfg.blend, 1.0)
    ring = op.apply(f.values)
    direct = apply_G_F_delta(f, grid.points(), cfg, GEOM)
    np.testing.assert_allclose(ring, direct, atol=1e-12 * np.abs(direct).max())
    vr, vt = op.velocity_polar(f.values)
    k = apply_K_F_delta(f, grid.points(), cfg, GEOM)
    c, s = grid.cos, grid.sin
    np.testing.assert_allclose(vr, k[..., 0] * c + k[..., 1] * s, atol=1e-11 * np.abs(k).max())
    np.testing.assert_allclose(vt, -k[..., 0] * s + k[..., 1] * c, atol=1e-11 * np.abs(k).max())


def test_K_is_perp_gradient_of_operator():
    grid = GridSpec(1.0, 4.0, 24, 48)
    cfg = KernelConfig(0.25, 0.5)
    f = _density(grid)
    x = np.array([[1.8, 0.7], [2.6, -1.3], [1.4, 0.2]])
    k = apply_K_F_delta(f, x, cfg, GEOM)
    h = 1e-6
    d1 = (apply_G_F_delta(f, x + [h, 0], cfg, GEOM) - apply_G_F_delta(f, x - [h, 0], cfg, GEOM)) / (2 * h)
    d2 = (apply_G_F_delta(f, x + [0, h], cfg, GEOM) - apply_G_F_delta(f, x - [0, h], cfg, GEOM)) / (2 * h)
    np.testing.assert_allclose(k, np.stack([-d2, d1], axis=1), rtol=1e-5, atol=1e-9)


def test_operator_zero_near_boundary():
    grid = GridSpec(1.0, 4.0, 24, 48)
    cfg = KernelConfig(0.25, 0.5)
    f = _density(grid)
    x = np.array([[1.0, 0.0], [0.0, 1.2], [-1.24, 0.0]])
    assert np.all(apply_G_F_delta(f, x, cfg, GEOM) == 0.0)
    np.testing.assert_array_equal(apply_K_F_delta(f, x[:1], cfg, GEOM), 0.0)
