import os
import subprocess
import sys

import numpy as np
import pytest

from sqgobstacle import _backend
from sqgobstacle.kernels import KernelConfig

compiled = pytest.mark.skipif(_backend.BACKEND != "compiled", reason="extension not built")


def _points(n, rng):
    r = rng.uniform(1.02, 4.5, n)
    t = rng.uniform(0, 2 * np.pi, n)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


@compiled
def test_direct_sum_backends_agree():
    rng = np.random.default_rng(4)
    cfg = KernelConfig(0.2, 0.5)
    tg, src, w = _points(300, rng), _points(700, rng), rng.normal(size=700)
    a = _backend.direct_sum(tg, src, w, 1.0, cfg.delta, cfg.blend, backend="compiled")
    b = _backend.direct_sum(tg, src, w, 1.0, cfg.delta, cfg.blend, backend="python")
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12 * np.abs(y).max())


@compiled
@pytest.mark.parametrize("limiter", [False, True])
@pytest.mark.parametrize("mode", [_backend.OUTER_VALUE, _backend.OUTER_REPLICATE])
def test_interp_backends_agree(limiter, mode):
    rng = np.random.default_rng(6)
    vals = rng.normal(size=(2, 24, 48))
    pr, pt = rng.uniform(0.9, 4.2, 500), rng.uniform(-7, 7, 500)
    a = _backend.interp_polar(vals, 1.05, 0.125, pr, pt, limiter, mode, 0.5, backend="compiled")
    b = _backend.interp_polar(vals, 1.05, 0.125, pr, pt, limiter, mode, 0.5, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)
    single = _backend.interp_polar(vals[1], 1.05, 0.125, pr, pt, limiter, mode, 0.5, backend="compiled")
    np.testing.assert_array_equal(single, a[1])


def test_thread_count(monkeypatch):
    monkeypatch.setenv("SQGOBSTACLE_THREADS", "3")
    assert _backend.thread_count() == 3
    monkeypatch.setenv("SQGOBSTACLE_THREADS", "0")
    assert _backend.thread_count() == 1
    monkeypatch.setenv("SQGOBSTACLE_THREADS", "lots")
    assert _backend.thread_count() == 1


def test_python_backend_can_be_forced():
    env = dict(os.environ, SQGOBSTACLE_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from sqgobstacle import _backend; print(_backend.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True).stdout.strip()
    assert out == "python"


@compiled
def test_thread_count_does_not_change_results(monkeypatch):
    rng = np.random.default_rng(8)
    cfg = KernelConfig(0.2, 0.5)
    tg, src, w = _points(200, rng), _points(400, rng), rng.normal(size=400)
    monkeypatch.setenv("SQGOBSTACLE_THREADS", "1")
    a = _backend.direct_sum(tg, src, w, 1.0, cfg.delta, cfg.blend)
    monkeypatch.setenv("SQGOBSTACLE_THREADS", "4")
    b = _backend.direct_sum(tg, src, w, 1.0, cfg.delta, cfg.blend)
    for x, y in zip(a, b):
        assert x.tobytes() == y.tobytes()
