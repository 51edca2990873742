"""Compiled extension vs pure-Python fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from infoot import uniform_weights
from infoot._core import BACKEND, available_backends


def test_backend_reported():
    assert BACKEND in ("compiled", "python")
    assert "python" in available_backends()


def test_backends_agree_on_shared_instances():
    backends = available_backends()
    if "compiled" not in backends:
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(8)
    for _ in range(6):
        n, m = rng.integers(2, 20, size=2)
        S = -rng.uniform(0, 12, (n, m))
        p = rng.uniform(0.5, 2.0, n)
        p /= p.sum()
        q = rng.uniform(0.5, 2.0, m)
        q /= q.sum()
        results = {}
        for name, kernel in backends.items():
            a, b, iters, viol, conv = kernel(
                np.ascontiguousarray(S), p, q, 500, 1e-9)
            results[name] = (np.asarray(a), np.asarray(b), iters, viol, conv)
        a_py, b_py, it_py, viol_py, conv_py = results["python"]
        a_cy, b_cy, it_cy, viol_cy, conv_cy = results["compiled"]
        assert it_py == it_cy
        assert conv_py == conv_cy
        np.testing.assert_allclose(a_py, a_cy, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(b_py, b_cy, rtol=1e-12, atol=1e-12)
        plan_py = np.exp(a_py[:, None] + b_py[None, :] + S)
        plan_cy = np.exp(a_cy[:, None] + b_cy[None, :] + S)
        np.testing.assert_allclose(plan_py, plan_cy, atol=1e-12)


def test_compiled_kernel_accepts_readonly_views():
    backends = available_backends()
    if "compiled" not in backends:
        pytest.skip("compiled extension not built")
    S = np.zeros((2, 2))
    S.flags.writeable = False
    p = uniform_weights(2)
    p.flags.writeable = False
    a, b, iters, viol, conv = backends["compiled"](S, p, p, 10, 1e-9)
    assert conv


def _backend_in_subprocess(env_value: str) -> str:
    env = dict(os.environ, INFOOT_BACKEND=env_value)
    out = subprocess.run(
        [sys.executable, "-c", "import infoot; print(infoot.BACKEND)"],
        capture_output=True, text=True, env=env)
    if out.returncode != 0:
        return f"error: {out.stderr.strip()}"
    return out.stdout.strip()


def test_backend_env_override():
    assert _backend_in_subprocess("python") == "python"
    if "compiled" in available_backends():
        assert _backend_in_subprocess("compiled") == "compiled"
    assert "error" in _backend_in_subprocess("fortran")
