import os
import subprocess
import sys

import numpy as np
import pytest

from homeorl import kernels
from homeorl.kernels import _pykernels as py

try:
    from homeorl.kernels import _ckernels as ck
except ImportError:  # extension not built
    ck = None

needs_c = pytest.mark.skipif(ck is None, reason="compiled kernels not built")


def _backend_in_subprocess(choice: str) -> subprocess.CompletedProcess:
    env = dict(os.environ, HOMEORL_KERNELS=choice)
    return subprocess.run(
        [sys.executable, "-c", "import homeorl.kernels as k; print(k.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
    )


def test_python_backend_forced_by_env():
    out = _backend_in_subprocess("python")
    assert out.returncode == 0 and out.stdout.strip() == "python"


def test_bad_backend_name_fails_import():
    out = _backend_in_subprocess("fortran")
    assert out.returncode != 0
    assert "HOMEORL_KERNELS" in out.stderr


@needs_c
def test_auto_prefers_compiled():
    assert _backend_in_subprocess("auto").stdout.strip() == "c"
    assert kernels.BACKEND in ("c", "python")


@needs_c
class TestBackendsAgree:
    def test_bias_relu(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=(7, 13))
        b = rng.normal(size=13)
        z1, z2 = z.copy(), z.copy()
        py.bias_relu(z1, b)
        ck.bias_relu(z2, b)
        assert z1.tobytes() == z2.tobytes()

    def test_bias_add_and_mask(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=(5, 9))
        b = rng.normal(size=9)
        z1, z2 = z.copy(), z.copy()
        py.bias_add(z1, b)
        ck.bias_add(z2, b)
        assert z1.tobytes() == z2.tobytes()
        a = np.maximum(rng.normal(size=(5, 9)), 0.0)
        g1, g2 = z.copy(), z.copy()
        py.relu_mask_grad(g1, a)
        ck.relu_mask_grad(g2, a)
        assert g1.tobytes() == g2.tobytes()

    def test_td_residual(self):
        rng = np.random.default_rng(2)
        q = rng.normal(size=(64, 4))
        a = rng.integers(0, 4, size=64).astype(np.int64)
        y = rng.normal(size=64)
        g1, g2 = np.full_like(q, 9.0), np.full_like(q, 9.0)
        l1 = py.td_residual(q, a, y, g1)
        l2 = ck.td_residual(q, a, y, g2)
        assert l1 == pytest.approx(l2, rel=1e-13)
        assert g1.tobytes() == g2.tobytes()

    def test_adam_bit_identical_over_many_steps(self):
        rng = np.random.default_rng(3)
        p = rng.normal(size=1000)
        state = [(p.copy(), np.zeros(1000), np.zeros(1000)) for _ in range(2)]
        for t in range(1, 51):
            g = rng.normal(size=1000) * 10.0 ** rng.integers(-6, 3)
            for fn, (prm, m, v) in zip((py.adam_step, ck.adam_step), state):
                fn(prm, g, m, v, 1e-3, 0.9, 0.999, 1e-8, t)
        assert np.all(np.isfinite(state[0][0])) and state[0][0].tobytes() != p.tobytes()
        for a, b in zip(*state):
            assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize("x,y", [(0, 0), (10, 10), (0, 10), (10, 0), (5, 5), (3, 0), (10, 7)])
    def test_observe_window(self, x, y):
        values = np.random.default_rng(4).random((4, 11, 11))
        o1, o2 = np.full(40, -1.0), np.full(40, -1.0)
        py.observe_window(values, x, y, o1)
        ck.observe_window(values, x, y, o2)
        assert o1.tobytes() == o2.tobytes()
        assert np.all(o1[36:] == -1.0)  # stats tail untouched


def test_observe_window_python_reference():
    values = np.arange(2 * 4 * 5, dtype=float).reshape(2, 4, 5)
    out = np.zeros(18)
    py.observe_window(values, 4, 3, out)
    win = out[:9].reshape(3, 3)
    # top row (y=4) and right column (x=5) lie outside
    np.testing.assert_array_equal(win[0], 0.0)
    np.testing.assert_array_equal(win[:, 2], 0.0)
    assert win[1, 1] == values[0, 3, 4] and win[2, 0] == values[0, 2, 3]
