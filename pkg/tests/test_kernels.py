import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wetrelay import _kernels
from wetrelay.mi import DEFAULT_QUAD

Z, WZ = DEFAULT_QUAD.rule()


def test_point_mass_density_is_gaussian_kl():
    # KL(N(x,1) || N(m,1)) = (x - m)^2 / 2, slope x - m
    xs = np.linspace(-3, 3, 13)
    d, s = _kernels.divergence(xs, np.array([0.5]), np.array([1.0]), Z, WZ)
    np.testing.assert_allclose(d, 0.5 * (xs - 0.5) ** 2, atol=1e-12)
    np.testing.assert_allclose(s, xs - 0.5, atol=1e-10)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba path disabled")
@given(st.lists(st.floats(-6, 6), min_size=1, max_size=8), st.lists(st.floats(0.01, 1.0), min_size=8, max_size=8))
def test_numba_and_numpy_agree(means, weights):
    m = np.array(means)
    p = np.array(weights[: m.size])
    p /= p.sum()
    xs = np.linspace(-8, 8, 21)
    a = _kernels.divergence_numpy(xs, m, p, Z, WZ)
    b = _kernels.divergence_numba(xs, m, p, Z, WZ)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-10, atol=1e-11)


def test_zero_mass_components_ignored():
    m = np.array([-1.0, 0.0, 1.0])
    full = _kernels.divergence(m, m, np.array([0.5, 0.0, 0.5]), Z, WZ)[0]
    dropped = _kernels.divergence(m, m[[0, 2]], np.array([0.5, 0.5]), Z, WZ)[0]
    np.testing.assert_allclose(full, dropped, rtol=0, atol=0)


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, WETRELAY_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from wetrelay import _kernels; print(_kernels.HAVE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
