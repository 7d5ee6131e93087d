import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spsg import _fallback, kernels

try:
    from spsg import _kernels
except ImportError:
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_env_var_forces_fallback():
    code = "from spsg import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SPSG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 9)), elements=finite))
def test_simplex_backends_identical(M):
    assert np.array_equal(_kernels.project_simplex_columns(M), _fallback.project_simplex_columns(M))


@needs_ext
@pytest.mark.parametrize("radius", [0, 1, 3, 9, 100])
def test_histogram_backends_identical(radius):
    rng = np.random.default_rng(radius)
    bins = rng.integers(0, 6, (23, 31))
    assert np.array_equal(_kernels.window_histograms(bins, 6, radius),
                          _fallback.window_histograms(bins, 6, radius))


@needs_ext
@pytest.mark.parametrize("compactness", [0.5, 10.0, 40.0])
def test_slic_backends_identical(compactness):
    rng = np.random.default_rng(1)
    lab = rng.random((30, 40, 3)) * 50
    centers = np.array([[*lab[y, x], y, x] for y in (5, 15, 25) for x in (5, 20, 35)], dtype=float)
    la, da = _kernels.slic_assign(lab, centers, 10.0, compactness)
    lb, db = _fallback.slic_assign(lab, centers, 10.0, compactness)
    assert np.array_equal(la, lb) and np.array_equal(da, db)


def test_window_histograms_brute_force():
    rng = np.random.default_rng(3)
    bins = rng.integers(0, 4, (9, 7))
    r = 2
    H = kernels.window_histograms(bins, 4, r)
    for y in range(9):
        for x in range(7):
            win = bins[max(y - r, 0):y + r + 1, max(x - r, 0):x + r + 1].ravel()
            expect = np.bincount(win, minlength=4) / win.size
            assert np.allclose(H[y, x], expect, atol=1e-15)


def test_slic_assign_unreached_pixels():
    lab = np.zeros((20, 20, 3))
    centers = np.array([[0.0, 0.0, 0.0, 2.0, 2.0]])
    labels, dist = kernels.slic_assign(lab, centers, 2.0, 10.0)
    assert labels[19, 19] == -1 and np.isinf(dist[19, 19])
    assert labels[2, 2] == 0 and dist[2, 2] == 0.0


def test_slic_assign_tie_goes_to_first_center():
    lab = np.zeros((5, 5, 3))
    centers = np.array([[0, 0, 0, 2.0, 1.0], [0, 0, 0, 2.0, 3.0]])
    labels, _ = kernels.slic_assign(lab, centers, 3.0, 1.0)
    assert labels[2, 2] == 0
