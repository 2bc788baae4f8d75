import os
import subprocess
import sys

import numpy as np
import pytest

from kboost import _accel, boosting, kernels, spectrum

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("code", [0, 1, 2])
def test_boost_loop_backends_agree(code):
    rng = np.random.default_rng(code)
    n = 64
    K = kernels.build_kernel_matrix(kernels.sobolev1(), kernels.equidistant_design(n)).entries
    y = rng.uniform(-1, 1, n)
    fstar = rng.uniform(-0.5, 0.5, n)
    rec = np.array([0, 10, 100, 300], dtype=np.int64)
    a = boosting.boost_loop(K, y, fstar, 0.5, code, 1.0, 300, rec, True, backend="numpy")
    b = boosting.boost_loop(K, y, fstar, 0.5, code, 1.0, 300, rec, True, backend="numba")
    assert a[0] == b[0] == 0
    for x, z in zip(a[1:], b[1:]):
        np.testing.assert_allclose(x, z, rtol=1e-11, atol=1e-14)


@needs_numba
def test_eigensolver_backends_agree():
    K = kernels.build_kernel_matrix(kernels.gaussian(0.2), kernels.equidistant_design(150)).entries
    a = spectrum.symmetric_eigenvalues(K, backend="numpy")
    b = spectrum.symmetric_eigenvalues(K, backend="numba")
    np.testing.assert_allclose(np.sort(a), np.sort(b), atol=1e-14)


def test_set_backend_round_trip():
    previous = _accel.set_backend("numpy")
    try:
        assert _accel.backend() == "numpy"
        with pytest.raises(ValueError):
            _accel.set_backend("cuda")
    finally:
        _accel.set_backend(previous)


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba" if _accel.HAVE_NUMBA else "numpy")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, KBOOST_DISABLE_NUMBA=flag)
    proc = subprocess.run(
        [sys.executable, "-c", "import kboost; print(kboost.backend())"], env=env, capture_output=True, text=True,
        check=True,
    )
    assert proc.stdout.strip() == expected
