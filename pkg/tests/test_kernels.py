"""Compiled and pure-Python likelihood kernels agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from bayesens import _pykernels, kernels

try:
    from bayesens import _ckernels
except ImportError:  # pragma: no cover - exercised only without a build
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def unmeasured_args(rng, n=50):
    return (
        rng.normal(size=3), rng.normal(size=2), float(rng.normal()), float(rng.normal()), rng.normal(size=n),
        rng.integers(0, 2, n).astype(float), rng.integers(0, 2, n).astype(float), rng.integers(0, 2, n).astype(float),
    )


def tsb_args(rng, K=4, n=40):
    nu = rng.dirichlet(np.ones(K))
    comps = [rng.normal(size=K) for _ in range(3)]
    sigma = rng.uniform(0.5, 2.0, K)
    comps2 = [rng.normal(size=K) for _ in range(3)]
    phi = rng.uniform(0.5, 2.0, K)
    xi = rng.normal(size=4)
    delta = (rng.uniform(size=n) < 0.3).astype(float)
    return (np.log(nu), *comps, sigma, *comps2, phi, xi, rng.normal(size=n),
            rng.integers(0, 2, n).astype(float), rng.normal(size=n), delta)


def assert_same(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert np.allclose(np.asarray(x), np.asarray(y), rtol=1e-12, atol=1e-12)


@needs_c
def test_unmeasured_backends_agree(rng):
    for _ in range(5):
        args = unmeasured_args(rng)
        assert_same(_ckernels.unmeasured_ll_grad(*args), _pykernels.unmeasured_ll_grad(*args))


@needs_c
@pytest.mark.parametrize("K", [1, 2, 10])
def test_tsb_backends_agree(rng, K):
    for _ in range(3):
        args = tsb_args(rng, K=K)
        assert_same(_ckernels.tsb_ll_grad(*args), _pykernels.tsb_ll_grad(*args))


@needs_c
def test_compiled_kernels_accept_read_only_arrays(rng):
    args = unmeasured_args(rng)
    for arr in args:
        if isinstance(arr, np.ndarray):
            arr.setflags(write=False)
    _ckernels.unmeasured_ll_grad(*args)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None:
        assert kernels.BACKEND == "cython"


def test_environment_forces_fallback():
    env = dict(os.environ, BAYESENS_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from bayesens import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_unmeasured_gradient_against_finite_differences(rng):
    args = list(unmeasured_args(rng, n=8))
    f = kernels.unmeasured_ll_grad
    out = f(*args)
    h = 1e-6
    # gradient with respect to xi1 (position 2) and the first u (position 4)
    up, dn = list(args), list(args)
    up[2] += h
    dn[2] -= h
    assert out[3] == pytest.approx((f(*up)[0] - f(*dn)[0]) / (2 * h), rel=1e-6)
    u_up, u_dn = args[4].copy(), args[4].copy()
    u_up[0] += h
    u_dn[0] -= h
    up, dn = list(args), list(args)
    up[4], dn[4] = u_up, u_dn
    assert out[5][0] == pytest.approx((f(*up)[0] - f(*dn)[0]) / (2 * h), rel=1e-6)
