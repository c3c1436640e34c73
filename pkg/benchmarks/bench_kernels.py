"""Time the compiled likelihood kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 200] [--fit]

Each kernel is called on a fixed random instance and the median wall time
per call is reported for both backends. ``--fit`` also times one short
sampler run per kernel-backed model with the active backend.
"""
import argparse
import statistics
import time

import numpy as np

from bayesens import _pykernels, kernels

try:
    from bayesens import _ckernels
except ImportError:
    _ckernels = None


def unmeasured_instance(rng, n):
    return (
        rng.normal(size=3), rng.normal(size=2), -0.8, 0.9, rng.normal(size=n),
        rng.integers(0, 2, n).astype(float), rng.integers(0, 2, n).astype(float), rng.integers(0, 2, n).astype(float),
    )


def tsb_instance(rng, n, K):
    nu = rng.dirichlet(np.ones(K))
    loc = [rng.normal(size=K) for _ in range(3)]
    sigma = rng.uniform(0.5, 2.0, K)
    treat = [rng.normal(size=K) for _ in range(3)]
    phi = rng.uniform(0.5, 2.0, K)
    delta = (rng.uniform(size=n) < 0.2).astype(float)
    return (np.log(nu), *loc, sigma, *treat, phi, rng.normal(size=4), rng.normal(size=n),
            rng.integers(0, 2, n).astype(float), rng.normal(size=n), delta)


def median_time(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return statistics.median(times)


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    cases = [
        ("unmeasured n=300", "unmeasured_ll_grad", unmeasured_instance(rng, 300)),
        ("unmeasured n=3000", "unmeasured_ll_grad", unmeasured_instance(rng, 3000)),
        ("tsb n=200 K=10", "tsb_ll_grad", tsb_instance(rng, 200, 10)),
        ("tsb n=2000 K=10", "tsb_ll_grad", tsb_instance(rng, 2000, 10)),
        ("tsb n=200 K=50", "tsb_ll_grad", tsb_instance(rng, 200, 50)),
    ]
    print(f"{'case':<20}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for label, name, args in cases:
        py = median_time(getattr(_pykernels, name), args, repeat)
        if _ckernels is None:
            print(f"{label:<20}{py * 1e6:>12.1f}{'n/a':>12}{'n/a':>10}")
            continue
        c = median_time(getattr(_ckernels, name), args, repeat)
        print(f"{label:<20}{py * 1e6:>12.1f}{c * 1e6:>12.1f}{py / c:>10.2f}")


def bench_fits():
    from bayesens.models import TSBMNARModel, UnmeasuredConfoundingModel
    from bayesens.sampler import SamplerConfig, hmc_sample
    from bayesens.synthdata import DgpSpec, generate

    cfg = SamplerConfig(chains=1, warmup=200, iterations=200, seed=1)
    du, _ = generate(DgpSpec("unmeasured", {}, seed=1))
    dc, _ = generate(DgpSpec("mnar-continuous", {}, seed=1))
    for label, model in (
        ("unmeasured fit", UnmeasuredConfoundingModel(du, {"xi1": -1.0, "xi2": 1.0})),
        ("tsb fit K=10", TSBMNARModel(dc)),
    ):
        t = time.perf_counter()
        hmc_sample(model, cfg)
        print(f"{label:<20}{time.perf_counter() - t:>10.2f} s  (1 chain, 200 + 200 iterations, {kernels.BACKEND})")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--fit", action="store_true", help="also time short sampler runs")
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    bench_kernels(args.repeat)
    if args.fit:
        bench_fits()


if __name__ == "__main__":
    main()
