"""Benchmark the compiled sampling kernels against the numpy fallback.

Times per-family weight draws and whole-selection total draws at several
sample counts, printing throughput for each backend and the speedup.

    python3 benchmarks/bench_backends.py [--sizes 10000,100000,1000000]
"""

import argparse
import time

import numpy as np

from ccmckp._rng import derive_rng
from ccmckp.backends import available_backends, get_backend
from ccmckp.distributions import WeightSpec, compile_row
from ccmckp.instances import generate_app_instance, generate_lab_instance
from ccmckp.sampling import InstanceSampler

FAMILY_SPECS = [
    ("uniform", WeightSpec("uniform", {"low": 1.0, "high": 3.0})),
    (
        "truncated_normal",
        WeightSpec("truncated_normal", {"mu": 2.0, "sigma": 0.4, "low": 0.8, "high": 3.2}),
    ),
    ("fatigue_life", WeightSpec("fatigue_life", {"shape": 0.3, "scale": 1.5})),
    (
        "bimodal",
        WeightSpec(
            "bimodal", {"weight1": 0.4, "mu1": 1.0, "sigma1": 0.1, "mu2": 2.0, "sigma2": 0.2}
        ),
    ),
    ("gamma", WeightSpec("gamma", {"shape": 4.0, "scale": 0.5})),
    (
        "app_retransmission",
        WeightSpec(
            "app_retransmission",
            {"success_prob": 0.9, "window": 10.0, "attempts": 4, "failure_weight": 200.0},
        ),
    ),
]


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_families(backends, n):
    print(f"\nper-family fill_weights, n={n:,} (M draws/s)")
    header = f"{'family':20s}" + "".join(f"{b:>12s}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for name, spec in FAMILY_SPECS:
        row = compile_row(spec)
        rates = []
        for backend in backends:
            impl = get_backend(backend)
            dt = _time(lambda: impl.fill_weights(row, n, derive_rng(7, name)))
            rates.append(n / dt / 1e6)
        line = f"{name:20s}" + "".join(f"{r:12.1f}" for r in rates)
        if len(rates) == 2:
            line += f"{rates[0] / rates[1]:10.1f}x"
        print(line)


def bench_totals(backends, sizes):
    for label, inst in (
        ("LAB-ls1", generate_lab_instance("ls1", 42)),
        ("APP-ls1", generate_app_instance("ls1", 42)),
    ):
        sampler = InstanceSampler(inst)
        table = sampler.selection_table(tuple(0 for _ in range(inst.class_count)))
        print(f"\nfill_totals on {label} ({inst.class_count} items per draw, M totals/s)")
        header = f"{'n':>12s}" + "".join(f"{b:>12s}" for b in backends)
        if len(backends) == 2:
            header += f"{'speedup':>10s}"
        print(header)
        for n in sizes:
            rates = []
            for backend in backends:
                impl = get_backend(backend)
                dt = _time(lambda: impl.fill_totals(table, n, derive_rng(3, label, n)))
                rates.append(n / dt / 1e6)
            line = f"{n:12,}" + "".join(f"{r:12.2f}" for r in rates)
            if len(rates) == 2:
                line += f"{rates[0] / rates[1]:10.1f}x"
            print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10000,100000,1000000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    backends = list(available_backends())
    print(f"available backends: {backends}")
    if len(backends) < 2:
        print("compiled extension not built; benchmarking the fallback alone")
    bench_families(backends, max(sizes))
    bench_totals(backends, sizes)
    # Parity spot check while we are here.
    rng_a, rng_b = derive_rng(1), derive_rng(1)
    if len(backends) == 2:
        a = get_backend(backends[0]).fill_weights(compile_row(FAMILY_SPECS[4][1]), 100_000, rng_a)
        b = get_backend(backends[1]).fill_weights(compile_row(FAMILY_SPECS[4][1]), 100_000, rng_b)
        agree = np.allclose(a, b, rtol=1e-9, atol=1e-12)
        state = rng_a.bit_generator.state == rng_b.bit_generator.state
        print(f"\nparity: values allclose={agree}, stream states equal={state}")


if __name__ == "__main__":
    main()
