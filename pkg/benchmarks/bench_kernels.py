"""Compare the compiled and numpy backends on the hot kernels.

    python benchmarks/bench_kernels.py [--N 512] [--repeat 5]

Reports the best-of-``repeat`` time per call and the largest difference
between the two backends' outputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from warpball._accel import available_backends


def _cases(N: int, rng: np.random.Generator):
    h = 1.0 / N
    W = np.tril(rng.standard_normal((N + 1, N + 1)))
    L = np.tril(rng.standard_normal((N + 1, N + 1)))
    G = rng.standard_normal((2 * N + 1, 3))
    w = rng.uniform(-2, 40, 400) + 1j * rng.uniform(-40, 40, 400)
    return {
        "rowcum": lambda m: m.rowcum(W, h),
        "colcum_rev": lambda m: m.colcum_rev(W, h),
        "picard_apply": lambda m: m.picard_apply(W, L, h),
        "filon_laplace": lambda m: m.filon_laplace(G, h, w),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing numpy only")
    rng = np.random.default_rng(0)
    cases = _cases(args.N, rng)
    print(f"N = {args.N}, best of {args.repeat}")
    print(f"{'kernel':<15}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}{'max diff':>12}")
    for label, fn in cases.items():
        times, outs = {}, {}
        for name, mod in backends.items():
            outs[name] = fn(mod)
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:<15}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in backends)
        if "cython" in times:
            diff = np.max(np.abs(outs["cython"] - outs["numpy"]))
            scale = max(1.0, float(np.max(np.abs(outs["numpy"]))))
            row += f"{times['numpy'] / times['cython']:>9.1f}x{diff / scale:>12.1e}"
        print(row)


if __name__ == "__main__":
    main()
