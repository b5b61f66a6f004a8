"""Compare the numba and numpy Pauli-assembly backends.

    python benchmarks/bench_kernels.py [--n 8 10 12] [--repeat 5]

Prints one line per size with the best wall time of each backend for
assembling a full Heisenberg chain term by term, and checks that both
backends give bit-identical matrices.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lowtrot import _kernels


def _strings(n: int):
    for i in range(n - 1):
        for a in "XYZ":
            yield (i, i + 1), a + a
    for i in range(n):
        yield (i,), "X"


def assemble(n: int, force: str) -> np.ndarray:
    out = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for sites, letters in _strings(n):
        _kernels.accumulate_pauli(out, n, sites, letters, 0.25, force=force)
    return out


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[6, 8, 10, 12])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    if "numba" in backends:
        assemble(2, "numba")  # compile outside the timed region
    print(f"{'N':>3} " + " ".join(f"{b + ' [ms]':>14}" for b in backends) + f" {'speedup':>8}")
    for n in args.n:
        ref = assemble(n, "numpy")
        times = {}
        for b in backends:
            if not np.array_equal(assemble(n, b), ref):
                raise SystemExit(f"backend {b} disagrees with numpy at N={n}")
            times[b] = best_time(lambda n=n, b=b: assemble(n, b), args.repeat)
        speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{n:>3} " + " ".join(f"{1000 * times[b]:>14.3f}" for b in backends) + f" {speed:>8.2f}")


if __name__ == "__main__":
    main()
