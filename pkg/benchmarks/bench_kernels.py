"""Compare the numba and numpy kernel backends on assembly-sized batches.

    python3 benchmarks/bench_kernels.py [--cells 4096] [--repeat 5]

Both backends live in one process: the dispatchers pick numba, and the
``*_numpy`` reference functions are called directly.
"""

import argparse
import time

import numpy as np

from lpsfem import kernels


def _best(fn, repeat):
    fn()  # warm-up (triggers JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cells", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    # shapes of a 2D r=2 enriched element with a degree-10 rule
    nc, nq, nb, d = args.cells, 25, 16, 2
    w = rng.random((nc, nq))
    A = rng.standard_normal((nc, nq, nb, d))
    B = rng.standard_normal((nc, nq, nb, d))
    f = rng.standard_normal((nc, nq, d))
    M = rng.standard_normal((nc, d, d))
    vhat = rng.standard_normal((nq, nb, d))
    jhat = rng.standard_normal((nq, nb, d, d))
    Binv = rng.standard_normal((nc, d, d))

    cases = {
        "weighted_gram": (lambda: kernels.weighted_gram(w, A, B),
                          lambda: kernels.weighted_gram_numpy(w, A, B)),
        "weighted_load": (lambda: kernels.weighted_load(w, A, f),
                          lambda: kernels.weighted_load_numpy(w, A, f)),
        "piola": (lambda: kernels.piola(M, vhat, jhat, Binv),
                  lambda: kernels.piola_numpy(M, np.broadcast_to(vhat, (nc,) + vhat.shape),
                                              np.broadcast_to(jhat, (nc,) + jhat.shape), Binv)),
    }
    print(f"backend={kernels.BACKEND} cells={nc}")
    print(f"{'kernel':<15}{'dispatch [ms]':>15}{'numpy [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for name, (fast, ref) in cases.items():
        tf, tr = _best(fast, args.repeat), _best(ref, args.repeat)
        a, b = fast(), ref()
        diff = max(float(np.abs(x - y).max()) for x, y in
                   zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
        print(f"{name:<15}{tf * 1e3:15.2f}{tr * 1e3:13.2f}{tr / tf:9.2f}{diff:11.2e}")


if __name__ == "__main__":
    main()
