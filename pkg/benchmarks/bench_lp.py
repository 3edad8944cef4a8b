"""Compare the compiled and pure numpy LP kernels.

    python benchmarks/bench_lp.py [--repeat N] [--seed S]

Times three workloads per backend: raw simplex solves on random LPs, witness
LPs (max-min advantage) of pruning size, and the dominance prefilter.  Each
workload is checked for identical answers across backends before timing.
"""

import argparse
import time

import numpy as np

from subsetvi import _kernels


def lp_batch(gen, count, m, n):
    out = []
    for _ in range(count):
        A = gen.uniform(-1, 1, (m, n))
        A[0] = np.abs(A[0]) + 0.1
        out.append((gen.uniform(-1, 1, n), A, gen.uniform(0, 2, m)))
    return out


def game_batch(gen, count, m, k):
    out = []
    for _ in range(count):
        D = gen.normal(size=(m, k))
        M = (D - D.min()) / (D.max() - D.min()) + 1.0
        out.append((np.ones(m), M.T.copy(), np.ones(k)))
    return out


def timed(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        res = fn()
        best = min(best, time.perf_counter() - t)
    return best, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    gen = np.random.Generator(np.random.PCG64(args.seed))
    backends = _kernels.backends()
    workloads = {
        "simplex 20x10 x200": ("lp", lp_batch(gen, 200, 20, 10)),
        "witness k=6 m=150 x200": ("lp", game_batch(gen, 200, 150, 6)),
        "witness k=3 m=40 x1000": ("lp", game_batch(gen, 1000, 40, 3)),
        "prefilter 2000x6": ("mask", gen.normal(size=(2000, 6))),
    }
    print(f"default backend: {_kernels.BACKEND}")
    print(f"{'workload':28s}" + "".join(f"{name:>12s}" for name in backends) + "     speedup")
    for label, (kind, data) in workloads.items():
        times, answers = {}, {}
        for name, mod in backends.items():
            if kind == "lp":
                fn = lambda mod=mod: [mod.simplex_max(c, A, b)[1] for c, A, b in data]
            else:
                fn = lambda mod=mod: mod.dominated_mask(data, 1e-9)
            times[name], answers[name] = timed(fn, args.repeat)
        ref = answers["python"]
        for name, ans in answers.items():
            same = np.array_equal(ans, ref) if kind == "mask" else all(
                np.allclose(a, r, atol=1e-10) for a, r in zip(ans, ref))
            if not same:
                raise SystemExit(f"backend {name} disagrees on {label}")
        row = f"{label:28s}" + "".join(f"{times[n] * 1e3:10.1f}ms" for n in backends)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
