"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from otgate._backend import AVERAGE, available_backends


def _cases(rng):
    for n in (10, 30, 60):
        a = rng.dirichlet(np.ones(n))
        b = rng.dirichlet(np.ones(n + 5))
        c = np.ascontiguousarray(rng.uniform(0, 1, (n, n + 5)))
        yield f"transport_simplex {n}x{n + 5}", lambda m, a=a, b=b, c=c: m.transport_simplex(a, b, c)
    for n in (20, 80, 200):
        c = np.ascontiguousarray(rng.uniform(0, 1, (n, n)))
        yield f"hungarian {n}x{n}", lambda m, c=c: m.hungarian(c)
    for n in (50, 200, 500):
        x = rng.uniform(0.1, 1, (n, n))
        d = np.ascontiguousarray(np.triu(x, 1) + np.triu(x, 1).T)
        yield f"linkage average n={n}", lambda m, d=d: m.linkage(d, AVERAGE)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    backends = available_backends()
    names = sorted(backends)
    print(f"{'kernel':32}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, run in _cases(np.random.default_rng(args.seed)):
        best = {}
        for name in names:
            mod = backends[name]
            number = 1
            while timeit.timeit(lambda: run(mod), number=number) < 0.05 and number < 1000:
                number *= 4
            best[name] = min(timeit.repeat(lambda: run(mod), number=number, repeat=args.repeat)) / number
        row = f"{label:32}" + "".join(f"{best[n] * 1e3:10.3f}ms" for n in names)
        if len(names) > 1:
            row += f"{best['python'] / best['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
