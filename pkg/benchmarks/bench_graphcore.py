"""Throughput comparison of the compiled and pure-Python graph kernels.

Both backends are imported directly, so this runs regardless of which one
the package picked at import time.  Usage:

    python benchmarks/bench_graphcore.py [--graphs 400] [--repeat 5]
"""

import argparse
import random
import time

from molbbo.graphcore import _cygraph, _pygraph


def make_pool(count, seed, max_atoms=9):
    rng = random.Random(seed)
    pool = []
    for _ in range(count):
        types, adj = bytes([rng.randrange(4)]), b"\x00"
        for _ in range(rng.randrange(2, 14)):
            ops = _pygraph.list_mutations(types, adj, max_atoms)
            if not ops:
                break
            types, adj = _pygraph.apply_op(types, adj, rng.choice(ops))
        pool.append((types, adj))
    return pool


def bench(label, fn, repeat):
    best = min(timeit_once(fn) for _ in range(repeat))
    return best


def timeit_once(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--graphs", type=int, default=400)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pool = make_pool(args.graphs, args.seed)
    ops_pool = [(t, a, op) for t, a in pool
                for op in _pygraph.list_mutations(t, a, 9)[:8]]

    def run_mutations(mod):
        return lambda: [mod.list_mutations(t, a, 9) for t, a in pool]

    def run_apply(mod):
        return lambda: [mod.apply_op(t, a, op) for t, a, op in ops_pool]

    def run_canon(mod):
        return lambda: [mod.canonical_perm(t, a) for t, a in pool]

    def run_shingles(mod):
        return lambda: [mod.shingle_codes(t, a) for t, a in pool]

    def run_validity(mod):
        return lambda: [mod.validity_error(t, a, 9) for t, a in pool]

    cases = [
        ("list_mutations", run_mutations, args.graphs),
        ("apply_op", run_apply, len(ops_pool)),
        ("canonical_perm", run_canon, args.graphs),
        ("shingle_codes", run_shingles, args.graphs),
        ("validity_error", run_validity, args.graphs),
    ]
    print("%-16s %12s %12s %9s" % ("kernel", "python op/s", "compiled op/s",
                                   "speedup"))
    for name, factory, nops in cases:
        t_py = bench(name, factory(_pygraph), args.repeat)
        t_cy = bench(name, factory(_cygraph), args.repeat)
        print("%-16s %12.0f %12.0f %8.1fx"
              % (name, nops / t_py, nops / t_cy, t_py / t_cy))


if __name__ == "__main__":
    main()
