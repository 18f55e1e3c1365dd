"""Catalog build and sweep time against edge count on sparse random bipartite graphs."""
import argparse
import resource
import time

import numpy as np

from netsurrogate.sampler import init_chain, run
from netsurrogate.toy import phone_network, random_bipartite


def measure(n_edges, repeats):
    g = random_bipartite(n_edges, n_edges // 10, seed=1)
    init = sweep = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        s = init_chain(g, seed=0)
        t1 = time.perf_counter()
        run(s, 1)
        t2 = time.perf_counter()
        init, sweep = min(init, t1 - t0), min(sweep, t2 - t1)
    return init, sweep, s.catalogs.null_dim


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=float, nargs="+", default=[1e4, 1e5, 1e6])
    ap.add_argument("--repeats", type=int, default=3)
    a = ap.parse_args()
    run(init_chain(phone_network(2), seed=0), 2)  # JIT warmup
    rows = []
    for n in map(int, a.sizes):
        init, sweep, dim = measure(n, a.repeats)
        rows.append((n, init, sweep))
        print(f"|E| {n:>9,}  init {init:7.3f}s  sweep {sweep:7.3f}s  null_dim {dim:,}")
    n, t_init, t_sweep = map(np.log10, np.array(rows).T)
    if len(rows) > 1:
        print(f"log-log slope: init {np.polyfit(n, t_init, 1)[0]:.2f}, sweep {np.polyfit(n, t_sweep, 1)[0]:.2f}")
    print(f"peak RSS {resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024**2:.2f} GB")


if __name__ == "__main__":
    main()
