"""Goodness of fit of the chain on the two-edge path against exact cell areas and a rejection oracle."""
import argparse

import numpy as np
from scipy import stats

from netsurrogate.oracle import rejection_sample
from netsurrogate.sampler import init_chain, run
from netsurrogate.toy import path3


def cell_areas(k=8):
    # x >= 1/4, y >= 1/4, x + y <= 3/2: full, half or empty cells on the 8x8 grid
    i, j = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    inside = (i >= 2) & (j >= 2)
    return ((inside & (i + j <= 10)) + 0.5 * (inside & (i + j == 11))) / k**2


def fit(seed, n):
    g = path3()
    X = np.empty((n, 2))

    def sink(i, w):
        X[i] = w
    run(init_chain(g, seed=seed), n, sink=sink)
    area = cell_areas()
    hist, _, _ = np.histogram2d(X[:, 0], X[:, 1], bins=8, range=[[0, 1], [0, 1]])
    mask = area > 0
    p = stats.chisquare(hist[mask], area[mask] / area.sum() * n).pvalue
    ref = rejection_sample(g, 2 * n, seed=seed + 10_000)
    ks = max(stats.ks_2samp(X[:, e], ref[:, e]).statistic for e in range(2))
    return p, ks


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--seeds", type=int, default=10)
    a = ap.parse_args()
    ps = []
    for seed in range(a.seeds):
        p, ks = fit(seed, a.samples)
        ps.append(p)
        print(f"seed {seed:3d}  chi-square p {p:.4f}  max KS {ks:.4f}")
    # under uniformity the p-values are themselves uniform
    print(f"min p {min(ps):.4f}, KS of p-values vs U(0,1): p = {stats.kstest(ps, 'uniform').pvalue:.3f}")


if __name__ == "__main__":
    main()
