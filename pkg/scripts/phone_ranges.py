"""Edge and node weight ranges on the 6-node phone network for both constraint cases."""
import argparse

from netsurrogate.diagnostics import RangeAccumulator
from netsurrogate.sampler import init_chain, run
from netsurrogate.toy import phone_network


def ranges(case: int, samples: int, seed: int):
    g = phone_network(case)
    s = init_chain(g, seed=seed)
    acc = RangeAccumulator(g.edges, g.vertex_count)
    run(s, samples, sink=lambda i, w: acc.update(w))
    return acc.report()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()
    print(f"{'case':>4}  {'edge min':>9}  {'edge max':>9}  {'node min':>9}  {'node max':>9}")
    for case in (1, 2):
        r = ranges(case, a.samples, a.seed)
        (elo, ehi), (vlo, vhi) = r.edge_range, r.vertex_range
        print(f"{case:>4}  {elo:9.4f}  {ehi:9.4f}  {vlo:9.4f}  {vhi:9.4f}")


if __name__ == "__main__":
    main()
