"""Explore the exact coupling semigroup: idempotent scans and the partition join law."""
import argparse
import itertools

from oligoscope.numeric import all_partitions, coupling_compose, coupling_idempotent_scan, partition_join


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=5)
    ap.add_argument("--scan", type=int, default=3, help="size for the idempotent scan")
    args = ap.parse_args()

    idem = coupling_idempotent_scan(args.scan)
    print(f"idempotent couplings found by the scan at n={args.scan}: {len(idem)}")
    for n in range(1, args.max_n + 1):
        parts = all_partitions(n)
        fails = commuting = commuting_fails = 0
        example = None
        for p, q in itertools.product(parts, repeat=2):
            ep, eq = p.coupling(), q.coupling()
            comm = coupling_compose(ep, eq) == coupling_compose(eq, ep)
            ok = coupling_compose(ep, eq) == partition_join(p, q).coupling()
            commuting += comm
            if not ok:
                fails += 1
                commuting_fails += comm
                example = example or (p.blocks, q.blocks)
        print(f"n={n}: {len(parts) ** 2} pairs, e_P e_Q != e_(P v Q) for {fails}; "
              f"{commuting} commuting pairs, {commuting_fails} of them failing")
        if example:
            print(f"  first failure: P={example[0]} Q={example[1]}")


if __name__ == "__main__":
    main()
