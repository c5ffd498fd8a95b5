"""Classify every formula of a bounded corpus and tabulate Stable/Unstable counts."""
import argparse
import collections
import time

from oligoscope.formulas import formula_corpus, to_text
from oligoscope.stability import classify_stability
from oligoscope.structures import ClassKind, free_type


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", default="random-graph")
    ap.add_argument("--depth", type=int, default=2)
    ap.add_argument("--arity", type=int, nargs=2, default=(1, 1), metavar=("M", "N"))
    ap.add_argument("--show", type=int, default=5, help="print this many unstable examples")
    args = ap.parse_args()

    kind = ClassKind.parse(args.kind)
    m, n = args.arity
    p, q = free_type(kind, m), free_type(kind, n)
    counts = collections.Counter()
    shown = 0
    start = time.perf_counter()
    for phi in formula_corpus(kind, (m, n), args.depth):
        v = classify_stability(phi, p, q, with_witness=False)
        counts[v.status] += 1
        if v.status == "unstable" and shown < args.show:
            print(f"unstable: {to_text(phi)}")
            shown += 1
    elapsed = time.perf_counter() - start
    total = sum(counts.values())
    print(f"{kind}, arity {m},{n}, depth {args.depth}: {total} formulas in {elapsed:.1f} s")
    for status, c in sorted(counts.items()):
        print(f"  {status}: {c}")


if __name__ == "__main__":
    main()
