"""Print orbit counts on n-tuples of distinct elements for each built-in class."""
import argparse

from oligoscope.structures import BOOLEAN, DLO, PURE_SET, RANDOM_GRAPH, count_orbits, enumerate_pair_types, urysohn


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=4)
    args = ap.parse_args()
    kinds = [PURE_SET, RANDOM_GRAPH, DLO, urysohn(2), BOOLEAN]
    print("kind".ljust(14) + "".join(f"n={n}".rjust(10) for n in range(1, args.max_n + 1)))
    for kind in kinds:
        row = []
        for n in range(1, args.max_n + 1):
            try:
                row.append(str(count_orbits(kind, n)))
            except Exception as exc:  # caps are reported, not fatal
                row.append(type(exc).__name__[:9])
        print(str(kind).ljust(14) + "".join(c.rjust(10) for c in row))
    print()
    for n in (1, 2, 3):
        print(f"pure-set pair types at n={n}: {len(enumerate_pair_types(PURE_SET, n))}")


if __name__ == "__main__":
    main()
