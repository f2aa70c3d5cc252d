"""First Chern number of charge-n monopole bundles against the grid size."""
import argparse

from gaugelab.chern import chern_number, make_monopole


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--charges", type=int, nargs="+", default=[-2, -1, 0, 1, 2])
    p.add_argument("--resolutions", type=int, nargs="+", default=[32, 64, 128, 256])
    args = p.parse_args()

    print(f"{'N':>6}" + "".join(f"{'n=' + str(n):>16}" for n in args.charges))
    for N in args.resolutions:
        vals = [chern_number(make_monopole(n, (N, 2 * N))) for n in args.charges]
        print(f"{N:>6}" + "".join(f"{v:>16.10f}" for v in vals))


if __name__ == "__main__":
    main()
