"""Integrate a bundle geodesic in a constant field, compare its base projection
with the Lorentz (Wong) equations and save the trajectory."""
import argparse

from gaugelab.kaluza_klein import lorentz_compare, summary_json
from gaugelab.report import kk_bundle, kk_initial_state


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--group", choices=("U1", "SU2", "SO3"), default="U1")
    p.add_argument("--field", type=float, default=1.5)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="kk_trajectory.csv")
    args = p.parse_args()

    r = lorentz_compare(kk_bundle(args.group, args.field), kk_initial_state(args.group, args.seed), args.T, args.step)
    r["trajectory"].write_csv(args.out)
    print(summary_json(r))
    print(f"trajectory written to {args.out}")


if __name__ == "__main__":
    main()
