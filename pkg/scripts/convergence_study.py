"""Observed orders of the discrete identities on seeded SU(2) data over T^3.

Prints the gauge-covariance defect, the Bianchi residual and the D o D
residual for a ladder of resolutions, with the order between neighbours.

    python scripts/convergence_study.py --resolutions 8 16 32 64
"""
import argparse
from dataclasses import dataclass

import numpy as np

from gaugelab.connection import bianchi_residual, conjugate, curvature, dd_residual, gauge_transform
from gaugelab.grid import Chart
from gaugelab.report import order
from gaugelab.samples import random_algebra_form, random_connection, random_gauge_map


@dataclass(frozen=True)
class StudyConfig:
    resolutions: tuple[int, ...] = (8, 16, 32, 64)
    seed: int = 7
    group: str = "SU2"


def measure(cfg: StudyConfig, n: int) -> dict:
    chart = Chart.torus((n,) * 3)
    c = random_connection(chart, cfg.group, cfg.seed, max_mode=1)
    g = random_gauge_map(chart, cfg.group, cfg.seed + 1, max_mode=1, amplitude=0.5)
    a = random_algebra_form(chart, cfg.group, 1, np.random.default_rng(cfg.seed + 5), max_mode=1)
    return {
        "covariance": (curvature(gauge_transform(c, g)) - conjugate(curvature(c), g)).sup_norm(),
        "bianchi": bianchi_residual(c),
        "dd": dd_residual(c, a),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--resolutions", type=int, nargs="+", default=list(StudyConfig.resolutions))
    p.add_argument("--seed", type=int, default=StudyConfig.seed)
    p.add_argument("--group", default=StudyConfig.group)
    args = p.parse_args()
    cfg = StudyConfig(tuple(args.resolutions), args.seed, args.group)

    rows = [(n, measure(cfg, n)) for n in cfg.resolutions]
    keys = list(rows[0][1])
    print(f"{'N':>5}" + "".join(f"{k:>14}{'order':>8}" for k in keys))
    for i, (n, vals) in enumerate(rows):
        line = f"{n:>5}"
        for k in keys:
            o = order(rows[i - 1][1][k], vals[k], n / rows[i - 1][0]) if i else float("nan")
            line += f"{vals[k]:>14.4e}{o:>8.3f}"
        print(line)


if __name__ == "__main__":
    main()
