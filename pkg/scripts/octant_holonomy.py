"""Rotation angle of the octant loop on the unit sphere against the enclosed
area, as a function of the transport step and the grid resolution."""
import argparse
import math

from gaugelab.lie import rotation_angle_axis
from gaugelab.scenarios import octant_legs, sphere_frame_connection
from gaugelab.transport import holonomy_of_legs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--resolutions", type=int, nargs="+", default=[64, 128, 256, 512])
    p.add_argument("--steps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    args = p.parse_args()

    print(f"{'N':>6}{'step':>10}{'angle':>20}{'error':>12}")
    for n in args.resolutions:
        c = sphere_frame_connection(n)
        legs = octant_legs(c.chart)
        for step in args.steps:
            angle, _ = rotation_angle_axis(holonomy_of_legs(c, legs, step).value)
            print(f"{n:>6}{step:>10.0e}{angle:>20.15f}{abs(angle - math.pi / 2):>12.3e}")


if __name__ == "__main__":
    main()
