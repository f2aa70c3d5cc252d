"""Concrete physical setups shared by the test-suite, scripts and the CLI."""
from __future__ import annotations

import math

import numpy as np

from .connection import ConnectionState, GaugeMap, pure_gauge
from .forms import FrameMetric
from .grid import Chart, FormField
from .samples import random_gauge_map
from .transport import SampledCurve, square_loop

# --- round sphere, SO(3) frame connection -------------------------------------------

# rotated polar axis so that the octant X -> Y -> Z -> X stays inside one chart
_POLE = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
_EQ1 = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
_EQ2 = np.array([0.0, 0.0, 1.0])


def _embedding(theta, phi):
    th, ph = theta[..., None], phi[..., None]
    ring = np.cos(ph) * _EQ1 + np.sin(ph) * _EQ2
    pos = np.cos(th) * _POLE + np.sin(th) * ring
    d_th = -np.sin(th) * _POLE + np.cos(th) * ring
    d_ph = np.sin(th) * (-np.sin(ph) * _EQ1 + np.cos(ph) * _EQ2)
    return pos, d_th, d_ph


def sphere_frame_connection(resolution: int = 512, margin: float = 0.1) -> ConnectionState:
    """Levi-Civita connection of the unit sphere in the ambient R^3 frame.

    On the trivial bundle S^2 x R^3, omega = n dn^T - dn n^T transports
    tangent vectors along the sphere.  The chart is a (theta, phi) box around
    the octant with the rotated pole above.
    """
    lo = (math.pi / 4 - margin, -margin)
    hi = (3 * math.pi / 4 + margin, math.pi / 2 + margin)
    chart = Chart.box(
        (resolution, resolution), lo, hi, FrameMetric(2, 0, ("theta", "phi")), id="s2-octant", orthonormal=False
    )
    pos, d_th, d_ph = _embedding(*chart.coords())

    def omega(d):
        return pos[..., :, None] * d[..., None, :] - d[..., :, None] * pos[..., None, :]

    return ConnectionState.from_components(chart, "SO3", np.stack([omega(d_th), omega(d_ph)]))


def _sphere_chart_point(p):
    return np.array([math.acos(float(np.clip(p @ _POLE, -1, 1))), math.atan2(p @ _EQ2, p @ _EQ1)])


def great_circle_leg(chart: Chart, P, Q, samples: int = 64) -> SampledCurve:
    """Quarter great circle from unit vector P to the orthogonal unit vector Q."""
    P, Q = np.asarray(P, float), np.asarray(Q, float)

    def func(s):
        return _sphere_chart_point(math.cos(s) * P + math.sin(s) * Q)

    def deriv(s):
        p = math.cos(s) * P + math.sin(s) * Q
        dp = -math.sin(s) * P + math.cos(s) * Q
        th = math.acos(float(np.clip(p @ _POLE, -1, 1)))
        u, v = p @ _EQ1, p @ _EQ2
        du, dv = dp @ _EQ1, dp @ _EQ2
        return np.array([-(dp @ _POLE) / math.sin(th), (u * dv - v * du) / (u * u + v * v)])

    return SampledCurve.from_function(chart, func, deriv, 0.0, math.pi / 2, samples)


def octant_legs(chart: Chart) -> list[SampledCurve]:
    X, Y, Z = np.eye(3)
    return [great_circle_leg(chart, X, Y), great_circle_leg(chart, Y, Z), great_circle_leg(chart, Z, X)]


# --- abelian constant field ------------------------------------------------------------


def constant_u1_field(n: int = 64, field: float = 0.7, half_width: float = 1.0) -> ConnectionState:
    """omega = (i F / 2)(x dy - y dx) on a box, so Omega = i F dx ^ dy."""
    chart = Chart.box((n, n), -half_width, half_width, id="plane")
    x, y = (np.broadcast_to(v, chart.dims) for v in chart.coords())
    comps = np.zeros((2,) + chart.dims + (1, 1), dtype=complex)
    comps[0, ..., 0, 0] = -0.5j * field * y
    comps[1, ..., 0, 0] = 0.5j * field * x
    return ConnectionState.from_components(chart, "U1", comps)


def abelian_square(c: ConnectionState, side: float = 1.0) -> SampledCurve:
    return square_loop(c.chart, (0.0, 0.0), side)


# --- pure gauge on a torus -------------------------------------------------------------


def pure_gauge_torus(n: int, seed: int, group: str = "SU2") -> tuple[ConnectionState, GaugeMap]:
    chart = Chart.torus((n, n), id="flat-torus")
    g = random_gauge_map(chart, group, seed, max_mode=1, amplitude=0.8)
    return pure_gauge(g), g


def contractible_loops(chart: Chart) -> list[SampledCurve]:
    """Two squares with dyadic corners, so they sit on grid nodes at every refinement."""
    L = chart.extent(0)[1] - chart.extent(0)[0]
    return [
        square_loop(chart, (0.5 * L, 0.5 * L), 0.25 * L),
        square_loop(chart, (0.25 * L, 0.625 * L), 0.125 * L),
    ]


# --- single-patch perturbation on the sphere ---------------------------------------


def north_bump(chart: Chart, amplitude: float = 0.3) -> FormField:
    """u(1)-valued 1-form supported in theta < pi/3, smooth at the pole."""
    theta, phi = (np.broadcast_to(v, chart.dims) for v in chart.coords())
    bump = np.where(theta < math.pi / 3, np.sin(theta) ** 2 * np.sin(3 * theta) ** 2, 0.0)
    comps = np.zeros((2,) + chart.dims + (1, 1), dtype=complex)
    comps[0, ..., 0, 0] = 1j * amplitude * bump * np.sin(phi)
    comps[1, ..., 0, 0] = 1j * amplitude * bump * (1 + 0.5 * np.cos(2 * phi))
    return FormField(chart, 1, comps, "u1")

