"""Chern forms and Chern numbers; the charge-n monopole on the two-patch sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lie
from .connection import ConnectionState, GaugeMap, cocycle_check, curvature, gauge_transform
from .errors import DegreeError, TopologyError
from .grid import FormField, PatchedField, TwoPatchSphere, integrate_top, trace_field, wedge_fields

# Sign relating the normalised integral (i/2pi) \int F of the charge-1 monopole
# to its charge.  Fixed once from the closed-form flux \int (i/2) sin(theta)
# dtheta dphi = 2 pi i, which normalises to -1; see tests/test_chern.py.
ORIENTATION_SIGN = -1


def chern_form(c: ConnectionState, k: int = 1) -> FormField:
    """tr(Omega ^ ... ^ Omega) with k factors (complex scalar 2k-form)."""
    n = c.chart.ndim
    if k < 1 or 2 * k > n:
        raise DegreeError(f"tr(Omega^{k}) needs 2k <= n = {n}")
    F = curvature(c)
    power = F
    for _ in range(k - 1):
        power = wedge_fields(power, F, "matrix_contract")
    return trace_field(power)


def chern_normalisation(k: int) -> complex:
    return (1j / (2 * math.pi)) ** k / math.factorial(k)


@dataclass(frozen=True, eq=False)
class MonopoleBundle:
    """U(1) bundle over S^2 glued from two trivial patches.

    ``transition`` holds g_SN(phi), which carries the north gauge to the south
    gauge: omega_S = g omega_N g^-1 - (dg) g^-1.
    """

    charge: int
    sphere: TwoPatchSphere
    north: ConnectionState
    south: ConnectionState
    transition: GaugeMap  # sampled on the north chart

    def overlap_rows(self) -> tuple[slice, slice]:
        """Matching theta rows of the two patches inside the overlap band."""
        hn = self.sphere.north.spacing[0]
        offset = int(round((self.sphere.band[0] - self.sphere.north.origin[0]) / hn))
        n_rows = self.sphere.north.dims[0] - offset
        return slice(offset, offset + n_rows), slice(0, n_rows)

    def transitions(self) -> dict:
        rows_n, _ = self.overlap_rows()
        g = self.transition.values[rows_n]
        return {("north", "south"): g, ("south", "north"): lie.dagger(g)}

    def overlap_residual(self) -> float:
        """max |omega_S - (g omega_N g^-1 - (dg) g^-1)| over the overlap band."""
        moved = gauge_transform(self.north, self.transition)
        rows_n, rows_s = self.overlap_rows()
        diff = moved.omega.data[:, rows_n] - self.south.omega.data[:, rows_s]
        return float(np.max(np.abs(diff)))

    def patched(self, form_n: FormField, form_s: FormField) -> PatchedField:
        return PatchedField(self.sphere, form_n, form_s)

    def with_connections(self, north=None, south=None) -> "MonopoleBundle":
        return MonopoleBundle(self.charge, self.sphere, north or self.north, south or self.south, self.transition)


def make_monopole(n: int, resolution=(128, 256)) -> MonopoleBundle:
    """Charge-n monopole: omega_N = (i n/2)(1 - cos theta) dphi, omega_S = -(i n/2)(1 + cos theta) dphi."""
    n = int(n)
    sphere = TwoPatchSphere.build(*resolution)

    def conn(chart, sign):
        theta = chart.coords()[0]
        a = 0.5j * n * (1 - sign * np.cos(theta))
        comps = np.zeros((2,) + chart.dims + (1, 1), dtype=complex)
        comps[1, ..., 0, 0] = sign * np.broadcast_to(a, chart.dims)
        return ConnectionState.from_components(chart, "U1", comps)

    north, south = conn(sphere.north, 1.0), conn(sphere.south, -1.0)
    phi = np.broadcast_to(sphere.north.coords()[1], sphere.north.dims)
    X = (1j * n * phi)[..., None, None]
    g = GaugeMap.exp(sphere.north, "U1", X)
    # analytic derivative: d_theta g = 0, d_phi g = i n g
    dg = np.stack([np.zeros_like(g.values), 1j * n * g.values])
    g = GaugeMap(sphere.north, "U1", g.values, derivative=dg)
    return MonopoleBundle(n, sphere, north, south, g)


def chern_number(bundle, k: int = 1, overlap_tol: float = 1e-2) -> float:
    """Normalised integral (i/2pi)^k / k! of tr(Omega^k).

    ``bundle`` is a :class:`MonopoleBundle` (patchwise integral with the
    partition of unity, after checking the gluing) or a single
    :class:`ConnectionState` on a closed chart.
    """
    norm = chern_normalisation(k)
    if isinstance(bundle, ConnectionState):
        form = chern_form(bundle, k)
        return float(np.real(norm * _integrate_complex(form)))
    if not isinstance(bundle, MonopoleBundle):
        raise TypeError("expected a MonopoleBundle or a ConnectionState")
    report = cocycle_check(bundle.transitions())
    if report["residual"] > 1e-10:
        raise TopologyError(f"transition maps are not mutually inverse: {report['residual']:.2e}")
    ov = bundle.overlap_residual()
    if ov > overlap_tol:
        raise TopologyError(f"patch connections do not glue: overlap residual {ov:.2e}")
    parts = []
    for c in (bundle.north, bundle.south):
        parts.append(chern_form(c, k))
    re = PatchedField(bundle.sphere, *[p.with_data(np.real(norm * p.data)) for p in parts])
    return integrate_top(re)


def _integrate_complex(form: FormField) -> complex:
    re = integrate_top(form.with_data(np.real(form.data)))
    im = integrate_top(form.with_data(np.imag(form.data)))
    return re + 1j * im


def chern_report(n: int, resolution=(128, 256)) -> dict:
    """JSON-ready summary for the chern subcommand."""
    value = chern_number(make_monopole(n, resolution))
    nearest = int(round(value))
    return {
        "charge": int(n),
        "computed": value,
        "nearest_integer": nearest,
        "expected": ORIENTATION_SIGN * int(n),
        "deviation": abs(value - ORIENTATION_SIGN * int(n)),
    }
