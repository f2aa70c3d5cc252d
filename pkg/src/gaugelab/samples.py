"""Seeded smooth test data: trigonometric-polynomial fields on periodic charts."""
from __future__ import annotations

import numpy as np

from . import lie
from .connection import ConnectionState, GaugeMap
from .grid import Chart, FormField


def _wavevectors(n: int, max_mode: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(-max_mode, max_mode + 1, size=(count, n))


def trig_polynomial(
    chart: Chart, rng: np.random.Generator, terms: int = 4, max_mode: int = 2, amplitude: float = 1.0
) -> np.ndarray:
    """Random real function sum a cos(k.x) + b sin(k.x) with integer-periodic k.

    Wave numbers are integers per period of each axis, so the result is
    smooth on the torus regardless of its side lengths.
    """
    n = chart.ndim
    X = chart.coords()
    scale = [2 * np.pi / (chart.extent(k)[1] - chart.extent(k)[0]) for k in range(n)]
    out = np.zeros(chart.dims)
    for kvec in _wavevectors(n, max_mode, terms, rng):
        phase = sum(kvec[i] * scale[i] * X[i] for i in range(n))
        a, b = rng.normal(size=2) * amplitude / np.sqrt(terms)
        out = out + a * np.cos(phase) + b * np.sin(phase)
    return out


def random_algebra_array(chart: Chart, group: str, rng, terms=4, max_mode=2, amplitude=1.0) -> np.ndarray:
    """Algebra-valued function on the grid, shape (*dims, k, k)."""
    basis = lie.algebra_basis(group)
    coeffs = np.stack(
        [trig_polynomial(chart, rng, terms, max_mode, amplitude) for _ in range(len(basis))], axis=-1
    )
    return lie.from_components(coeffs, group)


def random_algebra_form(chart: Chart, group: str, degree: int, rng, **kw) -> FormField:
    from math import comb

    comps = [random_algebra_array(chart, group, rng, **kw) for _ in range(comb(chart.ndim, degree))]
    return FormField(chart, degree, np.stack(comps), lie.algebra_tag(group))


def random_connection(chart: Chart, group: str, seed: int, **kw) -> ConnectionState:
    rng = np.random.default_rng(seed)
    om = random_algebra_form(chart, group, 1, rng, **kw)
    return ConnectionState(chart, group, om)


def random_gauge_map(chart: Chart, group: str, seed: int, **kw) -> GaugeMap:
    rng = np.random.default_rng(seed)
    return GaugeMap.exp(chart, group, random_algebra_array(chart, group, rng, **kw))
