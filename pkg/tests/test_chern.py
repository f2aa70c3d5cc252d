import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from gaugelab.chern import (
    ORIENTATION_SIGN,
    chern_form,
    chern_normalisation,
    chern_number,
    chern_report,
    make_monopole,
)
from gaugelab.connection import ConnectionState, GaugeMap
from gaugelab.errors import DegreeError, TopologyError
from gaugelab.grid import Chart
from gaugelab.samples import random_connection
from gaugelab.scenarios import north_bump


def flux_oracle_sign() -> int:
    """Charge-1 monopole: Omega = (i/2) sin(theta) dtheta ^ dphi on the north gauge.

    Integrate the closed form with scipy and normalise by i/(2 pi).
    """
    flux_im, _ = dblquad(lambda th, ph: 0.5 * math.sin(th), 0.0, 2 * math.pi, 0.0, math.pi)
    return int(round(np.real(chern_normalisation(1) * 1j * flux_im)))


def test_orientation_sign_matches_flux_oracle():
    assert flux_oracle_sign() == ORIENTATION_SIGN


@pytest.mark.parametrize("n", [-2, -1, 0, 1, 2])
def test_monopole_chern_numbers(n):
    b = make_monopole(n)
    assert b.overlap_residual() < 1e-12
    assert chern_number(b) == pytest.approx(ORIENTATION_SIGN * n, abs=1e-3)


def test_chern_number_converges_with_resolution():
    devs = [abs(chern_number(make_monopole(1, (N, 2 * N))) + 1) for N in (32, 64, 128)]
    assert devs[2] < devs[1] < devs[0]
    assert math.log2(devs[1] / devs[2]) > 1.8


def test_single_patch_perturbation_leaves_number_unchanged():
    b = make_monopole(2)
    kappa = north_bump(b.north.chart, 0.5)
    moved = b.with_connections(north=b.north + kappa)
    assert chern_number(moved) == pytest.approx(chern_number(b), abs=1e-5)


def test_bad_gluing_is_rejected():
    b = make_monopole(1)
    wrong = make_monopole(2)
    with pytest.raises(TopologyError):
        chern_number(b.with_connections(south=wrong.south))


def test_transition_must_be_cocycle():
    b = make_monopole(1)
    ch = b.transition.chart
    theta = np.broadcast_to(ch.coords()[0], ch.dims)
    vals = np.exp(1j * theta)[..., None, None]
    broken = type(b)(b.charge, b.sphere, b.north, b.south, GaugeMap(ch, "U1", vals))
    with pytest.raises(TopologyError):
        chern_number(broken)


def test_torus_connection_has_zero_first_chern_number():
    c = random_connection(Chart.torus((16, 16)), "U1", 3, max_mode=1)
    assert abs(chern_number(c)) < 1e-12


def test_second_chern_form_needs_four_dimensions():
    c = ConnectionState.trivial(Chart.torus((4, 4)), "SU2")
    with pytest.raises(DegreeError):
        chern_form(c, 2)


def test_second_chern_number_on_torus_vanishes_for_periodic_data():
    c = random_connection(Chart.torus((8,) * 4), "SU2", 1, max_mode=1, amplitude=0.5)
    assert abs(chern_number(c, 2)) < 1e-10


def test_report_fields():
    r = chern_report(1, (64, 128))
    assert r["nearest_integer"] == ORIENTATION_SIGN
    assert r["deviation"] < 1e-3
