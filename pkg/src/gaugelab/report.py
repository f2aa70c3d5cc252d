"""Scenario configuration, verification runs and machine-readable reports."""
from __future__ import annotations

import ast
import configparser
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, GaugeLabError

# --- data model ------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    expected: float | None
    tolerance: float
    passed: bool
    basis: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": _num(self.measured),
            "expected": _num(self.expected),
            "tolerance": _num(self.tolerance),
            "pass": bool(self.passed),
            "basis": self.basis,
            "detail": self.detail,
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def at_most(name, measured, bound, basis="", detail="") -> Check:
    m = float(measured)
    return Check(name, m, None, float(bound), bool(m <= bound), basis, detail)


def at_least(name, measured, bound, basis="", detail="") -> Check:
    m = float(measured)
    return Check(name, m, float(bound), 0.0, bool(m >= bound), basis, detail)


def close_to(name, measured, expected, tol, basis="", detail="") -> Check:
    m = float(measured)
    return Check(name, m, float(expected), float(tol), bool(abs(m - expected) <= tol), basis, detail)


@dataclass(frozen=True)
class Scenario:
    name: str
    target: str
    params: dict = field(default_factory=dict)
    seed: int = 7

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"unknown module target {self.target!r}")
        defaults = TARGETS[self.target].defaults
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown parameters for {self.target}: {sorted(unknown)}")
        for key, val in self.params.items():
            if key.endswith("tol") and not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {key} must be a positive number")

    def get(self, key):
        return self.params.get(key, TARGETS[self.target].defaults[key])

    def to_dict(self) -> dict:
        defaults = TARGETS[self.target].defaults
        params = {k: self.get(k) for k in sorted(defaults)}
        return {"name": self.name, "target": self.target, "seed": self.seed, "params": params}


@dataclass
class Report:
    scenario: Scenario
    checks: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "scenario": self.scenario.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }
        if include_runtime:
            out["runtime"] = round(self.runtime, 3)
        return out


# --- emitters -----------------------------------------------------------------------


def emit(reports, fmt: str = "json", include_runtime: bool = False) -> str:
    """Serialise one report or a list of reports."""
    single = isinstance(reports, Report)
    items = [reports] if single else list(reports)
    if fmt == "json":
        if single:
            payload = items[0].to_dict(include_runtime)
        else:
            payload = {
                "reports": [r.to_dict(include_runtime) for r in items],
                "pass": all(r.passed for r in items),
            }
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if fmt == "text":
        return _text(items, include_runtime)
    raise ConfigError(f"unknown output format {fmt!r}")


def _text(items, include_runtime) -> str:
    lines = []
    for r in items:
        head = f"[{'PASS' if r.passed else 'FAIL'}] {r.scenario.name} ({r.scenario.target})"
        if include_runtime:
            head += f"  {r.runtime:.1f}s"
        lines.append(head)
        rows = [
            (
                c.name,
                f"{c.measured:.6g}",
                "" if c.expected is None else f"{c.expected:.6g}",
                f"{c.tolerance:.3g}",
                "ok" if c.passed else "FAIL",
            )
            for c in r.checks
        ]
        if rows:
            widths = [max(len(row[i]) for row in rows) for i in range(5)]
            for row in rows:
                lines.append("  " + "  ".join(s.ljust(w) for s, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


# --- running ------------------------------------------------------------------------


def run_scenario(s: Scenario) -> Report:
    """Run every check group of the target; a raising group becomes a failed check."""
    spec = TARGETS[s.target]
    report = Report(s)
    t0 = time.perf_counter()
    for group in spec.groups:
        try:
            report.checks.extend(group(s))
        except (GaugeLabError, ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            report.checks.append(
                Check(f"{group.__name__.lstrip('_')}", float("nan"), None, 0.0, False, detail=f"{type(exc).__name__}: {exc}")
            )
    report.runtime = time.perf_counter() - t0
    return report


def order(coarse: float, fine: float, ratio: float = 2.0, floor: float = 0.0) -> float:
    """Observed convergence order; exact results (below ``floor``) count as infinite."""
    if fine <= floor:
        return math.inf
    if coarse <= 0:
        return -math.inf
    return math.log(coarse / fine) / math.log(ratio)


# --- configuration ------------------------------------------------------------------


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def load_config(path) -> list[Scenario]:
    """Scenarios from an INI file: one section per scenario, ``target`` key optional.

    A ``[defaults]`` section may hold ``seed``.  Values are Python literals.
    """
    parser = configparser.ConfigParser(default_section="defaults", interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    seed_text = parser.defaults().get("seed", "7")
    scenarios = []
    for name in parser.sections():
        sec = parser[name]
        keys = [k for k in sec if k not in parser.defaults()]
        target = sec.get("target", name)
        seed = _literal(sec.get("seed", seed_text))
        if not isinstance(seed, int):
            raise ConfigError(f"seed must be an integer in [{name}]")
        params = {k: _literal(sec[k]) for k in keys if k not in ("target", "seed")}
        scenarios.append(Scenario(name, target, params, seed))
    return scenarios


# --- targets -------------------------------------------------------------------------


@dataclass(frozen=True)
class Target:
    defaults: dict
    groups: tuple[Callable, ...]


TARGETS: dict[str, Target] = {}


def _register(name, defaults, *groups):
    TARGETS[name] = Target(defaults, groups)


def _forms_kernel(s):
    from .forms import FrameMetric, PointForm, basis, form_inner, hodge_star, wedge

    worst_sign = 0.0
    for n in range(1, s.get("max_dim") + 1):
        for neg in (0, 1):
            m = FrameMetric(n, neg)
            for p in range(n + 1):
                expect = (-1) ** (p * (n - p) + neg)
                for I in basis(p, n):
                    e = PointForm.basis_form(I, m)
                    worst_sign = max(worst_sign, abs(hodge_star(hodge_star(e))[I] - expect))
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for _ in range(s.get("pairs")):
        n = int(rng.integers(1, s.get("max_dim") + 1))
        m = FrameMetric(n, int(rng.integers(0, 2)))
        p = int(rng.integers(0, n + 1))
        B = basis(p, n)
        a = PointForm(p, m, dict(zip(B, rng.normal(size=len(B)))))
        b = PointForm(p, m, dict(zip(B, rng.normal(size=len(B)))))
        top = wedge(a, hodge_star(b))[tuple(range(1, n + 1))]
        worst = max(worst, abs(top - form_inner(a, b)))
    return [
        at_most("double_star_sign", worst_sign, 0.0, "double Hodge star sign rule"),
        at_most("wedge_star_pairing", worst, s.get("tol"), "defining relation of the Hodge star"),
    ]


_register("forms", {"max_dim": 6, "pairs": 10000, "tol": 1e-12}, _forms_kernel)


def _hodge(s):
    from .grid import Chart, FormField, hodge_decompose
    from .samples import trig_polynomial

    N = s.get("resolution")
    chart = Chart.torus((N, N))
    rng = np.random.default_rng(s.seed)
    comps = {(k,): trig_polynomial(chart, rng, terms=6, max_mode=3) + rng.normal() for k in (1, 2)}
    r = hodge_decompose(FormField.from_components(chart, 1, comps), tol=s.get("tol"))
    return [
        close_to("harmonic_dimension", r.harmonic_dim, 2, 0, "first Betti number of T^2"),
        at_most("orthogonality", max(r.orthogonality.values()), s.get("tol"), "Hodge decomposition"),
        at_most("reconstruction_residual", r.residual_norm, s.get("tol"), "Hodge decomposition"),
    ]


_register("hodge", {"resolution": 64, "tol": 1e-9}, _hodge)


def _gauge_covariance(s):
    from .connection import conjugate, curvature, gauge_transform
    from .grid import Chart
    from .samples import random_connection, random_gauge_map

    errs = []
    for N in (s.get("resolution"), 2 * s.get("resolution")):
        chart = Chart.torus((N,) * 3)
        c = random_connection(chart, "SU2", s.seed, max_mode=1)
        g = random_gauge_map(chart, "SU2", s.seed + 1, max_mode=1, amplitude=0.5)
        errs.append((curvature(gauge_transform(c, g)) - conjugate(curvature(c), g)).sup_norm())
    return [at_least("covariance_order", order(*errs), s.get("min_order"), "curvature transforms by conjugation")]


def _gauge_action(s):
    from .connection import GaugeMap, gauge_transform
    from .grid import Chart
    from .lie import expm
    from .samples import random_connection, trig_polynomial
    from .yang_mills import ym_action

    N = s.get("resolution")
    chart = Chart.torus((N,) * 3)
    rng = np.random.default_rng(s.seed + 2)
    checks = []
    c = random_connection(chart, "U1", s.seed, max_mode=1)
    X = 1j * trig_polynomial(chart, rng, max_mode=1)[..., None, None]
    g = GaugeMap.exp(chart, "U1", X)
    S0 = ym_action(c)
    checks.append(close_to("u1_action_invariance", ym_action(gauge_transform(c, g)), S0, s.get("action_tol") * max(1, abs(S0)), "gauge invariance of the action"))
    c2 = random_connection(chart, "SU2", s.seed, max_mode=1)
    g2 = GaugeMap.constant(chart, "SU2", expm(np.array([[0.3j, 0.4], [-0.4, -0.3j]])))
    S2 = ym_action(c2)
    checks.append(close_to("su2_action_invariance", ym_action(gauge_transform(c2, g2)), S2, s.get("action_tol") * max(1, abs(S2)), "gauge invariance of the action"))
    return checks


_register("gauge", {"resolution": 32, "min_order": 1.8, "action_tol": 1e-8}, _gauge_covariance, _gauge_action)


def _bianchi(s):
    from .connection import bianchi_residual, dd_residual
    from .grid import Chart
    from .samples import random_algebra_form, random_connection

    bi, dd = [], []
    for N in (s.get("resolution"), 2 * s.get("resolution")):
        chart = Chart.torus((N,) * 4)
        c = random_connection(chart, "SU2", s.seed, max_mode=1)
        bi.append(bianchi_residual(c))
        a = random_algebra_form(chart, "SU2", 1, np.random.default_rng(s.seed + 5), max_mode=1)
        dd.append(dd_residual(c, a))
        del a, c
    return [
        at_least("bianchi_order", order(*bi), s.get("min_order"), "Bianchi identity"),
        at_least("dd_order", order(*dd), s.get("min_order"), "D o D acts by the curvature"),
    ]


_register("bianchi", {"resolution": 16, "min_order": 1.8}, _bianchi)


def _octant(s):
    from .lie import rotation_angle_axis
    from .scenarios import octant_legs, sphere_frame_connection
    from .transport import holonomy_of_legs

    c = sphere_frame_connection(s.get("resolution"))
    H = holonomy_of_legs(c, octant_legs(c.chart), s.get("step"))
    angle, _ = rotation_angle_axis(H.value)
    return [close_to("octant_rotation_angle", angle, math.pi / 2, s.get("angle_tol"), "Gauss-Bonnet: enclosed area pi/2")]


def _abelian_loop(s):
    from .scenarios import abelian_square, constant_u1_field
    from .transport import holonomy

    F = 0.7
    c = constant_u1_field(64, F)
    loop = abelian_square(c)
    H = holonomy(c, loop, s.get("step")).value[0, 0]
    return [at_most("abelian_phase", abs(H - np.exp(-1j * F * loop.area)), s.get("phase_tol"), "Stokes theorem")]


def _flatness(s):
    from .scenarios import contractible_loops, pure_gauge_torus
    from .transport import flatness_score, holonomy

    scores, devs = [], []
    for N in (32, 64):
        c, _ = pure_gauge_torus(N, s.seed)
        loops = contractible_loops(c.chart)
        scores.append(flatness_score(c, loops, 1e-2))
        devs.append(max(np.linalg.norm(holonomy(c, L, 1e-2).value - np.eye(2)) for L in loops))
    return [
        at_least("pure_gauge_flatness_order", order(*scores), s.get("min_order"), "flat connections have trivial holonomy"),
        at_most("pure_gauge_holonomy_defect", devs[-1], s.get("flat_tol"), "flat connections have trivial holonomy"),
    ]


_register(
    "holonomy",
    {"resolution": 512, "step": 1e-4, "angle_tol": 1e-4, "phase_tol": 1e-6, "min_order": 1.8, "flat_tol": 1e-2},
    _octant,
    _abelian_loop,
    _flatness,
)


def _ym_flow(s):
    from .forms import FrameMetric
    from .grid import Chart
    from .samples import random_connection
    from .yang_mills import YMConfig, ym_flow

    N = s.get("resolution")
    chart = Chart.torus((N,) * 4, metric=FrameMetric.euclidean(4))
    c0 = random_connection(chart, "U1", s.seed, max_mode=1, amplitude=s.get("amplitude"))
    cfg = YMConfig(step_size=s.get("step"), rel_tol=s.get("rel_tol"), max_iter=s.get("max_iter"))
    _, trace = ym_flow(c0, cfg)
    acts, res = trace.actions, trace.residuals
    increases = int(np.sum(np.diff(acts) > 0))
    return [
        at_most("action_increases", increases, 0, "gradient flow decreases the action"),
        at_most("residual_ratio", res[-1] / res[0], s.get("rel_tol"), "flow converges to a critical point"),
        at_most("iterations", trace.rows[-1][0], s.get("max_iter")),
    ]


_register("ym-flow", {"resolution": 16, "step": 0.1, "amplitude": 0.1, "rel_tol": 1e-8, "max_iter": 500}, _ym_flow)


def _instanton(s):
    from .connection import curvature
    from .grid import Chart, inner
    from .yang_mills import bpst_sample, duality_defect, sd_asd_split, ym_residual

    N, w = s.get("resolution"), s.get("half_width")
    res, hs, checks = [], [], []
    margin = 2 * (2 * w / 15)
    for n in (N // 2, N):
        chart = Chart.box((n,) * 4, -w, w)
        c = bpst_sample(chart)
        res.append(ym_residual(c, chart.layers_for_margin(margin)))
        hs.append(chart.spacing[0])
    F = curvature(c)
    h = hs[-1]
    checks.append(at_most("duality_defect", duality_defect(F, 1), 10 * h * h, "instanton curvature is self-dual"))
    checks.append(at_least("ym_residual_order", order(*res, ratio=hs[0] / hs[1]), s.get("min_order"), "self-dual fields solve the field equation"))
    plus, minus = sd_asd_split(F)
    checks.append(at_most("pythagoras", abs(inner(F, F) - inner(plus, plus) - inner(minus, minus)), s.get("pyth_tol"), "orthogonal self-dual split"))
    return checks


_register("instanton", {"resolution": 32, "half_width": 2.0, "min_order": 1.8, "pyth_tol": 1e-10}, _instanton)


def _chern(s):
    from .chern import ORIENTATION_SIGN, chern_number, make_monopole
    from .connection import ConnectionState
    from .scenarios import north_bump

    res = (s.get("resolution"), 2 * s.get("resolution"))
    checks = []
    for n in s.get("charges"):
        value = chern_number(make_monopole(n, res))
        checks.append(close_to(f"chern_charge_{n}", value, ORIENTATION_SIGN * n, s.get("tol"), "integrality of the first Chern number"))
    b = make_monopole(1, res)
    kappa = north_bump(b.north.chart)
    moved = b.with_connections(north=ConnectionState(b.north.chart, "U1", b.north.omega + kappa))
    checks.append(close_to("single_patch_perturbation", chern_number(moved), chern_number(b), s.get("perturb_tol"), "Chern number is a topological invariant"))
    return checks


_register("chern", {"resolution": 128, "charges": (-2, -1, 0, 1, 2), "tol": 1e-3, "perturb_tol": 1e-5}, _chern)


def _maxwell(s):
    from .grid import Chart, FormField
    from .maxwell import (
        continuity_residual,
        lorentz_coforce,
        maxwell_residuals,
        minkowski_box,
        plane_wave,
        potential_to_F,
        raise_index,
        source_form,
        uniform_B,
        uniform_B_potential,
        uniform_E_potential,
    )
    from .forms import FrameMetric

    floor = s.get("floor")
    checks = []
    N = s.get("resolution")

    def both(make):
        runs = [maxwell_residuals(*make(n)) for n in (N, 2 * N)]
        return [order(runs[0][k], runs[1][k], floor=floor) for k in (0, 1)]

    def torus(n):
        return Chart.torus((n, n, n, 2 * n), metric=FrameMetric.minkowski(), id="minkowski-torus")

    def wave(n):
        em = plane_wave(torus(n))
        return em.F, em.J

    for name, make in (
        ("uniform_B", lambda n: (potential_to_F(uniform_B_potential(minkowski_box(n))), None)),
        ("uniform_E", lambda n: (potential_to_F(uniform_E_potential(minkowski_box(n))), None)),
        ("plane_wave", wave),
    ):
        hom, inh = both(make)
        checks.append(at_least(f"{name}_homogeneous_order", hom, s.get("min_order"), "dF = 0"))
        checks.append(at_least(f"{name}_inhomogeneous_order", inh, s.get("min_order"), "*d*F = J"))

    cont = [continuity_residual(source_form(plane_wave(torus(n)).F)) for n in (N, 2 * N)]
    checks.append(at_least("continuity_order", order(*cont, floor=floor), s.get("min_order"), "charge conservation d*J = 0"))

    em = uniform_B(minkowski_box(8), 1.3)
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for _ in range(20):
        v = np.append(rng.uniform(-0.6, 0.6, 3), 1.0)
        f = raise_index(lorentz_coforce(em.F, v, 0.8, (3, 3, 3, 3)))
        worst = max(worst, abs(f[:3] @ v[:3]))
    checks.append(at_most("magnetic_work", worst, s.get("work_tol"), "magnetic force does no work"))
    return checks


_register("maxwell", {"resolution": 16, "min_order": 1.8, "floor": 1e-11, "work_tol": 1e-10}, _maxwell)


def kk_initial_state(group: str, seed: int):
    from . import lie
    from .kaluza_klein import BundleState

    rng = np.random.default_rng(seed)
    k = len(lie.algebra_basis(group))
    X = lie.from_components(rng.normal(scale=0.5, size=k), group)
    return BundleState(np.zeros(3), lie.expm(X), rng.uniform(-0.5, 0.5, 3), rng.uniform(-0.8, 0.8, k))


def kk_bundle(group: str, field_value: float):
    from .kaluza_klein import BundleSpec

    s = 0 if group == "U1" else 2
    return BundleSpec.constant_field(group, 3, {(s, 0, 1): field_value}, window=([-50.0] * 3, [50.0] * 3))


def _kk_geodesic(s):
    from .kaluza_klein import lorentz_compare

    checks = []
    for group, tol_key in (("U1", "distance_tol"), ("SU2", "su2_distance_tol")):
        b = kk_bundle(group, s.get("field"))
        r = lorentz_compare(b, kk_initial_state(group, s.seed), s.get("T"), s.get("step"))
        checks.append(at_most(f"{group.lower()}_lorentz_distance", r["distance"], s.get(tol_key), "projected geodesics obey the Lorentz force"))
        checks.append(at_most(f"{group.lower()}_charge_drift", r["charge_drift"], s.get("drift_tol"), "charge is a Killing momentum"))
        checks.append(at_most(f"{group.lower()}_energy_drift", r["energy_drift"], s.get("drift_tol"), "geodesic speed is constant"))
    return checks


def _kk_curvature(s):
    from .kaluza_klein import BundleSpec, scalar_curvature_decomposition

    x = np.array([0.2, -0.1, 0.3])
    abel = scalar_curvature_decomposition(kk_bundle("U1", s.get("field")), x)
    su2 = scalar_curvature_decomposition(BundleSpec.constant_field("SU2", 3, {}), x)
    return [
        at_most("abelian_decomposition_residual", abel["residual"], s.get("curvature_tol"), "scalar curvature decomposition"),
        close_to("abelian_total_curvature", abel["PR"], -0.5 * s.get("field") ** 2, s.get("curvature_tol"), "O'Neill formula, one field component"),
        at_most("su2_decomposition_residual", su2["residual"], s.get("curvature_tol"), "scalar curvature decomposition"),
        close_to("su2_group_curvature", su2["PR"], 3.0, s.get("curvature_tol"), "round S^3 of radius sqrt 2"),
    ]


_register(
    "kk-geodesic",
    {
        "T": 10.0,
        "step": 1e-3,
        "field": 1.5,
        "distance_tol": 1e-5,
        "su2_distance_tol": 1e-4,
        "drift_tol": 1e-8,
        "curvature_tol": 1e-8,
    },
    _kk_geodesic,
    _kk_curvature,
)

SUITE_ORDER = ("forms", "hodge", "gauge", "bianchi", "holonomy", "ym-flow", "instanton", "chern", "maxwell", "kk-geodesic")


def suite(seed: int = 7) -> list[Scenario]:
    return [Scenario(name, name, {}, seed) for name in SUITE_ORDER]
