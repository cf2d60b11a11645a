"""End-to-end acceptance checks, one marked group per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from pinchlab import cli, exact, flow, suites
from pinchlab import constants as pc
from pinchlab import gaussian as ga

N_VALUES = range(2, 9)
M_VALUES = range(1, 4)
SAMPLES = 10_000


def _crit(number, title):
    return pytest.mark.criterion(number, title)


# ---------------------------------------------------------------- 1: constants


@_crit(1, "constants table")
def test_constants_table():
    start = time.perf_counter()
    for n in range(2, 31):
        expected = min(Fraction(4, 3 * n), Fraction(3 * (n + 1), 2 * n * (n + 2)))
        assert pc.cn_exact(n) == expected
        assert pc.compute_cn(n) == float(expected)
        # the 4/(3n) branch is strictly smaller exactly from n = 8 on
        assert (Fraction(4, 3 * n) < Fraction(3 * (n + 1), 2 * n * (n + 2))) == (n >= 8)
    assert pc.cn_exact(2) == Fraction(9, 16) and pc.cn_exact(8) == Fraction(1, 6)
    out = cli.cmd_constants(cli.ScenarioConfig(command="constants", n_range="2..30").validate())
    assert len(out.rows) == 29
    assert time.perf_counter() - start < 1.0


# ------------------------------------------------------------------ 2: optimizer


@_crit(2, "Young optimizer and admissible c0")
def test_young_optimizer():
    a2, a3, val = pc.young_optimizer()
    assert abs(a2 - 0.5) <= 1e-6 and abs(a3 - 1.0) <= 1e-6 and abs(val - 0.5) <= 1e-6


@_crit(2, "Young optimizer and admissible c0")
def test_max_admissible_c0():
    for n in range(2, 31):
        assert abs(pc.max_admissible_c0(n) - pc.compute_cn(n)) <= 1e-9


# ------------------------------------------------------------ 3-4: random suites


def _run_group(group):
    results = []
    for name in suites.GROUPS[group]:
        results += suites.run_suite(name, N_VALUES, M_VALUES, SAMPLES, seed=0)
    return results


@_crit(3, "identity suites")
def test_identity_suites():
    start = time.perf_counter()
    results = _run_group("identities")
    elapsed = time.perf_counter() - start
    names = {r.suite for r in results}
    assert {"commutator_identity", "planarity_gradient_identities", "reaction_identity",
            "simons_eigen_formula"} <= names
    for r in results:
        assert r.samples >= SAMPLES
        assert r.max_residual <= 1e-10, (r.suite, r.n, r.m, r.max_residual)
        assert r.passed
    assert elapsed < 60, elapsed


@_crit(4, "inequality suites")
def test_inequality_suites():
    results = _run_group("inequalities")
    names = {r.suite for r in results}
    assert {"ab_inequalities", "reaction_nonnegativity", "commutator_lower_bound",
            "simons_lower_bound"} <= names
    for r in results:
        assert r.samples >= SAMPLES
        assert not r.violations, (r.suite, r.n, r.m, r.violations[:1])


# --------------------------------------------------------------- 5: exact data


@_crit(5, "exact solutions")
def test_cylinder_ratios():
    for n in range(2, 13):
        for k in range(n):
            sol = exact.cylinder(n, k, 1.0)
            assert sol.ratio_exact() == Fraction(1, n - k)
            assert exact.invariants_of(sol).ratio == pytest.approx(1 / (n - k), rel=1e-14)


@_crit(5, "exact solutions")
def test_balanced_products():
    for p in range(1, 5):
        for q in range(1, 5):
            n = p + q
            inv = exact.invariants_of(exact.balanced_sphere_product(p, q))
            assert inv.ratio == pytest.approx(2 / n, rel=1e-14)
            assert inv.Ahat2 / inv.H2 == pytest.approx(1 / n, rel=1e-14)


@_crit(5, "exact solutions")
def test_shrinker_residuals():
    for n, k in [(2, 0), (3, 1), (5, 2), (8, 2)]:
        for t in (-0.1, -1.0, -5.0):
            sol = exact.cylinder(n, k, 1.0).self_similar(t)
            assert exact.shrinker_residual(sol, t) < 1e-12
            big = sol.with_radii([2 * sol.radii[0]])
            H = (n - k) / big.radii[0]
            assert exact.shrinker_residual(big, t) > 0.1 * H
    prod = exact.balanced_sphere_product(2, 3).self_similar(-1.0)
    assert exact.shrinker_residual(prod, -1.0) < 1e-12


# --------------------------------------------------------- 6: evolution of f


@_crit(6, "evolution residual")
def test_evolution_residuals():
    c0 = 0.3
    for n, k in [(2, 0), (4, 1), (6, 2), (8, 3)]:
        for t in (-0.2, -1.0, -3.0):
            sol = exact.cylinder(n, k, 1.0).self_similar(t)
            assert flow.evolution_residual_f(sol, c0) < 1e-10
            assert exact.df_dt_closed_form(sol, c0) == pytest.approx(
                (c0 * (n - k) - 1) / (2 * t * t), rel=1e-12)
    for p, q in [(1, 1), (2, 3), (3, 3)]:
        for t in (-0.2, -1.0):
            sol = exact.balanced_sphere_product(p, q).self_similar(t)
            assert flow.evolution_residual_f(sol, c0) < 1e-10


# ---------------------------------------------------------------- 7: flows


@_crit(7, "flow oracles")
def test_product_flow_closed_form():
    for p, q, a0, b0 in [(1, 1, 1.0, 1.0), (2, 3, 1.0, 1.6), (3, 1, 2.0, 0.9)]:
        t1 = 0.9 * min(a0**2 / (2 * p), b0**2 / (2 * q))
        for s in flow.product_flow_solve(p, q, a0, b0, 0.0, t1, 1e-4):
            assert s.a**2 == pytest.approx(a0**2 - 2 * p * s.t, rel=1e-8)
            assert s.b**2 == pytest.approx(b0**2 - 2 * q * s.t, rel=1e-8)


@_crit(7, "flow oracles")
def test_profile_radii_closed_form():
    for n in (2, 3, 5):
        states, _ = flow.profile_flow_solve(
            flow.periodic_profile(n, lambda x: np.ones_like(x), 2 * math.pi, 64),
            0.9 / (2 * (n - 1)), every=10)
        for s in states:
            assert np.abs(s.r - math.sqrt(1 - 2 * (n - 1) * s.t)).max() < 1e-6
        states, _ = flow.profile_flow_solve(flow.sphere_profile(n, 1.0, 81), 0.9 / (2 * n),
                                            every=10)
        for s in states:
            R = math.sqrt(1 - 2 * n * s.t)
            act = s.active
            assert np.abs(np.sqrt(s.w[act] + s.x[act] ** 2) - R).max() < 1e-6


@_crit(7, "flow oracles")
def test_min_f_nondecreasing_on_pinched_profiles():
    # S^{n-1} x R is strictly pinched for n >= 5 only
    for n in (5, 6, 8):
        k = pc.planarity_constants(n, 0.005)
        state = flow.periodic_profile(n, lambda x: 1 + 0.01 * np.cos(x), 2 * math.pi, 64)
        states, _ = flow.profile_flow_solve(state, 0.8 / (2 * (n - 1)), every=20)
        series = flow.monitor_planarity([flow.snapshot_of(s) for s in states], k)
        f = series.column("min_f")
        assert f[0] > 0
        assert np.all(np.diff(f) >= -1e-4 * np.abs(f[1:]))


# --------------------------------------------------------------- 8: monitors

# (scenario, pinched at eps0 = 0.01)
FLOW_SCENARIOS = [
    (dict(family="cylinder", n=5, k=1), True),
    (dict(family="cylinder", n=8, k=1), True),
    (dict(family="cylinder", n=8, k=2), False),  # ratio 1/6 sits on c_8
    (dict(family="sphere", n=3), True),
    (dict(family="profile_cylinder", n=6, t1=0.08), True),
    (dict(family="profile_cylinder", n=4, t1=0.15), False),
    (dict(family="profile_sphere", n=3, t1=0.15), True),
    (dict(family="perturbed_cylinder", n=5, t1=0.1), True),
    (dict(family="bump", n=3, t1=0.2), False),
    (dict(family="product", p=2, q=3, t1=0.4), False),
]
CONVEX = ("cylinder", "sphere", "profile_cylinder", "profile_sphere")


def _flow(scenario):
    cfg = cli.ScenarioConfig(command="flow", reproducible=True, **scenario).validate()
    out = cli.cmd_flow(cfg)
    cols = {name: np.array([row[i] for row in out.rows], dtype=float)
            for i, name in enumerate(out.header)}
    return out, cols


@_crit(8, "monitors")
@pytest.mark.parametrize("scenario, pinched", FLOW_SCENARIOS,
                         ids=[f"{s['family']}-{s.get('n', '')}" for s, _ in FLOW_SCENARIOS])
def test_monitors(scenario, pinched):
    out, cols = _flow(scenario)
    assert (out.summary["planarity_status"] == "ok") == pinched
    if pinched:
        log_C0 = pc.planarity_constants(out.summary["n"], 0.01).log_C0
        assert np.all(cols["log_max_utilde"] <= log_C0)
        assert np.all(cols["F"] <= 1 + 1e-6)
        assert not out.violations
    if scenario["family"] in CONVEX:
        assert np.all(cols["max_Geps"] == 0)
    if out.summary.get("convexity_status") == "ok":
        assert not [v for v in out.violations if v.get("operation") == "F_functional"]


# ---------------------------------------------------------------- 9: Gaussian


@_crit(9, "Gaussian analysis")
def test_plane_weighted_area():
    for n in (1, 2, 3, 6):
        for t in (-0.1, -1.0, -10.0):
            smp = ga.sample_homogeneous(exact.plane(n), -t)
            assert abs(ga.weighted_integral(smp, 1.0, ga.backward(t)) - 1) <= 1e-6


@_crit(9, "Gaussian analysis")
def test_self_similar_density_constant():
    for sol in (exact.cylinder(4, 1, 1.0), exact.sphere(3, 1.0),
                exact.balanced_sphere_product(2, 2)):
        vals = []
        for t in (-0.05, -0.5, -1.0, -8.0):
            s = sol.self_similar(t)
            vals.append(ga.weighted_integral(ga.sample_homogeneous(s, -t), 1.0, ga.backward(t)))
        assert max(vals) - min(vals) <= 1e-6 * vals[0]


@_crit(9, "Gaussian analysis")
def test_ode_rigidity_grid():
    out = cli.cmd_ode(cli.ScenarioConfig(command="ode").validate())
    assert len(out.rows) == 100 and not out.violations
    for row in out.rows:
        assert row[5] >= row[3]
    assert ga.ancient_ode_rigidity(1.0, -1.0, 1.0).t_min == -1.25


# ------------------------------------------------------------ 10: determinism

DETERMINISM_RUNS = [
    ["verify", "--suite", "all", "--samples", "500", "--n-range", "2..5", "--seed", "42"],
    ["constants"],
    ["exact", "--family", "cylinder", "--n", "7"],
    ["flow", "--family", "bump", "--n", "3"],
    ["flow", "--family", "product", "--p", "2", "--q", "2", "--t1", "0.3"],
    ["ode"],
]


@_crit(10, "determinism")
@pytest.mark.parametrize("argv", DETERMINISM_RUNS, ids=lambda a: a[0])
def test_reproducible_bytes(argv, tmp_path):
    for name in ("a", "b"):
        cli.main(argv + ["--reproducible", "-o", str(tmp_path / name)])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
