"""Command-line scenario runner.

Subcommands: ``verify``, ``constants``, ``exact``, ``flow``, ``ode``.
Exit codes: 0 on a clean pass, 2 if any invariant or inequality is violated,
1 on configuration or I/O errors.  With ``--output NAME`` the run writes
``NAME.csv``, ``NAME.summary.json`` and ``NAME.violations.json``; otherwise
the CSV goes to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone

import numpy as np

from . import constants as const
from . import exact as ex
from . import flow as fl
from . import gaussian as ga
from . import suites
from .errors import ConfigInvalid, IoFailure, PinchlabError

COMMANDS = ("verify", "constants", "exact", "flow", "ode")
FAMILIES = ("cylinder", "sphere", "product", "profile_cylinder", "profile_sphere",
            "perturbed_cylinder", "bump")


@dataclass
class ScenarioConfig:
    command: str = "constants"
    n: int = 5
    codim: int = 1
    eps0: float = 0.01
    eps: float = 0.01
    L: float = 2.0
    Lambda: float | None = None
    family: str = "cylinder"
    p: int = 2
    q: int = 2
    k: int = 1
    radius: float = 1.0
    amp: float = 0.05
    mode: int = 4
    M: int = 64
    dt: float | None = None
    t0: float = 0.0
    t1: float = 1.0
    steps: int = 50
    n_range: str | None = None  # verify: 2..8, constants: 2..12
    m_range: str = "1..3"
    suite: str = "all"
    samples: int = 10000
    seed: int | None = None
    C1_range: str = "0.1..10"
    t0_range: str = "-4..-0.25"
    J0_range: str = "0.25..4"
    grid: int = 0
    output: str | None = None
    reproducible: bool = False
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"unknown command {self.command!r}")
        if self.family not in FAMILIES:
            raise ConfigInvalid(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 2:
            raise ConfigInvalid("n must be >= 2")
        if self.samples < 1 or self.M < 5 or self.steps < 1:
            raise ConfigInvalid("samples, M and steps must be positive (M >= 5)")
        if not self.radius > 0 or not self.t1 > self.t0:
            raise ConfigInvalid("need radius > 0 and t1 > t0")
        if self.dt is not None and not self.dt > 0:
            raise ConfigInvalid("dt must be positive")
        if self.Lambda is not None and not self.Lambda > 0:
            raise ConfigInvalid("Lambda must be positive")
        if self.family == "cylinder" and not 0 <= self.k <= self.n - 1:
            raise ConfigInvalid("cylinder needs 0 <= k <= n-1")
        if self.command == "verify":
            try:
                suites.resolve(self.suite)
            except KeyError:
                raise ConfigInvalid(f"unknown suite {self.suite!r}") from None
        if self.n_range is None:
            self.n_range = "2..8" if self.command == "verify" else "2..12"
        for name in ("n_range", "m_range"):
            parse_int_range(getattr(self, name))
        for name in ("C1_range", "t0_range", "J0_range"):
            parse_float_range(getattr(self, name))
        return self


def parse_int_range(text):
    try:
        if ".." in text:
            a, b = text.split("..")
            vals = list(range(int(a), int(b) + 1))
        else:
            vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigInvalid(f"bad integer range {text!r}") from None
    if not vals:
        raise ConfigInvalid(f"empty range {text!r}")
    return vals


def parse_float_range(text):
    try:
        a, b = (float(v) for v in text.split(".."))
    except ValueError:
        raise ConfigInvalid(f"bad range {text!r}; expected LO..HI") from None
    return a, b


# ---------------------------------------------------------------- output


@dataclass
class RunOutput:
    header: list
    rows: list
    summary: dict
    violations: list

    @property
    def exit_code(self) -> int:
        return 2 if self.violations else 0


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.16e" % float(v)
    return str(v)


def render_csv(out: RunOutput, cfg: ScenarioConfig) -> str:
    buf = io.StringIO()
    if not cfg.reproducible:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        buf.write(f"# pinchlab {cfg.command} generated {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(out.header)
    for row in out.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


def _clean(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def write_outputs(out: RunOutput, cfg: ScenarioConfig, stdout=None):
    text = render_csv(out, cfg)
    summary = dict(out.summary)
    summary.update({"command": cfg.command, "exit_code": out.exit_code,
                    "violations": len(out.violations)})
    if not cfg.reproducible:
        summary["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if cfg.output is None:
        (stdout or sys.stdout).write(text)
        return
    try:
        d = os.path.dirname(cfg.output)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(cfg.output + ".csv", "w") as fh:
            fh.write(text)
        with open(cfg.output + ".summary.json", "w") as fh:
            json.dump(_clean(summary), fh, indent=2, sort_keys=True, default=_json_default)
        with open(cfg.output + ".violations.json", "w") as fh:
            json.dump(_clean(out.violations), fh, indent=2, default=_json_default)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


# ------------------------------------------------------------------ commands


def cmd_constants(cfg):
    header = ["n", "c_n", "c0", "delta", "sigma", "log_C0", "C0", "extended"]
    rows = []
    for n in parse_int_range(cfg.n_range):
        cn = const.compute_cn(n)
        if not cfg.eps0 < cn:
            raise ConfigInvalid(f"eps0 = {cfg.eps0} is not below c_{n} = {cn}")
        pc = const.planarity_constants(n, cfg.eps0)
        rows.append([n, pc.c_n, pc.c0, pc.delta, pc.sigma, pc.log_C0, pc.C0, pc.extended])
    return RunOutput(header, rows, {"eps0": cfg.eps0, "rows": len(rows)}, [])


def cmd_verify(cfg, seed):
    header = ["suite", "n", "m", "samples", "max_residual", "violations", "kind"]
    rows, viol = [], []
    names = suites.resolve(cfg.suite)
    ns, ms = parse_int_range(cfg.n_range), parse_int_range(cfg.m_range)
    for name in names:
        for r in suites.run_suite(name, ns, ms, cfg.samples, seed):
            rows.append([r.suite, r.n, r.m, r.samples, r.max_residual, len(r.violations), r.kind])
            for v in r.violations:
                viol.append(dict(v, suite=r.suite, seed=seed))
    return RunOutput(header, rows, {"suite": cfg.suite, "seed": seed, "samples": cfg.samples,
                                    "checks": len(rows)}, viol)


def _families_for_exact(cfg):
    n = cfg.n
    fams = []
    if cfg.family in ("sphere", "cylinder"):
        fams.append(ex.sphere(n, 1.0) if cfg.family == "sphere" else ex.cylinder(n, cfg.k, 1.0))
    elif cfg.family == "product":
        fams.append(ex.sphere_product(cfg.p, cfg.q, 1.0, 1.0))
    else:
        raise ConfigInvalid("exact supports families sphere, cylinder, product")
    return fams


def cmd_exact(cfg):
    header = ["family", "n", "k", "p", "q", "t", "ratio", "planarity_ratio", "lambda1_over_H",
              "status", "shrinker_residual", "shrinker_residual_2x_over_H", "evolution_residual"]
    rows, viol = [], []
    t = -abs(cfg.t1) if cfg.t1 != 0 else -1.0
    pc_c0 = const.compute_cn(cfg.n)
    base = _families_for_exact(cfg)[0]
    sweep = [base]
    if cfg.family == "cylinder" and cfg.extra.get("sweep_k", True):
        sweep = [ex.cylinder(cfg.n, k, 1.0) for k in range(cfg.n)]
    for fam in sweep:
        on = fam.self_similar(t)
        iv = ex.invariants_of(on, pc_c0)
        rep = ex.pinching_classification(on)
        big = on.with_radii([2 * r for r in on.radii], t)
        res = ex.shrinker_residual(on, t)
        res2 = ex.shrinker_residual(big, t) / math.sqrt(ex.invariants_of(big).H2)
        evo = fl.evolution_residual_f(on, pc_c0)
        p, q = (fam.sphere_dims + (0, 0))[:2] if fam.kind == "sphere_product" else (0, 0)
        rows.append([fam.kind, fam.n, fam.flat, p, q, t, iv.ratio, iv.planarity_ratio,
                     iv.lambda1 / math.sqrt(iv.H2), rep.status, res, res2, evo])
        if res >= 1e-12 or res2 <= 0.1 or evo >= 1e-10:
            viol.append({"operation": "exact", "family": fam.kind, "n": fam.n, "k": fam.flat,
                         "t": t, "shrinker_residual": res, "scaled_residual": res2,
                         "evolution_residual": evo})
    return RunOutput(header, rows, {"family": cfg.family, "t": t}, viol)


def _flow_snapshots(cfg):
    """Snapshots, codimension and a pinched flag for the requested family."""
    n, fam = cfg.n, cfg.family
    if fam in ("cylinder", "sphere"):
        sol = ex.cylinder(n, cfg.k, cfg.radius) if fam == "cylinder" else ex.sphere(n, cfg.radius)
        sol = ex.HomogeneousSolution(sol.kind, sol.sphere_dims, sol.radii, sol.flat, cfg.t0)
        T = cfg.t0 + sol.collapse_time()
        t_end = min(cfg.t1, cfg.t0 + 0.99 * sol.collapse_time())
        times = np.linspace(cfg.t0, t_end, cfg.steps + 1)
        snaps = []
        for t in times:
            s = sol.evolve(t - cfg.t0)
            snaps.append(fl.snapshot_of(s, tau=max(T - t, 1e-12)))
        return snaps, T
    if fam == "product":
        a0 = math.sqrt(cfg.radius**2 * cfg.p)
        b0 = math.sqrt(cfg.radius**2 * cfg.q)
        dt = cfg.dt or 1e-4
        traj = fl.product_flow_solve(cfg.p, cfg.q, a0, b0, cfg.t0, cfg.t1, dt)
        stride = max(1, len(traj) // cfg.steps)
        T = cfg.t0 + cfg.radius**2 / 2
        return [fl.snapshot_of(s, tau=max(T - s.t, 1e-12)) for s in traj[::stride]], T
    if fam == "profile_sphere":
        state = fl.sphere_profile(n, cfg.radius, cfg.M + 1, cfg.t0)
    elif fam == "profile_cylinder":
        state = fl.periodic_profile(n, lambda x: cfg.radius + 0 * x, 2 * math.pi, cfg.M, cfg.t0)
    elif fam == "perturbed_cylinder":
        state = fl.periodic_profile(n, lambda x: cfg.radius * (1 + 0.01 * np.cos(x)),
                                    2 * math.pi, cfg.M, cfg.t0)
    else:  # bump
        k = cfg.mode
        state = fl.periodic_profile(n, lambda x: cfg.radius * (1 + cfg.amp * np.cos(k * x)),
                                    2 * math.pi / k, cfg.M, cfg.t0)
    states, _ = fl.profile_flow_solve(state, cfg.t1, dt=cfg.dt)
    stride = max(1, (len(states) - 1) // cfg.steps)
    picked = states[::stride]
    if picked[-1] is not states[-1]:
        picked.append(states[-1])
    T = states[-1].t + (states[-1].t - states[-2].t if len(states) > 1 else 1e-3)
    return [fl.snapshot_of(s) for s in picked], T


def cmd_flow(cfg):
    snaps, T = _flow_snapshots(cfg)
    codim = snaps[0].A.shape[-1]
    n = snaps[0].A.shape[-2]
    viol = []
    summary = {"family": cfg.family, "n": n, "codim": codim, "snapshots": len(snaps), "T": T}
    pc = const.planarity_constants(n, cfg.eps0)
    series = fl.monitor_planarity(snaps, pc, strict=False)
    summary["planarity_status"] = series.status
    viol += series.violations
    t_start = snaps[0].t
    # weighted area: forward-centered at the end of the window
    for rec, snap in zip(series.records, snaps):
        if snap.sample is not None and snap.t < T:
            rec.weighted_area = ga.weighted_integral(snap.sample, 1.0, ga.forward(T, snap.t))
    if series.status == "ok":
        Lam = cfg.Lambda if cfg.Lambda is not None else max(
            r.weighted_area for r in series.records) * (1 + 1e-9)
        fres = ga.F_functional([s.t - t_start for s in snaps], [s.sample for s in snaps],
                               series.log_utilde_fields, pc.log_C0, Lam, T - t_start)
        for rec, lf in zip(series.records, fres.trajectory.log_values):
            rec.F = math.exp(lf) if lf > -745 else 0.0
        summary["Lambda"] = Lam
        if fres.violated:
            viol.append({"operation": "F_functional", "max_log_F": float(fres.trajectory.log_values.max())})
    if codim == 1:
        cc = const.convexity_constants(n, cfg.L, cfg.eps, cfg.Lambda or 1.0)
        cser = fl.monitor_convexity(snaps, cc, strict=False)
        summary["convexity_status"] = cser.status
        viol += cser.violations
        for rec, crec in zip(series.records, cser.records):
            rec.max_Geps, rec.max_G = crec.max_Geps, crec.max_G
        if cser.status == "ok":
            jt = ga.J_functional([s.t - T for s in snaps], [s.sample for s in snaps],
                                 cser.log_G_fields, cc.p)
            for rec, lj in zip(series.records, jt.log_values):
                rec.J = math.exp(lj) if lj > -745 else 0.0
    min_f = series.column("min_f")
    if series.status == "ok" and len(min_f) > 1:
        drops = np.diff(min_f) < -1e-4 * np.abs(min_f[1:])
        summary["min_f_nondecreasing"] = not bool(np.any(drops))
    rows = [rec.row() for rec in series.records]
    for row in rows:
        row[0] = row[0] + t_start
    return RunOutput(list(fl.COLUMNS), rows, summary, viol)


def cmd_ode(cfg):
    header = ["C1", "t0", "J0", "t_min", "t_blow_exact", "t_blow_numeric", "extent_ratio", "ok"]
    (c_lo, c_hi), (t_lo, t_hi), (j_lo, j_hi) = (parse_float_range(cfg.C1_range),
                                                parse_float_range(cfg.t0_range),
                                                parse_float_range(cfg.J0_range))
    shape = (5, 5, 4) if cfg.grid == 0 else (cfg.grid,) * 3
    rows, viol = [], []
    for C1 in np.geomspace(c_lo, c_hi, shape[0]):
        for t0 in -np.geomspace(-t_lo, -t_hi, shape[1]):
            for J0 in np.geomspace(j_lo, j_hi, shape[2]):
                r = ga.ancient_ode_rigidity(float(C1), float(t0), float(J0))
                ok = r.t_blow_numeric >= r.t_min
                rows.append([C1, t0, J0, r.t_min, r.t_blow_exact, r.t_blow_numeric,
                             r.extent_ratio, ok])
                if not ok:
                    viol.append({"operation": "ancient_ode_rigidity", "C1": C1, "t0": t0,
                                 "J0": J0, "t_min": r.t_min, "t_blow": r.t_blow_numeric})
    ratios = [row[6] for row in rows]
    # the equality ODE's backward extent relative to the integrated bound
    summary = {"grid_points": len(rows), "extent_ratio_min": min(ratios),
               "within_factor_2": sum(r >= 0.5 for r in ratios)}
    return RunOutput(header, rows, summary, viol)


def run(cfg: ScenarioConfig, stdout=None) -> int:
    """Execute one scenario and write its artifacts; returns the exit code."""
    cfg.validate()
    seed = cfg.seed if cfg.seed is not None else int(os.environ.get("PINCHLAB_SEED", "0"))
    if cfg.command == "constants":
        out = cmd_constants(cfg)
    elif cfg.command == "verify":
        out = cmd_verify(cfg, seed)
    elif cfg.command == "exact":
        out = cmd_exact(cfg)
    elif cfg.command == "flow":
        out = cmd_flow(cfg)
    else:
        out = cmd_ode(cfg)
    write_outputs(out, cfg, stdout)
    return out.exit_code


# ------------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with scenario fields; flags override it")
    common.add_argument("--output", "-o", help="artifact path prefix (writes .csv/.summary.json/.violations.json)")
    common.add_argument("--seed", type=int)
    common.add_argument("--reproducible", action="store_true", default=None,
                        help="omit timestamps so identical runs are byte-identical")
    common.add_argument("--n", type=int)

    p = _Parser(prog="pinchlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("verify", parents=[common], help="randomized identity/inequality suites")
    s.add_argument("--suite", help="suite or group: " + ", ".join(suites.GROUPS))
    s.add_argument("--samples", type=int)
    s.add_argument("--n-range", dest="n_range")
    s.add_argument("--m-range", dest="m_range")

    s = sub.add_parser("constants", parents=[common], help="table of pinching constants")
    s.add_argument("--n-range", dest="n_range")
    s.add_argument("--eps0", type=float)

    s = sub.add_parser("exact", parents=[common], help="invariants of exact solutions")
    s.add_argument("--family", choices=("sphere", "cylinder", "product"))
    s.add_argument("--k", type=int)
    s.add_argument("--p", type=int)
    s.add_argument("--q", type=int)
    s.add_argument("--t", dest="t1", type=float, help="evaluation time (negative)")

    s = sub.add_parser("flow", parents=[common], help="run a reduced flow with monitors")
    s.add_argument("--family", choices=FAMILIES)
    for name, typ in (("k", int), ("p", int), ("q", int), ("M", int), ("mode", int),
                      ("steps", int), ("eps0", float), ("eps", float), ("L", float),
                      ("Lambda", float), ("radius", float), ("amp", float), ("dt", float),
                      ("t0", float), ("t1", float)):
        s.add_argument(f"--{name}", type=typ)

    s = sub.add_parser("ode", parents=[common], help="ancient ODE rigidity grid")
    s.add_argument("--C1-range", dest="C1_range")
    s.add_argument("--t0-range", dest="t0_range")
    s.add_argument("--J0-range", dest="J0_range")
    s.add_argument("--grid", type=int)
    return p


def config_from_args(argv) -> ScenarioConfig:
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from exc
    known = {f.name for f in fields(ScenarioConfig)}
    extra = {k: v for k, v in values.items() if k not in known}
    values = {k: v for k, v in values.items() if k in known}
    for k, v in vars(args).items():
        if k in known and v is not None:
            values[k] = v
    values["command"] = args.command
    try:
        cfg = ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
    cfg.extra.update(extra)
    return cfg


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except (ConfigInvalid, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PinchlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
