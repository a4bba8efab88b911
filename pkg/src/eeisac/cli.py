"""Experiment driver: seeded Monte-Carlo sweeps over scenario parameters with
CSV emission and figure files rendered next to them.

Sweep semantics: each (grid point, trial) pair is solved with the trial's own
channel realization (seed + trial index).  For parameters that only relax or
tighten the feasible set, the sweep walks the grid in the relaxing direction
and also evaluates each trial's previous solution as a warm candidate; the
better of the two is kept, which makes per-trial efficiency curves monotone
by construction.  ``carry=False`` restores fully independent points (the
tradeoff sweep always solves points cold).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics, oracle, solvers
from .scenario import (SystemConfig, db_to_linear, dbm_to_watt, default_config,
                       draw_channels, make_config)

ALGORITHMS = {
    "eec-point": solvers.solve_eec_point,
    "ees-point": solvers.solve_ees_point,
    "eec-extended": solvers.solve_eec_extended,
    "ees-extended": solvers.solve_ees_extended,
}

EXTENDED = {"eec-extended", "ees-extended"}

# sweepable parameters and the direction in which they relax the constraints
SWEEP_PARAMS = {
    "root-crb-deg": "ascending",
    "tau": "ascending",
    "gamma-db": "descending",
    "pmax-dbm": "ascending",
    "K": None,
}

SUMMARY_COLUMNS = ["param", "value", "mean_ee_c", "mean_ee_s",
                   "feasible_frac", "mean_iterations", "mean_wall_time"]
RAW_COLUMNS = ["param", "value", "trial", "seed", "feasible", "ee_c", "ee_s",
               "sum_rate", "p_total", "crb", "iterations", "wall_time"]


@dataclass
class SweepSpec:
    algorithm: str
    param: str
    grid: list
    trials: int = 20
    base: dict = field(default_factory=dict)     # raw config overrides
    theta_deg: float = 90.0
    alpha: complex = 1.0 + 0.0j
    seed: int = 0
    out_dir: str | None = None
    label: str = "sweep"
    jobs: int = 1
    carry: bool = True
    opts: solvers.AlgorithmOptions = field(
        default_factory=solvers.AlgorithmOptions)

    def __post_init__(self):
        if not self.grid or sorted(self.grid) != list(self.grid):
            raise ValueError("grid must be non-empty and sorted")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}")


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list                    # summary dicts, one per grid value
    raw: list                     # per-trial dicts

    def row_values(self, key):
        return [r[key] for r in self.rows]


def _config_for(spec: SweepSpec, value) -> SystemConfig:
    raw = {
        "M": 8, "N_rx": 20, "L": 30, "K": 2, "eps_pa": 0.35,
        "P0": "33 dBm", "Pmax": "30 dBm",
        "sigma_c2": 0.01, "sigma_s2": 1.0,
        "gamma": "10 dB", "rho": "0.15 deg",
    }
    raw.update(spec.base)
    if spec.param == "root-crb-deg":
        raw["rho"] = f"{value} deg"
    elif spec.param == "tau":
        raw["rho"] = float(value)
    elif spec.param == "gamma-db":
        raw["gamma"] = f"{value} dB"
    elif spec.param == "pmax-dbm":
        raw["Pmax"] = f"{value} dBm"
    elif spec.param == "K":
        raw["K"] = int(value)
    if spec.algorithm in EXTENDED and spec.param != "tau" and \
            "rho" not in spec.base:
        # matrix-CRB bound default: twice the best achievable at full power
        m, l_snap = int(raw["M"]), int(raw["L"])
        pmax = _parse_p(raw["Pmax"])
        s2 = float(raw.get("sigma_s2", 1.0))
        raw["rho"] = 2.0 * m ** 3 * s2 / (l_snap * pmax)
    return make_config(raw)


def _parse_p(v):
    if isinstance(v, str):
        return dbm_to_watt(float(v.lower().replace("dbm", "").strip()))
    return float(v)


def _carry_metrics(sol, cfg, channels, extended):
    rep = metrics.report(sol, channels, cfg, extended=extended)
    return rep


def _run_cell(spec_dict: dict, value, trial: int):
    """One (grid value, trial) cell; returns a raw-table row plus the
    solution covariances for the warm-candidate carry."""
    spec = SweepSpec(**spec_dict)
    cfg = _config_for(spec, value).with_(rng_seed=spec.seed + trial)
    channels = draw_channels(cfg, theta=np.deg2rad(spec.theta_deg),
                             alpha=spec.alpha)
    algo = ALGORITHMS[spec.algorithm]
    t0 = time.perf_counter()
    row = {"param": spec.param, "value": value, "trial": trial,
           "seed": cfg.rng_seed}
    try:
        sol = algo(cfg, channels, spec.opts)
        wall = time.perf_counter() - t0
        iters = sum(1 for t in sol.trace if t.get("phase") == "outer")
        row.update(feasible=1, ee_c=sol.achieved["ee_c"],
                   ee_s=sol.achieved["ee_s"], sum_rate=sol.achieved["sum_rate"],
                   p_total=sol.achieved["p_total"], crb=sol.achieved["crb"],
                   iterations=iters, wall_time=wall)
        payload = (sol.W, sol.Rprobe)
    except solvers.InfeasibleScenario:
        wall = time.perf_counter() - t0
        row.update(feasible=0, ee_c=0.0, ee_s=0.0, sum_rate=0.0, p_total=0.0,
                   crb=float("nan"), iterations=0, wall_time=wall)
        payload = None
    return row, payload


def _improve_with_carry(spec, value, row, payload, carried):
    """Keep the better of the fresh solution and the carried-in one."""
    if carried is None:
        return row, payload
    cfg = _config_for(spec, value).with_(rng_seed=spec.seed + row["trial"])
    channels = draw_channels(cfg, theta=np.deg2rad(spec.theta_deg),
                             alpha=spec.alpha)
    extended = spec.algorithm in EXTENDED
    w_c, r_c = carried
    sol_c = metrics.BeamformerSolution(W=w_c, Rprobe=r_c)
    crb_bound = cfg.rho if extended else cfg.rho ** 2
    audit = oracle.audit_solution(sol_c, cfg, channels, extended=extended,
                                  crb_bound=crb_bound)
    if not audit.ok:
        return row, payload
    rep = metrics.report(sol_c, channels, cfg, extended=extended)
    key = "ee_s" if spec.algorithm.startswith("ees") else "ee_c"
    cand = rep.ee_s if key == "ee_s" else rep.ee_c
    if row["feasible"] and cand <= row[key]:
        return row, payload
    new_row = dict(row)
    new_row.update(feasible=1, ee_c=rep.ee_c, ee_s=rep.ee_s,
                   sum_rate=rep.sum_rate, p_total=rep.P_total, crb=rep.crb)
    return new_row, (w_c, r_c)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Grid x trials Monte-Carlo sweep; deterministic given spec.seed."""
    direction = SWEEP_PARAMS[spec.param]
    order = list(range(len(spec.grid)))
    if spec.carry and direction == "descending":
        order = order[::-1]
    spec_dict = {k: getattr(spec, k) for k in
                 ("algorithm", "param", "grid", "trials", "base", "theta_deg",
                  "alpha", "seed", "out_dir", "label", "jobs", "carry", "opts")}

    cells = {}
    if spec.jobs > 1:
        tasks = [(gi, tr) for gi in order for tr in range(spec.trials)]
        with ProcessPoolExecutor(max_workers=spec.jobs) as ex:
            futs = {(gi, tr): ex.submit(_run_cell, spec_dict, spec.grid[gi], tr)
                    for gi, tr in tasks}
            for key, fut in futs.items():
                cells[key] = fut.result()
    else:
        for gi in order:
            for tr in range(spec.trials):
                cells[(gi, tr)] = _run_cell(spec_dict, spec.grid[gi], tr)

    raw = []
    if spec.carry and direction is not None:
        for tr in range(spec.trials):
            carried = None
            for gi in order:
                row, payload = cells[(gi, tr)]
                row, payload = _improve_with_carry(spec, spec.grid[gi], row,
                                                   payload, carried)
                if payload is not None:
                    carried = payload
                raw.append(row)
    else:
        for gi in order:
            for tr in range(spec.trials):
                raw.append(cells[(gi, tr)][0])
    raw.sort(key=lambda r: (spec.grid.index(r["value"]), r["trial"]))

    rows = []
    for value in spec.grid:
        sub = [r for r in raw if r["value"] == value]
        feas = [r for r in sub if r["feasible"]]
        rows.append({
            "param": spec.param, "value": value,
            "mean_ee_c": float(np.mean([r["ee_c"] for r in sub])),
            "mean_ee_s": float(np.mean([r["ee_s"] for r in sub])),
            "feasible_frac": len(feas) / len(sub),
            "mean_iterations": float(np.mean([r["iterations"] for r in sub])),
            "mean_wall_time": float(np.mean([r["wall_time"] for r in sub])),
        })
    if all(r["feasible_frac"] == 0.0 for r in rows):
        print("warning: every sweep point was infeasible", file=sys.stderr)
    result = SweepResult(spec=spec, rows=rows, raw=raw)
    if spec.out_dir:
        write_outputs(result)
    return result


def run_pareto(spec: SweepSpec) -> SweepResult:
    """Tradeoff sweep: spec.grid holds sensing-EE thresholds; points are
    always solved cold."""
    raw = []
    for trial in range(spec.trials):
        # the swept value is the threshold, not a config field
        base_spec = replace(spec, param="K")
        cfg = _config_for(base_spec, int(base_spec.base.get("K", 2)))
        cfg = cfg.with_(rng_seed=spec.seed + trial)
        channels = draw_channels(cfg, theta=np.deg2rad(spec.theta_deg),
                                 alpha=spec.alpha)
        t0 = time.perf_counter()
        pts = solvers.solve_pareto_point(cfg, channels, list(spec.grid),
                                         spec.opts)
        wall = (time.perf_counter() - t0) / len(spec.grid)
        for (e, ee_c, sol) in pts:
            feas = sol is not None
            raw.append({"param": "ee_s_threshold", "value": e, "trial": trial,
                        "seed": cfg.rng_seed, "feasible": int(feas),
                        "ee_c": ee_c if feas else 0.0,
                        "ee_s": sol.achieved["ee_s"] if feas else 0.0,
                        "sum_rate": sol.achieved["sum_rate"] if feas else 0.0,
                        "p_total": sol.achieved["p_total"] if feas else 0.0,
                        "crb": sol.achieved["crb"] if feas else float("nan"),
                        "iterations": len(sol.trace) if feas else 0,
                        "wall_time": wall})
    rows = []
    for value in spec.grid:
        sub = [r for r in raw if r["value"] == value]
        rows.append({
            "param": "ee_s_threshold", "value": value,
            "mean_ee_c": float(np.mean([r["ee_c"] for r in sub])),
            "mean_ee_s": float(np.mean([r["ee_s"] for r in sub])),
            "feasible_frac": float(np.mean([r["feasible"] for r in sub])),
            "mean_iterations": float(np.mean([r["iterations"] for r in sub])),
            "mean_wall_time": float(np.mean([r["wall_time"] for r in sub])),
        })
    result = SweepResult(spec=spec, rows=rows, raw=raw)
    if spec.out_dir:
        write_outputs(result, boundary=True)
    return result


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(columns)
        for r in rows:
            wr.writerow([repr(r[c]) if isinstance(r[c], float) else r[c]
                         for c in columns])


def read_csv(path) -> list:
    out = []
    with open(path) as f:
        rd = csv.reader(f)
        cols = next(rd)
        for line in rd:
            row = {}
            for c, v in zip(cols, line):
                try:
                    row[c] = int(v) if c in ("trial", "seed", "feasible") \
                        else float(v)
                except ValueError:
                    row[c] = v
            out.append(row)
    return out


def write_outputs(result: SweepResult, boundary: bool = False) -> None:
    import pathlib

    out = pathlib.Path(result.spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    label = result.spec.label
    write_csv(out / f"{label}_summary.csv", SUMMARY_COLUMNS, result.rows)
    write_csv(out / f"{label}_trials.csv", RAW_COLUMNS, result.raw)
    render_figure(result, out / f"{label}.svg", boundary=boundary)
    print(f"wrote {out / (label + '_summary.csv')}, "
          f"{out / (label + '_trials.csv')}, {out / (label + '.svg')}")


def render_figure(result: SweepResult, path, boundary: bool = False) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = result.row_values("value")
    if boundary:
        fig, ax = plt.subplots(figsize=(5.2, 3.6))
        ax.plot(xs, result.row_values("mean_ee_c"), "o-", color="C0")
        ax.set_xlabel("sensing-EE threshold [1/(CRB·J)]")
        ax.set_ylabel("communication EE [bit/J]")
        ax.set_title("EE tradeoff boundary")
        ax.grid(True, linestyle=":", linewidth=0.7)
    else:
        fig, axes = plt.subplots(1, 2, figsize=(9.2, 3.6))
        axes[0].plot(xs, result.row_values("mean_ee_c"), "o-", color="C0")
        axes[0].set_ylabel("mean EE_C [bit/J]")
        axes[1].plot(xs, result.row_values("mean_ee_s"), "s-", color="C1")
        axes[1].set_ylabel("mean EE_S [1/(CRB·J)]")
        for ax in axes:
            ax.set_xlabel(result.spec.param)
            ax.grid(True, linestyle=":", linewidth=0.7)
        fig.suptitle(f"{result.spec.algorithm}: sweep over {result.spec.param}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def load_config_file(path) -> dict:
    """Flat 'key = value' file; '#' starts a comment.  Values keep their
    unit suffixes and are parsed by the scenario layer."""
    raw = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            raw[key] = val
    return raw


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value scenario file")
    p.add_argument("--out", help="output directory for CSV/SVG files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--independent", action="store_true",
                   help="disable the warm-candidate carry between grid points")
    p.add_argument("--theta-deg", type=float, default=90.0)
    p.add_argument("--alpha-abs", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1e-4,
                   help="outer loop stopping tolerance")
    for flag, key in [("--m", "M"), ("--n-rx", "N_rx"), ("--l", "L"),
                      ("--k", "K")]:
        p.add_argument(flag, type=int, dest=f"cfg_{key}")
    p.add_argument("--eps-pa", type=float, dest="cfg_eps_pa")
    p.add_argument("--p0-dbm", type=float, dest="cfg_P0_dbm")
    p.add_argument("--pmax-dbm", type=float, dest="cfg_Pmax_dbm")
    p.add_argument("--sigma-c2", type=float, dest="cfg_sigma_c2")
    p.add_argument("--sigma-s2", type=float, dest="cfg_sigma_s2")
    p.add_argument("--gamma-db", type=float, dest="cfg_gamma_db")
    p.add_argument("--root-crb-deg", type=float, dest="cfg_rho_deg")
    p.add_argument("--tau", type=float, dest="cfg_tau",
                   help="matrix-CRB bound for the extended-target designs")


def _base_from_args(args) -> dict:
    base = {}
    if args.config:
        base.update(load_config_file(args.config))
    pairs = [("cfg_M", "M", int), ("cfg_N_rx", "N_rx", int),
             ("cfg_L", "L", int), ("cfg_K", "K", int),
             ("cfg_eps_pa", "eps_pa", float),
             ("cfg_sigma_c2", "sigma_c2", float),
             ("cfg_sigma_s2", "sigma_s2", float)]
    for attr, key, cast in pairs:
        v = getattr(args, attr, None)
        if v is not None:
            base[key] = cast(v)
    if getattr(args, "cfg_P0_dbm", None) is not None:
        base["P0"] = f"{args.cfg_P0_dbm} dBm"
    if getattr(args, "cfg_Pmax_dbm", None) is not None:
        base["Pmax"] = f"{args.cfg_Pmax_dbm} dBm"
    if getattr(args, "cfg_gamma_db", None) is not None:
        base["gamma"] = f"{args.cfg_gamma_db} dB"
    if getattr(args, "cfg_rho_deg", None) is not None:
        base["rho"] = f"{args.cfg_rho_deg} deg"
    if getattr(args, "cfg_tau", None) is not None:
        base["rho"] = float(args.cfg_tau)
    return base


def _spec_from_args(args, algorithm) -> SweepSpec:
    grid = [float(g) for g in args.grid.split(",")]
    if args.param == "K":
        grid = [int(g) for g in grid]
    return SweepSpec(
        algorithm=algorithm, param=args.param, grid=grid, trials=args.trials,
        base=_base_from_args(args), theta_deg=args.theta_deg,
        alpha=complex(args.alpha_abs), seed=args.seed,
        out_dir=args.out, label=args.label or f"{algorithm}_{args.param}",
        jobs=args.jobs, carry=not args.independent,
        opts=solvers.AlgorithmOptions(delta=args.delta))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="eeisac",
        description="energy-efficient sensing-and-communication beamforming "
                    "experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)

    for name in ALGORITHMS:
        p = sub.add_parser(name, help=f"sweep driver for {name}")
        _add_common(p)
        p.add_argument("--param", default="root-crb-deg",
                       choices=sorted(SWEEP_PARAMS))
        p.add_argument("--grid", required=True,
                       help="comma-separated sorted values")
        p.add_argument("--label", default=None)

    p = sub.add_parser("pareto", help="EE tradeoff boundary sweep")
    _add_common(p)
    p.add_argument("--grid", required=True,
                   help="comma-separated ascending sensing-EE thresholds")
    p.add_argument("--label", default="pareto")

    p = sub.add_parser("baselines",
                       help="EE design vs power-min and rate-max baselines")
    _add_common(p)
    p.add_argument("--label", default="baselines")

    p = sub.add_parser("verify",
                       help="run the independent-oracle checks; nonzero exit "
                            "on failure")
    p.add_argument("--fast", action="store_true",
                   help="reduced instance counts")

    args = ap.parse_args(argv)

    if args.cmd in ALGORITHMS:
        run_sweep(_spec_from_args(args, args.cmd))
        return 0
    if args.cmd == "pareto":
        spec = SweepSpec(
            algorithm="eec-point", param="K",
            grid=[float(g) for g in args.grid.split(",")],
            trials=args.trials, base=_base_from_args(args),
            theta_deg=args.theta_deg, alpha=complex(args.alpha_abs),
            seed=args.seed, out_dir=args.out, label=args.label,
            jobs=args.jobs, opts=solvers.AlgorithmOptions(delta=args.delta))
        run_pareto(spec)
        return 0
    if args.cmd == "baselines":
        return _baselines_cmd(args)
    if args.cmd == "verify":
        return verify(fast=args.fast)
    return 2


def _baselines_cmd(args) -> int:
    base = _base_from_args(args)
    rows = []
    for trial in range(args.trials):
        raw = {"M": 8, "N_rx": 20, "L": 30, "K": 2, "eps_pa": 0.35,
               "P0": "33 dBm", "Pmax": "30 dBm", "sigma_c2": 0.01,
               "sigma_s2": 1.0, "gamma": "10 dB", "rho": "0.15 deg"}
        raw.update(base)
        cfg = make_config(raw).with_(rng_seed=args.seed + trial)
        channels = draw_channels(cfg, theta=np.deg2rad(args.theta_deg),
                                 alpha=complex(args.alpha_abs))
        opts = solvers.AlgorithmOptions(delta=args.delta)
        for name, fn in [("ee-design", solvers.solve_eec_point),
                         ("power-min", solvers.baseline_power_min),
                         ("rate-max", solvers.baseline_sumrate_max)]:
            try:
                sol = fn(cfg, channels, opts)
                rows.append({"scheme": name, "trial": trial,
                             "ee_c": sol.achieved["ee_c"],
                             "ee_s": sol.achieved["ee_s"],
                             "sum_rate": sol.achieved["sum_rate"],
                             "p_total": sol.achieved["p_total"]})
            except solvers.InfeasibleScenario:
                rows.append({"scheme": name, "trial": trial, "ee_c": 0.0,
                             "ee_s": 0.0, "sum_rate": 0.0, "p_total": 0.0})
    for name in ("ee-design", "power-min", "rate-max"):
        sub_rows = [r for r in rows if r["scheme"] == name]
        print(f"{name:>10}: mean EE_C "
              f"{np.mean([r['ee_c'] for r in sub_rows]):8.4f}  "
              f"mean rate {np.mean([r['sum_rate'] for r in sub_rows]):8.4f}  "
              f"mean power {np.mean([r['p_total'] for r in sub_rows]):8.5f}")
    if args.out:
        import pathlib
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["scheme", "trial", "ee_c", "ee_s", "sum_rate", "p_total"]
        write_csv(out / f"{args.label}.csv", cols, rows)
        print(f"wrote {out / (args.label + '.csv')}")
    return 0


def verify(fast: bool = False) -> int:
    """Independent-oracle self checks; prints one line per check."""
    from . import sdp_core
    from . import constraints as con
    from .sdp_core import LinExpr, SdpModel

    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"[{'pass' if ok else 'FAIL'}] {name}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(0)
    n_crb = 10 if fast else 50
    worst = 0.0
    for _ in range(n_crb):
        m_tx = int(rng.integers(2, 5))
        cfg = default_config(M=m_tx, N_rx=8, K=1, gamma=1.0,
                             rng_seed=int(rng.integers(1 << 30)))
        a = rng.standard_normal((m_tx, m_tx)) + \
            1j * rng.standard_normal((m_tx, m_tx))
        rx = a @ a.conj().T + 0.1 * np.eye(m_tx)
        theta = rng.uniform(0.2, np.pi - 0.2)
        crb = metrics.crb_point_from_cov(rx, theta, 1.0, cfg)
        j = oracle.fisher_fd(rx, theta, 1.0, cfg)
        worst = max(worst, abs(crb * j - 1.0))
    check(f"angle bound vs finite-difference information ({n_crb} instances, "
          f"worst rel {worst:.2e})", worst <= 1e-4)

    m = SdpModel()
    t = m.scalar()
    m.add_lmi([[t, 1.0], [1.0, t]])
    m.maximize(t * (-1.0))
    r1 = sdp_core.solve(m.build())
    ok1 = r1.optimal and abs(-r1.objective - 1.0) <= 1e-8
    m2 = SdpModel()
    x2 = m2.scalar()
    m2.add_lmi([[1.0, x2], [x2, 1.0]])
    m2.maximize(x2)
    r2 = sdp_core.solve(m2.build())
    ok2 = r2.optimal and abs(r2.objective - 1.0) <= 1e-8
    p3 = sdp_core.ConeProblem(n_free=0, psd_blocks=[2])
    obj = np.zeros(p3.n_var)
    obj[[0, 2]] = 1.0
    p3.objective = obj
    p3.A_ub = obj[None, :].copy()
    p3.b_ub = np.array([1.0])
    r3 = sdp_core.solve(p3)
    ok3 = r3.optimal and abs(r3.objective - 1.0) <= 1e-8
    check("analytic cone programs solved to 1e-8", ok1 and ok2 and ok3)

    n_samp = 2000 if fast else 10_000
    zs = rng.uniform(0.05, 5.0, n_samp)
    ps = rng.uniform(0.05, 5.0, n_samp)
    z0, p0 = 1.3, 0.9
    cut = 2 * (z0 / p0) * zs - (z0 / p0) ** 2 * ps
    ok = bool(np.all(cut <= zs ** 2 / ps + 1e-12))
    knots = con._knot_ladder(2.0, 0.0)
    us = rng.uniform(0.0, knots[-1] * 2, n_samp)
    vals = [np.log2(1 + k) for k in knots]
    worst_c = np.inf
    for uv in us:
        z_best = min(min(v0 + (v1 - v0) / (k1 - k0) * (uv - k0)
                         for (k0, v0), (k1, v1) in
                         zip(zip(knots, vals), zip(knots[1:], vals[1:]))),
                     vals[-1])
        worst_c = min(worst_c, np.log2(1 + uv) - z_best)
    check(f"surrogate cuts are global under-estimators "
          f"(worst gap {worst_c:.2e})", ok and worst_c >= -1e-12)

    cfg = default_config(M=4, N_rx=8, K=1, gamma=1e-8, rho=1e6, rng_seed=7)
    channels = draw_channels(cfg)
    sol = solvers.solve_eec_point(cfg, channels)
    _, ee_star = oracle.grid_search_ee(cfg, channels)
    rel = abs(sol.achieved["ee_c"] - ee_star) / ee_star
    check(f"single-user design vs exhaustive power grid (rel {rel:.2e})",
          rel <= 5e-3)

    print("verify:", "all checks passed" if failures == 0 else
          f"{failures} check(s) FAILED")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
