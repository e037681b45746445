"""Command-line experiment runner.

    nomacell <experiment> [--config FILE] [--set key=value ...] [--seed N] [--out DIR]

Each experiment writes one or more CSV files (units in the column names) and
a ``manifest.json`` describing the run. SIR thresholds are given in dB in the
configuration and converted to linear ratios here, nowhere else.

Exit codes: 0 success, 1 configuration error, 2 validation failure,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import brute_force_ra, gain_eta_limit, rates, solve_p1, solve_p2
from .cell_load import area_stats, gamma_fit, load_pmf
from .meta import InfeasibleError, beta_fit, composite_threshold, meta_ccdf, meta_moments
from .numerics import QuadratureError
from .params import Scheme, SystemParams, TrafficParams, UserClass, db_to_linear
from .performance import delay_ccdf, rate_cdf
from .simulator import X_GRID, SimConfig, draw_loads, empirical_ccdf, simulate
from .validation import ValidationSizes, run_all

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERICS = 0, 1, 2, 3

CC, CE = UserClass.CC, UserClass.CE
NOMA, OMA = Scheme.NOMA, Scheme.OMA

EXPERIMENTS = ("moments-sweep", "meta-ccdf", "area-dist", "load-pmf", "rate-outage",
               "delay-outage", "rate-region", "ra-p1", "ra-p2", "validate")

# sweep variables accepted by each experiment; the first is the default
SWEEP_VARS = {
    "moments-sweep": ("theta", "tau"),
    "meta-ccdf": ("x",),
    "area-dist": ("tau",),
    "load-pmf": ("nu", "tau"),
    "rate-outage": ("rate", "theta", "eta", "tau", "nu"),
    "delay-outage": ("delay", "theta", "eta", "tau", "nu"),
    "rate-region": ("theta",),
    "ra-p1": ("nu", "tau"),
    "ra-p2": ("nu", "tau"),
    "validate": (),
}

PARAM_KEYS = {"lam", "nu", "alpha", "tau", "beta_c_db", "beta_e_db", "theta", "eta", "rho"}


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ configuration

@dataclasses.dataclass
class ExperimentConfig:
    experiment: str
    params: SystemParams
    traffic: TrafficParams
    sim: SimConfig
    sweep_var: str | None
    grid: np.ndarray | None
    output_dir: Path
    simulate: bool = False
    brute_force: bool = False
    validation: ValidationSizes = ValidationSizes()
    raw: dict = dataclasses.field(default_factory=dict)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_override(raw: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, value = item.split("=", 1)
    node = raw
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{key}: {part} is not a section")
    node[parts[-1]] = _parse_value(value)


def load_raw(path: str | None, overrides=()) -> dict:
    raw: dict = {}
    if path:
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
    for item in overrides:
        _apply_override(raw, item)
    return raw


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected an object")
    return sec


def _build(cls, section: dict, name: str, allowed: set, convert=lambda d: d):
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**convert(dict(section)))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: {e}") from None


def _params_from(section: dict) -> SystemParams:
    def convert(d):
        for key in ("beta_c", "beta_e"):
            if key + "_db" in d:
                d[key] = db_to_linear(float(d.pop(key + "_db")))
        return d
    return _build(SystemParams, section, "params", PARAM_KEYS, convert)


def _grid_from(section: dict, experiment: str):
    allowed = SWEEP_VARS[experiment]
    if not allowed:
        return None, None
    var = section.get("var", allowed[0])
    if var not in allowed:
        raise ConfigError(f"sweep.var: {var!r} not valid for {experiment}; choose from {allowed}")
    if "grid" in section:
        grid = np.asarray(section["grid"], dtype=float)
    elif {"start", "stop", "num"} <= set(section):
        grid = np.linspace(float(section["start"]), float(section["stop"]), int(section["num"]))
    else:
        grid = None
    if grid is not None:
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ConfigError("sweep.grid: must be a non-empty strictly increasing list")
    return var, grid


def build_config(raw: dict, experiment: str, seed: int | None, out: str | None) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    known = {"experiment", "params", "traffic", "sim", "sweep", "output_dir", "simulate",
             "brute_force", "validation"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")
    params = _params_from(_section(raw, "params"))
    traffic = _build(TrafficParams, _section(raw, "traffic"), "traffic",
                     {f.name for f in dataclasses.fields(TrafficParams)})
    sim_sec = dict(_section(raw, "sim"))
    if seed is not None:
        sim_sec["seed"] = seed
    sim = _build(SimConfig, sim_sec, "sim", {f.name for f in dataclasses.fields(SimConfig)})
    if sim.n_realizations < 1:
        raise ConfigError("sim.n_realizations: must be positive")
    sizes = _build(ValidationSizes, _section(raw, "validation"), "validation",
                   {f.name for f in dataclasses.fields(ValidationSizes)})
    var, grid = _grid_from(_section(raw, "sweep"), experiment)
    out_dir = Path(out or raw.get("output_dir") or f"out/{experiment}")
    return ExperimentConfig(experiment, params, traffic, sim, var, grid, out_dir,
                            bool(raw.get("simulate", False)), bool(raw.get("brute_force", False)),
                            sizes, raw)


# ------------------------------------------------------------ output helpers

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def write_csv(path: Path, header: list[str], rows) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            n += 1
    return n


def _safe(fn, *args, **kw) -> float:
    """Value of fn, NaN (an empty CSV cell) where the allocation is infeasible."""
    try:
        return fn(*args, **kw)
    except InfeasibleError:
        return math.nan


def _with(p: SystemParams, var: str, value: float) -> SystemParams:
    return p.with_(**{var: float(value)})


# ------------------------------------------------------------ experiments

def _moments_sweep(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    var = cfg.sweep_var
    grid = cfg.grid if cfg.grid is not None else (
        p.theta_nc * np.arange(1, 25) / 25 if var == "theta" else np.linspace(0.3, 0.9, 13))
    header = [var]
    for s in ("noma", "oma"):
        for u in ("cc", "ce"):
            header += [f"m1_{u}_{s}", f"m2_{u}_{s}"]
    rows = []
    for g in grid:
        q, th = (p, g) if var == "theta" else (_with(p, var, g), p.theta)
        row = [g]
        for scheme in (NOMA, OMA):
            for u in (CC, CE):
                m = _safe(meta_moments, u, scheme, q, th)
                row += [math.nan, math.nan] if isinstance(m, float) else [m.m1, m.m2]
        rows.append(row)
    files = {"moments.csv": write_csv(cfg.output_dir / "moments.csv", header, rows)}
    if cfg.simulate and var == "theta":
        ok = [g for g in grid if g * (1 + p.beta_e) < 1]
        chi_c = [composite_threshold(CC, NOMA, p, g) for g in ok]
        chi_e = [composite_threshold(CE, NOMA, p, g) for g in ok]
        b = simulate(p, cfg.sim, chi_c, chi_e)
        pc, pe = b.success[b.is_cc], b.success[~b.is_cc]
        rows = [[g, pc[:, j].mean(), (pc[:, j] ** 2).mean(), pe[:, j].mean(), (pe[:, j] ** 2).mean()]
                for j, g in enumerate(ok)]
        files["moments_sim.csv"] = write_csv(cfg.output_dir / "moments_sim.csv",
                                             ["theta", "m1_cc_noma", "m2_cc_noma", "m1_ce_noma",
                                              "m2_ce_noma"], rows)
    return files


def _meta_ccdf(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    x = cfg.grid if cfg.grid is not None else X_GRID
    if np.any((x < 0) | (x > 1)):
        raise ConfigError("sweep.grid: x must lie in [0, 1]")
    cols, header = [], ["x"]
    for scheme, a in ((NOMA, p.theta), (OMA, None)):
        for u in (CC, CE):
            m = _safe(meta_moments, u, scheme, p, a)
            cols.append(np.full(x.shape, math.nan) if isinstance(m, float)
                        else meta_ccdf(x, beta_fit(m)))
            header.append(f"ccdf_{u.value}_{scheme.value}")
    if cfg.simulate:
        chis = [[composite_threshold(u, s, p, p.theta if s is NOMA else None) for s in (NOMA, OMA)]
                for u in (CC, CE)]
        b = simulate(p, cfg.sim, chis[0], chis[1])
        for j, scheme in enumerate((NOMA, OMA)):
            for u, mask in ((CC, b.is_cc), (CE, ~b.is_cc)):
                cols.append(empirical_ccdf(b.success[mask, j], x))
                header.append(f"sim_ccdf_{u.value}_{scheme.value}")
    rows = np.column_stack([x] + cols)
    return {"meta_ccdf.csv": write_csv(cfg.output_dir / "meta_ccdf.csv", header, rows)}


def _area_dist(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    grid = cfg.grid if cfg.grid is not None else np.array([p.tau])
    rows = []
    for tau in grid:
        q = p.with_(tau=float(tau))
        for u in (CC, CE):
            st = area_stats(u, q)
            g = gamma_fit(st)
            rows.append([tau, u.value, st.mean, st.second_moment, st.variance, g.gamma2, g.gamma1])
    header = ["tau", "region", "mean_area_per_bs_area", "second_moment_area_sq",
              "variance_area_sq", "gamma_shape", "gamma_rate_per_area"]
    files = {"area_stats.csv": write_csv(cfg.output_dir / "area_stats.csv", header, rows)}
    if cfg.simulate:
        b = simulate(p, cfg.sim, area_samples=cfg.sim.area_samples)
        rows = np.column_stack([np.arange(b.cell_area.size), b.cell_area, b.cc_area,
                                b.cell_area - b.cc_area])
        files["area_samples.csv"] = write_csv(
            cfg.output_dir / "area_samples.csv",
            ["realization", "cell_area", "cc_area", "ce_area"],
            ([int(r[0]), *r[1:]] for r in rows))
    return files


def _load_pmf(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    var = cfg.sweep_var
    grid = cfg.grid if cfg.grid is not None else np.array([getattr(p, var)])
    fits = {}
    rows = []
    for g in grid:
        q = _with(p, var, g)
        key = q.tau
        if key not in fits:
            fits[key] = {u: gamma_fit(area_stats(u, q)) for u in (CC, CE)}
        pc, pe = (load_pmf(fits[key][u], q.nu) for u in (CC, CE))
        n_max = max(pc.n_max, pe.n_max)
        for n in range(1, n_max + 1):
            rows.append([g, n, pc.probs[n - 1] if n <= pc.n_max else 0.0,
                         pe.probs[n - 1] if n <= pe.n_max else 0.0])
    header = [var, "n_users", "pmf_cc", "pmf_ce"]
    files = {"load_pmf.csv": write_csv(cfg.output_dir / "load_pmf.csv", header, rows)}
    if cfg.simulate:
        b = simulate(p, cfg.sim, area_samples=cfg.sim.area_samples)
        lc = draw_loads(b.cc_area, p.nu, cfg.sim.seed)
        le = draw_loads(b.cell_area - b.cc_area, p.nu, cfg.sim.seed + 1)
        top = int(max(lc.max(), le.max()))
        hc = np.bincount(lc, minlength=top + 1)[1:] / lc.size
        he = np.bincount(le, minlength=top + 1)[1:] / le.size
        files["load_hist.csv"] = write_csv(cfg.output_dir / "load_hist.csv",
                                           ["n_users", "freq_cc", "freq_ce"],
                                           ([n + 1, hc[n], he[n]] for n in range(top)))
    return files


def _outage(cfg: ExperimentConfig, kind: str) -> dict:
    p, tr = cfg.params, cfg.traffic
    var = cfg.sweep_var
    if cfg.grid is not None:
        grid = cfg.grid
    elif var == "rate":
        grid = np.linspace(0.0, 1.0, 101)
    elif var == "delay":
        grid = np.arange(1.0, 201.0)
    elif var in ("theta", "eta"):
        grid = np.linspace(0.02, 0.98, 49)
    else:
        grid = np.linspace(0.3, 0.9, 13) if var == "tau" else np.array([2.0, 5.0, 10.0, 20.0])
    loads: dict = {}
    rows = []
    for g in grid:
        q = p if var in ("rate", "delay") else _with(p, var, g)
        lk = (q.tau, q.nu)
        if lk not in loads:
            loads[lk] = {u: load_pmf(gamma_fit(area_stats(u, q)), q.nu) for u in (CC, CE)}
        row = [g]
        for scheme, a in ((NOMA, q.theta), (OMA, q.eta)):
            for u in (CC, CE):
                if kind == "rate":
                    thr = g if var == "rate" else tr.rate_floor(u)
                    row.append(_safe(rate_cdf, u, scheme, thr, a, q, loads[lk][u]))
                else:
                    thr = g if var == "delay" else tr.delay_thresh(u)
                    row.append(_safe(delay_ccdf, u, scheme, thr, tr.arrival(u), a, q, loads[lk][u]))
        rows.append(row)
    label = {"rate": "rate_bits_per_slot_hz", "delay": "delay_slots"}.get(var, var)
    stat = "cdf" if kind == "rate" else "outage"
    header = [label] + [f"{kind}_{stat}_{u}_{s}" for s in ("noma", "oma") for u in ("cc", "ce")]
    name = f"{kind}_outage.csv"
    return {name: write_csv(cfg.output_dir / name, header, rows)}


def _rate_region(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    grid = cfg.grid if cfg.grid is not None else np.linspace(0.01, 0.99, 99)
    lc, le = (load_pmf(gamma_fit(area_stats(u, p)), p.nu) for u in (CC, CE))
    rows = []
    for a in grid:
        noma_ok = a * (1 + p.beta_e) < 1
        rc_n = rates(CC, NOMA, a, p, lc) if noma_ok else 0.0
        re_n = rates(CE, NOMA, a, p, le) if noma_ok else 0.0
        rows.append([a, rc_n, re_n, rates(CC, OMA, a, p, lc), rates(CE, OMA, a, p, le)])
    header = ["share", "rate_cc_noma_bits_per_slot_hz", "rate_ce_noma_bits_per_slot_hz",
              "rate_cc_oma_bits_per_slot_hz", "rate_ce_oma_bits_per_slot_hz"]
    files = {"rate_region.csv": write_csv(cfg.output_dir / "rate_region.csv", header, rows)}
    limit = gain_eta_limit(p)
    files["gain_limit.csv"] = write_csv(cfg.output_dir / "gain_limit.csv", ["eta_limit"],
                                        [[math.nan if limit is None else limit]])
    return files


def _ra(cfg: ExperimentConfig, problem: str) -> dict:
    p, tr = cfg.params, cfg.traffic
    var = cfg.sweep_var
    grid = cfg.grid if cfg.grid is not None else (
        np.array([2.0, 5.0, 10.0, 20.0]) if var == "nu" else np.linspace(0.5, 0.9, 5))
    unit = "bits_per_slot_hz" if problem == "p1" else "packets_per_slot"
    solve = solve_p1 if problem == "p1" else solve_p2
    rows = []
    for g in grid:
        q = _with(p, var, g)
        lc, le = (load_pmf(gamma_fit(area_stats(u, q)), q.nu) for u in (CC, CE))
        row = [g]
        for scheme in (NOMA, OMA):
            r = solve(scheme, q, tr, lc, le)
            row += [r.allocation, r.objective, r.feasible]
            if cfg.brute_force:
                b = brute_force_ra(problem, scheme, q, tr, lc, le)
                row += [b.allocation, b.objective, b.feasible]
        rows.append(row)
    header = [var]
    for s in ("noma", "oma"):
        header += [f"{s}_allocation", f"{s}_objective_{unit}", f"{s}_feasible"]
        if cfg.brute_force:
            header += [f"{s}_brute_allocation", f"{s}_brute_objective_{unit}", f"{s}_brute_feasible"]
    name = f"ra_{problem}.csv"
    return {name: write_csv(cfg.output_dir / name, header, rows)}


def _validate(cfg: ExperimentConfig) -> tuple[dict, bool]:
    checks = run_all(cfg.validation, cfg.sim.seed, cfg.params, cfg.traffic)
    for c in checks:
        print(c.line())
    rows = [[c.name, c.value, c.tolerance, c.passed, c.detail] for c in checks]
    files = {"validate.csv": write_csv(cfg.output_dir / "validate.csv",
                                       ["check", "value", "tolerance", "passed", "detail"], rows)}
    return files, all(c.passed for c in checks)


def run_experiment(cfg: ExperimentConfig) -> int:
    start = time.perf_counter()
    ok = True
    e = cfg.experiment
    if e == "moments-sweep":
        files = _moments_sweep(cfg)
    elif e == "meta-ccdf":
        files = _meta_ccdf(cfg)
    elif e == "area-dist":
        files = _area_dist(cfg)
    elif e == "load-pmf":
        files = _load_pmf(cfg)
    elif e == "rate-outage":
        files = _outage(cfg, "rate")
    elif e == "delay-outage":
        files = _outage(cfg, "delay")
    elif e == "rate-region":
        files = _rate_region(cfg)
    elif e in ("ra-p1", "ra-p2"):
        files = _ra(cfg, e[-2:])
    else:
        files, ok = _validate(cfg)
    status = EXIT_OK if ok else EXIT_VALIDATION
    manifest = {
        "experiment": e,
        "version": __version__,
        "config": cfg.raw,
        "resolved": {
            "params": dataclasses.asdict(cfg.params),
            "traffic": dataclasses.asdict(cfg.traffic),
            "sim": dataclasses.asdict(cfg.sim),
            "sweep": None if cfg.sweep_var is None else {
                "var": cfg.sweep_var, "grid": None if cfg.grid is None else cfg.grid.tolist()},
        },
        "seed": cfg.sim.seed,
        "files": {name: {"rows": n} for name, n in files.items()},
        "exit_status": status,
        "wall_time_s": round(time.perf_counter() - start, 3),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                                  encoding="utf-8")
    return status


# ------------------------------------------------------------ entry point

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nomacell", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config field, e.g. params.beta_c_db=0 (repeatable)")
    ap.add_argument("--seed", type=int, help="simulation seed")
    ap.add_argument("--out", help="output directory")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        raw = load_raw(args.config, args.overrides)
        cfg = build_config(raw, args.experiment, args.seed, args.out)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_experiment(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as e:
        print(f"numerical non-convergence: {e}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
