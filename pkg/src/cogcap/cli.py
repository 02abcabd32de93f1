"""Command-line front end.

Every subcommand writes one table. With ``--format csv`` (default) the table
goes to ``--out`` and a JSON sidecar with the configuration, seed, version
and wall-clock time goes next to it with a ``.json`` suffix; passing that
sidecar back through ``--config`` re-runs the same computation.

Exit codes: 0 success, 2 bad configuration, 3 I/O failure, 4 oracle check
failure (``validate``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_from_mapping, parse_config
from .effcap import effective_capacity, mean_service_rate, spectral_radius_closed
from .errors import ConfigError
from .numerics import spectral_radius_generic
from .optimizer import (
    OptimizationProblem,
    compare_estimators,
    optimal_eta_vs_pd,
    optimize,
    sweep_eta,
    sweep_pd,
)
from .params import EstimatorKind, PowerPolicy, RatePolicy, SystemParams, db_to_lin, lin_to_db
from .sensing import (
    SensingOperatingPoint,
    detection_prob,
    false_alarm_prob,
    monte_carlo_sensing,
    operating_point_from_pd,
    roc_curve,
)
from .simulator import (
    empirical_effective_capacity,
    expected_scenario_frequencies,
    interference_audit,
    queue_tail_exponent,
    scenario_frequencies,
    simulate_frames,
)
from .statemodel import build_transition_model, on_probability, transition_rows

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ORACLE = 4
WORKERS_ENV = "COGCAP_WORKERS"

SUBCOMMANDS = (
    "sense-roc",
    "capacity",
    "optimize",
    "sweep-pd",
    "sweep-eta",
    "eta-vs-pd",
    "compare-estimators",
    "simulate",
    "validate",
)


def _workers():
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer", key=WORKERS_ENV) from None
    return n if n > 1 else None


def sensing_point(cfg: RunConfig, params: SystemParams):
    """Threshold-derived operating point, or the quoted (pd, pf) pair when pf is set."""
    if math.isnan(cfg.pf):
        return operating_point_from_pd(cfg.pd, params)
    return SensingOperatingPoint.from_probabilities(cfg.pd, cfg.pf)


def _problem(cfg: RunConfig, params, sensing, p_avg):
    return OptimizationProblem(
        params=params,
        sensing=sensing,
        p_avg=p_avg,
        p_peak=cfg.p_peak_lin,
        kind=cfg.kind,
        eta=cfg.eta,
        power_points=cfg.power_points,
        rate_points=cfg.rate_points,
    )


def _grid(lo, hi, n):
    return [float(v) for v in np.round(np.linspace(lo, hi, n), 12)]


def _p_avg_cols(p_db):
    return {"p_avg_db": p_db, "p_avg_lin": db_to_lin(p_db)}


def _fixed_policy(cfg: RunConfig):
    rates = RatePolicy(cfg.r1, cfg.r2)
    powers = PowerPolicy(db_to_lin(cfg.p1_db), db_to_lin(cfg.p2_db), eta=cfg.eta)
    return rates, powers


# --- subcommands -----------------------------------------------------------


def cmd_sense_roc(cfg: RunConfig):
    params = cfg.system_params()
    return [
        {"pd": pt.p_d, "pf": pt.p_f, "lam": pt.lam}
        for pt in roc_curve(_grid(cfg.pd_min, cfg.pd_max, cfg.pd_points), params)
    ]


def cmd_capacity(cfg: RunConfig):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    rates, powers = _fixed_policy(cfg)
    if cfg.kind is EstimatorKind.TRUE:
        raise ConfigError("capacity has no closed form for the true MMSE estimator; use simulate", key="estimator")
    res = effective_capacity(cfg.theta, rates, powers, sensing, cfg.kind, params)
    rows = build_transition_model(rates, powers, sensing, cfg.kind, params)
    return [
        {
            "pd": sensing.p_d,
            "pf": sensing.p_f,
            "eta": cfg.eta,
            "r1": rates.r1,
            "r2": rates.r2,
            "p1_lin": powers.p1_bar,
            "p2_lin": powers.p2_bar,
            "p1_db": cfg.p1_db,
            "p2_db": cfg.p2_db,
            "eff_cap": res.value + 0.0,
            "mean_service": mean_service_rate(rows, rates, params.T, params.B),
        }
    ]


def cmd_optimize(cfg: RunConfig):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    out = []
    for p_db in cfg.p_avg_db:
        p = db_to_lin(p_db)
        opt = optimize(_problem(cfg, params, sensing, p))
        out.append(
            {
                **_p_avg_cols(p_db),
                "pd": sensing.p_d,
                "pf": sensing.p_f,
                "eta": cfg.eta,
                "eff_cap": opt.eff_cap,
                "r1": opt.r1_star,
                "r2": opt.r2_star,
                "p1_lin": opt.p1_star,
                "p2_lin": opt.p2_star,
                "p1_db": lin_to_db(opt.p1_star),
                "p2_db": lin_to_db(opt.p2_star),
                "coarse_eff_cap": opt.coarse_eff_cap,
            }
        )
    return out


def cmd_sweep_pd(cfg: RunConfig):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    grid = _grid(cfg.pd_min, cfg.pd_max, cfg.pd_points)
    out = []
    for p_db in cfg.p_avg_db:
        p = db_to_lin(p_db)
        for row in sweep_pd(grid, _problem(cfg, params, sensing, p), workers=_workers()):
            out.append({**_p_avg_cols(p_db), **row})
    return out


def cmd_sweep_eta(cfg: RunConfig):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    grid = _grid(cfg.eta_min, cfg.eta_max, cfg.eta_points)
    out = []
    for p_db in cfg.p_avg_db:
        p = db_to_lin(p_db)
        rows, eta_star = sweep_eta(grid, _problem(cfg, params, sensing, p), workers=_workers())
        for row in rows:
            out.append({**_p_avg_cols(p_db), "pd": sensing.p_d, "pf": sensing.p_f, **row, "is_argmax": int(row["eta"] == eta_star)})
    return out


def cmd_eta_vs_pd(cfg: RunConfig):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    pd_grid = _grid(cfg.pd_min, cfg.pd_max, cfg.pd_points)
    eta_grid = _grid(cfg.eta_min, cfg.eta_max, cfg.eta_points)
    out = []
    for p_db in cfg.p_avg_db:
        p = db_to_lin(p_db)
        for row in optimal_eta_vs_pd(pd_grid, _problem(cfg, params, sensing, p), eta_grid, workers=_workers()):
            out.append({**_p_avg_cols(p_db), **row})
    return out


def cmd_compare_estimators(cfg: RunConfig):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    out = []
    if cfg.compare_axis == "p_avg":
        grid = [db_to_lin(v) for v in _grid(cfg.compare_p_avg_db_min, cfg.compare_p_avg_db_max, cfg.compare_p_avg_db_points)]
        template = _problem(cfg, params, sensing, cfg.p_avg_lin[0])
        for row in compare_estimators(grid, template, axis="p_avg"):
            out.append({"pd": sensing.p_d, "pf": sensing.p_f, **row})
    else:
        grid = _grid(cfg.pd_min, cfg.pd_max, cfg.pd_points)
        for p_db in cfg.p_avg_db:
            p = db_to_lin(p_db)
            for row in compare_estimators(grid, _problem(cfg, params, sensing, p), axis="pd"):
                out.append({**_p_avg_cols(p_db), **row})
    return out


def cmd_simulate(cfg: RunConfig, trace_path=None):
    params = cfg.system_params()
    sensing = sensing_point(cfg, params)
    rates, powers = _fixed_policy(cfg)
    traj = simulate_frames(
        cfg.n_frames, cfg.seed, params, rates, powers, sensing, cfg.kind, prepass_samples=cfg.prepass_samples
    )
    if trace_path is not None:
        traj.to_csv(trace_path)
    row = {
        "n_frames": len(traj),
        "seed": cfg.seed,
        "estimator": cfg.kind.value,
        "approximate": int(traj.approximate),
        "busy_fraction": float(traj.pu_busy.mean()),
        "on_fraction": float(traj.on.mean()),
        "mean_service": float(traj.service_bits.mean()) / (params.T * params.B),
    }
    for s, f in enumerate(scenario_frequencies(traj), start=1):
        row[f"freq_scenario{s}"] = float(f)
    if cfg.kind is not EstimatorKind.TRUE:
        analytic = effective_capacity(cfg.theta, rates, powers, sensing, cfg.kind, params).value + 0.0
        row["eff_cap_analytic"] = analytic
        try:
            fit = queue_tail_exponent(traj, analytic * params.B, params)
            row["queue_decay_at_eff_cap"] = fit.decay_rate
        except ValueError:
            row["queue_decay_at_eff_cap"] = math.nan
    try:
        emp = empirical_effective_capacity(traj, cfg.theta, params.T, params.B, block_len=cfg.block_len)
        row.update(eff_cap_empirical=emp.value, eff_cap_stderr=emp.stderr, block_len=emp.block_len, n_blocks=emp.n_blocks)
    except ValueError:
        row.update(eff_cap_empirical=math.nan, eff_cap_stderr=math.nan, block_len=cfg.block_len, n_blocks=0)
    i_mean, i_se = interference_audit(traj, cfg.mean_gain, seed=cfg.seed)
    row.update(interference_mean_lin=i_mean, interference_stderr_lin=i_se)
    return [row]


def validation_suite(cfg: RunConfig):
    """Oracle checks; each row is (check, value, threshold, passed)."""
    rng = np.random.default_rng(cfg.seed)
    rows = []

    def add(name, value, threshold, ok):
        rows.append({"check": name, "value": float(value), "threshold": float(threshold), "passed": int(bool(ok))})

    # closed-form spectral radius vs eigensolver, and row sums, on random chains
    worst_eig = worst_pow = worst_sum = 0.0
    for _ in range(200):
        p = SystemParams(a=float(rng.uniform(0.01, 0.99)), b=float(rng.uniform(0.01, 0.99)))
        sens = SensingOperatingPoint.from_probabilities(float(rng.uniform()), float(rng.uniform()))
        tm = transition_rows(sens, tuple(rng.exponential(1.0, 4)), p)
        rates = RatePolicy(float(rng.uniform(0, 100)), float(rng.uniform(0, 100)))
        theta = float(rng.uniform(0.001, 1.0))
        phi = np.exp(-theta * p.T * np.array([rates.r1, 0, rates.r2, 0, rates.r1, 0, rates.r2, 0]))
        m = phi[:, None] * tm.matrix()
        closed = spectral_radius_closed(-theta, tm, rates, p.T)
        worst_eig = max(worst_eig, abs(closed - float(np.max(np.abs(np.linalg.eigvals(m))))))
        worst_pow = max(worst_pow, abs(closed - spectral_radius_generic(m)))
        worst_sum = max(worst_sum, float(np.max(np.abs(tm.matrix().sum(axis=1) - 1.0))))
    add("spectral_radius_vs_eigvals", worst_eig, 1e-9, worst_eig <= 1e-9)
    add("spectral_radius_vs_power_iteration", worst_pow, 1e-9, worst_pow <= 1e-9)
    add("row_sums", worst_sum, 1e-12, worst_sum <= 1e-12)

    params = cfg.system_params()

    # sensing: analytic tail vs Monte-Carlo energy detector
    lams = np.linspace(0.5, 2.5, 5)
    worst_z = 0.0
    for busy, fn in ((False, false_alarm_prob), (True, detection_prob)):
        est, se = monte_carlo_sensing(lams, params, n_trials=200_000, seed=[cfg.seed, int(busy)], busy=busy)
        exact = np.array([fn(float(v), params) for v in lams])
        worst_z = max(worst_z, float(np.max(np.abs(est - exact) / np.maximum(se, 1e-300))))
    add("sensing_mc_max_z", worst_z, 3.0, worst_z <= 3.0)

    # frame simulator vs closed forms at the configured fixed policy
    sensing = sensing_point(cfg, params)
    rates, powers = _fixed_policy(cfg)
    traj = simulate_frames(cfg.n_frames, cfg.seed, params, rates, powers, sensing, EstimatorKind.MISMATCHED)
    n = len(traj)
    freq = scenario_frequencies(traj)
    expect = expected_scenario_frequencies(sensing, params)
    z_freq = float(np.max(np.abs(freq - expect) / np.sqrt(np.maximum(expect * (1 - expect), 1e-300) / n)))
    add("scenario_frequency_max_z", z_freq, 3.0, z_freq <= 3.0)

    tm = build_transition_model(rates, powers, sensing, EstimatorKind.MISMATCHED, params)
    z_on = 0.0
    for s in range(1, 5):
        mask = traj.scenario == s
        if mask.sum() < 100:
            continue
        p_on = on_probability(tm.alphas[s - 1])
        se = math.sqrt(max(p_on * (1 - p_on), 1e-300) / mask.sum())
        z_on = max(z_on, abs(float(traj.on[mask].mean()) - p_on) / se)
    add("on_fraction_max_z", z_on, 3.0, z_on <= 3.0)

    theta = cfg.validate_theta
    analytic = effective_capacity(theta, rates, powers, sensing, EstimatorKind.MISMATCHED, params).value
    emp = empirical_effective_capacity(traj, theta, params.T, params.B, block_len=cfg.block_len)
    gap = abs(emp.value - analytic)
    allowed = max(0.02 * abs(analytic), 3.0 * emp.stderr)
    add("log_mgf_abs_error", gap, allowed, gap <= allowed)

    small = effective_capacity(1e-6, rates, powers, sensing, EstimatorKind.MISMATCHED, params).value
    mean = mean_service_rate(tm, rates, params.T, params.B)
    rel = abs(small - mean) / max(abs(mean), 1e-300)
    add("theta_to_zero_rel_error", rel, 1e-4, rel <= 1e-4)
    return rows


COMMANDS = {
    "sense-roc": cmd_sense_roc,
    "capacity": cmd_capacity,
    "optimize": cmd_optimize,
    "sweep-pd": cmd_sweep_pd,
    "sweep-eta": cmd_sweep_eta,
    "eta-vs-pd": cmd_eta_vs_pd,
    "compare-estimators": cmd_compare_estimators,
    "simulate": cmd_simulate,
    "validate": validation_suite,
}


# --- output ----------------------------------------------------------------


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return str(v)


def write_csv(rows, path):
    header = list(rows[0]) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=",", lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(row.get(k, "")) for k in header])


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def metadata(subcommand, cfg: RunConfig, wall):
    return {
        "subcommand": subcommand,
        "config": {k: _jsonable(v) for k, v in cfg.to_mapping().items()},
        "seed": cfg.seed,
        "version": __version__,
        "wall_clock_s": wall,
    }


def sidecar_path(out):
    return Path(out).with_suffix(".json")


def load_config(path, **overrides) -> RunConfig:
    """Read a TOML config, or the ``config`` block of a JSON sidecar."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        data = json.loads(text)
        data = dict(data.get("config", data))
        for k, v in list(data.items()):
            if isinstance(v, str) and v in ("nan", "inf", "-inf"):
                data[k] = float(v)
        return config_from_mapping(data, **overrides)
    return parse_config(text, **overrides)


def run(subcommand, cfg: RunConfig):
    """Run a subcommand and write its artifacts; returns the process exit status."""
    t0 = time.perf_counter()
    out = Path(cfg.out)
    if subcommand == "simulate":
        trace = out.with_name(out.stem + ".trace.csv") if cfg.trace else None
        rows = cmd_simulate(cfg, trace_path=trace)
    else:
        rows = COMMANDS[subcommand](cfg)
    meta = metadata(subcommand, cfg, time.perf_counter() - t0)
    if cfg.format == "csv":
        write_csv(rows, out)
        sidecar_path(out).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    else:
        payload = {"meta": meta, "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
        out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if subcommand == "validate":
        for r in rows:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"{status} {r['check']}: {r['value']:.3e} (threshold {r['threshold']:.3e})")
        if not all(r["passed"] for r in rows):
            return EXIT_ORACLE
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="cogcap", description="Effective capacity of cognitive radio links.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="TOML config file, or a JSON sidecar from an earlier run")
    ap.add_argument("--out", help="output path (default results.csv)")
    ap.add_argument("--seed", type=int, help="random seed (non-negative)")
    ap.add_argument("--format", choices=("csv", "json"))
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in (("out", args.out), ("seed", args.seed), ("format", args.format)) if v is not None}
    try:
        cfg = load_config(args.config, **overrides) if args.config else config_from_mapping({}, **overrides)
        return run(args.subcommand, cfg)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"configuration error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
