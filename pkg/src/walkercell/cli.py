"""Configuration-driven experiment runner.

One invocation runs one study kind (the subcommand) against parameters
from an INI config. Results land in the output directory as:

  * report.json   config echo, versions, seed, warnings, result payload;
                  deterministic byte for byte given config + seed
  * meta.json     wall time and completion stamp (excluded from the
                  determinism contract)
  * kind-specific CSV tables, coefficient snapshots, optional SVG

Exit codes: 0 success, 2 configuration problems (nothing written),
3 numeric failures (diagnostics.json written with the traceback).

Randomness is funneled through the single seed recorded in every
payload; sweep sub-runs are independent and merge in config order no
matter how many worker threads execute them.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import traceback
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .continuation import (ContinuationError, branch_events, branch_to_csv,
                           continue_branch, cosine_forcing, detect_hopf)
from .dynamics import BlowUpError, RunConfig, amplitude_of, integrate, random_state
from .field import (Grid, SpectralState, load_coeffs_json, save_coeffs_json,
                    save_snapshot_csv, to_physical)
from .linstab import continuous_minimum, critical_rayleigh, marginal_rayleigh
from .params import ConfigError, NondimParams, params_from_config, read_config
from .topology import classify_pattern, render_pattern, structural_stability_check
from .transition import classify, critical_pair, default_grid, reduced_model, transition_number

KINDS = ("marginal", "critical", "simulate", "transition", "continue",
         "topology", "sweep", "verify")


@dataclass
class ExperimentConfig:
    kind: str
    params: NondimParams | None
    options: dict
    grid_nx: int | None
    grid_nz: int | None
    out: Path
    seed: int
    threads: int
    config_echo: dict
    warnings: list[str] = dc_field(default_factory=list)


@dataclass
class RunReport:
    config: dict
    versions: dict
    seed: int
    warnings: list[str]
    payload: dict
    wall_time: float


# ---------------------------------------------------------------------------
# config plumbing

def _versions() -> dict:
    import scipy
    from . import __version__
    return {
        "python": ".".join(map(str, sys.version_info[:3])),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "walkercell": __version__,
    }


def _echo(cfg) -> dict:
    return {sec: dict(cfg.items(sec)) for sec in cfg.sections()}


def _opt_float(options: dict, key: str, default: float | None = None) -> float | None:
    if key not in options:
        return default
    try:
        return float(options[key])
    except ValueError as exc:
        raise ConfigError(f"option {key} = {options[key]!r} is not a number") from exc


def _opt_int(options: dict, key: str, default: int | None = None) -> int | None:
    if key not in options:
        return default
    try:
        return int(options[key])
    except ValueError as exc:
        raise ConfigError(f"option {key} = {options[key]!r} is not an integer") from exc


def _opt_bool(options: dict, key: str, default: bool = False) -> bool:
    if key not in options:
        return default
    val = options[key].strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"option {key} = {options[key]!r} is not a boolean")


def load_experiment(kind: str, args) -> ExperimentConfig:
    """Merge the config file with command-line overrides."""
    needs_params = kind != "verify"
    cfg = None
    if args.config is not None:
        cfg = read_config(args.config)
    elif needs_params:
        raise ConfigError(f"subcommand {kind!r} requires --config")

    params = None
    warn: list[str] = []
    echo: dict = {}
    options: dict = {}
    nx = nz = None
    seed = 0
    out = None
    if cfg is not None:
        echo = _echo(cfg)
        if cfg.has_section("run"):
            run = dict(cfg.items("run"))
            cfg_kind = run.get("kind")
            if cfg_kind is not None and cfg_kind != kind:
                raise ConfigError(
                    f"config sets kind = {cfg_kind!r} but subcommand is {kind!r}")
            if "seed" in run:
                seed = _opt_int(run, "seed")
            if "out" in run:
                out = Path(run["out"])
        if needs_params:
            params, warn = params_from_config(cfg)
        if cfg.has_section("grid"):
            gsec = dict(cfg.items("grid"))
            for key in gsec:
                if key not in ("nx", "nz"):
                    raise ConfigError(f"unknown key {key!r} in [grid]")
            nx = _opt_int(gsec, "nx")
            nz = _opt_int(gsec, "nz")
        if cfg.has_section(kind):
            options = dict(cfg.items(kind))

    if args.seed is not None:
        seed = args.seed
    if args.out is not None:
        out = Path(args.out)
    if out is None:
        out = Path(f"runs/{kind}")

    env_threads = os.environ.get("WALKER_THREADS")
    threads = args.threads if args.threads is not None else \
        (int(env_threads) if env_threads else 1)
    if threads < 1:
        raise ConfigError(f"threads must be positive, got {threads}")

    return ExperimentConfig(kind, params, options, nx, nz, out, seed,
                            threads, echo, warn)


def _grid_for(ec: ExperimentConfig, kc: int) -> Grid:
    base = default_grid(ec.params, kc)
    nx = ec.grid_nx if ec.grid_nx is not None else base.nx
    nz = ec.grid_nz if ec.grid_nz is not None else base.nz
    return Grid(ec.params.r0, nx, nz)


# ---------------------------------------------------------------------------
# study kinds

def run_marginal(ec: ExperimentConfig) -> dict:
    p = ec.params
    cp = critical_rayleigh(p)
    kband = _opt_int(ec.options, "kband", cp.kc + 4)
    j = _opt_int(ec.options, "j", 1)
    astar, rstar = continuous_minimum(p, j)
    rows = [(k, marginal_rayleigh(p, k, j)) for k in range(1, kband + 1)]
    with open(ec.out / "marginal.csv", "w") as fh:
        fh.write("k,R_marginal\n")
        for k, r in rows:
            fh.write(f"{k},{r!r}\n")
    return {
        "kind": "marginal",
        "j": j,
        "table": [{"k": k, "R": float(r)} for k, r in rows],
        "continuous": {"alpha": astar, "R": rstar},
        "critical": {"Rc": cp.Rc, "kc": cp.kc},
    }


def run_critical(ec: ExperimentConfig) -> dict:
    p = ec.params
    method = ec.options.get("method", "closed")
    if method not in ("closed", "eigen"):
        raise ConfigError(f"critical method must be closed or eigen, got {method!r}")
    nz = _opt_int(ec.options, "nz", 32)
    cp = critical_rayleigh(p, method=method, nz=nz)
    return {
        "kind": "critical",
        "method": method,
        "Rc": cp.Rc,
        "kc": cp.kc,
        "jc": cp.jc,
        "alpha": cp.alpha,
        "multiplicity": cp.multiplicity,
        "degenerate": cp.degenerate,
        "rival_k": cp.rival_k,
        "rival_gap": None if not np.isfinite(cp.rival_gap) else cp.rival_gap,
    }


def _simulate_once(ec: ExperimentConfig, ratio: float | None, seed: int,
                   write_files: bool = True, tag: str = "") -> dict:
    p = ec.params
    cp = critical_rayleigh(p)
    R = _opt_float(ec.options, "R")
    if ratio is None:
        ratio = _opt_float(ec.options, "ratio")
    if R is None:
        R = (ratio if ratio is not None else 1.02) * cp.Rc
    ratio = R / cp.Rc
    pr = p.replace(rayleigh=R)
    grid = _grid_for(ec, cp.kc)

    ic_kind = ec.options.get("ic", "eigen")
    amp0 = _opt_float(ec.options, "amplitude")
    mean_flow = _opt_float(ec.options, "mean_flow", 0.0)
    rm = None
    if ic_kind == "eigen":
        pair, _ = critical_pair(p.replace(rayleigh=cp.Rc), grid)
        if amp0 is None:
            if R > cp.Rc:
                rm = reduced_model(p, grid)
                amp0 = 0.5 * float(np.sqrt(rm.beta1_slope * (R - cp.Rc)
                                           / abs(rm.alpha_t)))
            else:
                amp0 = 0.1
        s0 = pair.state * amp0
    elif ic_kind == "random":
        s0 = random_state(grid, seed=seed, amplitude=amp0 if amp0 else 0.1)
    else:
        raise ConfigError(f"ic must be eigen or random, got {ic_kind!r}")
    if mean_flow:
        s0 = s0.copy()
        s0.mean[0] += mean_flow

    cfgrun = RunConfig(
        t_end=_opt_float(ec.options, "t_end", 100.0),
        dt=_opt_float(ec.options, "dt", 2e-3),
        steady_tol=_opt_float(ec.options, "steady_tol", 1e-9),
        record_interval=_opt_float(ec.options, "record_interval", 0.5),
        snapshot_interval=_opt_float(ec.options, "snapshot_interval", 0.0),
    )
    traj = integrate(pr, s0, cfgrun)

    payload = {
        "kind": "simulate",
        "R": float(R),
        "ratio": float(ratio),
        "Rc": cp.Rc,
        "verdict": traj.verdict,
        "steps": traj.steps,
        "dt": traj.dt,
        "final_time": float(traj.times[-1]),
        "final_amplitude": float(traj.amplitude[-1]),
        "final_mean_flow": float(traj.mean0[-1]),
        "pattern": classify_pattern(traj.final).kind,
    }
    if ic_kind == "eigen" and R > cp.Rc:
        if rm is None:
            rm = reduced_model(p, grid)
        pair, _ = critical_pair(p.replace(rayleigh=cp.Rc), grid)
        meas, _ph = amplitude_of(pr, traj.final, pair)
        pred = float(np.sqrt(rm.beta1_slope * (R - cp.Rc) / abs(rm.alpha_t)))
        payload["mode_amplitude"] = float(meas)
        payload["predicted_amplitude"] = pred

    if write_files:
        stem = f"trajectory{tag}"
        with open(ec.out / f"{stem}.csv", "w") as fh:
            fh.write("t,amplitude,mean_flow\n")
            for t, a, m in zip(traj.times, traj.amplitude, traj.mean0):
                fh.write(f"{t!r},{a!r},{m!r}\n")
        save_coeffs_json(traj.final, str(ec.out / f"final_state{tag}.json"))
        save_snapshot_csv(to_physical(traj.final), str(ec.out / f"final_fields{tag}.csv"))
    return payload


def run_simulate(ec: ExperimentConfig) -> dict:
    return _simulate_once(ec, None, ec.seed)


def run_transition(ec: ExperimentConfig) -> dict:
    p = ec.params
    cp = critical_rayleigh(p)
    grid = _grid_for(ec, cp.kc)
    rm = reduced_model(
        p, grid,
        nsample=_opt_int(ec.options, "nsample", 5),
        window=_opt_float(ec.options, "window", 0.02),
    )
    rep = classify(rm)
    a_energy = transition_number(p, grid, route="energy")
    with open(ec.out / "branches.csv", "w") as fh:
        fh.write("label,stability,R,amplitude,signed\n")
        for br in rep.branches:
            for lam, amp, sgn in zip(br.lambdas, br.amplitude, br.signed):
                fh.write(f"{br.label},{br.stability},{float(lam)!r},"
                         f"{float(amp)!r},{float(sgn)!r}\n")
    return {
        "kind": "transition",
        "Rc": cp.Rc,
        "kc": cp.kc,
        "alpha": rm.alpha_t,
        "alpha_energy_route": float(a_energy),
        "beta1_slope": rm.beta1_slope,
        "k_order": rm.k_order,
        "type": rep.type,
        "notes": rep.notes,
    }


def run_continue(ec: ExperimentConfig) -> dict:
    p = ec.params
    cp = critical_rayleigh(p)
    nx = ec.grid_nx if ec.grid_nx is not None else max(16, 4 * cp.kc + 4)
    nz = ec.grid_nz if ec.grid_nz is not None else 8
    grid = Grid(p.r0, nx, nz)
    eps = _opt_float(ec.options, "eps", 0.01)
    kphi = _opt_int(ec.options, "kphi", 1)
    f = cosine_forcing(grid, eps, kphi)
    R_start = _opt_float(ec.options, "start_ratio", 0.6) * cp.Rc
    R_end = _opt_float(ec.options, "end_ratio", 1.05) * cp.Rc
    ds = _opt_float(ec.options, "ds", 0.05 * cp.Rc)
    br = continue_branch(p, f, R_start, R_end, ds, grid,
                         max_steps=_opt_int(ec.options, "max_steps", 200))
    branch_to_csv(br, str(ec.out / "branch.csv"))
    events = branch_events(br)
    payload = {
        "kind": "continue",
        "Rc": cp.Rc,
        "eps": eps,
        "kphi": kphi,
        "points": len(br.points),
        "stopped": br.stopped,
        "R_first": br.points[0].R,
        "R_last": br.points[-1].R,
        "events": events,
    }
    if _opt_bool(ec.options, "hopf_scan", False):
        window = (R_start, R_end)
        hp = detect_hopf(p, f, window,
                         samples=_opt_int(ec.options, "hopf_samples", 25))
        payload["hopf"] = None if hp is None else {
            "R": hp.R, "frequency": hp.frequency,
            "pair": [hp.pair.real, hp.pair.imag],
        }
    return payload


def run_topology(ec: ExperimentConfig) -> dict:
    p = ec.params
    state_path = ec.options.get("state")
    if state_path:
        s = load_coeffs_json(state_path)
    else:
        cp = critical_rayleigh(p)
        grid = _grid_for(ec, cp.kc)
        k = _opt_int(ec.options, "k", cp.kc)
        amp = _opt_float(ec.options, "amplitude", 1.0)
        c = _opt_float(ec.options, "mean_flow", 0.0)
        s = SpectralState.zero(grid)
        s.psi[k, 0] = amp / 2.0
        s.mean[0] = c
        s = SpectralState(grid, s.psi, s.mean, s.theta)
    rep = classify_pattern(s)
    stab = structural_stability_check(s, rep.critical_points)
    if _opt_bool(ec.options, "svg", False):
        render_pattern(s, str(ec.out / "pattern.svg"))
    return {
        "kind": "topology",
        "pattern": rep.kind,
        "cells": rep.cell_count,
        "mean_flow": rep.mean_flow,
        "in_E": rep.in_E,
        "critical_points": [
            {"x1": pt.x1, "x2": pt.x2, "kind": pt.kind,
             "on_boundary": pt.on_boundary}
            for pt in rep.critical_points
        ],
        "stability": {
            "regular": stab.regular,
            "wall_to_wall_connections": stab.wall_to_wall_connections,
            "interior_saddles_self_connected": stab.interior_saddles_self_connected,
            "in_htilde": stab.in_htilde,
            "stable_in_h": stab.stable_in_h,
            "stable_in_htilde": stab.stable_in_htilde,
        },
    }


def run_sweep(ec: ExperimentConfig) -> dict:
    raw = ec.options.get("ratios", "1.01 1.02 1.04")
    try:
        ratios = [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"[sweep] ratios = {raw!r} is not a number list") from exc
    if not ratios:
        raise ConfigError("[sweep] ratios must not be empty")

    def one(i_ratio):
        i, ratio = i_ratio
        return _simulate_once(ec, ratio, ec.seed + i, write_files=False)

    with ThreadPoolExecutor(max_workers=ec.threads) as pool:
        results = list(pool.map(one, enumerate(ratios)))

    cp = critical_rayleigh(ec.params)
    with open(ec.out / "sweep.csv", "w") as fh:
        fh.write("ratio,R,verdict,final_amplitude,mode_amplitude,predicted_amplitude\n")
        for row in results:
            fh.write(f"{row['ratio']!r},{row['R']!r},{row['verdict']},"
                     f"{row['final_amplitude']!r},"
                     f"{row.get('mode_amplitude', '')!r},"
                     f"{row.get('predicted_amplitude', '')!r}\n")

    payload = {"kind": "sweep", "Rc": cp.Rc, "runs": results}
    supercrit = [r for r in results
                 if "mode_amplitude" in r and r["R"] > cp.Rc]
    if len(supercrit) >= 2:
        des = np.array([r["R"] - cp.Rc for r in supercrit])
        amps = np.array([r["mode_amplitude"] for r in supercrit])
        payload["fitted_exponent"] = float(
            np.polyfit(np.log(des), np.log(amps), 1)[0])
    return payload


def run_verify(ec: ExperimentConfig, suite: str) -> dict:
    if suite != "all" and suite not in verify_mod.SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from "
                          f"{sorted(verify_mod.SUITES)} or 'all'")
    results = verify_mod.run_suite(suite, seed=ec.seed)
    for r in results:
        print(verify_mod.format_line(r))
    body = json.loads(verify_mod.payload_json(results))
    body["suite"] = suite
    return body


_HANDLERS = {
    "marginal": run_marginal,
    "critical": run_critical,
    "simulate": run_simulate,
    "transition": run_transition,
    "continue": run_continue,
    "topology": run_topology,
    "sweep": run_sweep,
}


# ---------------------------------------------------------------------------
# entry point

def _write_report(ec: ExperimentConfig, payload: dict, wall: float,
                  warn_msgs: list[str]) -> None:
    report = {
        "config": ec.config_echo,
        "versions": _versions(),
        "seed": ec.seed,
        "warnings": ec.warnings + warn_msgs,
        "payload": payload,
    }
    with open(ec.out / "report.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(ec.out / "meta.json", "w") as fh:
        json.dump({"wall_time_s": wall, "completed_unix": time.time()},
                  fh, indent=1)
        fh.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="walkercell",
        description="Experiment runner for the channel convection toolkit.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", default=None, metavar="PATH")
        sp.add_argument("--out", default=None, metavar="DIR")
        sp.add_argument("--seed", type=int, default=None, metavar="N")
        sp.add_argument("--threads", type=int, default=None, metavar="N")
        if kind == "verify":
            sp.add_argument("suite", nargs="?", default="all")

    args = parser.parse_args(argv)
    kind = args.kind

    try:
        ec = load_experiment(kind, args)
        if kind == "verify" and args.suite != "all" \
                and args.suite not in verify_mod.SUITES:
            raise ConfigError(f"unknown suite {args.suite!r}; choose from "
                              f"{sorted(verify_mod.SUITES)} or 'all'")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    ec.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    caught: list[str] = []
    try:
        with warnings.catch_warnings(record=True) as wrec:
            warnings.simplefilter("always")
            if kind == "verify":
                payload = run_verify(ec, args.suite)
            else:
                payload = _HANDLERS[kind](ec)
        caught = [str(w.message) for w in wrec]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ContinuationError, BlowUpError, RuntimeError, ValueError,
            np.linalg.LinAlgError) as exc:
        diag = {
            "error": type(exc).__name__,
            "message": str(exc),
            "traceback": traceback.format_exc(),
            "seed": ec.seed,
        }
        with open(ec.out / "diagnostics.json", "w") as fh:
            json.dump(diag, fh, indent=1)
            fh.write("\n")
        print(f"numeric failure: {exc}", file=sys.stderr)
        print(f"diagnostics written to {ec.out / 'diagnostics.json'}",
              file=sys.stderr)
        return 3

    payload["seed"] = ec.seed
    wall = time.perf_counter() - t0
    _write_report(ec, payload, wall, caught)
    print(f"{kind}: ok ({wall:.2f}s), report in {ec.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
