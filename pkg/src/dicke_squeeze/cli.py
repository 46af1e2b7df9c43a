"""JSON-configured command-line runs.

Each subcommand reads one run.v1 config file, writes its data artifact
(CSV by default, JSON with --format json) plus a summary.json into --out,
and exits 0 on success, 2 on configuration errors, 3 on numerical
failures. Identical configs produce bit-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import experiments, full_model, metrics, moments
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSpinError,
    DomainError,
    FitDivergenceError,
    IntegratorError,
    RegimeError,
    ResourceError,
    SchemeError,
    SingularMatrixError,
)
from .params import RawParams, Scheme, derive_chain, raw_params_from_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_CONFIG_ERRORS = (ConfigError, DomainError, SchemeError)
_NUMERICAL_ERRORS = (
    ConvergenceError,
    IntegratorError,
    FitDivergenceError,
    SingularMatrixError,
    DegenerateSpinError,
    ResourceError,
    RegimeError,
)
_TWO_PI = 2.0 * math.pi


def _load_run_config(path: str) -> tuple[dict, RawParams]:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("run config must be a JSON object")
    schema = cfg.get("schema", "run.v1")
    if schema != "run.v1":
        raise ConfigError(f"unsupported run config schema {schema!r}")
    if "params" not in cfg:
        raise ConfigError("run config needs a 'params' object")
    return cfg, raw_params_from_dict(cfg["params"])


def _time_grid(cfg: dict, key: str = "t_grid_s") -> np.ndarray:
    spec = cfg.get(key)
    if spec is None:
        raise ConfigError(f"run config needs {key!r}")
    if isinstance(spec, dict):
        extra = sorted(set(spec) - {"start", "stop", "num"})
        if extra:
            raise ConfigError(f"unknown {key} keys: {', '.join(extra)}")
        try:
            return np.linspace(
                float(spec.get("start", 0.0)), float(spec["stop"]), int(spec["num"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad {key} spec: {exc}") from None
    if isinstance(spec, list) and spec:
        return np.asarray(spec, dtype=float)
    raise ConfigError(f"{key} must be a non-empty list or start/stop/num object")


def _scheme_entries(cfg: dict, raw: RawParams) -> tuple:
    """Scheme list from the config, defaulting to the params' own scheme."""
    if "schemes" in cfg:
        entries = []
        for item in cfg["schemes"]:
            if isinstance(item, str):
                try:
                    entries.append(Scheme(item))
                except ValueError:
                    raise ConfigError(f"unknown scheme {item!r}") from None
            elif isinstance(item, (int, float)) and not isinstance(item, bool):
                entries.append(float(item))
            else:
                raise ConfigError(f"scheme entries are names or Gamma/omega_b "
                                  f"ratios, got {item!r}")
        return tuple(entries)
    p = derive_chain(raw)
    return (p.Gamma / raw.omega_b,)


def _scan_config(cfg: dict, raw: RawParams, axis: str, grid) -> experiments.ScanConfig:
    return experiments.ScanConfig(
        raw=raw,
        axis=axis,
        grid=tuple(grid),
        schemes=_scheme_entries(cfg, raw),
        solver=cfg.get("solver", "exact"),
        n_bars=tuple(cfg.get("n_bars", ())),
        N_grid=tuple(int(n) for n in cfg.get("N_grid", ())),
        fit_const=bool(cfg.get("fit_const", True)),
        log_fit=bool(cfg.get("log_fit", False)),
        rtol=float(cfg.get("rtol", experiments.DEFAULT_SCAN_RTOL)),
        atol=float(cfg.get("atol", experiments.DEFAULT_SCAN_ATOL)),
    )


def _write_table(out: Path, name: str, fmt: str, columns: dict) -> Path:
    """Write named columns as CSV (or a column-oriented JSON document)."""
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out / f"{name}.csv"
        data = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
        np.savetxt(path, data, delimiter=",", comments="",
                   header=",".join(columns), fmt="%.17g")
    else:
        path = out / f"{name}.json"
        doc = {k: np.asarray(v, dtype=float).tolist() for k, v in columns.items()}
        path.write_text(json.dumps({"columns": doc}, indent=1) + "\n")
    return path


def _write_summary(out: Path, summary: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=1, sort_keys=True,
                               allow_nan=True) + "\n")
    return path


def _chain_echo(raw: RawParams) -> dict:
    p = derive_chain(raw)
    return {
        "scheme": p.scheme.value,
        "Gamma": p.Gamma,
        "r": p.r,
        "tanh2r": p.tanh2r,
        "omega_r": p.omega_r,
        "chi": p.chi,
        "chi_tilde": p.chi_tilde,
        "Gamma_gamma": p.Gamma_gamma,
        "n_th": p.n_th,
        "c": p.c,
        "eps": p.eps,
        "T2": p.T2,
    }


def cmd_evolve(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    t = _time_grid(cfg)
    scan = _scan_config(cfg, raw, "t", t)
    results = experiments.scan_time(scan)
    columns = {"t": t}
    minima = {}
    for label, traj in results.items():
        columns[f"xi2_{label}"] = traj.xi2
        res = metrics.find_minimum(traj)
        minima[label] = {"t_min": res.t_min, "xi2_min": res.y_min,
                         "on_boundary": res.on_boundary}
    path = _write_table(out, "trajectories", fmt, columns)
    return {"command": "evolve", "data": path.name, "solver": scan.solver,
            "N": raw.N, "minima": minima}


def cmd_moments(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    t = _time_grid(cfg)
    params = derive_chain(raw)
    sys_ = moments.build_moment_system(params, raw.N)
    traj = moments.solve_moments(sys_, t)
    res = metrics.find_minimum(traj)
    columns = {"t": t, "xi2": traj.xi2,
               "Sy2": traj.second[:, 1, 1], "Sz2": traj.second[:, 2, 2],
               "Cyz": traj.second[:, 1, 2]}
    path = _write_table(out, "moments", fmt, columns)
    summary = {"command": "moments", "data": path.name, "N": raw.N,
               "grid_minimum": {"t_min": res.t_min, "xi2_min": res.y_min},
               "chain": _chain_echo(raw)}
    try:
        opt = moments.analytic_optimum(params, raw.N)
        summary["analytic_optimum"] = {
            "t_min": opt.t_min, "xi2_min": opt.xi2_min, "Theta": opt.Theta}
    except (DomainError, SchemeError) as exc:
        summary["analytic_optimum"] = None
        summary["analytic_error"] = str(exc)
    return summary


def cmd_bound(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    params = derive_chain(raw)
    return {"command": "bound", "chain": _chain_echo(raw),
            "eps": params.eps, "xi2_lb": moments.asymptotic_bound(params)}


def cmd_scan_n(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    if "N_grid" not in cfg:
        raise ConfigError("scan-n needs an 'N_grid' list")
    scan = _scan_config(cfg, raw, "N", cfg["N_grid"])
    fit = experiments.scan_N_fit(scan)
    path = _write_table(out, "scan_n", fmt, {
        "N": fit.N_values, "xi2_min": fit.xi2_values, "t_min": fit.t_values})
    return {"command": "scan-n", "data": path.name,
            "fit": {"a": fit.a, "b": fit.b, "const": fit.const,
                    "residual_norm": fit.residual_norm,
                    "stderr": list(fit.stderr), "N_range": list(fit.N_range),
                    "fit_const": fit.fit_const, "log_space": fit.log_space}}


def cmd_optimize(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    if "omega_r_bracket_hz" not in cfg:
        raise ConfigError("optimize needs 'omega_r_bracket_hz': [lo, hi]")
    lo, hi = (float(v) * _TWO_PI for v in cfg["omega_r_bracket_hz"])
    scan = _scan_config(cfg, raw, "omega_r", (lo, hi))
    if scan.N_grid:
        result = experiments.optimize_scan(scan)
        path = _write_table(out, "optimize", fmt, {
            "N": [r.N for r in result.rows],
            "omega_r_opt": [r.omega_r_opt for r in result.rows],
            "xi2_opt": [r.xi2_opt for r in result.rows],
            "t_opt": [r.t_opt for r in result.rows],
            "xi2_fixed": [r.xi2_fixed for r in result.rows],
            "t_fixed": [r.t_fixed for r in result.rows]})
        return {"command": "optimize", "data": path.name,
                "fit_optimized": {"a": result.fit.a, "b": result.fit.b,
                                  "const": result.fit.const},
                "fit_fixed": {"a": result.fixed_fit.a, "b": result.fixed_fit.b,
                              "const": result.fixed_fit.const},
                "time_reduced_everywhere": bool(
                    all(r.t_opt < r.t_fixed for r in result.rows))}
    opt = experiments.optimize_omega_r(scan)
    return {"command": "optimize", "N": opt.N,
            "omega_r_opt": opt.omega_r_opt, "omega_r_opt_hz": opt.omega_r_opt / _TWO_PI,
            "xi2_opt": opt.xi2_opt, "t_opt": opt.t_opt,
            "flat_profile": opt.flat_profile,
            "pre_grid_omega": list(opt.pre_grid_omega),
            "pre_grid_xi2": list(opt.pre_grid_xi2),
            "n_evaluations": opt.n_evaluations}


def cmd_husimi(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    t = _time_grid(cfg)
    hus = cfg.get("husimi", {})
    n_theta = int(hus.get("n_theta", 64))
    n_phi = int(hus.get("n_phi", 128))
    scan = _scan_config(cfg, raw, "t", t)
    entry = scan.schemes[0] if scan.schemes else None
    if entry is None:
        raise ConfigError("husimi needs at least one scheme")
    rebased = experiments._raw_for_scheme(raw, entry)
    traj = experiments._solve_xi2(rebased, raw.N, t, scan.solver,
                                  scan.rtol, scan.atol)
    if traj.final_state is not None:
        field = metrics.husimi_q(traj.final_state, n_theta=n_theta, n_phi=n_phi)
    elif traj.final_psi is not None:
        rho = np.outer(traj.final_psi, traj.final_psi.conj())
        field = metrics.husimi_q(rho, j=raw.N / 2.0, n_theta=n_theta, n_phi=n_phi)
    else:
        raise ConfigError("husimi needs a solver that stores the final state")
    th, ph = np.meshgrid(field.theta, field.phi, indexing="ij")
    path = _write_table(out, "husimi", fmt, {
        "theta": th.ravel(), "phi": ph.ravel(), "Q": field.Q.ravel()})
    return {"command": "husimi", "data": path.name, "t": float(t[-1]),
            "j": field.j, "weight": field.weight,
            "integral_estimate": field.integral_estimate,
            "n_theta": n_theta, "n_phi": n_phi}


def cmd_verify(cfg: dict, raw: RawParams, out: Path, fmt: str) -> dict:
    ver = cfg.get("verify", {})
    t_grid = _time_grid(cfg) if "t_grid_s" in cfg else None
    report = full_model.verify_effective_reduction(
        raw,
        t_grid=t_grid,
        n_a=int(ver.get("n_a", 8)),
        n_b=int(ver.get("n_b", 12)),
        squeezed_phonon=bool(ver.get("squeezed_phonon", True)),
        regime_factor=float(ver.get("regime_factor", 0.1)),
        strict_regime=bool(ver.get("strict_regime", False)),
        leak_tol=float(ver.get("leak_tol", 1e-6)),
    )
    _write_table(out, "verify_trace", fmt, {
        "t": report.t, "xi2_full": report.xi2_full, "xi2_eff": report.xi2_eff})
    doc = asdict(report)
    for key, val in doc.items():
        if isinstance(val, np.ndarray):
            doc[key] = val.tolist()
    doc["command"] = "verify"
    doc["data"] = "verify_trace." + ("csv" if fmt == "csv" else "json")
    return doc


_COMMANDS = {
    "evolve": cmd_evolve,
    "scan-n": cmd_scan_n,
    "optimize": cmd_optimize,
    "husimi": cmd_husimi,
    "moments": cmd_moments,
    "bound": cmd_bound,
    "verify": cmd_verify,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicke-squeeze",
        description="Collective spin-squeezing runs driven by JSON configs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run.v1 JSON file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="data artifact format (summary is always JSON)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg, raw = _load_run_config(args.config)
        summary = _COMMANDS[args.command](cfg, raw, out, args.format)
        _write_summary(out, summary)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
