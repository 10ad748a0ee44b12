"""Command-line interface: deterministic CSV/JSON emission for every curve.

Subcommands: `spectrum` (output spectra and covariance determinant of the
self protocol), `negativity` (mutual-protocol entanglement curves),
`trajectory` (stochastic records / ensemble periodograms), `filters`
(sampled estimator responses), `verify` (randomized identity suites),
and `replay` (re-run any emitted sidecar byte-identically).

Exit codes: 0 success, 2 configuration error, 3 verification failure.
The default output directory is $SNOPTOMECH_OUT, else ./snoptomech-out.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .entanglement import negativity_spectrum
from .grids import GridSpec, default_grid, parse_grid_arg
from .filters import filter_time_domain, kalman_filter, wiener_filter
from .params import (Bath, ParameterError, PhysicalParams, Protocol, Theory,
                     derive_working_params, physical_params_from_dict,
                     physical_params_to_dict)
from .riccati import suggested_dt
from .spectra import covariance_self, spectrum_self
from .trajectories import ensemble_spectrum, simulate_record
from .verify import run_verification
from .welch import SegmentPolicy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON file of physical parameters")
    p.add_argument("--theory", choices=[t.value for t in Theory], help="override theory tag")
    p.add_argument("--bath", choices=[b.value for b in Bath], help="override bath prescription")
    p.add_argument("--protocol", choices=[pr.value for pr in Protocol], help="override protocol tag")
    p.add_argument("--theta", type=float, help="override homodyne angle [rad]")
    p.add_argument("--temp-ladder", type=str, default=None,
                   help="comma-separated theta_T values [rad/s]")
    p.add_argument("--grid", type=str, default=None, help="frequency grid MIN:MAX:N[:log|:linear]")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--trajectories", type=int, default=1, help="ensemble size")
    p.add_argument("--out", type=Path, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="snoptomech", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, hlp in [("spectrum", "output spectra and det V of the self protocol"),
                      ("negativity", "mutual-protocol negativity curves"),
                      ("trajectory", "stochastic records / ensemble periodograms"),
                      ("filters", "sampled estimator responses")]:
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
    tr = sub.choices["trajectory"]
    tr.add_argument("--duration", type=float, default=None, help="record duration [s]")
    tr.add_argument("--dt", type=float, default=None, help="integration step [s]")
    tr.add_argument("--burn-in", type=float, default=0.0)
    tr.add_argument("--decimate", type=int, default=1)
    tr.add_argument("--emit", choices=["records", "periodogram"], default="records")
    tr.add_argument("--segment-samples", type=int, default=1024)
    tr.add_argument("--segments", type=int, default=8, help="segments per trajectory")
    ver = sub.add_parser("verify", help="run the randomized identity suites")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--draws", type=int, default=100)
    ver.add_argument("--perturb-beta", type=float, default=0.0,
                     help="negative-control hook: fractional root perturbation")
    ver.add_argument("--out", type=Path, default=None)
    rep = sub.add_parser("replay", help="re-run a sidecar byte-identically")
    rep.add_argument("sidecar", type=Path)
    rep.add_argument("--out", type=Path, default=None)
    return ap


def _outdir(args) -> Path:
    out = args.out or Path(os.environ.get("SNOPTOMECH_OUT", "snoptomech-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _physical_cfg(args) -> dict:
    if args.config is None:
        raise ParameterError("--config is required")
    with open(args.config) as fh:
        cfg = json.load(fh)
    overrides = {"theory": args.theory, "bath": args.bath,
                 "protocol": args.protocol, "theta": args.theta}
    physical = physical_params_from_dict(cfg, overrides)
    return physical_params_to_dict(physical)


def _ladder(args, physical: dict) -> list[float]:
    if args.temp_ladder:
        return [float(x) for x in args.temp_ladder.split(",")]
    return [physical["theta_T"]]


def _grid_cfg(args, physical: dict) -> dict:
    if args.grid:
        return parse_grid_arg(args.grid).to_dict()
    working = derive_working_params(physical_params_from_dict(physical))
    return default_grid(working).to_dict()


def _run_config(args) -> dict:
    physical = _physical_cfg(args)
    cfg = {"subcommand": args.command, "physical": physical,
           "seed": args.seed, "temp_ladder": _ladder(args, physical)}
    if args.command in ("spectrum", "negativity", "filters"):
        cfg["grid"] = _grid_cfg(args, physical)
    if args.command == "trajectory":
        working = derive_working_params(physical_params_from_dict(physical))
        dt = args.dt if args.dt is not None else suggested_dt(working)
        duration = args.duration if args.duration is not None \
            else args.segment_samples * args.decimate * dt * args.segments
        cfg["ensemble"] = {
            "trajectories": args.trajectories, "duration": duration, "dt": dt,
            "burn_in": args.burn_in, "decimate": args.decimate,
            "emit": args.emit, "segment_samples": args.segment_samples,
            "segments": args.segments,
        }
    return cfg


def _working_for(cfg: dict, theta_T: float):
    physical = dict(cfg["physical"])
    physical["theta_T"] = theta_T
    return derive_working_params(physical_params_from_dict(physical))


def _execute(cfg: dict, outdir: Path) -> list[Path]:
    cmd = cfg["subcommand"]
    if cmd == "spectrum":
        return _exec_spectrum(cfg, outdir)
    if cmd == "negativity":
        return _exec_negativity(cfg, outdir)
    if cmd == "filters":
        return _exec_filters(cfg, outdir)
    if cmd == "trajectory":
        return _exec_trajectory(cfg, outdir)
    raise ParameterError(f"unknown subcommand in config: {cmd}")


def _emit(outdir: Path, stem: str, columns: dict, comment: str, cfg: dict,
          extra: dict | None = None) -> list[Path]:
    csv = io.write_curve_csv(outdir / f"{stem}.csv", columns, comment)
    side_cfg = dict(cfg)
    if extra:
        side_cfg.update(extra)
    side = io.write_sidecar(csv, side_cfg)
    return [csv, side]


def _exec_spectrum(cfg: dict, outdir: Path) -> list[Path]:
    grid = GridSpec.from_dict(cfg["grid"]).build()
    written = []
    for k, theta_T in enumerate(cfg["temp_ladder"]):
        w = _working_for(cfg, theta_T)
        if w.protocol is not Protocol.SELF_GRAVITY:
            raise ParameterError("spectrum emission targets the self protocol")
        s, parts = spectrum_self(w, grid, components=True)
        _, det_v = covariance_self(w, grid)
        cols = {"freq_hz": grid / (2.0 * math.pi), "s_total": s,
                "s_shot_backaction": parts["shot_backaction"],
                "s_bath": parts["bath"], "s_sn": parts["sn"], "det_v": det_v}
        written += _emit(outdir, f"spectrum_T{k}", cols,
                         "record spectrum and covariance determinant vs frequency "
                         "(two-sided, shot floor = 1)", cfg,
                         {"theta_T": theta_T, "curve": "spectrum"})
    return written


def _exec_negativity(cfg: dict, outdir: Path) -> list[Path]:
    grid = GridSpec.from_dict(cfg["grid"]).build()
    written = []
    for k, theta_T in enumerate(cfg["temp_ladder"]):
        w = _working_for(cfg, theta_T)
        if w.protocol is not Protocol.MUTUAL_GRAVITY:
            raise ParameterError("negativity emission requires the mutual protocol")
        res = negativity_spectrum(w, grid)
        cols = {"freq_hz": grid / (2.0 * math.pi), "n_raw": res.raw, "eps_n": res.eps,
                "sigma_sum": res.sigma_sum, "det_sigma": res.det_sigma}
        written += _emit(outdir, f"negativity_T{k}", cols,
                         "logarithmic negativity of the outgoing fields vs frequency",
                         cfg, {"theta_T": theta_T, "curve": "negativity",
                               "bath_extrapolation_note":
                                   "thermal terms enter via the conditional variance "
                                   "and the quantum-record floor (see README)"})
    return written


def _exec_filters(cfg: dict, outdir: Path) -> list[Path]:
    grid = GridSpec.from_dict(cfg["grid"]).build()
    w = _working_for(cfg, cfg["temp_ladder"][0])
    kw = wiener_filter(w, grid)
    kf = kalman_filter(w, grid, variant="full_record")
    kq = kalman_filter(w, grid, variant="quantum_record")
    cols = {"freq_hz": grid / (2.0 * math.pi)}
    for name, vals in [("wiener", kw), ("kalman_full", kf), ("kalman_quantum", kq)]:
        cols.update(io.split_complex(name, vals))
    # time-domain kernel on a matched window
    t = np.linspace(0.0, 10.0 * 2.0 * math.pi / w.omega_m, grid.size)
    cols_t = {"time_s": t, "kernel": filter_time_domain(w, t)}
    written = _emit(outdir, "filters_freq", cols,
                    "estimator responses vs frequency", cfg, {"curve": "filters"})
    written += _emit(outdir, "filters_time", cols_t,
                     "time-domain estimator kernel", cfg, {"curve": "filters_time"})
    return written


def _exec_trajectory(cfg: dict, outdir: Path) -> list[Path]:
    ens = cfg["ensemble"]
    w = _working_for(cfg, cfg["temp_ladder"][0])
    written = []
    if ens["emit"] == "records":
        records = simulate_record(
            w, duration=ens["duration"], dt=ens["dt"], seed=cfg["seed"],
            n_traj=ens["trajectories"], burn_in=ens["burn_in"],
            decimate=ens["decimate"])
        for k, rec in enumerate(records):
            n = rec.samples.shape[1]
            cols = {"time_s": np.arange(n) * rec.dt}
            for ch, label in enumerate(rec.labels):
                cols[label] = rec.samples[ch]
            written += _emit(outdir, f"record_{k:04d}", cols,
                             "shot-noise-normalized homodyne record", cfg,
                             {"trajectory_index": k, "record_dt": rec.dt})
        return written
    policy = SegmentPolicy(segment_samples=ens["segment_samples"],
                           window="boxcar", detrend_order=1,
                           notch_freqs=(math.sqrt(max(w.omega_m**2
                                                      - w.gamma_m**2 / 4.0, 0.0)),),
                           min_segments=min(32, ens["segments"] * ens["trajectories"]))
    mutual = w.protocol is Protocol.MUTUAL_GRAVITY
    result = ensemble_spectrum(
        w, dt=ens["dt"], n_traj=ens["trajectories"], seed=cfg["seed"],
        n_segments=ens["segments"], policy=policy, burn_in=ens["burn_in"],
        decimate=ens["decimate"], cross=mutual)
    est = result[0] if mutual else result
    if w.protocol is Protocol.SELF_GRAVITY:
        analytic = spectrum_self(w, est.omega)
    else:
        from .spectra import mutual_stats
        analytic = mutual_stats(w, est.omega).s22_diag.real
    z = (est.values - analytic) / np.where(est.stderr > 0, est.stderr, np.inf)
    cols = {"freq_hz": est.frequencies_hz, "estimate": est.values,
            "stderr": est.stderr, "analytic": analytic, "z_score": z}
    written += _emit(outdir, "periodogram", cols,
                     "ensemble-averaged periodogram vs analytic spectrum", cfg,
                     {"n_segments_total": est.n_segments})
    return written


def _cmd_verify(args) -> int:
    report = run_verification(seed=args.seed, n_draws=args.draws,
                              perturb_beta=args.perturb_beta)
    for r in report.identities:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: max residual {r.max_residual:.3e} "
              f"(tolerance {r.tolerance:.0e}, {r.draws} draws)")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "verification_report.json"
        path.write_text(io.canonical_json(report.to_dict()))
        print(f"report: {path}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _cmd_replay(args) -> int:
    with open(args.sidecar) as fh:
        cfg = json.load(fh)
    cfg = {k: v for k, v in cfg.items()
           if k not in ("code_version", "params_hash", "theta_T", "curve",
                        "trajectory_index", "record_dt", "n_segments_total",
                        "bath_extrapolation_note")}
    outdir = args.out or Path(os.environ.get("SNOPTOMECH_OUT", "snoptomech-out"))
    outdir.mkdir(parents=True, exist_ok=True)
    for path in _execute(cfg, outdir):
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "replay":
            return _cmd_replay(args)
        cfg = _run_config(args)
        outdir = _outdir(args)
        for path in _execute(cfg, outdir):
            print(path)
        return EXIT_OK
    except (ParameterError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
