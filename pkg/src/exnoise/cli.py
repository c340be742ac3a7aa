"""Scenario runner: config loading, pipeline orchestration, result emission.

A scenario is one JSON file; identical configs (plus seed) produce
byte-identical outputs.  Every output file carries a 12-hex-digit hash of the
fully defaulted config in its name, and nothing is overwritten without
--force.  Time series go to CSV, scalar summaries to JSON, and every run
writes a manifest echoing the config and the library versions.

Exit codes:
    0  success
    1  unexpected error
    2  config parse or validation failure
    3  flagged quasi-mode degeneracy
    4  numerical failure (eigensolver, noise factorization)
    5  output exists and --force not given
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .langevin_field import (
    accumulated_noise_variance,
    field_variance,
    simulate_ensemble,
)
from .mode_basis import ModeBasis, build_sine_basis
from .moment_dynamics import MomentState, evolve_correlations, quadrature_variance
from .paraxial import gaussian_beam, propagate_paraxial, transverse_quasimodes
from .quasimodes import (
    DegenerateModeError,
    build_drift_matrix,
    petermann_k_coeff,
    petermann_k_integral,
    quasi_mode_functions,
    solve_quasimodes,
)
from .reservoir_coupling import RateProfile, build_coupling_matrices

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "run_scenario", "main"]

OUT_DIR_ENV = "EXNOISE_OUT_DIR"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DEGENERACY = 3
EXIT_NUMERICS = 4
EXIT_EXISTS = 5

MODES = ("quasimodes", "moments", "simulate", "paraxial")

DEFAULTS = {
    "mode": "quasimodes",
    "basis": {"n_modes": 2, "grid_points": 4096, "q0": 200},
    "gain_profile": [],
    "loss_profile": [],
    "run": {
        "t_final": 0.01,
        "dt": None,
        "n_traj": 1000,
        "seed": None,
        "sample_stride": None,
        "initial_amplitudes": None,
    },
    "paraxial": {
        "grid_points": 128,
        "omega_bar": 800.0,
        "waist": 0.06,
        "dz": 0.005,
        "z_final": 1.0,
        "boundary": "dirichlet",
        "transverse_grid": 32,
        "gain_profile": [],
        "loss_profile": [],
    },
    "outputs": {"directory": "runs", "formats": ["csv", "json"]},
}


class ConfigError(ValueError):
    """Config could not be parsed or validated; carries every failure found."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario with all defaults filled in."""

    mode: str
    basis: dict
    gain_profile: RateProfile
    loss_profile: RateProfile
    run: dict
    paraxial: dict
    outputs: dict
    canonical: dict

    @property
    def scenario_hash(self) -> str:
        payload = json.dumps(self.canonical, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


def _merge_defaults(raw: dict) -> dict:
    merged = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def _check_segments(spec, label: str, failures: list) -> list:
    segments = []
    if not isinstance(spec, list):
        failures.append(f"{label}: expected a list of segments")
        return segments
    for i, seg in enumerate(spec):
        if not isinstance(seg, dict) or not {"x_min", "x_max", "density"} <= set(seg):
            failures.append(f"{label}[{i}]: needs x_min, x_max, density")
            continue
        x_min, x_max, density = seg["x_min"], seg["x_max"], seg["density"]
        if not (0.0 <= x_min < x_max <= 1.0):
            failures.append(f"{label}[{i}]: interval [{x_min}, {x_max}) not inside [0, 1]")
            continue
        if density < 0:
            failures.append(f"{label}[{i}]: density {density} is negative")
            continue
        segments.append((float(x_min), float(x_max), float(density)))
    ordered = sorted(range(len(segments)), key=lambda k: segments[k][0])
    for a, b in zip(ordered, ordered[1:]):
        if segments[b][0] < segments[a][1]:
            failures.append(
                f"{label}: segments {a} [{segments[a][0]}, {segments[a][1]}) and "
                f"{b} [{segments[b][0]}, {segments[b][1]}) overlap"
            )
    return segments


def _validate(merged: dict) -> list:
    failures: list = []
    if merged["mode"] not in MODES:
        failures.append(f"mode: {merged['mode']!r} not in {MODES}")

    basis = merged["basis"]
    for key in ("n_modes", "grid_points", "q0"):
        if not isinstance(basis.get(key), int) or basis.get(key, 0) < 1:
            failures.append(f"basis.{key}: positive integer required")
    if not failures and basis["grid_points"] < 4 * (basis["q0"] + basis["n_modes"]):
        failures.append(
            f"basis.grid_points: {basis['grid_points']} too coarse for "
            f"q0={basis['q0']}, n_modes={basis['n_modes']} "
            f"(need >= {4 * (basis['q0'] + basis['n_modes'])})"
        )

    _check_segments(merged["gain_profile"], "gain_profile", failures)
    _check_segments(merged["loss_profile"], "loss_profile", failures)
    _check_segments(merged["paraxial"]["gain_profile"], "paraxial.gain_profile", failures)
    _check_segments(merged["paraxial"]["loss_profile"], "paraxial.loss_profile", failures)

    run = merged["run"]
    if not (isinstance(run["t_final"], (int, float)) and run["t_final"] > 0):
        failures.append("run.t_final: must be positive")
    if run["dt"] is not None and not (isinstance(run["dt"], (int, float)) and run["dt"] > 0):
        failures.append("run.dt: must be positive when given")
    if not (isinstance(run["n_traj"], int) and run["n_traj"] >= 1):
        failures.append("run.n_traj: must be an integer >= 1")
    if run["seed"] is not None and not (
        isinstance(run["seed"], int) and 0 <= run["seed"] < 2**64
    ):
        failures.append("run.seed: must be a 64-bit nonnegative integer")
    if merged["mode"] == "simulate" and run["seed"] is None:
        failures.append("run.seed: required when mode is 'simulate'")
    amp0 = run["initial_amplitudes"]
    if amp0 is not None:
        ok = isinstance(amp0, list) and all(
            isinstance(p, list) and len(p) == 2 for p in amp0
        )
        if not ok:
            failures.append("run.initial_amplitudes: list of [re, im] pairs required")
        elif isinstance(basis.get("n_modes"), int) and len(amp0) != basis["n_modes"]:
            failures.append("run.initial_amplitudes: length must equal basis.n_modes")

    par = merged["paraxial"]
    n = par["grid_points"]
    if not (isinstance(n, int) and n >= 2 and (n & (n - 1)) == 0):
        failures.append("paraxial.grid_points: must be a power of two >= 2")
    if par["boundary"] not in ("dirichlet", "periodic"):
        failures.append("paraxial.boundary: must be 'dirichlet' or 'periodic'")
    for key in ("omega_bar", "waist", "dz", "z_final"):
        if not (isinstance(par[key], (int, float)) and par[key] > 0):
            failures.append(f"paraxial.{key}: must be positive")
    if not (isinstance(par["transverse_grid"], int) and par["transverse_grid"] >= 2):
        failures.append("paraxial.transverse_grid: must be an integer >= 2")

    out = merged["outputs"]
    if not isinstance(out["directory"], str) or not out["directory"]:
        failures.append("outputs.directory: nonempty string required")
    formats = out["formats"]
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"} or not formats:
        failures.append("outputs.formats: nonempty subset of ['csv', 'json'] required")
    return failures


def _profile(kind: str, spec: list) -> RateProfile:
    return RateProfile(kind=kind, segments=tuple((a, b, d) for a, b, d in
                                                 ((s["x_min"], s["x_max"], s["density"]) for s in spec)))


def load_config(path) -> ScenarioConfig:
    """Parse, default-fill and validate one scenario file.

    All validation failures are collected and reported together.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigError([f"parse error at line {err.lineno}, column {err.colno}: {err.msg}"])
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])
    unknown = set(raw) - set(DEFAULTS)
    failures = [f"unknown section {k!r}" for k in sorted(unknown)]
    merged = _merge_defaults({k: v for k, v in raw.items() if k in DEFAULTS})
    failures.extend(_validate(merged))
    if failures:
        raise ConfigError(failures)
    return ScenarioConfig(
        mode=merged["mode"],
        basis=merged["basis"],
        gain_profile=_profile("gain", merged["gain_profile"]),
        loss_profile=_profile("loss", merged["loss_profile"]),
        run=merged["run"],
        paraxial=merged["paraxial"],
        outputs=merged["outputs"],
        canonical=merged,
    )


def _write_text(path: Path, text: str, force: bool) -> Path:
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _scenario_setup(config: ScenarioConfig):
    basis = build_sine_basis(
        config.basis["n_modes"], config.basis["grid_points"], config.basis["q0"]
    )
    matrices = build_coupling_matrices(basis, config.gain_profile, config.loss_profile)
    qset = solve_quasimodes(build_drift_matrix(basis, matrices.gain, matrices.loss))
    return basis, matrices, qset


def _quasimode_rows(qset, basis: ModeBasis):
    u_fns, ubar_fns = quasi_mode_functions(qset, basis)
    rows = []
    for nu in range(qset.n_modes):
        k_coeff = petermann_k_coeff(qset, nu)
        flagged = bool(qset.flags[nu])
        k_int = (
            float("nan")
            if flagged
            else petermann_k_integral(u_fns[nu], ubar_fns[nu], basis.grid)
        )
        rows.append(
            {
                "mode": nu,
                "frequency": float(qset.frequencies[nu]),
                "amplification": float(qset.amplification[nu]),
                "damping": float(qset.damping[nu]),
                "k_coeff": k_coeff,
                "k_integral": k_int,
                "degenerate": flagged,
            }
        )
    return rows


def _run_quasimodes(config, out_dir: Path, tag: str, force: bool):
    basis, _, qset = _scenario_setup(config)
    rows = _quasimode_rows(qset, basis)
    written = []
    if "json" in config.outputs["formats"]:
        written.append(
            _write_text(out_dir / f"quasimodes_{tag}.json", _json_text(rows), force)
        )
    if "csv" in config.outputs["formats"]:
        header = list(rows[0].keys())
        written.append(
            _write_text(
                out_dir / f"quasimodes_{tag}.csv",
                _csv_text(header, [[r[k] for k in header] for r in rows]),
                force,
            )
        )
    return written, qset.any_flagged


def _run_moments(config, out_dir: Path, tag: str, force: bool):
    basis, matrices, qset = _scenario_setup(config)
    n = basis.n_modes
    run = config.run
    corr0 = 0.5 * np.eye(n, dtype=complex)  # vacuum, symmetric ordering
    times, corrs = evolve_correlations(
        matrices.gain,
        matrices.loss,
        basis.frequencies,
        corr0,
        "symmetric",
        run["t_final"],
        dt=run["dt"],
    )
    flagged = qset.any_flagged
    tracked = None
    if not flagged:
        net = 2.0 * qset.eigenvalues.real
        tracked = int(np.argmax(net))
    header = ["t"] + [f"occupation_{k}" for k in range(n)]
    if tracked is not None:
        header.append(f"quadrature_variance_mode_{tracked}")
    rows = []
    mean = np.zeros(n, dtype=complex)
    for t, corr in zip(times, corrs):
        row = [float(t)] + [float(corr[k, k].real) for k in range(n)]
        if tracked is not None:
            state = MomentState(t=float(t), mean=mean, corr=corr, ordering="symmetric")
            row.append(quadrature_variance(qset, state, tracked, basis))
        rows.append(row)
    written = [_write_text(out_dir / f"moments_{tag}.csv", _csv_text(header, rows), force)]
    return written, flagged


def _run_simulate(config, out_dir: Path, tag: str, force: bool, threads: int):
    basis, matrices, qset = _scenario_setup(config)
    run = config.run
    n = basis.n_modes
    amp0 = run["initial_amplitudes"]
    a0 = (
        np.zeros(n, dtype=complex)
        if amp0 is None
        else np.array([complex(re, im) for re, im in amp0])
    )
    dt = run["dt"] if run["dt"] is not None else 1e-3 / basis.omega_bar
    ens = simulate_ensemble(
        matrices.gain,
        matrices.loss,
        basis.frequencies,
        a0,
        run["t_final"],
        dt,
        run["n_traj"],
        run["seed"],
        sample_stride=run["sample_stride"],
        n_threads=threads,
    )
    var, se = field_variance(ens, basis.vacuum_amplitudes)
    rows = [[float(t), float(v), float(s)] for t, v, s in zip(ens.times, var, se)]
    written = []
    if "csv" in config.outputs["formats"]:
        written.append(
            _write_text(
                out_dir / f"variance_{tag}.csv",
                _csv_text(["t", "field_variance", "standard_error"], rows),
                force,
            )
        )

    flagged = qset.any_flagged
    summary = {
        "n_traj": run["n_traj"],
        "seed": run["seed"],
        "dt": dt,
        "t_final": run["t_final"],
        "degenerate": flagged,
    }
    if not flagged and np.any(var > 0.0):
        omega_bar = basis.omega_bar
        closed = accumulated_noise_variance(
            qset, basis, [config.gain_profile, config.loss_profile], float(ens.times[-1])
        )
        dom = closed.dominant
        k_coeff = petermann_k_coeff(qset, dom)
        oracle = closed.single_mode / petermann_k_integral(
            *(f[dom] for f in quasi_mode_functions(qset, basis)), basis.grid
        )
        scale = 2.0 * omega_bar**2
        fitted = scale * float(var[-1]) / oracle
        fitted_se = scale * float(se[-1]) / oracle
        summary.update(
            {
                "dominant_mode": dom,
                "k_coeff": k_coeff,
                "fitted_k": fitted,
                "fitted_k_se": fitted_se,
            }
        )
    if "json" in config.outputs["formats"]:
        written.append(
            _write_text(out_dir / f"summary_{tag}.json", _json_text(summary), force)
        )
    return written, flagged


def _run_paraxial(config, out_dir: Path, tag: str, force: bool):
    par = config.paraxial
    gain = _profile("gain", par["gain_profile"])
    loss = _profile("loss", par["loss_profile"])
    field = gaussian_beam(
        par["grid_points"], par["waist"], par["omega_bar"], boundary=par["boundary"]
    )
    n_slices = 8
    rows = []
    mid = par["grid_points"] // 2
    z_values = np.linspace(0.0, par["z_final"], n_slices + 1)
    x = field.coordinates
    for k, z_target in enumerate(z_values):
        if k > 0:
            field = propagate_paraxial(field, gain, loss, par["dz"], float(z_target - field.z))
        intensity = np.abs(field.samples[:, mid]) ** 2
        rows.extend(
            [float(field.z), float(xi), float(ii)] for xi, ii in zip(x, intensity)
        )
    written = []
    if "csv" in config.outputs["formats"]:
        written.append(
            _write_text(
                out_dir / f"intensity_{tag}.csv",
                _csv_text(["z", "x", "intensity"], rows),
                force,
            )
        )
    qset, k_factors = transverse_quasimodes(
        gain, loss, (par["transverse_grid"], par["transverse_grid"]),
        par["omega_bar"], par["boundary"],
    )
    table = [
        {
            "mode": nu,
            "frequency": float(qset.frequencies[nu]),
            "net_rate": float(2.0 * qset.eigenvalues[nu].real),
            "k_factor": float(k_factors[nu]),
            "degenerate": bool(qset.flags[nu]),
        }
        for nu in range(min(qset.n_modes, 16))
    ]
    if "json" in config.outputs["formats"]:
        written.append(
            _write_text(out_dir / f"transverse_k_{tag}.json", _json_text(table), force)
        )
    reported_flagged = bool(np.any(qset.flags[: len(table)]))
    return written, reported_flagged


def run_scenario(
    config: ScenarioConfig,
    mode: Optional[str] = None,
    out_dir=None,
    force: bool = False,
    seed: Optional[int] = None,
    threads: int = 1,
):
    """Run one scenario; returns (written paths, any_degeneracy_flagged).

    Writes the manifest first, then the mode outputs.  mode/out_dir/seed
    override the config; the environment variable EXNOISE_OUT_DIR overrides
    the config directory but not an explicit out_dir.
    """
    mode = mode or config.mode
    if mode not in MODES:
        raise ConfigError([f"mode: {mode!r} not in {MODES}"])
    canonical = copy.deepcopy(config.canonical)
    canonical["mode"] = mode
    if seed is not None:
        canonical["run"]["seed"] = int(seed)
    if mode == "simulate" and canonical["run"]["seed"] is None:
        raise ConfigError(["run.seed: required when mode is 'simulate'"])
    config = ScenarioConfig(
        mode=mode,
        basis=canonical["basis"],
        gain_profile=config.gain_profile,
        loss_profile=config.loss_profile,
        run=canonical["run"],
        paraxial=canonical["paraxial"],
        outputs=canonical["outputs"],
        canonical=canonical,
    )
    directory = out_dir or os.environ.get(OUT_DIR_ENV) or config.outputs["directory"]
    out_path = Path(directory)
    tag = config.scenario_hash

    manifest = {
        "scenario_hash": tag,
        "mode": mode,
        "config": canonical,
        "versions": {
            "exnoise": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    written = [_write_text(out_path / f"manifest_{tag}.json", _json_text(manifest), force)]

    if mode == "quasimodes":
        paths, flagged = _run_quasimodes(config, out_path, tag, force)
    elif mode == "moments":
        paths, flagged = _run_moments(config, out_path, tag, force)
    elif mode == "simulate":
        paths, flagged = _run_simulate(config, out_path, tag, force, threads)
    else:
        paths, flagged = _run_paraxial(config, out_path, tag, force)
    written.extend(paths)
    return written, flagged


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exnoise",
        description=(
            "Quasi-mode structure, excess-noise factors, moment dynamics and "
            "Monte-Carlo noise simulation for reservoir-coupled optical modes."
        ),
        epilog=(
            "exit codes: 0 success, 1 unexpected error, 2 config failure, "
            "3 flagged degeneracy, 4 numerical failure, 5 output exists "
            f"(no --force). Environment: {OUT_DIR_ENV} overrides the output "
            "directory."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("quasimodes", "solve the quasi-mode eigenproblem and emit the K table"),
        ("moments", "integrate the moment ODEs and emit the time series"),
        ("simulate", "run the Monte-Carlo Langevin ensemble"),
        ("paraxial", "propagate a paraxial beam and emit transverse K factors"),
        ("validate", "validate a config without running anything"),
    ):
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", required=True, help="path to the scenario JSON")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--force", action="store_true", help="overwrite existing outputs")
        cmd.add_argument("--seed", type=int, default=None, help="seed override")
        cmd.add_argument("--threads", type=int, default=1, help="Monte-Carlo worker threads")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "validate":
            print(f"config OK (scenario hash {config.scenario_hash})")
            return EXIT_OK
        written, flagged = run_scenario(
            config,
            mode=args.command,
            out_dir=args.out,
            force=args.force,
            seed=args.seed,
            threads=args.threads,
        )
        for path in written:
            print(f"wrote {path}")
        if flagged:
            print("warning: degenerate quasi modes flagged", file=sys.stderr)
            return EXIT_DEGENERACY
        return EXIT_OK
    except ConfigError as err:
        for failure in err.failures:
            print(f"config error: {failure}", file=sys.stderr)
        return EXIT_CONFIG
    except FileExistsError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_EXISTS
    except DegenerateModeError as err:
        print(f"degeneracy: {err}", file=sys.stderr)
        return EXIT_DEGENERACY
    except np.linalg.LinAlgError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICS
    except Exception as err:  # pragma: no cover - defensive
        print(f"unexpected error: {err}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
