"""Command-line front end: design reports, covariance sweeps, Monte Carlo audit.

Every CSV is written together with ``<csv>.manifest.json``; ``phaseest replay``
regenerates the CSV from the manifest alone.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .closed_loop import DEFAULT_DELTA_GRID, augment, default_lambda_grid, error_covariance, sweep_delta, sweep_lambda
from .filters import analytic_cov_kalman, analytic_cov_prl, chi_opt, design_kalman, design_prl
from .lti import StabilityError
from .model import (
    NOMINAL_KAPPA,
    NOMINAL_LAMBDA,
    NOMINAL_PHOTON_FLUX,
    ParameterError,
    SystemParams,
    UncertaintyModel,
    validate,
)
from .montecarlo import RNG_ALGORITHM, SimConfig, SimConfigError, simulate_closed_loop
from .robust import design_robust

OUTPUT_DIR_ENV = "PHASEEST_OUTPUT_DIR"
CONFIG_KEYS = ("lambda", "kappa", "photon_flux", "mu", "delta")
VALIDATION_CASES = ((0.0, 0.0), (0.5, 1.0), (0.8, 1.0))


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> dict[str, float]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} (expected one of {', '.join(CONFIG_KEYS)})")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
    return values


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="ascii")


def manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".manifest.json")


def _write_manifest(csv_path: Path, command: str, inputs: dict, started: float) -> Path:
    record = {
        "command": command,
        "inputs": inputs,
        "seed": inputs.get("sim", {}).get("seed"),
        "tool_version": __version__,
        "rng": RNG_ALGORITHM,
        "numpy_version": np.__version__,
        "python": platform.python_version(),
        "outputs": [str(csv_path)],
        "wall_clock_seconds": time.perf_counter() - started,
    }
    path = manifest_path(csv_path)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="ascii")
    return path


def _params_inputs(params: SystemParams) -> dict:
    return {"lambda": params.lam, "kappa": params.kappa, "photon_flux": params.photon_flux}


def _params_from_inputs(inputs: dict) -> SystemParams:
    return validate(SystemParams.from_photon_flux(inputs["lambda"], inputs["kappa"], inputs["photon_flux"]))


# -- commands ---------------------------------------------------------------


def cmd_design(params: SystemParams, mu: float = 0.0, delta: float = 0.0) -> str:
    """Text report of the nominal design numbers and, for ``mu > 0``, the robust design."""
    prl = design_prl(params)
    kalman = design_kalman(params)
    lines = [
        f"lambda      = {params.lam!r} rad/s",
        f"kappa       = {params.kappa!r} rad/s",
        f"photon flux = {params.photon_flux!r} 1/s",
        f"2|alpha|    = {2.0 * params.alpha_mag:.6g}",
        f"sqrt(kappa) = {math.sqrt(params.kappa):.6g}",
        f"chi_opt     = {chi_opt(params):.6g}",
        f"K           = {kalman.gain_b:.6g}",
        f"G_P(s) = {prl.transfer_function()}",
        f"G_K(s) = {kalman.transfer_function()}",
        f"sigma2_P = {analytic_cov_prl(params):.6g}",
        f"sigma2_K = {analytic_cov_kalman(params):.6g}",
    ]
    if mu > 0.0:
        rd = design_robust(params, mu)
        lines += [
            f"mu          = {mu!r}",
            f"epsilon_opt = {rd.epsilon:.6g}",
            f"Q+          = {rd.q_plus:.6g}",
            f"G_R(s) = {rd.filter.transfer_function()}",
        ]
        if delta != 0.0:
            unc = UncertaintyModel(mu=mu, delta=delta)
            lines += [
                f"delta       = {delta!r}",
                f"sigma2_K(delta) = {error_covariance(augment(params, kalman, unc)).sigma2:.6g}",
                f"sigma2_R(delta) = {error_covariance(augment(params, rd.filter, unc)).sigma2:.6g}",
            ]
    return "\n".join(lines) + "\n"


def cmd_sweep_lambda(params: SystemParams, grid: Sequence[float], out: Path) -> Path:
    started = time.perf_counter()
    grid = [float(x) for x in grid]
    rows = sweep_lambda(params.kappa, params.alpha_mag, grid)
    _write_csv(out, ("lambda", "sigma2_prl", "sigma2_kalman"), rows)
    _write_manifest(out, "sweep-lambda", {**_params_inputs(params), "grid": grid}, started)
    return out


def cmd_sweep_delta(params: SystemParams, mu: float, grid: Sequence[float], out: Path) -> Path:
    started = time.perf_counter()
    grid = [float(x) for x in grid]
    rows = sweep_delta(params, mu, grid)
    _write_csv(out, ("delta", "sigma2_kalman", "sigma2_robust", "q_plus_bound"), rows)
    _write_manifest(out, "sweep-delta", {**_params_inputs(params), "mu": mu, "grid": grid}, started)
    return out


def validation_rows(params: SystemParams, sim: SimConfig, workers: int = 1):
    """Nine (filter, mu, delta) spot cases: Lyapunov covariance vs simulated MSE."""
    rows = []
    for mu, delta in VALIDATION_CASES:
        unc = UncertaintyModel(mu=mu, delta=delta)
        filters = (
            ("PRL", design_prl(params)),
            ("Kalman", design_kalman(params)),
            ("Robust", design_robust(params, mu).filter),
        )
        for name, filt in filters:
            analytic = error_covariance(augment(params, filt, unc)).sigma2
            est = simulate_closed_loop(params, filt, unc, sim, workers=workers)
            rows.append((name, mu, delta, analytic, est.mse, est.standard_error, est.agrees(analytic)))
    return rows


def cmd_validate(params: SystemParams, sim: SimConfig, out: Path, workers: int = 1) -> Path:
    started = time.perf_counter()
    rows = validation_rows(params, sim, workers)
    _write_csv(out, ("filter", "mu", "delta", "analytic_sigma2", "mc_mse", "mc_stderr", "agrees_3se"), rows)
    sim_inputs = {
        "dt": sim.dt,
        "t_total": sim.t_total,
        "n_traj": sim.n_traj,
        "burn_in_fraction": sim.burn_in_fraction,
        "seed": sim.seed,
    }
    _write_manifest(out, "validate", {**_params_inputs(params), "sim": sim_inputs, "workers": workers}, started)
    return out


def replay(manifest: Path, out: Path | None = None) -> Path:
    """Regenerate the CSV described by ``manifest`` (to ``out`` if given)."""
    record = json.loads(Path(manifest).read_text())
    inputs = record["inputs"]
    params = _params_from_inputs(inputs)
    target = Path(out) if out is not None else Path(record["outputs"][0])
    command = record["command"]
    if command == "sweep-lambda":
        return cmd_sweep_lambda(params, inputs["grid"], target)
    if command == "sweep-delta":
        return cmd_sweep_delta(params, inputs["mu"], inputs["grid"], target)
    if command == "validate":
        return cmd_validate(params, SimConfig(**inputs["sim"]), target, inputs.get("workers", 1))
    raise ConfigError(f"manifest has unknown command {command!r}")


# -- argument handling ------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value parameter file")
    common.add_argument("--lambda", dest="lam", type=float, help="mean reversion rate (rad/s)")
    common.add_argument("--kappa", type=float, help="inverse coherence time (rad/s)")
    common.add_argument("--photon-flux", type=float, help="|alpha|^2 (1/s)")
    common.add_argument("--mu", type=float, help="uncertainty level in [0, 1)")
    common.add_argument("--delta", type=float, help="realized perturbation in [-1, 1]")
    common.add_argument("--out", type=Path, help=f"output path (relative paths resolve under ${OUTPUT_DIR_ENV})")
    common.add_argument("--seed", type=_u64, help="RNG seed (validate only)")

    parser = argparse.ArgumentParser(prog="phaseest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("design", parents=[common], help="print design numbers and transfer functions")

    p = sub.add_parser("sweep-lambda", parents=[common], help="covariance vs lambda (CSV)")
    p.add_argument("--grid", type=_float_list, help="explicit comma-separated lambda values")
    p.add_argument("--lambda-min", type=float, default=1e2)
    p.add_argument("--lambda-max", type=float, default=1e7)
    p.add_argument("--points", type=int, help="number of log-spaced points")

    p = sub.add_parser("sweep-delta", parents=[common], help="covariance vs delta (CSV)")
    p.add_argument("--grid", type=_float_list, help="explicit comma-separated delta values")
    p.add_argument("--points", type=int, default=len(DEFAULT_DELTA_GRID))

    p = sub.add_parser("validate", parents=[common], help="Monte Carlo vs Lyapunov audit (CSV)")
    p.add_argument("--dt", type=float, default=SimConfig.dt)
    p.add_argument("--t-total", type=float, default=SimConfig.t_total)
    p.add_argument("--n-traj", type=int, default=SimConfig.n_traj)
    p.add_argument("--burn-in", type=float, default=SimConfig.burn_in_fraction)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("replay", help="regenerate a CSV from its manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path)
    return parser


def _resolve_settings(args) -> tuple[SystemParams, float, float]:
    values = {"lambda": NOMINAL_LAMBDA, "kappa": NOMINAL_KAPPA, "photon_flux": NOMINAL_PHOTON_FLUX, "mu": 0.0, "delta": 0.0}
    if args.config is not None:
        values.update(parse_config(args.config.read_text(), str(args.config)))
    for key, attr in (("lambda", "lam"), ("kappa", "kappa"), ("photon_flux", "photon_flux"), ("mu", "mu"), ("delta", "delta")):
        flag = getattr(args, attr)
        if flag is not None:
            values[key] = flag
    params = validate(SystemParams.from_photon_flux(values["lambda"], values["kappa"], values["photon_flux"]))
    UncertaintyModel(values["mu"], values["delta"])
    return params, values["mu"], values["delta"]


def _resolve_out(path: Path | None, default: str) -> Path:
    path = Path(path) if path is not None else Path(default)
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = _build_parser().parse_args(argv)
    if args.command == "replay":
        out = replay(args.manifest, _resolve_out(args.out, "") if args.out else None)
        print(out, file=stdout)
        return 0

    params, mu, delta = _resolve_settings(args)
    if args.command == "design":
        report = cmd_design(params, mu, delta)
        stdout.write(report)
        if args.out is not None:
            out = _resolve_out(args.out, "design.txt")
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(report)
        return 0

    if args.command == "sweep-lambda":
        if args.grid is not None:
            grid = args.grid
        elif args.points is not None:
            grid = list(np.logspace(math.log10(args.lambda_min), math.log10(args.lambda_max), args.points))
        else:
            grid = default_lambda_grid(include=(params.lam,) if params.lam > 0 else ())
        out = cmd_sweep_lambda(params, grid, _resolve_out(args.out, "sweep_lambda.csv"))
    elif args.command == "sweep-delta":
        grid = args.grid if args.grid is not None else list(np.linspace(-1.0, 1.0, args.points))
        out = cmd_sweep_delta(params, mu, grid, _resolve_out(args.out, f"sweep_delta_mu{mu:g}.csv"))
    else:
        sim = SimConfig(
            dt=args.dt,
            t_total=args.t_total,
            n_traj=args.n_traj,
            burn_in_fraction=args.burn_in,
            seed=args.seed if args.seed is not None else SimConfig.seed,
        )
        out = cmd_validate(params, sim, _resolve_out(args.out, "validate.csv"), max(1, args.workers))
    print(out, file=stdout)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except (ConfigError, ParameterError, SimConfigError, StabilityError, ValueError, OSError, KeyError) as exc:
        print(f"phaseest: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
