"""Command-line front end.

Exit codes: 0 success, 1 experiment pass flags failed, 2 usage or config
error, 3 I/O error, 4 numerical degeneracy (singular design).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, formats, streams
from .engine import CalibrationConfig, effective_sample_size, pilot_bandwidth, resolve_parallelism, run_calibration
from .errors import DatasetFormatError, NonPositiveBandwidth, NonPositiveCovariate, PseudoPosteriorError, SingularDesign
from .experiments import EXPERIMENTS, run_experiment
from .population import scan_identified_set
from .reference_mcmc import MhConfig, ToyLogPosterior, chain_summary, rwmh
from .simulators import ToyModel, generate_observed, model_from_config
from .surrogate import fit_ols

log = logging.getLogger("pseudopost")

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.code = code


def _usage(message: str) -> CliError:
    return CliError(message, EXIT_USAGE)


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None


def _load_json(path) -> dict:
    raw = _read_bytes(path)
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise _usage(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise _usage(f"{path}: expected a JSON object")
    return obj


def _seed(args, cfg: dict) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise _usage("a seed is required (config 'seed' or --seed)")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise _usage(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


def _check_parent(path: Path) -> None:
    if not path.parent.is_dir():
        raise CliError(f"output directory {path.parent} does not exist", EXIT_IO)


def _write(path: Path, text: str) -> None:
    try:
        formats.atomic_write_text(path, text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _config_hash(command: str, config: dict, input_files: dict) -> str:
    digests = {name: hashlib.sha256(_read_bytes(p)).hexdigest() for name, p in sorted(input_files.items())}
    payload = json.dumps(
        formats._jsonable({"command": command, "config": config, "inputs": digests}), sort_keys=True
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _write_manifest(path: Path, command: str, config: dict, inputs: dict, seed: int, artifacts, started: float) -> None:
    manifest = {
        "command": command,
        "config_hash": _config_hash(command, config, inputs),
        "seed": seed,
        "artifacts": [str(a) for a in artifacts],
        "wall_clock_seconds": time.perf_counter() - started,
        "library_version": __version__,
    }
    _write(path, formats.dumps_json(manifest))


def _model(cfg: dict):
    try:
        return model_from_config(cfg)
    except (ValueError, TypeError) as exc:
        raise _usage(f"model config: {exc}") from None


# commands ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _load_json(args.config)
    model = _model(cfg)
    seed = _seed(args, cfg)
    n_obs = cfg.get("n_obs", 200)
    if isinstance(n_obs, bool) or not isinstance(n_obs, int) or n_obs < 1:
        raise _usage(f"n_obs must be a positive integer, got {n_obs!r}")
    default_truth = [2.0, 2.0] if isinstance(model, ToyModel) else None
    theta = cfg.get("theta_true", default_truth)
    if theta is None or len(theta) != model.param_dim:
        raise _usage(f"theta_true must have {model.param_dim} entries")
    out = Path(args.out)
    _check_parent(out)
    data = generate_observed(model, np.asarray(theta, dtype=float), n_obs, streams.substream(seed, streams.OBSERVED))
    _write(out, formats.dataset_to_csv(data))
    resolved = {**model.to_config(), "theta_true": list(theta), "n_obs": n_obs, "seed": seed}
    _write_manifest(Path(f"{out}.manifest.json"), "simulate", resolved, {}, seed, [out], started)
    print(f"wrote {n_obs} observations to {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    started = time.perf_counter()
    try:
        data = formats.read_dataset(args.data)
    except OSError as exc:
        raise CliError(f"cannot read {args.data}: {exc.strerror or exc}", EXIT_IO) from None
    out = Path(args.out)
    _check_parent(out)
    fit = fit_ols(data)
    _write(out, formats.dumps_json(formats.fit_to_dict(fit)))
    _write_manifest(Path(f"{out}.manifest.json"), "fit", {}, {"data": args.data}, 0, [out], started)
    print("beta = " + ", ".join(f"{b:.6g}" for b in fit.beta))
    return EXIT_OK


def _load_fit(path):
    try:
        return formats.fit_from_dict(_load_json(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise _usage(f"{path}: not a surrogate fit ({exc})") from None


def cmd_calibrate(args) -> int:
    started = time.perf_counter()
    fit = _load_fit(args.fit)
    model_cfg = _load_json(args.model)
    model = _model(model_cfg)
    cfg = _load_json(args.config)
    seed = _seed(args, cfg)
    try:
        n_theta = int(cfg["n_theta"])
        batch_size = int(cfg["batch_size"])
        bandwidth = cfg["bandwidth"]
    except (KeyError, TypeError, ValueError) as exc:
        raise _usage(f"calibration config needs n_theta, batch_size, bandwidth ({exc})") from None
    if fit.d != model.covariate_dim:
        raise _usage(f"fit has {fit.d} slopes but the model has {model.covariate_dim} covariates")
    if bandwidth == "pilot":
        bandwidth = pilot_bandwidth(model, fit, batch_size, seed)
    elif isinstance(bandwidth, bool) or not isinstance(bandwidth, (int, float)):
        raise _usage(f"bandwidth must be a positive number or 'pilot', got {bandwidth!r}")
    threads = resolve_parallelism(args.threads)
    try:
        calib = CalibrationConfig(n_theta, batch_size, float(bandwidth), seed, threads)
    except ValueError as exc:
        raise _usage(f"calibration config: {exc}") from None
    stem = Path(args.out)
    if stem.suffix in (".json", ".csv"):
        stem = stem.with_suffix("")
    json_path, csv_path = Path(f"{stem}.json"), Path(f"{stem}.csv")
    _check_parent(json_path)
    ps = run_calibration(model, fit, calib)
    _write(json_path, formats.dumps_json(formats.particles_to_dict(ps)))
    _write(csv_path, formats.particles_to_csv(ps))
    resolved = {"model": model.to_config(), "calibration": calib.as_record()}
    _write_manifest(Path(f"{stem}.manifest.json"), "calibrate", resolved, {"fit": args.fit}, seed, [json_path, csv_path], started)
    print(f"ESS = {effective_sample_size(ps):.1f} of {ps.n}; degenerate_weights = {str(ps.degenerate).lower()}")
    return EXIT_OK


def cmd_reference(args) -> int:
    started = time.perf_counter()
    try:
        data = formats.read_dataset(args.data)
    except OSError as exc:
        raise CliError(f"cannot read {args.data}: {exc.strerror or exc}", EXIT_IO) from None
    cfg = _load_json(args.config) if args.config else {}
    seed = _seed(args, {"seed": 0, **cfg})
    if data.d != 1:
        raise _usage("the reference sampler expects a one-covariate toy dataset")
    try:
        mh = MhConfig(
            n_iter=int(cfg.get("n_iter", 40_000)),
            burn_in=int(cfg.get("burn_in", 5_000)),
            step_sd=float(cfg.get("step_sd", 0.1)),
            init=tuple(cfg.get("init", (0.0, 0.0))),
            seed=seed,
            tune=bool(cfg.get("tune", False)),
        )
        target = ToyLogPosterior(data, float(cfg.get("prior_sd", 5.0)))
    except (ValueError, TypeError) as exc:
        raise _usage(f"reference config: {exc}") from None
    out = Path(args.out)
    _check_parent(out)
    chain = rwmh(target, mh)
    summary_path = out.with_suffix(".summary.json")
    _write(out, formats.chain_to_csv(chain, first_iter=mh.burn_in))
    summary = {**chain_summary(chain), "acceptance_rate": chain.acceptance_rate, "step_sd": chain.step_sd}
    _write(summary_path, formats.dumps_json(summary))
    resolved = {"n_iter": mh.n_iter, "burn_in": mh.burn_in, "step_sd": mh.step_sd, "init": list(mh.init), "tune": mh.tune, "seed": seed}
    _write_manifest(Path(f"{out}.manifest.json"), "reference", resolved, {"data": args.data}, seed, [out, summary_path], started)
    print(f"{chain.samples.shape[0]} samples; acceptance rate {chain.acceptance_rate:.3f}")
    return EXIT_OK


def cmd_scan(args) -> int:
    started = time.perf_counter()
    fit = _load_fit(args.fit)
    model = _model(_load_json(args.model))
    cfg = _load_json(args.config)
    seed = _seed(args, cfg)
    try:
        axes = [np.linspace(float(lo), float(hi), int(n)) for lo, hi, n in cfg["axes"]]
        n_sim = int(cfg.get("n_sim", 10_000))
        tolerance = cfg.get("tolerance")
    except (KeyError, TypeError, ValueError) as exc:
        raise _usage(f"scan config needs axes [[lo, hi, n], ...] ({exc})") from None
    if len(axes) != model.param_dim:
        raise _usage(f"scan needs {model.param_dim} axes")
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([g.reshape(-1) for g in mesh], axis=1)
    out = Path(args.out)
    _check_parent(out)
    scan = scan_identified_set(model, fit, grid, n_sim, tolerance, seed, resolve_parallelism(args.threads))
    _write(out, formats.scan_to_csv(scan))
    resolved = {"model": model.to_config(), "axes": cfg["axes"], "n_sim": n_sim, "tolerance": tolerance, "seed": seed}
    _write_manifest(Path(f"{out}.manifest.json"), "scan", resolved, {"fit": args.fit}, seed, [out], started)
    print(f"{scan.members.size} of {grid.shape[0]} grid points in the estimated identified set (tolerance {scan.tolerance:.3g})")
    return EXIT_OK


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_experiment(args) -> int:
    started = time.perf_counter()
    overrides = _load_json(args.config) if args.config else {}
    seed = _seed(args, {"seed": 0, **overrides})
    overrides.pop("seed", None)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise _usage(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.replace("-", "_")] = _parse_value(value)
    if args.tau is not None:
        if args.name != "toy":
            raise _usage("--tau applies to the toy experiment only")
        overrides["tau"] = args.tau
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out_dir}: {exc.strerror or exc}", EXIT_IO) from None
    try:
        report = run_experiment(args.name, seed=seed, overrides=overrides, max_parallel=resolve_parallelism(args.threads))
    except (TypeError, ValueError) as exc:
        raise _usage(f"bad override for {args.name}: {exc}") from None
    try:
        written = formats.write_report(report, out_dir)
    except OSError as exc:
        raise CliError(f"cannot write report: {exc.strerror or exc}", EXIT_IO) from None
    _write_manifest(out_dir / "manifest.json", f"experiment {args.name}", {"seed": seed, **overrides}, {}, seed, written, started)
    for flag, ok in report.pass_flags.items():
        print(f"{'PASS' if ok else 'FAIL'}  {flag}")
    return EXIT_OK if report.passed else EXIT_FAILED


# entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudopost", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required: bool):
        p.add_argument("--config", required=config_required)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True)
        p.add_argument("--threads", type=int, help="parallelism hint; results do not depend on it")

    p = sub.add_parser("simulate", help="simulate an observed dataset")
    common(p, True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the OLS surrogate to a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("calibrate", help="run the weighted-particle calibration")
    p.add_argument("--fit", required=True)
    p.add_argument("--model", required=True)
    common(p, True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("reference", help="RWMH reference posterior for a toy dataset")
    p.add_argument("--data", required=True)
    common(p, False)
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("scan", help="scan a parameter grid for the identified set")
    p.add_argument("--fit", required=True)
    p.add_argument("--model", required=True)
    common(p, True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("experiment", help="run a named study")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a study argument (JSON value)")
    p.add_argument("--tau", type=float, help="toy experiment bandwidth")
    common(p, False)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SingularDesign as exc:
        print(f"error: singular design: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DatasetFormatError, NonPositiveBandwidth, NonPositiveCovariate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PseudoPosteriorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
