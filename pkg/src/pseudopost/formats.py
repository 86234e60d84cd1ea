"""File formats: dataset CSV, fit JSON, particle JSON/CSV, chain CSV, scan CSV, reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .engine import CalibrationConfig, WeightedParticleSet, effective_sample_size
from .errors import DatasetFormatError
from .population import IdentifiedSetScan
from .reference_mcmc import Chain
from .surrogate import Dataset, SurrogateFit


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# dataset -------------------------------------------------------------------


def dataset_to_csv(data: Dataset) -> str:
    header = [f"x{k + 1}" for k in range(data.d)] + ["y"]
    return _csv_text(header, (list(x) + [y] for x, y in zip(data.xs, data.ys)))


def write_dataset(data: Dataset, path) -> None:
    atomic_write_text(path, dataset_to_csv(data))


def read_dataset(path) -> Dataset:
    """Read ``x1,...,xd,y`` CSV. Malformed rows raise ``DatasetFormatError`` naming the row."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError("empty dataset file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 0 or header[-1] != "y" or header[:-1] != [f"x{k + 1}" for k in range(d)]:
        raise DatasetFormatError(f"row 1: header must be x1,...,xd,y, got {','.join(header)}")
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise DatasetFormatError(f"row {i}: expected {d + 1} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise DatasetFormatError(f"row {i}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DatasetFormatError(f"row {i}: non-finite value")
        values.append(vals)
    if not values:
        raise DatasetFormatError("dataset has no observations")
    arr = np.array(values)
    return Dataset(arr[:, :d], arr[:, d])


# surrogate fit -------------------------------------------------------------


def fit_to_dict(fit: SurrogateFit) -> dict:
    return {
        "beta": fit.beta.tolist(),
        "n_fit": fit.n_fit,
        "residual_variance": fit.residual_variance,
        "gram_condition": fit.gram_condition,
    }


def fit_from_dict(obj: dict) -> SurrogateFit:
    return SurrogateFit(
        beta=np.asarray(obj["beta"], dtype=float),
        n_fit=int(obj.get("n_fit", 0)),
        residual_variance=float(obj.get("residual_variance", 0.0)),
        gram_condition=float(obj.get("gram_condition", 1.0)),
    )


# particles -----------------------------------------------------------------


def particles_to_dict(ps: WeightedParticleSet) -> dict:
    return {
        "config": ps.config.as_record(),
        "particles": ps.particles,
        "diagnostics": {"ess": effective_sample_size(ps), "degenerate_weights": ps.degenerate},
    }


def particles_from_dict(obj: dict) -> WeightedParticleSet:
    cfg = CalibrationConfig(**obj["config"])
    parts = obj["particles"]
    return WeightedParticleSet(
        thetas=np.array([p["theta"] for p in parts], dtype=float),
        residuals=np.array([p["R"] for p in parts], dtype=float),
        log_weights=np.array([p["log_w"] for p in parts], dtype=float),
        weights=np.array([p["w"] for p in parts], dtype=float),
        config=cfg,
        degenerate=bool(obj.get("diagnostics", {}).get("degenerate_weights", False)),
    )


def particles_to_csv(ps: WeightedParticleSet) -> str:
    p = ps.thetas.shape[1]
    header = [f"theta_{k + 1}" for k in range(p)] + ["R", "log_w", "w"]
    rows = (list(t) + [r, lw, w] for t, r, lw, w in zip(ps.thetas, ps.residuals, ps.log_weights, ps.weights))
    return _csv_text(header, rows)


# chain ---------------------------------------------------------------------


def chain_to_csv(chain: Chain, first_iter: int = 0) -> str:
    p = chain.samples.shape[1]
    header = ["iter"] + [f"theta_{k + 1}" for k in range(p)] + ["log_target", "accepted"]
    rows = (
        [first_iter + i] + list(s) + [lt, bool(a)]
        for i, (s, lt, a) in enumerate(zip(chain.samples, chain.log_target_trace, chain.accepted))
    )
    return _csv_text(header, rows)


# identified-set scan -------------------------------------------------------


def scan_to_csv(scan: IdentifiedSetScan) -> str:
    p = scan.grid.shape[1]
    header = [f"theta_{k + 1}" for k in range(p)] + ["mu_hat", "mu_sq", "member"]
    mask = scan.member_mask
    rows = (list(t) + [m, s, bool(b)] for t, m, s, b in zip(scan.grid, scan.mu_hat, scan.mu_sq, mask))
    return _csv_text(header, rows)


# experiment reports ----------------------------------------------------------


def table_to_csv(table: dict) -> str:
    cols = list(table)
    lengths = {len(table[c]) for c in cols}
    if len(lengths) > 1:
        raise ValueError("table columns differ in length")
    return _csv_text(cols, zip(*(table[c] for c in cols)))


def write_report(report, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = [out_dir / "report.json"]
    atomic_write_text(written[0], dumps_json(report.to_dict()))
    for name, table in report.tables.items():
        path = out_dir / f"{name}.csv"
        atomic_write_text(path, table_to_csv(table))
        written.append(path)
    return written
