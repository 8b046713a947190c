"""CSV ingestion and result persistence for the command-line interface."""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .data import Dataset
from .mcmc import Draws
from .outcome import LinRegSpec, LmmSpec
from .response import ResponseModelSpec

__all__ = [
    "load_csv",
    "write_dataset_csv",
    "write_draws_csv",
    "write_summary_csv",
    "write_metrics_csv",
    "write_imputed_csv",
    "write_model_json",
    "load_run",
]

_MISSING_TOKENS = ("", "NA")


def _parse_cell(raw: str, row: int, column: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValueError(
            f"could not parse value {raw!r} at row {row}, column {column!r}"
        ) from None


def load_csv(path: str, response: str, z_cols=(), instrument_cols=(),
             group_col: str | None = None, time_col: str | None = None,
             lag_missing: bool = False) -> Dataset:
    """Read a dataset, treating empty or NA response cells as missing.

    Covariate cells must be complete; the outcome design is the z columns
    followed by the instrument columns. Row numbers in error messages are
    1-based over the data rows.
    """
    z_cols = list(z_cols)
    instrument_cols = list(instrument_cols)
    overlap = set(z_cols) & set(instrument_cols)
    if overlap:
        raise ValueError(f"columns cannot be both z and instrument: {sorted(overlap)}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        needed = [response] + z_cols + instrument_cols \
            + [c for c in (group_col, time_col) if c]
        for col in needed:
            if col not in header:
                raise ValueError(f"{path}: column {col!r} not found in header")
        idx = {c: header.index(c) for c in needed}

        y, s, rows = [], [], []
        groups, times = [], []
        for r, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise ValueError(
                    f"row {r}: expected {len(header)} cells, got {len(record)}"
                )
            cell = record[idx[response]].strip()
            if cell in _MISSING_TOKENS:
                y.append(np.nan)
                s.append(0)
            else:
                y.append(_parse_cell(cell, r, response))
                s.append(1)
            covs = []
            for col in z_cols + instrument_cols:
                raw = record[idx[col]].strip()
                if raw in _MISSING_TOKENS:
                    raise ValueError(
                        f"missing covariate cell at row {r}, column {col!r}"
                    )
                covs.append(_parse_cell(raw, r, col))
            rows.append(covs)
            if group_col:
                groups.append(record[idx[group_col]].strip())
            if time_col:
                times.append(_parse_cell(record[idx[time_col]].strip(), r, time_col))

    x = np.asarray(rows, dtype=float)
    nz = len(z_cols)
    data = Dataset(
        y=np.asarray(y), s=np.asarray(s, dtype=int), x=x,
        z=x[:, :nz] if nz else np.empty((x.shape[0], 0)),
        group=np.asarray(groups) if group_col else None,
        time=np.asarray(times) if time_col else None,
        x_names=z_cols + instrument_cols, z_names=list(z_cols),
    )
    if lag_missing:
        data = data.with_lagged_indicator()
    return data


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_dataset_csv(data: Dataset, path: str) -> None:
    """Write y plus the covariate columns; missing responses as empty cells.

    z columns that are not already among the outcome covariates (or the
    time column) are appended so the file is self-contained.
    """
    header = ["y"] + list(data.x_names)
    cols = [data.y] + [data.x[:, j] for j in range(data.x.shape[1])]
    if data.group is not None:
        header.append("group")
        cols.append(data.group)
    if data.time is not None:
        header.append("time")
        cols.append(data.time)
    for j, name in enumerate(data.z_names):
        if name not in header:
            header.append(name)
            cols.append(data.z[:, j])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = []
            for col in cols:
                v = col[i]
                row.append(_fmt(float(v)) if isinstance(v, (float, np.floating))
                           else str(v))
            writer.writerow(row)


def write_draws_csv(draws: Draws, path: str) -> None:
    """One row per kept draw: scalar parameters, log likelihood, rates."""
    cols = draws.scalar_columns()
    cols.append(("loglik", draws.loglik))
    cols.append(("mala_accept", draws.mala_rate))
    cols.append(("knot_accept_a", draws.knot_accept[:, 0]))
    cols.append(("knot_accept_b", draws.knot_accept[:, 1]))
    names = [c[0] for c in cols]
    matrix = np.column_stack([c[1] for c in cols])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in matrix:
            writer.writerow([_fmt(float(v)) for v in row])


def write_summary_csv(rows, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "mean", "sd", "q025", "q500", "q975"])
        for row in rows:
            writer.writerow([row["name"]] + [_fmt(row[k]) for k in
                                             ("mean", "sd", "q025", "q500", "q975")])


def write_metrics_csv(rows, path: str) -> None:
    from .evaluation import MetricsRow

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MetricsRow.FIELDS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, f)) for f in MetricsRow.FIELDS])


def write_imputed_csv(draws: Draws, data: Dataset, path: str) -> None:
    """Per-draw imputed responses; columns named by original row index."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"y_{i}" for i in data.miss_idx])
        for row in draws.y_mis:
            writer.writerow([_fmt(float(v)) for v in row])


def write_model_json(draws: Draws, data: Dataset, path: str) -> None:
    """Sidecar metadata needed to recompute summaries and DIC from files."""
    spec = draws.response_spec
    payload = {
        "response": {
            "kind": spec.kind,
            "degree": spec.degree,
            "n_knots": spec.n_knots,
            "n_rbf": spec.n_rbf,
            "rbf_scale": spec.rbf_scale,
            "knot_strategy": spec.knot_strategy,
            "fixed_knots": None if spec.fixed_knots is None else list(spec.fixed_knots),
        },
        "outcome": {
            "kind": draws.outcome_spec.kind,
            "add_intercept": draws.outcome_spec.add_intercept,
        },
        "rbf_centers": None if draws.rbf is None else draws.rbf.centers.tolist(),
        "rbf_scales": None if draws.rbf is None else draws.rbf.scales.tolist(),
        "x_names": list(draws.x_names),
        "z_names": list(draws.z_names),
        "miss_idx": [int(i) for i in data.miss_idx],
        "mala_accept_rate": draws.mala_accept_rate,
        "knot_accept_rate": draws.knot_accept_rate,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def _read_csv_matrix(path: str):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v != "" else np.nan for v in rec] for rec in reader]
    return header, np.asarray(rows, dtype=float)


def load_run(run_dir: str, data: Dataset) -> Draws:
    """Rebuild a Draws object from draws.csv, model.json and imputed.csv."""
    from .basis import RbfSpec

    with open(os.path.join(run_dir, "model.json")) as fh:
        meta = json.load(fh)
    header, matrix = _read_csv_matrix(os.path.join(run_dir, "draws.csv"))
    col = {name: matrix[:, j] for j, name in enumerate(header)}
    nk = matrix.shape[0]

    rmeta = meta["response"]
    spec = ResponseModelSpec(
        kind=rmeta["kind"], degree=rmeta["degree"], n_knots=rmeta["n_knots"],
        n_rbf=rmeta["n_rbf"], rbf_scale=rmeta["rbf_scale"],
        knot_strategy=rmeta["knot_strategy"],
        fixed_knots=None if rmeta["fixed_knots"] is None
        else np.asarray(rmeta["fixed_knots"]),
    )
    if meta["outcome"]["kind"] == "lmm":
        outcome_spec = LmmSpec(add_intercept=meta["outcome"]["add_intercept"])
    else:
        outcome_spec = LinRegSpec(add_intercept=meta["outcome"]["add_intercept"])

    phi = np.column_stack([col[f"phi_{j}"] for j in range(spec.degree + 1)])
    gamma_names = [n for n in header if n.startswith("gamma_")]
    delta_names = [n for n in header if n.startswith("delta_")]
    xi_names = [n for n in header if n.startswith("xi_")]
    beta_names = [n for n in header if n.startswith("beta_")]
    v_names = [n for n in header if n.startswith("v_")]

    imputed_path = os.path.join(run_dir, "imputed.csv")
    if data.n_missing and os.path.exists(imputed_path):
        _, y_mis = _read_csv_matrix(imputed_path)
    elif data.n_missing:
        raise ValueError(
            "the dataset has missing responses but the run directory has no "
            "imputed.csv; rerun fit with --save-imputed"
        )
    else:
        y_mis = np.empty((nk, 0))

    return Draws(
        phi=phi,
        gamma=np.column_stack([col[n] for n in gamma_names]) if gamma_names else np.empty((nk, 0)),
        delta=np.column_stack([col[n] for n in delta_names]) if delta_names else np.empty((nk, 0)),
        xi=np.column_stack([col[n] for n in xi_names]) if xi_names else np.empty((nk, 0)),
        lam=col.get("lambda", np.ones(nk)),
        lam_xi=col.get("lambda_xi", np.ones(nk)),
        a_expand=col.get("a_expand", np.zeros(nk)),
        b_expand=col.get("b_expand", np.zeros(nk)),
        beta=np.column_stack([col[n] for n in beta_names]),
        sigma2=col["sigma2"],
        tau2=col.get("tau2"),
        v=np.column_stack([col[n] for n in v_names]) if v_names else None,
        y_mis=y_mis,
        mu=col["mu"],
        loglik=col["loglik"],
        mala_rate=col["mala_accept"],
        knot_accept=np.column_stack([col["knot_accept_a"], col["knot_accept_b"]]),
        response_spec=spec,
        outcome_spec=outcome_spec,
        rbf=None if meta["rbf_centers"] is None else RbfSpec(
            centers=np.asarray(meta["rbf_centers"]),
            scales=np.asarray(meta["rbf_scales"]),
        ),
        x_names=meta["x_names"],
        z_names=meta["z_names"],
    )
