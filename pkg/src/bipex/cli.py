"""Command-line interface: estimation, simulation, and graph validation.

Commands echo their full resolved configuration, write JSON with stable key
order, and use exit codes 0 (success), 1 (usage or parse error), and
2 (estimation or validation failure).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .design import Assignment, exposures
from .errors import BipexError, ConfigError, DataFormatError, IsolatedOutcomeUnitError
from .estimators import Dataset, adjusted_hajek, estimate_beta, hajek
from .graph import BipartiteGraph, build, load_edge_csv, prune_isolated
from .kernels import PSD_SIZE_GUARD, build_kernels, min_joint_eigenvalue
from .sim import DGPConfig, run
from .variance import confidence_interval, variance_estimate

PSD_TOLERANCE = -1e-8
FORMAT_VERSION = 1

try:  # Python 3.11+
    import tomllib as _toml
except ImportError:  # pragma: no cover
    import tomli as _toml


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _build_checked(m: int, n: int, edges) -> BipartiteGraph:
    """Build a graph, reporting isolated units with the files' 1-based ids."""
    try:
        return build(m, n, edges)
    except IsolatedOutcomeUnitError as exc:
        ids = [u + 1 for u in exc.units]
        raise BipexError(
            f"outcome ids with no connected intervention unit: {ids} "
            f"(pass --prune to drop unconnected units)"
        ) from None


def _read_rows(path: Path, expected_header: list[str], minimum_cols: int):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: line 1: empty file")
        header = [h.strip() for h in header]
        if header[: len(expected_header)] != expected_header:
            raise DataFormatError(
                f"{path}: line 1: expected header starting with "
                f"{','.join(expected_header)}, got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < minimum_cols:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected at least {minimum_cols} columns"
                )
            rows.append((lineno, row))
        return header, rows


def load_data_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Read ``outcome_id,y,x1,...,xd`` (ids 1-based, must cover 1..n exactly)."""
    path = Path(path)
    header, rows = _read_rows(path, ["outcome_id", "y"], 2)
    x_names = header[2:]
    n = len(rows)
    y = np.full(n, np.nan)
    x = np.full((n, len(x_names)), np.nan)
    seen = set()
    for lineno, row in rows:
        if len(row) < 2 + len(x_names):
            raise DataFormatError(
                f"{path}: line {lineno}: expected {2 + len(x_names)} columns "
                f"({','.join(header[: 2 + len(x_names)])}), got {len(row)}"
            )
        try:
            ident = int(row[0])
            y_val = float(row[1])
            x_vals = [float(v) for v in row[2 : 2 + len(x_names)]]
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
        if not 1 <= ident <= n:
            raise DataFormatError(
                f"{path}: line {lineno}: outcome_id {ident} outside 1..{n} "
                f"(ids must be consecutive)"
            )
        if ident in seen:
            raise DataFormatError(f"{path}: line {lineno}: duplicate outcome_id {ident}")
        seen.add(ident)
        y[ident - 1] = y_val
        x[ident - 1] = x_vals
    return y, x, x_names


def load_assignment_csv(path: str | Path) -> np.ndarray:
    """Read ``intervention_id,z`` (ids 1-based, must cover 1..m exactly)."""
    path = Path(path)
    _, rows = _read_rows(path, ["intervention_id", "z"], 2)
    m = len(rows)
    z = np.full(m, -1, dtype=np.int64)
    for lineno, row in rows:
        try:
            ident = int(row[0])
            value = int(row[1])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
        if not 1 <= ident <= m:
            raise DataFormatError(
                f"{path}: line {lineno}: intervention_id {ident} outside 1..{m}"
            )
        if value not in (0, 1):
            raise DataFormatError(f"{path}: line {lineno}: z must be 0 or 1, got {value}")
        if z[ident - 1] != -1:
            raise DataFormatError(
                f"{path}: line {lineno}: duplicate intervention_id {ident}"
            )
        z[ident - 1] = value
    return z


def _echo_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    if out is None or out == "-":
        click.echo(text)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


@click.group(name="bipex")
@click.version_option(version=__version__, prog_name="bipex")
def cli() -> None:
    """Design-based estimation and inference for bipartite experiments."""


@cli.command("estimate")
@click.option("--graph", "graph_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--assignment", "assignment_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--p", "p", required=True, type=float, help="Bernoulli treatment probability.")
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--adjust/--no-adjust", default=False, show_default=True,
              help="Apply linear covariate adjustment.")
@click.option("--degree-covariate", is_flag=True, default=False,
              help="Append the outcome-unit degree as an extra covariate.")
@click.option("--prune", is_flag=True, default=False,
              help="Drop unconnected units (both sides) before estimating.")
@click.option("--out", default=None, help="Report path; '-' or omitted prints to stdout.")
def cmd_estimate(graph_file, data_file, assignment_file, p, alpha, adjust,
                 degree_covariate, prune, out) -> None:
    """Estimate the all-treated versus all-control contrast from CSV inputs."""
    y, x_raw, x_names = load_data_csv(data_file)
    z = load_assignment_csv(assignment_file)
    edge_m, edge_n, edges = load_edge_csv(graph_file)
    m = max(edge_m, z.shape[0])
    n = max(edge_n, y.shape[0])
    if z.shape[0] < edge_m:
        raise DataFormatError(
            f"{assignment_file}: covers {z.shape[0]} intervention units but the "
            f"graph references id {edge_m}"
        )
    if y.shape[0] < edge_n:
        raise DataFormatError(
            f"{data_file}: covers {y.shape[0]} outcome units but the graph "
            f"references id {edge_n}"
        )
    prune_info = None
    if prune:
        g, maps = prune_isolated(m, n, edges)
        keep_out = np.array(maps.outcome_kept, dtype=np.int64)
        keep_int = np.array(maps.intervention_kept, dtype=np.int64)
        y = y[keep_out]
        x_raw = x_raw[keep_out]
        z = z[keep_int]
        prune_info = {
            "outcome_units_dropped": [i + 1 for i in maps.outcome_dropped],
            "intervention_units_dropped": [k + 1 for k in maps.intervention_dropped],
        }
    else:
        g = _build_checked(m, n, edges)
    a = Assignment(z=z, p=p)
    ds = Dataset.centered(
        y,
        x_raw if x_raw.shape[1] else None,
        degrees_from=g if degree_covariate else None,
    )
    expo = exposures(g, a)
    pe = hajek(g, a, ds, expo=expo)
    ker = build_kernels(g, p)
    coef = None
    point = pe
    if adjust:
        if ds.d == 0:
            raise ConfigError("--adjust requires covariate columns (or --degree-covariate)")
        coef = estimate_beta(g, a, ds, ker, point=pe, expo=expo)
        point = adjusted_hajek(g, a, ds, coef, expo=expo)
    ve = variance_estimate(g, a, ds, ker, pe, coef=coef, expo=expo)
    ci = confidence_interval(point.tau_hat, ve, alpha)
    sparsity = g.sparsity_report()
    report = {
        "format_version": FORMAT_VERSION,
        "tau_hat": point.tau_hat,
        "mu1_hat": point.mu1_hat,
        "mu0_hat": point.mu0_hat,
        "v1_hat": ve.v1_hat,
        "v0_hat": ve.v0_hat,
        "v_ub_hat": ve.v_ub_hat,
        "ci": {
            "lower": ci.lower,
            "upper": ci.upper,
            "level": ci.level,
            "z_quantile": ci.z_quantile,
        },
        "counts": {
            "m": g.m,
            "n": g.n,
            "n_treated_exposed": point.n_treated_exposed,
            "n_control_exposed": point.n_control_exposed,
            "clamped_components": int(ve.clamped1) + int(ve.clamped0),
        },
        "sparsity": {
            "max_outcome_degree": sparsity.max_outcome_degree,
            "max_intervention_degree": sparsity.max_intervention_degree,
            "max_connectivity": sparsity.max_connectivity,
            "overlapping_pair_count": sparsity.overlapping_pair_count,
        },
        "inputs": {
            "graph_sha256": _sha256(Path(graph_file)),
            "data_sha256": _sha256(Path(data_file)),
            "assignment_sha256": _sha256(Path(assignment_file)),
        },
        "config": {
            "p": p,
            "alpha": alpha,
            "adjust": adjust,
            "degree_covariate": degree_covariate,
            "prune": prune,
            "covariate_names": x_names + (["degree"] if degree_covariate else []),
        },
    }
    if coef is not None:
        report["beta_hat"] = {
            "beta1": coef.beta1.tolist(),
            "beta0": coef.beta0.tolist(),
            "rank": coef.rank,
        }
    if prune_info is not None:
        report["prune"] = prune_info
    _echo_json(report, out)


_CONFIG_KEYS = {f.name for f in dataclasses.fields(DGPConfig)}


def _load_sim_config(path: Path, overrides: dict) -> DGPConfig:
    try:
        raw = _toml.loads(path.read_text(encoding="utf-8"))
    except _toml.TOMLDecodeError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(
            f"{path}: unknown config keys {sorted(unknown)}; valid keys are "
            f"{sorted(_CONFIG_KEYS)}"
        )
    merged = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    missing = {"regime", "n", "m", "max_degree", "reps"} - set(merged)
    if missing:
        raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
    if "gamma" in merged:
        merged["gamma"] = tuple(float(v) for v in merged["gamma"])
    try:
        return DGPConfig(**merged)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@cli.command("simulate")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--reps", type=int, default=None, help="Override replication count.")
@click.option("--seed", type=int, default=None, help="Override master seed.")
@click.option("--regime", type=str, default=None, help="Override regime (R1|R2|R3).")
@click.option("--threads", type=int, default=None,
              help="Worker thread cap (default: CPU count); results are thread-count invariant.")
@click.option("--out-prefix", default=None, help="Write <prefix>.json and <prefix>.csv.")
def cmd_simulate(config_file, reps, seed, regime, threads, out_prefix) -> None:
    """Run the Monte Carlo experiment described by a TOML config file."""
    cfg = _load_sim_config(
        Path(config_file),
        {"reps": reps, "master_seed": seed, "regime": regime},
    )
    workers = threads if threads is not None else (os.cpu_count() or 1)
    report = run(cfg, workers=workers)
    payload = report.to_json_dict()
    click.echo(json.dumps({"resolved_config": payload["config"]}, sort_keys=True))
    if out_prefix:
        _echo_json(payload, f"{out_prefix}.json")
        Path(f"{out_prefix}.csv").write_text(
            "\n".join(report.csv_lines()) + "\n", encoding="utf-8"
        )
    else:
        _echo_json(payload, None)


@cli.command("validate")
@click.option("--graph", "graph_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--p", "p", required=True, type=float)
def cmd_validate(graph_file, p) -> None:
    """Check the structural invariants of a graph file."""
    edge_m, edge_n, edges = load_edge_csv(graph_file)
    g = _build_checked(edge_m, edge_n, edges)
    sparsity = g.sparsity_report()
    click.echo(f"graph={graph_file} p={p}")
    click.echo(f"m={g.m} n={g.n}")
    click.echo(f"max_outcome_degree={sparsity.max_outcome_degree}")
    click.echo(f"max_intervention_degree={sparsity.max_intervention_degree}")
    click.echo(f"max_connectivity={sparsity.max_connectivity}")
    click.echo(f"overlapping_pair_count={sparsity.overlapping_pair_count}")
    if g.n <= PSD_SIZE_GUARD:
        ker = build_kernels(g, p)
        min_eig = min_joint_eigenvalue(ker)
        click.echo(f"min_joint_eigenvalue={min_eig:.3e}")
        if min_eig < PSD_TOLERANCE:
            raise BipexError(
                f"joint weight matrix not positive semi-definite: "
                f"min eigenvalue {min_eig:.3e} < {PSD_TOLERANCE}"
            )
    else:
        click.echo(f"psd_check=skipped (n={g.n} exceeds guard {PSD_SIZE_GUARD})")
    click.echo("ok")


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, prog_name="bipex", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        return 1
    except (DataFormatError, ConfigError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except BipexError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
