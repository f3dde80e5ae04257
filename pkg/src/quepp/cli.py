"""Command line front end.

Commands read a JSON run config and write JSON results plus CSV series into
an output directory (``--out``, the config's ``output_dir``, the
``QUEPP_OUTPUT_DIR`` environment variable, or the working directory, in that
order).  Every output embeds the fully resolved config and a version string,
and contains no timestamps, so re-running from an embedded config reproduces
the files bit for bit (single worker).

Exit codes: 0 success, 2 config or input error, 3 capability error (the
requested simulation is outside what the engines support), 4 internal
consistency failure.
"""

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import traceback
from typing import Optional

import numpy as np

from . import __version__
from . import statevector as sv
from .circuits import Circuit, normalize_rotations, parse_circuit, serialize_circuit
from .config import SCHEMA_VERSION, RunConfig, load_config
from .engine import (TruncationPolicy, classical_cpt_estimate,
                     enumerate_paths_parallel, merged_bfs_cpt, path_record)
from .errors import (CapabilityError, ConfigError, ConsistencyError,
                     EnumerationLimitError, ParseError, QueppError)
from .experiments import circuit_manifest, generate_experiment
from .pauli import PauliString
from .pipeline import convergence_series, run_quepp
from .sampler import build_ensemble
from .backend import TrajectorySimulator

OUTPUT_DIR_ENV = "QUEPP_OUTPUT_DIR"
_IDEAL_QUBIT_CAP = 12
_BFS_TERM_CAP = 65536


def _version_string() -> str:
    return f"quepp {__version__}"


def _output_dir(args, config: RunConfig) -> str:
    if getattr(args, "out", None):
        return args.out
    if config.output_dir:
        return config.output_dir
    return os.environ.get(OUTPUT_DIR_ENV, ".")


def _load(args) -> RunConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    if getattr(args, "infinite_shots", False):
        config = dataclasses.replace(config, infinite_shots=True)
    return config


def _header(config: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": _version_string(),
        "config": config.to_json_dict(),
    }


def _resolve_circuit(config: RunConfig) -> tuple[Circuit, PauliString]:
    if config.experiment is not None:
        circuit = generate_experiment(config.experiment)
        return circuit, config.experiment.resolved_observable()
    if config.circuit_file is None:
        raise ConfigError("config needs an experiment or a circuit_file")
    try:
        with open(config.circuit_file, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {config.circuit_file}: {exc}") from exc
    circuit = parse_circuit(text)
    observable = PauliString.from_label(config.observable)
    if observable.num_qubits != circuit.num_qubits:
        raise ConfigError(
            f"observable acts on {observable.num_qubits} qubits but the "
            f"circuit has {circuit.num_qubits}")
    return circuit, observable


def _make_backend(config: RunConfig, workers: int) -> TrajectorySimulator:
    return TrajectorySimulator(config.noise,
                               dense_qubit_cap=config.dense_qubit_cap,
                               infinite_shots=config.infinite_shots,
                               workers=workers)


def _ideal_expectation(circuit: Circuit,
                       observable: PauliString) -> Optional[float]:
    if circuit.num_qubits > _IDEAL_QUBIT_CAP:
        return None
    return sv.expectation(circuit, observable)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_csv(path: str, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(row.get(column)) for column in header])


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _prepare_out(args, config: RunConfig) -> str:
    out = _output_dir(args, config)
    os.makedirs(out, exist_ok=True)
    return out


def cmd_generate(args) -> int:
    config = _load(args)
    if config.experiment is None:
        raise ConfigError("generate needs an experiment section")
    out = _prepare_out(args, config)
    circuit = generate_experiment(config.experiment)
    observable = config.experiment.resolved_observable()
    circuit_path = os.path.join(out, "circuit.txt")
    with open(circuit_path, "w", encoding="utf-8") as handle:
        handle.write(serialize_circuit(circuit))
    payload = _header(config)
    payload["circuit_manifest"] = circuit_manifest(circuit)
    payload["observable"] = observable.label()
    manifest_path = os.path.join(out, "manifest.json")
    _write_json(manifest_path, payload)
    print(f"wrote {circuit_path}")
    print(f"wrote {manifest_path}")
    return 0


def cmd_cpt(args) -> int:
    config = _load(args)
    if config.truncation is None:
        raise ConfigError("cpt enumerates the truncated tree; "
                          "configure truncation, not sampler")
    out = _prepare_out(args, config)
    circuit, observable = _resolve_circuit(config)
    normalized = normalize_rotations(circuit)
    policy = config.truncation

    paths = enumerate_paths_parallel(normalized, observable, policy,
                                     workers=args.workers,
                                     keep_zero_expectation=True)
    k_max = policy.max_order if policy.max_order is not None \
        else normalized.num_rotations
    k_max = min(k_max, normalized.num_rotations)
    order_rows = []
    for k_t in range(k_max + 1):
        subset = [p for p in paths if p.coeff.order <= k_t]
        order_rows.append({
            "k_t": k_t,
            "estimate": classical_cpt_estimate(subset),
            "num_paths": len(subset),
        })

    min_coefficient = policy.min_coefficient or 0.0
    reference, peak = merged_bfs_cpt(normalized, observable,
                                     max_terms=_BFS_TERM_CAP,
                                     min_coefficient=min_coefficient)
    budgets = []
    budget = 1
    while budget < peak:
        budgets.append(budget)
        budget *= 2
    budgets.append(peak)
    budget_rows = []
    for budget in budgets:
        estimate, kept = merged_bfs_cpt(normalized, observable,
                                        max_terms=budget,
                                        min_coefficient=min_coefficient)
        budget_rows.append({"max_terms": budget, "terms_kept": kept,
                            "estimate": estimate})

    ideal = _ideal_expectation(circuit, observable)
    if ideal is not None:
        for row in order_rows:
            row["ideal"] = ideal
        for row in budget_rows:
            row["ideal"] = ideal

    payload = _header(config)
    payload["circuit_manifest"] = circuit_manifest(normalized)
    payload["observable"] = observable.label()
    payload["ideal"] = ideal
    payload["order_series"] = order_rows
    payload["budget_series"] = budget_rows
    payload["merged_bfs"] = {"estimate": reference, "peak_terms": peak,
                             "term_cap": _BFS_TERM_CAP}
    result_path = os.path.join(out, "cpt_result.json")
    _write_json(result_path, payload)
    columns = ["k_t", "estimate", "num_paths"]
    budget_columns = ["max_terms", "terms_kept", "estimate"]
    if ideal is not None:
        columns.append("ideal")
        budget_columns.append("ideal")
    _write_csv(os.path.join(out, "cpt_order_series.csv"), columns, order_rows)
    _write_csv(os.path.join(out, "cpt_budget_series.csv"), budget_columns,
               budget_rows)
    print(f"wrote {result_path}")
    print(f"cpt estimate at k_t={k_max}: {order_rows[-1]['estimate']:.12g}")
    if ideal is not None:
        print(f"statevector value: {ideal:.12g}")
    return 0


def _series_sizes(count: int) -> list[int]:
    if count <= 64:
        return list(range(1, count + 1))
    grid = np.geomspace(1, count, 32)
    return sorted({int(round(x)) for x in grid})


def _run_single(config: RunConfig, circuit: Circuit, observable: PauliString,
                args):
    backend = _make_backend(config, args.workers)
    return run_quepp(circuit, observable, backend, config.plan,
                     policy=config.truncation,
                     sampler=config.sampler,
                     eta_method=config.eta_method,
                     workers=args.workers,
                     allow_partial=getattr(args, "allow_partial", False))


def cmd_quepp(args) -> int:
    config = _load(args)
    if config.truncation is None and config.sampler is None:
        raise ConfigError("quepp needs a truncation or sampler section")
    out = _prepare_out(args, config)

    sweep = None
    if config.experiment is not None and config.experiment.sweep is not None:
        sweep = config.experiment.sweep
    if sweep is not None:
        rows = []
        results = []
        for theta in sweep:
            spec = config.experiment.with_angle(theta)
            circuit = generate_experiment(spec)
            observable = spec.resolved_observable()
            result = _run_single(config, circuit, observable, args)
            ideal = _ideal_expectation(circuit, observable)
            rows.append({
                "theta": theta,
                "ideal": ideal,
                "cpt": result.classical_part,
                "unmitigated": result.noisy_target.mean,
                "quepp": result.boosted,
                "quepp_std_error": result.boosted_std_error,
            })
            results.append(result.to_json_dict())
        payload = _header(config)
        payload["sweep"] = rows
        payload["results"] = results
        result_path = os.path.join(out, "quepp_result.json")
        _write_json(result_path, payload)
        _write_csv(os.path.join(out, "quepp_sweep.csv"),
                   ["theta", "ideal", "cpt", "unmitigated", "quepp",
                    "quepp_std_error"], rows)
        print(f"wrote {result_path}")
        print(f"swept {len(rows)} angles")
        return 0

    circuit, observable = _resolve_circuit(config)
    result = _run_single(config, circuit, observable, args)
    ideal = _ideal_expectation(circuit, observable)
    series = convergence_series(result.records, result.noisy_target,
                                eta_method=config.eta_method,
                                sizes=_series_sizes(len(result.records)),
                                bootstrap_resamples=100,
                                seed=config.plan.rng_seed)
    payload = _header(config)
    payload["circuit_manifest"] = circuit_manifest(normalize_rotations(circuit))
    payload["observable"] = observable.label()
    payload["ideal"] = ideal
    payload["result"] = result.to_json_dict()
    payload["series"] = series
    result_path = os.path.join(out, "quepp_result.json")
    _write_json(result_path, payload)
    _write_csv(os.path.join(out, "quepp_convergence.csv"),
               ["size", "boosted", "std_error", "eta", "classical_part",
                "residual"], series)
    print(f"wrote {result_path}")
    print(f"boosted estimate: {result.boosted:.12g} "
          f"(std error {result.boosted_std_error:.3g}, "
          f"eta {result.eta.value:.6g} via {result.eta.method})")
    if ideal is not None:
        print(f"statevector value: {ideal:.12g}")
    return 0


def cmd_sample(args) -> int:
    config = _load(args)
    if config.sampler is None:
        raise ConfigError("sample needs a sampler section")
    out = _prepare_out(args, config)
    circuit, observable = _resolve_circuit(config)
    normalized = normalize_rotations(circuit)
    paths, report = build_ensemble(normalized, observable, config.sampler)
    if report.saturated and not getattr(args, "allow_partial", False):
        raise ConsistencyError(
            f"sampler found {report.unique} of "
            f"{config.sampler.target_unique_paths} paths in "
            f"{report.attempts} attempts; pass --allow-partial to keep "
            "the partial ensemble")
    ensemble_path = os.path.join(out, "ensemble.jsonl")
    with open(ensemble_path, "w", encoding="utf-8") as handle:
        for path in paths:
            handle.write(json.dumps(path_record(path), sort_keys=True))
            handle.write("\n")
    payload = _header(config)
    payload["circuit_manifest"] = circuit_manifest(normalized)
    payload["observable"] = observable.label()
    payload["report"] = report.to_json_dict()
    report_path = os.path.join(out, "sampling_report.json")
    _write_json(report_path, payload)
    print(f"wrote {ensemble_path}")
    print(f"wrote {report_path}")
    print(f"accepted {report.accepted} walks, {report.unique} unique paths "
          f"in {report.attempts} attempts")
    return 0


def _seed_signature(config_dict: dict) -> tuple:
    experiment = config_dict.get("experiment") or {}
    sampler = config_dict.get("sampler") or {}
    plan = config_dict.get("plan") or {}
    return (config_dict.get("seed"), experiment.get("rng_seed"),
            sampler.get("rng_seed"), plan.get("rng_seed"))


def _report_rows(documents: list[dict]) -> tuple[list[str], list[dict]]:
    if all("sweep" in doc for doc in documents):
        rows = [dict(row) for doc in documents for row in doc["sweep"]]
        rows.sort(key=lambda row: row["theta"])
        return (["theta", "ideal", "cpt", "unmitigated", "quepp",
                 "quepp_std_error"], rows)
    if any("sweep" in doc for doc in documents):
        raise ConfigError("cannot merge sweep results with single runs")
    rows = []
    for doc in documents:
        result = doc.get("result")
        if result is None:
            raise ConfigError("input is not a quepp result file "
                              "(no result or sweep section)")
        truncation = doc["config"].get("truncation") or {}
        ideal = doc.get("ideal")
        row = {
            "k_t": truncation.get("max_order"),
            "cpt": result["classical_part"],
            "unmitigated": result["noisy_target"]["mean"],
            "quepp": result["boosted"],
            "quepp_std_error": result["boosted_std_error"],
            "ideal": ideal,
        }
        if ideal is not None:
            row["cpt_bias"] = abs(row["cpt"] - ideal)
            row["quepp_bias"] = abs(row["quepp"] - ideal)
        rows.append(row)
    rows.sort(key=lambda row: (row["k_t"] is None, row["k_t"]))
    columns = ["k_t", "ideal", "cpt", "unmitigated", "quepp",
               "quepp_std_error"]
    if any("cpt_bias" in row for row in rows):
        columns += ["cpt_bias", "quepp_bias"]
    return columns, rows


_GNUPLOT_SWEEP = """set datafile separator ','
set key autotitle columnhead outside
set xlabel 'theta'
set ylabel 'expectation'
plot 'report.csv' using 1:2 with lines lw 2, \\
     '' using 1:3 with linespoints, \\
     '' using 1:4 with linespoints, \\
     '' using 1:5:6 with yerrorlines
"""

_GNUPLOT_ORDER = """set datafile separator ','
set key autotitle columnhead outside
set xlabel 'truncation order'
set ylabel 'absolute bias'
set logscale y
plot 'report.csv' using 1:7 with linespoints, \\
     '' using 1:8 with linespoints
"""


def cmd_report(args) -> int:
    documents = []
    for path in args.inputs:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                doc = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(
                f"{path}: schema_version {doc.get('schema_version')} does "
                f"not match this build ({SCHEMA_VERSION})")
        documents.append(doc)
    signatures = {_seed_signature(doc.get("config", {})) for doc in documents}
    if len(signatures) > 1 and not args.force:
        raise ConfigError("inputs were produced with different seeds; "
                          "pass --force to merge them anyway")
    columns, rows = _report_rows(documents)
    out = args.out or os.environ.get(OUTPUT_DIR_ENV, ".")
    os.makedirs(out, exist_ok=True)
    report_path = os.path.join(out, "report.csv")
    _write_csv(report_path, columns, rows)
    widths = [max(len(col), 12) for col in columns]
    print("  ".join(col.rjust(w) for col, w in zip(columns, widths)))
    for row in rows:
        cells = []
        for col, w in zip(columns, widths):
            value = row.get(col)
            if isinstance(value, float):
                cells.append(f"{value:.6g}".rjust(w))
            else:
                cells.append(str("" if value is None else value).rjust(w))
        print("  ".join(cells))
    print(f"wrote {report_path}")
    if args.gnuplot:
        script = _GNUPLOT_SWEEP if columns[0] == "theta" else _GNUPLOT_ORDER
        script_path = os.path.join(out, "report.gp")
        with open(script_path, "w", encoding="utf-8") as handle:
            handle.write(script)
        print(f"wrote {script_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quepp",
        description="Pauli-path simulation and noise-boosted estimation.",
        epilog="exit codes: 0 success, 2 config error, 3 capability error, "
               "4 internal consistency failure")
    parser.add_argument("--version", action="version",
                        version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, allow_partial=False):
        p.add_argument("--config", required=True,
                       help="JSON run config (a result file with an embedded "
                            "config also works)")
        p.add_argument("--seed", type=int, default=None,
                       help="override every sub-seed from one master seed")
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes for enumeration and execution")
        p.add_argument("--out", default=None,
                       help=f"output directory (default: config output_dir, "
                            f"then ${OUTPUT_DIR_ENV}, then .)")
        p.add_argument("--infinite-shots", action="store_true",
                       help="replace sampling with exact noisy expectations")
        if allow_partial:
            p.add_argument("--allow-partial", action="store_true",
                           help="keep a saturated (partial) sampler ensemble")

    p = sub.add_parser("generate", help="write a circuit file and manifest")
    add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cpt", help="classical estimate series")
    add_common(p)
    p.set_defaults(func=cmd_cpt)

    p = sub.add_parser("quepp", help="boosted estimate (single run or sweep)")
    add_common(p, allow_partial=True)
    p.set_defaults(func=cmd_quepp)

    p = sub.add_parser("sample", help="Monte Carlo path ensemble")
    add_common(p, allow_partial=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("report", help="merge result files into one table")
    p.add_argument("inputs", nargs="+", help="result JSON files")
    p.add_argument("--force", action="store_true",
                   help="merge inputs even if their seeds differ")
    p.add_argument("--gnuplot", action="store_true",
                   help="also write a gnuplot script next to report.csv")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CapabilityError, EnumerationLimitError) as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3
    except (ConsistencyError, AssertionError, QueppError) as exc:
        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
