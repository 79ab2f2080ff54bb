"""Command-line entry point wiring datasets -> engine -> evaluation.

Subcommands:
  gen    materialize a synthetic benchmark as init.csv / stream.csv / manifest.json
  run    stream a benchmark or CSV pair through the engine, writing artifacts
  eval   score a prediction label file against ground truth
  sp1m   debug clustering: run the sequential one-means on a point CSV
  probe  re-score a saved model on probe points

Every run writes a resolved-config snapshot so its outputs are reproducible
from the artifacts alone. Exit codes: 0 success, 2 usage, 3 data error,
4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import (
    OUTLIER,
    DimensionMismatchError,
    HyperParams,
    ModelFormatError,
    load_model,
    save_model,
)
from .datasets import (
    BenchmarkSpec,
    CsvFormatError,
    LabeledStream,
    load_features_csv,
    make_benchmark,
    shuffle_stream,
    write_features_csv,
    write_manifest,
)
from .engine import StreamEngine, UpdateStrategy
from .evaluation import align_labels, precision, summarize_run
from .neural_gas import NgSchedule
from .possibilistic import class_typicalities
from .sp1m import sp1m

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_HYPER_FIELDS = [f for f in HyperParams.__dataclass_fields__]

_RUN_DEFAULTS = {
    "dataset": None,
    "init_size": 200,
    "segment_size": 200,
    "interleave": False,
    "init_csv": None,
    "stream_csv": None,
    "csv_has_header": False,
    "stream_has_labels": False,
    "strategy": "knn",
    "shuffle": False,
    "seed": 0,
    "probes": None,
    "knn_update_cap": None,
    "buffer_capacity": None,
    **{f"hp_{name}": getattr(HyperParams(), name) for name in _HYPER_FIELDS},
    "ng_epsilon_start": 0.5,
    "ng_epsilon_end": 0.005,
    "ng_lambda_start": None,
    "ng_lambda_end": 0.01,
    "ng_epochs": 50,
}


def _parse_probes(text: str) -> list[list[float]]:
    """Parse "x,y;x,y" probe coordinate lists."""
    probes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        probes.append([float(v) for v in chunk.split(",")])
    if not probes:
        raise ValueError("no probe coordinates given")
    return probes


def _add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("hyperparameters")
    g.add_argument("--neurons-per-class", dest="hp_n_neurons_per_class", type=int)
    g.add_argument("--k-query", dest="hp_k_query", type=int)
    g.add_argument("--k-eta", dest="hp_k_eta", type=int)
    g.add_argument("--typicality-threshold", dest="hp_typicality_threshold", type=float)
    g.add_argument("--min-new-class-points", dest="hp_min_new_class_points", type=int)
    g.add_argument("--fuzzifier", dest="hp_fuzzifier", type=float)
    g.add_argument("--learning-rate", dest="hp_learning_rate", type=float)
    g.add_argument("--neighborhood-range", dest="hp_neighborhood_range", type=float)
    g.add_argument("--p1m-restarts", dest="hp_p1m_restarts", type=int)
    g.add_argument("--p1m-conv-tol", dest="hp_p1m_conv_tol", type=float)
    g.add_argument("--p1m-max-iter", dest="hp_p1m_max_iter", type=int)
    g.add_argument("--p1m-eta-scale", dest="hp_p1m_eta_scale", type=float)
    g.add_argument("--eta-coverage-quantile", dest="hp_eta_coverage_quantile", type=float)
    g.add_argument("--discovery-eta-boost", dest="hp_discovery_eta_boost", type=float)
    s = parser.add_argument_group("neural gas schedule")
    s.add_argument("--ng-epsilon-start", type=float)
    s.add_argument("--ng-epsilon-end", type=float)
    s.add_argument("--ng-lambda-start", type=float)
    s.add_argument("--ng-lambda-end", type=float)
    s.add_argument("--ng-epochs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softstream")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="materialize a synthetic benchmark")
    p_gen.add_argument("--dataset", type=int, required=True, choices=(1, 2, 3, 4))
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--init-size", type=int, default=200)
    p_gen.add_argument("--segment-size", type=int, default=200)
    p_gen.add_argument("--interleave", action="store_true")
    p_gen.add_argument("--outdir", type=Path, default=Path("."))

    p_run = sub.add_parser("run", help="stream data through the engine")
    p_run.add_argument("--config", type=Path, help="JSON config file; flags override it")
    p_run.add_argument("--dataset", type=int, choices=(1, 2, 3, 4))
    p_run.add_argument("--init-size", type=int)
    p_run.add_argument("--segment-size", type=int)
    p_run.add_argument("--interleave", action="store_true", default=None)
    p_run.add_argument("--init-csv", type=Path)
    p_run.add_argument("--stream-csv", type=Path)
    p_run.add_argument("--csv-has-header", action="store_true", default=None)
    p_run.add_argument("--stream-has-labels", action="store_true", default=None)
    p_run.add_argument("--strategy", choices=[s.value for s in UpdateStrategy])
    p_run.add_argument("--shuffle", action="store_true", default=None)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--probes", type=str, help='probe coordinates "x,y;x,y"')
    p_run.add_argument("--knn-update-cap", type=int)
    p_run.add_argument("--buffer-capacity", type=int)
    p_run.add_argument("--outdir", type=Path, default=Path("."))
    _add_hyper_flags(p_run)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", type=Path, required=True)
    p_eval.add_argument("--truth", type=Path, required=True)
    p_eval.add_argument("--typicality", type=Path, help="per-point max typicality file")
    p_eval.add_argument("--confident-threshold", type=float, default=0.2)
    p_eval.add_argument("--n-initial-classes", type=int, default=0)
    p_eval.add_argument("--output", type=Path, help="write metrics JSON here (default stdout)")

    p_sp1m = sub.add_parser("sp1m", help="debug sequential one-means clustering")
    p_sp1m.add_argument("--input", type=Path, required=True)
    p_sp1m.add_argument("--has-header", action="store_true")
    p_sp1m.add_argument("--c-max", type=int, default=3)
    p_sp1m.add_argument("--restart-cap", type=int, default=10)
    p_sp1m.add_argument("--fuzzifier", type=float, default=1.5)
    p_sp1m.add_argument("--tol", type=float, default=1e-4)
    p_sp1m.add_argument("--max-iter", type=int, default=100)
    p_sp1m.add_argument("--eta-scale", type=float, default=5.0)
    p_sp1m.add_argument("--seed", type=int, default=0)
    p_sp1m.add_argument("--output", type=Path, help="write clusters JSON here (default stdout)")

    p_probe = sub.add_parser("probe", help="score probe points on a saved model")
    p_probe.add_argument("--model", type=Path, required=True)
    p_probe.add_argument("--probes", type=str, required=True)
    p_probe.add_argument("--output", type=Path, help="write probe JSON here (default stdout)")

    return parser


def cmd_gen(args) -> int:
    spec = BenchmarkSpec(
        dataset_id=args.dataset,
        points_per_init_class=args.init_size,
        points_per_stream_segment=args.segment_size,
        seed=args.seed,
        interleave=args.interleave,
    )
    stream = make_benchmark(spec)
    args.outdir.mkdir(parents=True, exist_ok=True)
    write_features_csv(args.outdir / "init.csv", stream.init_points, stream.init_labels)
    write_features_csv(args.outdir / "stream.csv", stream.stream_points, stream.stream_labels)
    write_manifest(args.outdir / "manifest.json", spec, stream)
    return EXIT_OK


def _resolve_run_config(args) -> dict:
    config = dict(_RUN_DEFAULTS)
    if args.config is not None:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise CsvFormatError(f"{args.config}: invalid JSON: {exc}") from exc
        unknown = set(file_cfg) - set(config)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(file_cfg)
    overrides = {
        "dataset": args.dataset,
        "init_size": args.init_size,
        "segment_size": args.segment_size,
        "interleave": args.interleave,
        "init_csv": None if args.init_csv is None else str(args.init_csv),
        "stream_csv": None if args.stream_csv is None else str(args.stream_csv),
        "csv_has_header": args.csv_has_header,
        "stream_has_labels": args.stream_has_labels,
        "strategy": args.strategy,
        "shuffle": args.shuffle,
        "seed": args.seed,
        "probes": args.probes,
        "knn_update_cap": args.knn_update_cap,
        "buffer_capacity": args.buffer_capacity,
        "ng_epsilon_start": args.ng_epsilon_start,
        "ng_epsilon_end": args.ng_epsilon_end,
        "ng_lambda_start": args.ng_lambda_start,
        "ng_lambda_end": args.ng_lambda_end,
        "ng_epochs": args.ng_epochs,
        **{f"hp_{name}": getattr(args, f"hp_{name}") for name in _HYPER_FIELDS},
    }
    config.update({k: v for k, v in overrides.items() if v is not None})
    if config["dataset"] is None and (config["init_csv"] is None or config["stream_csv"] is None):
        raise ValueError("run needs either --dataset or both --init-csv and --stream-csv")
    return config


def _build_inputs(config) -> LabeledStream:
    seeds = np.random.SeedSequence(config["seed"]).spawn(3)
    if config["dataset"] is not None:
        spec = BenchmarkSpec(
            dataset_id=config["dataset"],
            points_per_init_class=config["init_size"],
            points_per_stream_segment=config["segment_size"],
            seed=config["seed"],
            interleave=config["interleave"],
        )
        data = make_benchmark(spec)
    else:
        init_pts, init_labels = load_features_csv(
            config["init_csv"], has_labels=True, has_header=config["csv_has_header"]
        )
        stream_pts, stream_labels = load_features_csv(
            config["stream_csv"],
            has_labels=config["stream_has_labels"],
            has_header=config["csv_has_header"],
        )
        if stream_pts.shape[1] != init_pts.shape[1]:
            raise DimensionMismatchError(
                f"stream dimension {stream_pts.shape[1]} != init dimension {init_pts.shape[1]}"
            )
        data = LabeledStream(
            init_points=init_pts,
            init_labels=init_labels,
            stream_points=stream_pts,
            stream_labels=stream_labels,
            new_class_ids=[],
        )
    if config["shuffle"]:
        data = shuffle_stream(data, np.random.default_rng(seeds[2]))
    return data


def cmd_run(args) -> int:
    config = _resolve_run_config(args)
    outdir = args.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config_resolved.json").write_text(json.dumps(config, indent=1) + "\n")

    data = _build_inputs(config)
    params = HyperParams(**{name: config[f"hp_{name}"] for name in _HYPER_FIELDS})
    schedule = NgSchedule(
        epsilon_start=config["ng_epsilon_start"],
        epsilon_end=config["ng_epsilon_end"],
        lambda_start=config["ng_lambda_start"],
        lambda_end=config["ng_lambda_end"],
        epochs=config["ng_epochs"],
    )
    probes = None if config["probes"] is None else _parse_probes(config["probes"])
    engine_seed = np.random.SeedSequence(config["seed"]).spawn(3)[1]

    engine = StreamEngine.from_init(
        data.init_points,
        data.init_labels,
        params,
        seed=engine_seed,
        strategy=UpdateStrategy(config["strategy"]),
        ng_schedule=schedule,
        knn_update_cap=config["knn_update_cap"],
        buffer_capacity=config["buffer_capacity"],
        probes=probes,
    )
    outputs = engine.run(data.stream_points)

    with open(outdir / "events.jsonl", "w") as fh:
        for out in outputs:
            fh.write(json.dumps(_event_doc(out)) + "\n")
    (outdir / "relabels.json").write_text(json.dumps(engine.relabel_log, indent=1) + "\n")
    save_model(engine.model, outdir / "model_final.json")

    final = engine.final_labels()
    max_typ = np.array([max(o.typicality.values()) for o in outputs])
    with open(outdir / "labels.csv", "w") as fh:
        fh.write("stream_index,label,max_typicality\n")
        for i, (lab, mt) in enumerate(zip(final, max_typ)):
            fh.write(f"{i},{_label_str(int(lab))},{repr(float(mt))}\n")

    n_init = len(np.unique(data.init_labels))
    if data.stream_labels is not None:
        metrics = summarize_run(final, data.stream_labels, max_typ, n_init)
    else:
        discovered = sorted(set(int(p) for p in final) - set(range(n_init)) - {OUTLIER})
        metrics = {
            "precision": None,
            "confident_precision": None,
            "coverage": None,
            "n_classes_discovered": len(discovered),
            "discovered_class_ids": discovered,
        }
    (outdir / "metrics.json").write_text(json.dumps(metrics, indent=1) + "\n")

    if probes is not None:
        with open(outdir / "probes.csv", "w") as fh:
            header = ["stream_index"] + [f"probe_{i}" for i in range(len(probes))]
            fh.write(",".join(header) + "\n")
            for i, row in enumerate(engine.probe_history):
                fh.write(",".join([str(i)] + [repr(float(v)) for v in row]) + "\n")
    return EXIT_OK


def _label_str(label: int) -> str:
    return "OUTLIER" if label == OUTLIER else str(label)


def _event_doc(out) -> dict:
    doc = {
        "index": out.index,
        "label": _label_str(out.label),
        "event": out.event,
        "typicality": {str(k): v for k, v in out.typicality.items()},
    }
    if out.new_class is not None:
        doc["new_class"] = out.new_class
        doc["absorbed"] = out.absorbed
    return doc


def _read_column(path, name: str) -> list[str]:
    """Cells of the named column when a header declares it, else the last
    column; a non-numeric first row without the name is skipped as a header."""
    cells: list[str] = []
    col = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = [c.strip() for c in line.split(",")]
            if lineno == 1:
                if name in row:
                    col = row.index(name)
                    continue
                if not _is_number(row[-1]):
                    continue  # unnamed header
            cells.append(row[col])
    if not cells:
        raise CsvFormatError(f"{path}: no data rows found")
    return cells


def _is_number(cell: str) -> bool:
    if cell == "OUTLIER":
        return True
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _read_labels(path) -> np.ndarray:
    """Read integer labels (or OUTLIER) from the 'label'/last column."""
    labels = []
    for i, cell in enumerate(_read_column(path, "label"), start=1):
        if not _is_label(cell):
            raise CsvFormatError(f"{path}: row {i}: invalid label {cell!r}")
        labels.append(OUTLIER if cell == "OUTLIER" else int(cell))
    return np.array(labels, dtype=np.int64)


def _is_label(cell: str) -> bool:
    if cell == "OUTLIER":
        return True
    try:
        int(cell)
        return True
    except ValueError:
        return False


def _read_floats(path) -> np.ndarray:
    values = []
    for i, cell in enumerate(_read_column(path, "max_typicality"), start=1):
        try:
            values.append(float(cell))
        except ValueError:
            raise CsvFormatError(f"{path}: row {i}: invalid value {cell!r}") from None
    return np.array(values, dtype=np.float64)


def cmd_eval(args) -> int:
    pred = _read_labels(args.pred)
    truth = _read_labels(args.truth)
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(truth)} truth labels")
    if args.typicality is not None:
        typ = _read_floats(args.typicality)
        if len(typ) != len(pred):
            raise ValueError("typicality file length does not match predictions")
        metrics = summarize_run(pred, truth, typ, args.n_initial_classes, args.confident_threshold)
    else:
        alignment = align_labels(pred, truth)
        metrics = {
            "precision": precision(pred, truth, alignment),
            "alignment": {str(k): int(v) for k, v in alignment.mapping.items()},
        }
    text = json.dumps(metrics, indent=1) + "\n"
    if args.output is not None:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sp1m(args) -> int:
    points, _ = load_features_csv(args.input, has_labels=False, has_header=args.has_header)
    results = sp1m(
        points,
        c_max=args.c_max,
        restart_cap=args.restart_cap,
        m=args.fuzzifier,
        tol=args.tol,
        max_iter=args.max_iter,
        rng=np.random.default_rng(args.seed),
        eta_scale=args.eta_scale,
    )
    doc = [
        {
            "center": r.center.tolist(),
            "eta": r.eta,
            "converged": r.converged,
            "iterations": r.iterations,
            "n_points_over_half": int((r.typicalities > 0.5).sum()),
        }
        for r in results
    ]
    text = json.dumps(doc, indent=1) + "\n"
    if args.output is not None:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_probe(args) -> int:
    model = load_model(args.model)
    probes = _parse_probes(args.probes)
    doc = []
    for p in probes:
        typ = class_typicalities(np.asarray(p, dtype=np.float64), model)
        doc.append(
            {
                "probe": list(p),
                "typicality": {str(k): v for k, v in typ.items()},
                "max": max(typ.values()),
            }
        )
    text = json.dumps(doc, indent=1) + "\n"
    if args.output is not None:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {"gen": cmd_gen, "run": cmd_run, "eval": cmd_eval, "sp1m": cmd_sp1m, "probe": cmd_probe}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (CsvFormatError, ModelFormatError, DimensionMismatchError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
