"""Command line front end and the end-to-end pipeline.

A run is described by a TOML file.  Every key has a default except
``cv.seed``::

    [input]                      # exactly one of manifest / synthetic
    manifest = "data/manifest.csv"   # CSV path,label,rate; relative to this file

    [input.synthetic]
    classes = ["H", "M", "N"]
    series_per_class = 20
    sampling_rate = 4000.0
    duration = 2.0               # seconds per series
    seed = 0

    [envelope]
    moving_average_len = 101     # samples, odd
    filter_order = 2
    cutoff_hz = 50.0

    [window]
    length = 200                 # samples
    quantile = 0.95              # peak threshold as a quantile of |x| ...
    # threshold = 0.5            # ... or an absolute amplitude
    max_per_class = 0            # 0 keeps every window

    [graph]
    kind = "nvg"                 # nvg | nvg_fast | nvg_naive | hvg

    [features]
    select_k = 3                 # features reported as the ANOVA top-k

    [[models]]                   # repeatable; default is one "dnn" entry
    profile = "dnn"              # dnn | ann | knn | logreg, other keys override

    [cv]
    k = 5
    repetitions = 20
    seed = 0                     # required
    task = "three_class"         # or two_class

    [export]
    output_dir = "graphts-out"   # GRAPHTS_OUTPUT_DIR overrides
    graphml = false
    dot = false
    feature_csv = true
    boxplot_json = true
    report_json = true

    [run]
    workers = 1

Windows are detected on the linear envelope of each series and the graph is
built from the envelope samples inside the window.  Exit codes: 0 success,
1 configuration error, 2 data error, 3 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import features as feat
from . import graph_metrics as gm
from . import signal_io as sio
from .classify import TASKS, ModelSpec, build_model, confusion_matrix, cross_validate, encode_labels, evaluate
from .errors import BadSpec, ConfigError, DataError, GraphTSError, MissingFile, SchemaMismatch
from .preprocess import EnvelopeParams, Window, detect_windows, linear_envelope
from .rng import derive_seed
from .types import ClassLabel, FeatureMatrix, TimeSeries
from .visibility import BUILDERS, build_graph

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("graphts")

OUTPUT_DIR_ENV = "GRAPHTS_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


# -- configuration ---------------------------------------------------------


@dataclass(frozen=True)
class SyntheticInput:
    classes: tuple = ("H", "M", "N")
    series_per_class: int = 20
    sampling_rate: float = 4000.0
    duration: float = 2.0
    seed: int = 0


@dataclass(frozen=True)
class WindowConfig:
    length: int = 200
    quantile: float = 0.95
    threshold: Optional[float] = None
    max_per_class: int = 0


@dataclass(frozen=True)
class CVConfig:
    seed: int
    k: int = 5
    repetitions: int = 20
    task: str = "three_class"


@dataclass(frozen=True)
class ExportConfig:
    output_dir: str = "graphts-out"
    graphml: bool = False
    dot: bool = False
    feature_csv: bool = True
    boxplot_json: bool = True
    report_json: bool = True


@dataclass
class PipelineConfig:
    cv: CVConfig
    manifest: Optional[Path] = None
    synthetic: Optional[SyntheticInput] = None
    envelope: EnvelopeParams = field(default_factory=EnvelopeParams)
    window: WindowConfig = field(default_factory=WindowConfig)
    graph_kind: str = "nvg"
    select_k: int = 3
    models: list = field(default_factory=lambda: [ModelSpec.profile("dnn")])
    export: ExportConfig = field(default_factory=ExportConfig)
    workers: int = 1

    @property
    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.export.output_dir)

    def to_dict(self) -> dict:
        """Config echo; the output directory is left out so it can move freely."""
        return {
            "input": {
                "manifest": str(self.manifest) if self.manifest else None,
                "synthetic": _plain(asdict(self.synthetic)) if self.synthetic else None,
            },
            "envelope": asdict(self.envelope),
            "window": asdict(self.window),
            "graph": {"kind": self.graph_kind},
            "features": {"select_k": self.select_k},
            "models": [m.to_dict() for m in self.models],
            "cv": asdict(self.cv),
            "export": {k: v for k, v in asdict(self.export).items() if k != "output_dir"},
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


_SCALARS = {int: (int,), float: (int, float), bool: (bool,), str: (str,)}


def _take(table: dict, section: str, schema: dict) -> dict:
    """Type-check ``table`` against ``{key: type}``; unknown keys are errors."""
    if not isinstance(table, dict):
        raise ConfigError(section, "must be a table")
    out = {}
    for key, value in table.items():
        name = f"{section}.{key}"
        if key not in schema:
            raise ConfigError(name, "unknown key")
        kind = schema[key]
        if kind is list:
            if not isinstance(value, list):
                raise ConfigError(name, "expected a list")
        elif isinstance(value, bool) and kind is not bool or not isinstance(value, _SCALARS[kind]):
            raise ConfigError(name, f"expected {kind.__name__}, got {type(value).__name__}")
        out[key] = float(value) if kind is float else value
    return out


def parse_config(raw: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    top = {"input", "envelope", "window", "graph", "features", "models", "cv", "export", "run"}
    for key in raw:
        if key not in top:
            raise ConfigError(key, "unknown section")

    cv_raw = _take(raw.get("cv", {}), "cv", {"seed": int, "k": int, "repetitions": int, "task": str})
    if "seed" not in cv_raw:
        raise ConfigError("cv.seed", "required (runs must be reproducible)")
    cv = CVConfig(**cv_raw)
    if cv.k < 2:
        raise ConfigError("cv.k", "need at least 2 folds")
    if cv.repetitions < 1:
        raise ConfigError("cv.repetitions", "must be positive")
    if cv.task not in TASKS:
        raise ConfigError("cv.task", f"choose from {sorted(TASKS)}")

    inp = raw.get("input", {})
    if not isinstance(inp, dict):
        raise ConfigError("input", "must be a table")
    extra = set(inp) - {"manifest", "synthetic"}
    if extra:
        raise ConfigError(f"input.{sorted(extra)[0]}", "unknown key")
    if ("manifest" in inp) == ("synthetic" in inp):
        raise ConfigError("input", "give exactly one of input.manifest or input.synthetic")
    manifest = synthetic = None
    if "manifest" in inp:
        if not isinstance(inp["manifest"], str):
            raise ConfigError("input.manifest", "expected a path string")
        manifest = Path(inp["manifest"])
        if not manifest.is_absolute():
            manifest = base_dir / manifest
        if not manifest.is_file():
            raise ConfigError("input.manifest", f"file not found: {manifest}")
    else:
        syn = _take(inp["synthetic"], "input.synthetic", {
            "classes": list, "series_per_class": int, "sampling_rate": float, "duration": float, "seed": int,
        })
        if "classes" in syn:
            try:
                syn["classes"] = tuple(ClassLabel.parse(c).value for c in syn["classes"])
            except DataError as exc:
                raise ConfigError("input.synthetic.classes", str(exc)) from exc
        synthetic = SyntheticInput(**syn)
        if synthetic.series_per_class < 1:
            raise ConfigError("input.synthetic.series_per_class", "must be positive")
        if not synthetic.duration > 0 or not synthetic.sampling_rate > 0:
            raise ConfigError("input.synthetic", "duration and sampling_rate must be positive")

    env = EnvelopeParams(**_take(raw.get("envelope", {}), "envelope", {
        "moving_average_len": int, "filter_order": int, "cutoff_hz": float,
    }))
    if env.moving_average_len < 1 or env.moving_average_len % 2 == 0:
        raise ConfigError("envelope.moving_average_len", "must be odd and >= 1")
    if not 1 <= env.filter_order <= 8:
        raise ConfigError("envelope.filter_order", "must lie in [1, 8]")
    if not env.cutoff_hz > 0:
        raise ConfigError("envelope.cutoff_hz", "must be positive")

    window = WindowConfig(**_take(raw.get("window", {}), "window", {
        "length": int, "quantile": float, "threshold": float, "max_per_class": int,
    }))
    if window.length < 1:
        raise ConfigError("window.length", "must be positive")
    if not 0.0 <= window.quantile <= 1.0:
        raise ConfigError("window.quantile", "must lie in [0, 1]")
    if window.threshold is not None and not window.threshold > 0:
        raise ConfigError("window.threshold", "must be positive")
    if window.max_per_class < 0:
        raise ConfigError("window.max_per_class", "must be >= 0")

    graph = _take(raw.get("graph", {}), "graph", {"kind": str})
    kind = graph.get("kind", "nvg")
    if kind not in BUILDERS:
        raise ConfigError("graph.kind", f"choose from {sorted(BUILDERS)}")

    select_k = _take(raw.get("features", {}), "features", {"select_k": int}).get("select_k", 3)
    if not 1 <= select_k <= len(feat.FEATURE_NAMES):
        raise ConfigError("features.select_k", f"must lie in [1, {len(feat.FEATURE_NAMES)}]")

    models = [ModelSpec.profile("dnn", task=cv.task)]
    if "models" in raw:
        if not isinstance(raw["models"], list) or not raw["models"]:
            raise ConfigError("models", "expected a non-empty array of tables")
        models = [_model_spec(entry, f"models[{i}]", cv.task) for i, entry in enumerate(raw["models"])]
        names = [m.name for m in models]
        if len(set(names)) != len(names):
            raise ConfigError("models", f"model names must be unique, got {names}")

    export_raw = dict(raw.get("export", {})) if isinstance(raw.get("export", {}), dict) else raw["export"]
    export = ExportConfig(**_take(export_raw, "export", {
        "output_dir": str, "graphml": bool, "dot": bool, "feature_csv": bool, "boxplot_json": bool,
        "report_json": bool,
    }))
    if not Path(export.output_dir).is_absolute():
        export = ExportConfig(**{**asdict(export), "output_dir": str(base_dir / export.output_dir)})

    workers = _take(raw.get("run", {}), "run", {"workers": int}).get("workers", 1)
    if workers < 1:
        raise ConfigError("run.workers", "must be >= 1")

    return PipelineConfig(cv, manifest, synthetic, env, window, kind, select_k, models, export, workers)


def _model_spec(entry, where: str, task: str) -> ModelSpec:
    if not isinstance(entry, dict):
        raise ConfigError(where, "must be a table")
    entry = dict(entry)
    profile = entry.pop("profile", "dnn")
    if "task" in entry:
        raise ConfigError(f"{where}.task", "set the task once under cv.task")
    if "hidden" in entry:
        entry["hidden"] = tuple(entry["hidden"])
    known = set(ModelSpec.__dataclass_fields__) - {"task", "kind"}
    for key in entry:
        if key not in known:
            raise ConfigError(f"{where}.{key}", "unknown key")
    try:
        return ModelSpec.profile(profile, task=task, **entry)
    except (BadSpec, TypeError) as exc:
        raise ConfigError(where, str(exc)) from exc


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from exc
    return parse_config(raw, path.parent)


# -- stages ----------------------------------------------------------------


def synthesize_dataset(spec: SyntheticInput) -> list[TimeSeries]:
    series = []
    for code in spec.classes:
        label = ClassLabel.parse(code)
        for i in range(spec.series_per_class):
            ts = sio.synthesize_emg(label, derive_seed(spec.seed, i), spec.sampling_rate, spec.duration)
            ts.source_id = f"synth-{label.value}-{i:04d}"
            series.append(ts)
    return series


def write_dataset(series: Sequence[TimeSeries], out_dir: Path, name: str = "manifest.csv") -> Path:
    """Write each series as ``<source_id>.txt`` plus a ``path,label,rate`` manifest."""
    entries = []
    for ts in series:
        path = sio.write_series(ts, out_dir / f"{ts.source_id}.txt")
        entries.append(sio.ManifestEntry(path, ts.label, ts.sampling_rate))
    return sio.write_manifest(sio.DatasetManifest(entries), out_dir / name)


def load_dataset(manifest: Path) -> list[TimeSeries]:
    return sio.load_manifest(manifest).load()


def extract_windows(series: Sequence[TimeSeries], config: PipelineConfig) -> list[Window]:
    """Envelope every series and cut peak-centred windows out of it."""
    out: list[Window] = []
    taken: dict = {}
    cap = config.window.max_per_class
    for ts in series:
        env = linear_envelope(ts, config.envelope)
        for w in detect_windows(env, config.window.length, config.window.threshold, config.window.quantile):
            if cap and taken.get(w.label, 0) >= cap:
                break
            taken[w.label] = taken.get(w.label, 0) + 1
            out.append(w)
    return out


def write_windows(windows: Sequence[Window], out_dir: Path, sampling_rate: dict) -> Path:
    series = [
        TimeSeries(w.samples, sampling_rate[w.source_id], f"{w.source_id}_{w.start_index:07d}", w.label)
        for w in windows
    ]
    return write_dataset(series, out_dir, "windows.csv")


def _window_job(args):
    samples, kind, seed = args
    g = build_graph(samples, kind)
    return g, gm.metric_report(g, seed), feat.extract_features(g).values


def graph_stage(samples: Sequence[np.ndarray], kind: str, seed: int, workers: int = 1) -> list:
    """``(graph, MetricReport, feature values)`` per window, in input order."""
    jobs = [(np.asarray(s, dtype=np.float64), kind, seed) for s in samples]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_window_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_window_job(j) for j in jobs]


def feature_matrix(results: Sequence, labels: Sequence[ClassLabel], row_ids: Sequence[str]) -> FeatureMatrix:
    vectors = [feat.FeatureVector(values, label) for (_, _, values), label in zip(results, labels)]
    return feat.build_matrix(vectors, row_ids)


def selection_summary(matrix: FeatureMatrix, k: int) -> dict:
    idx = feat.select_features(matrix, k)
    return {"k": k, "indices": idx, "names": [matrix.feature_names[i] for i in idx]}


def run_models(matrix: FeatureMatrix, models: Sequence[ModelSpec], cv: CVConfig, workers: int = 1) -> dict:
    reports = [
        cross_validate(matrix.values, matrix.labels, spec, cv.k, cv.repetitions, cv.seed, workers).to_dict()
        for spec in models
    ]
    return {
        "task": cv.task,
        "k": cv.k,
        "repetitions": cv.repetitions,
        "seed": cv.seed,
        "feature_names": list(matrix.feature_names),
        "rows": int(matrix.values.shape[0]),
        "models": [{"spec": spec.to_dict(), "cv": rep} for spec, rep in zip(models, reports)],
    }


def _dump_json(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")
    return path


# -- report ----------------------------------------------------------------


@dataclass
class RunReport:
    counts: dict
    metric_summary: dict
    graphs: list
    anova: list
    selected_features: dict
    models: dict
    config: dict
    version: str = __version__
    timing: dict = field(default_factory=dict)

    def to_dict(self, with_timing: bool = True) -> dict:
        d = asdict(self)
        if not with_timing:
            d.pop("timing")
        return d

    def model_metrics(self) -> dict:
        return {m["spec"]["name"]: m["cv"]["mean"] for m in self.models["models"]}


def _summaries(reports: Sequence[gm.MetricReport], labels: Sequence[ClassLabel]) -> dict:
    out = {}
    for lab in ClassLabel:
        rows = [r.to_dict() for r, l in zip(reports, labels) if l == lab]
        if not rows:
            continue
        keys = list(rows[0])
        arr = np.array([[row[k] for k in keys] for row in rows], dtype=np.float64)
        out[lab.value] = {
            k: {"mean": float(arr[:, j].mean()), "median": float(np.median(arr[:, j])),
                "min": float(arr[:, j].min()), "max": float(arr[:, j].max())}
            for j, k in enumerate(keys)
        }
    return out


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Run every stage in order, write the enabled exports, return the report."""
    out = config.output_dir
    timing: dict = {}
    clock = time.perf_counter()

    def lap(stage):
        nonlocal clock
        now = time.perf_counter()
        timing[stage] = now - clock
        clock = now

    if config.synthetic is not None:
        series = synthesize_dataset(config.synthetic)
    else:
        series = load_dataset(config.manifest)
    lap("ingest")
    windows = extract_windows(series, config)
    if not windows:
        raise DataError("preprocess: no windows detected")
    lap("preprocess")
    results = graph_stage([w.samples for w in windows], config.graph_kind, config.cv.seed, config.workers)
    lap("graphs")
    labels = [w.label for w in windows]
    row_ids = [w.window_id for w in windows]
    matrix = feature_matrix(results, labels, row_ids)
    anova = feat.anova_table(matrix)
    selected = selection_summary(matrix, config.select_k)
    lap("features")
    models = run_models(matrix, config.models, config.cv, config.workers)
    lap("cross_validation")

    if config.export.graphml or config.export.dot:
        for w, (g, _, _) in zip(windows, results):
            stem = f"{w.source_id}_{w.start_index:07d}"
            if config.export.graphml:
                sio.export_graph(g, out / "graphs" / f"{stem}.graphml", "graphml")
            if config.export.dot:
                sio.export_graph(g, out / "graphs" / f"{stem}.dot", "dot")
    if config.export.feature_csv:
        sio.write_feature_matrix(matrix, out / "features.csv")
    if config.export.boxplot_json:
        feat.write_boxplot_json(matrix, out / "boxplots.json")
    _dump_json(models, out / "cv_report.json")

    reports = [r for _, r, _ in results]
    report = RunReport(
        counts={"series": len(series), "windows": len(windows), "graphs": len(results),
                "feature_rows": int(matrix.values.shape[0])},
        metric_summary=_summaries(reports, labels),
        graphs=[{"window_id": rid, **r.to_dict()} for rid, r in zip(row_ids, reports)],
        anova=anova,
        selected_features=selected,
        models=models,
        config=config.to_dict(),
    )
    lap("export")
    report.timing = timing
    if config.export.report_json:
        _dump_json(report.to_dict(), out / "report.json")
    return report


# -- command line ----------------------------------------------------------


def _config_or_default(args) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        seed = getattr(args, "seed", None)
        if seed is None:
            raise ConfigError("cv.seed", "required: pass --config or --seed")
        cfg = parse_config({"cv": {"seed": seed}, "input": {"synthetic": {}}})
    return cfg


def _override(cfg: PipelineConfig, args) -> PipelineConfig:
    cv = asdict(cfg.cv)
    for key in ("seed", "k", "repetitions", "task"):
        value = getattr(args, key, None)
        if value is not None:
            cv[key] = value
    if cv["task"] not in TASKS:
        raise ConfigError("cv.task", f"choose from {sorted(TASKS)}")
    cfg.cv = CVConfig(**cv)
    if getattr(args, "model", None):
        cfg.models = [_model_spec({"profile": p}, "--model", cfg.cv.task) for p in args.model]
    else:
        cfg.models = [ModelSpec(**{**m.to_dict(), "task": cfg.cv.task}) for m in cfg.models]
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    return cfg


def cmd_synth(args) -> int:
    cfg = _config_or_default(args)
    spec = cfg.synthetic or SyntheticInput()
    if args.series_per_class is not None:
        spec = SyntheticInput(**{**asdict(spec), "series_per_class": args.series_per_class})
    if args.seed is not None and not args.config:
        spec = SyntheticInput(**{**asdict(spec), "seed": args.seed})
    path = write_dataset(synthesize_dataset(spec), Path(args.out))
    print(path)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _config_or_default(args)
    series = load_dataset(Path(args.manifest))
    windows = extract_windows(series, cfg)
    rates = {ts.source_id: ts.sampling_rate for ts in series}
    print(write_windows(windows, Path(args.out), rates))
    return EXIT_OK


def _window_inputs(path: Path) -> list[TimeSeries]:
    if path.suffix == ".csv" and path.read_text(encoding="utf-8").startswith("path,label,rate"):
        return load_dataset(path)
    return [sio.load_series(path, 1.0)]


def cmd_graph(args) -> int:
    cfg = _config_or_default(args) if (args.config or args.seed is not None) else None
    kind = args.kind or (cfg.graph_kind if cfg else "nvg")
    seed = cfg.cv.seed if cfg else 0
    out = Path(args.out)
    windows = _window_inputs(Path(args.input))
    results = graph_stage([w.samples for w in windows], kind, seed, args.workers or 1)
    reports = {}
    for ts, (g, rep, _) in zip(windows, results):
        ext = {"graphml": "graphml", "dot": "dot", "edge-csv": "csv"}[args.format]
        sio.export_graph(g, out / f"{ts.source_id}.{ext}", args.format)
        reports[ts.source_id] = rep.to_dict()
    target = _dump_json(reports if len(reports) > 1 else next(iter(reports.values())), out / "metrics.json")
    print(target)
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = _config_or_default(args)
    if args.kind:
        cfg.graph_kind = args.kind
    windows = load_dataset(Path(args.windows))
    results = graph_stage([w.samples for w in windows], cfg.graph_kind, cfg.cv.seed, args.workers or cfg.workers)
    matrix = feature_matrix(results, [w.label for w in windows], [w.source_id for w in windows])
    print(sio.write_feature_matrix(matrix, Path(args.out)))
    return EXIT_OK


def cmd_select(args) -> int:
    matrix = sio.read_feature_matrix(args.features)
    table = feat.anova_table(matrix)
    chosen = selection_summary(matrix, args.k)
    width = max(len(n) for n in matrix.feature_names)
    for row in table:
        print(f"{row['feature']:<{width}}  F={row['f']!r}")
    print("selected:", " ".join(str(i) for i in chosen["indices"]))
    if args.out:
        _dump_json({"anova": table, "selected_features": chosen}, Path(args.out))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _override(_config_or_default(args), args)
    matrix = sio.read_feature_matrix(args.features)
    out = Path(args.out)
    print(_dump_json(run_models(matrix, cfg.models, cfg.cv, cfg.workers), out / "cv_report.json"))
    if args.test:
        test = sio.read_feature_matrix(args.test)
        names = TASKS[cfg.cv.task]
        y = encode_labels(matrix.labels, cfg.cv.task)
        y_test = encode_labels(test.labels, cfg.cv.task)
        scaler = feat.Standardizer.fit(matrix.values)
        for spec in cfg.models:
            model = build_model(spec, cfg.cv.seed).fit(scaler.transform(matrix.values), y)
            pred = model.predict(scaler.transform(test.values))
            lines = ["true,pred"] + [f"{names[t]},{names[p]}" for t, p in zip(y_test, pred)]
            path = out / f"predictions_{spec.name}.csv"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(path)
    return EXIT_OK


def read_predictions(path) -> tuple[np.ndarray, np.ndarray, str]:
    """``true,pred`` CSV of class names; returns codes and the inferred task."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"predictions not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or [h.strip() for h in rows[0]] != ["true", "pred"]:
        raise SchemaMismatch(f"{path}: header must be true,pred")
    tokens = {t.strip() for r in rows[1:] for t in r}
    task = "two_class" if "P" in tokens else "three_class"
    names = TASKS[task]
    try:
        y_true = np.array([names.index(r[0].strip()) for r in rows[1:]], dtype=np.int64)
        y_pred = np.array([names.index(r[1].strip()) for r in rows[1:]], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise SchemaMismatch(f"{path}: labels must come from {names}") from exc
    return y_true, y_pred, task


def cmd_eval(args) -> int:
    y_true, y_pred, task = read_predictions(args.predictions)
    cm = confusion_matrix(y_true, y_pred, len(TASKS[task]))
    result = {"task": task, "confusion_matrix": cm.tolist(), **evaluate(cm).to_dict()}
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        _dump_json(result, Path(args.out))
    print(text)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _override(load_config(args.config), args)
    report = run_pipeline(cfg)
    for name, scores in report.model_metrics().items():
        print(f"{name}: " + " ".join(f"{k}={v:.4f}" for k, v in scores.items()))
    print(f"outputs in {cfg.output_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphts", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"graphts {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help="TOML pipeline config")
        if seed:
            sp.add_argument("--seed", type=int, help="cv.seed when no config is given")

    sp = sub.add_parser("synth", help="generate synthetic series and a manifest")
    common(sp)
    sp.add_argument("--series-per-class", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("preprocess", help="envelope + windowing of a manifest")
    common(sp)
    sp.add_argument("manifest")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("graph", help="visibility graph and metrics for windows")
    common(sp)
    sp.add_argument("input", help="window series file or windows manifest")
    sp.add_argument("--kind", choices=sorted(BUILDERS))
    sp.add_argument("--format", choices=sio.GRAPH_FORMATS, default="graphml")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("features", help="feature matrix CSV from a windows manifest")
    common(sp)
    sp.add_argument("windows")
    sp.add_argument("--kind", choices=sorted(BUILDERS))
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("select", help="ANOVA ranking of a feature CSV")
    sp.add_argument("features")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_select)

    for name, func, text in (("train", cmd_train, "cross-validate models on a feature CSV"),
                             ("pipeline", cmd_pipeline, "run every stage from a config")):
        sp = sub.add_parser(name, help=text)
        if name == "train":
            common(sp)
            sp.add_argument("features")
            sp.add_argument("--test", help="feature CSV to predict after fitting on all rows")
            sp.add_argument("--out", required=True)
        else:
            sp.add_argument("config")
            sp.add_argument("--seed", type=int)
        sp.add_argument("--model", action="append", choices=["dnn", "ann", "knn", "logreg"])
        sp.add_argument("--k", type=int)
        sp.add_argument("--repetitions", type=int)
        sp.add_argument("--task", choices=sorted(TASKS))
        sp.add_argument("--workers", type=int)
        sp.set_defaults(func=func)

    sp = sub.add_parser("eval", help="metrics of a true,pred CSV")
    sp.add_argument("predictions")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GraphTSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
