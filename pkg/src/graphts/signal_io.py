"""Reading and writing series, manifests, graphs and feature matrices, plus
a synthetic EMG generator.

File formats
------------
series
    UTF-8 text with one value per line, or a CSV ``time,value`` with a
    header row.  Only the value column is used; samples are assumed to be
    uniformly spaced.
manifest
    CSV with header ``path,label,rate``.  Labels are ``H``, ``M`` or ``N``;
    relative paths resolve against the manifest's directory.
graph
    GraphML (each node has a ``t`` attribute holding its time index),
    Graphviz DOT, or an edge CSV with header ``u,v``.  Every undirected edge
    is written once, smaller endpoint first.
feature matrix
    CSV whose header is the feature names followed by ``label``.  Values are
    written with ``repr`` so a read returns identical doubles.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import (
    DuplicatePath,
    EmptyInput,
    InvalidParams,
    IoError,
    MissingFile,
    NonFiniteValue,
    ParseError,
    SchemaMismatch,
)
from .rng import SplitMix64, derive_seed
from .types import FEATURE_NAMES, ClassLabel, FeatureMatrix, TimeSeries
from .visibility import Graph

PathLike = Union[str, Path]


def _parse_float(token: str, path, row: int, column: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(str(path), row, column, token) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"{path}: non-finite value {token!r} at row {row}, column {column}")
    return value


def load_series(
    path: PathLike, sampling_rate: float, label: Optional[ClassLabel] = None, source_id: Optional[str] = None
) -> TimeSeries:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"series file not found: {path}")
    text = path.read_text(encoding="utf-8")
    rows = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines()) if line.strip()]
    values: list[float] = []
    if rows and "," in rows[0][1]:
        reader = csv.reader(line for _, line in rows)
        header = next(reader)
        try:
            [float(h) for h in header]
            is_header = False
        except ValueError:
            is_header = True
        column = 1
        if is_header:
            names = [h.strip().lower() for h in header]
            column = names.index("value") if "value" in names else len(names) - 1
        else:
            values.append(_parse_float(header[column].strip(), path, rows[0][0], column + 1))
        for (lineno, _), record in zip(rows[1:], reader):
            if len(record) <= column:
                raise ParseError(str(path), lineno, column + 1, ",".join(record))
            values.append(_parse_float(record[column].strip(), path, lineno, column + 1))
    else:
        values = [_parse_float(line, path, lineno, 1) for lineno, line in rows]
    if not values:
        raise EmptyInput(f"{path}: no samples")
    return TimeSeries(np.array(values), sampling_rate, source_id or path.stem, label)


def write_series(ts: TimeSeries, path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{v!r}\n" for v in ts.samples.tolist()), encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path


@dataclass
class ManifestEntry:
    path: Path
    label: ClassLabel
    sampling_rate: float


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def load(self) -> list[TimeSeries]:
        return [load_series(e.path, e.sampling_rate, e.label) for e in self.entries]


def load_manifest(path: PathLike) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in reader.fieldnames or []]
        if fields[:3] != ["path", "label", "rate"]:
            raise SchemaMismatch(f"{path}: manifest header must be path,label,rate, got {fields}")
        entries = []
        seen: set[Path] = set()
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): (v or "").strip() for k, v in row.items() if k}
            p = Path(row["path"])
            if not p.is_absolute():
                p = path.parent / p
            if p in seen:
                raise DuplicatePath(f"{path}: duplicate path {row['path']!r} at row {lineno}")
            seen.add(p)
            rate = _parse_float(row["rate"], path, lineno, 3)
            entries.append(ManifestEntry(p, ClassLabel.parse(row["label"]), rate))
    return DatasetManifest(entries)


def write_manifest(manifest: DatasetManifest, path: PathLike) -> Path:
    path = Path(path)
    lines = ["path,label,rate"]
    for e in manifest.entries:
        p = e.path
        try:
            p = p.relative_to(path.parent)
        except ValueError:
            pass
        lines.append(f"{p.as_posix()},{e.label.value},{e.sampling_rate!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# -- synthetic EMG ---------------------------------------------------------


@dataclass(frozen=True)
class BurstRegime:
    """Class-specific ranges for motor unit action potential bursts.

    ``amplitude`` is the burst peak (unitless), ``duration_ms`` the burst
    length and ``pulse_ms`` the width of one biphasic wavelet in the train.
    """

    amplitude: tuple[float, float]
    duration_ms: tuple[float, float]
    pulse_ms: tuple[float, float]


# Burst lengths straddle the envelope's smoothing scale: myopathy bursts are
# shorter than the window, neuropathy bursts longer.
DEFAULT_REGIMES = {
    ClassLabel.HEALTHY: BurstRegime((1.0, 2.0), (55.0, 75.0), (1.5, 2.5)),
    ClassLabel.MYOPATHY: BurstRegime((0.3, 0.8), (20.0, 35.0), (1.0, 1.5)),
    ClassLabel.NEUROPATHY: BurstRegime((2.5, 5.0), (100.0, 150.0), (2.0, 3.0)),
}


@dataclass(frozen=True)
class SynthParams:
    burst_rate_hz: float = 5.0
    noise_std: float = 0.01
    quiet_ms: float = 100.0
    regimes: dict = field(default_factory=lambda: dict(DEFAULT_REGIMES))

    def validate(self) -> None:
        if not self.burst_rate_hz > 0:
            raise InvalidParams("burst_rate_hz must be positive")
        if self.noise_std < 0:
            raise InvalidParams("noise_std must be non-negative")
        if self.quiet_ms < 0:
            raise InvalidParams("quiet_ms must be non-negative")
        for label, r in self.regimes.items():
            for name in ("amplitude", "duration_ms", "pulse_ms"):
                lo, hi = getattr(r, name)
                if not 0 < lo <= hi:
                    raise InvalidParams(f"{label.name}: {name} band must be positive and ordered")


def muap(length: int, pulses: int) -> np.ndarray:
    """Train of ``pulses`` biphasic wavelets (one sine cycle each) under a Hann taper, peak 1."""
    t = (np.arange(length) + 0.5) / length
    w = np.sin(2.0 * np.pi * pulses * t) * np.sin(np.pi * t) ** 2
    return w / np.max(np.abs(w))


def synthesize_emg(
    label: ClassLabel,
    seed: int,
    sampling_rate: float = 4000.0,
    duration: float = 1.0,
    params: Optional[SynthParams] = None,
) -> TimeSeries:
    """Deterministic EMG-like series for one class.

    Bursts are separated by exponential waiting times (rate
    ``burst_rate_hz``) on top of a dead time of ``quiet_ms``, which also
    keeps every burst that far from both ends of the series.  A burst
    draws its peak amplitude, length and wavelet width uniformly from the
    class regime and gets a random polarity; when nothing fits, one burst
    is centred in the series.  Gaussian baseline noise is added
    everywhere.  Myopathy bursts are small and short, neuropathy bursts
    large and long, healthy ones in between.  The output is a pure
    function of ``(label, seed, sampling_rate, duration, params)``.
    """
    params = params or SynthParams()
    params.validate()
    if not duration > 0:
        raise InvalidParams("duration must be positive")
    if not sampling_rate > 0:
        raise InvalidParams("sampling_rate must be positive")
    regime = params.regimes[label]
    rng = SplitMix64(derive_seed(seed, label.index))
    n = int(round(duration * sampling_rate))
    x = params.noise_std * rng.normal(n)
    quiet = params.quiet_ms / 1000.0
    bursts = []
    t = quiet + rng.exponential(1.0 / params.burst_rate_hz)
    while True:
        amp = rng.uniform(*regime.amplitude)
        length_s = rng.uniform(*regime.duration_ms) / 1000.0
        pulse_s = rng.uniform(*regime.pulse_ms) / 1000.0
        sign = 1.0 if rng.random(1)[0] < 0.5 else -1.0
        burst = (amp, length_s, pulse_s, sign)
        if t + length_s > duration - quiet:
            break
        bursts.append((t, burst))
        t += length_s + quiet + rng.exponential(1.0 / params.burst_rate_hz)
    if not bursts:
        bursts.append((max(0.0, (duration - burst[1]) / 2.0), burst))
    for onset, (amp, length_s, pulse_s, sign) in bursts:
        length = max(2, int(round(length_s * sampling_rate)))
        pulses = max(1, int(round(length_s / pulse_s)))
        start = int(onset * sampling_rate)
        stop = min(n, start + length)
        x[start:stop] += sign * amp * muap(length, pulses)[: stop - start]
    return TimeSeries(x, sampling_rate, f"synth-{label.value}-{seed}", label)


# -- graph export ----------------------------------------------------------

GRAPH_FORMATS = ("graphml", "dot", "edge-csv")


def _graphml(g: Graph) -> str:
    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write('<graphml xmlns="http://graphml.graphdrawing.org/xmlns">\n')
    out.write('  <key id="t" for="node" attr.name="t" attr.type="int"/>\n')
    out.write('  <graph id="G" edgedefault="undirected">\n')
    for i in range(g.node_count):
        out.write(f'    <node id="n{i}"><data key="t">{i}</data></node>\n')
    for k, (u, v) in enumerate(g.edges()):
        out.write(f'    <edge id="e{k}" source="n{u}" target="n{v}"/>\n')
    out.write("  </graph>\n</graphml>\n")
    return out.getvalue()


def _dot(g: Graph) -> str:
    lines = ["graph G {"]
    lines += [f"  {i};" for i in range(g.node_count)]
    lines += [f"  {u} -- {v};" for u, v in g.edges()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def _edge_csv(g: Graph) -> str:
    return "u,v\n" + "".join(f"{u},{v}\n" for u, v in g.edges())


def export_graph(g: Graph, path: PathLike, format: str = "graphml") -> Path:
    writers = {"graphml": _graphml, "dot": _dot, "edge-csv": _edge_csv}
    if format not in writers:
        raise ValueError(f"unknown graph format {format!r}; choose from {GRAPH_FORMATS}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(writers[format](g), encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path


def read_edge_csv(path: PathLike, node_count: Optional[int] = None) -> Graph:
    rows = Path(path).read_text(encoding="utf-8").split("\n")[1:]
    edges = [tuple(int(t) for t in r.split(",")) for r in rows if r.strip()]
    n = node_count if node_count is not None else (max(max(e) for e in edges) + 1 if edges else 0)
    return Graph.from_edges(n, edges)


# -- feature matrices ------------------------------------------------------


def write_feature_matrix(m: FeatureMatrix, path: PathLike) -> Path:
    path = Path(path)
    lines = [",".join(m.feature_names + ("label",))]
    for row, label in zip(m.values.tolist(), m.labels):
        lines.append(",".join(repr(v) for v in row) + f",{label.value}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return path


def read_feature_matrix(path: PathLike) -> FeatureMatrix:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"feature matrix not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise SchemaMismatch(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[-1] != "label":
        raise SchemaMismatch(f"{path}: last column must be 'label', got {header}")
    names = tuple(header[:-1])
    unknown = [n for n in names if n not in FEATURE_NAMES]
    if unknown or len(set(names)) != len(names):
        raise SchemaMismatch(f"{path}: unexpected feature columns {unknown or names}")
    values, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaMismatch(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        values.append([_parse_float(tok, path, lineno, j + 1) for j, tok in enumerate(row[:-1])])
        labels.append(ClassLabel.parse(row[-1]))
    arr = np.array(values, dtype=np.float64).reshape(len(values), len(names))
    return FeatureMatrix(arr, labels, names)
