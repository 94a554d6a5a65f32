import xml.etree.ElementTree as ET

import numpy as np
import pytest

from graphts import signal_io as sio
from graphts.errors import (DuplicatePath, EmptyInput, InvalidParams, MissingFile, NonFiniteValue, ParseError,
                            SchemaMismatch, UnknownLabel)
from graphts.features import build_matrix, extract_features
from graphts.preprocess import linear_envelope
from graphts.types import ClassLabel, TimeSeries
from graphts.visibility import nvg_fast

H, M, N = ClassLabel.HEALTHY, ClassLabel.MYOPATHY, ClassLabel.NEUROPATHY


def test_load_plain_column(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("1.5\n\n-2\n3e-1\n")
    ts = sio.load_series(p, 1000.0, H)
    assert ts.samples.tolist() == [1.5, -2.0, 0.3]
    assert ts.source_id == "a" and ts.label is H and ts.sampling_rate == 1000.0


def test_load_csv_with_header(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("time,value\n0,1.0\n1,2.0\n")
    assert sio.load_series(p, 2.0).samples.tolist() == [1.0, 2.0]
    q = tmp_path / "c.csv"
    q.write_text("0,4.0\n1,5.0\n")
    assert sio.load_series(q, 2.0).samples.tolist() == [4.0, 5.0]


def test_load_errors(tmp_path):
    with pytest.raises(MissingFile):
        sio.load_series(tmp_path / "nope.txt", 1.0)
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0\nabc\n")
    with pytest.raises(ParseError) as info:
        sio.load_series(bad, 1.0)
    assert info.value.row == 2 and info.value.token == "abc"
    empty = tmp_path / "empty.txt"
    empty.write_text("\n")
    with pytest.raises(EmptyInput):
        sio.load_series(empty, 1.0)
    nan = tmp_path / "nan.txt"
    nan.write_text("1\nnan\n")
    with pytest.raises(NonFiniteValue):
        sio.load_series(nan, 1.0)


def test_series_round_trip(tmp_path, rng):
    ts = TimeSeries(rng.standard_normal(50), 250.0, "x")
    back = sio.load_series(sio.write_series(ts, tmp_path / "x.txt"), 250.0)
    assert np.array_equal(back.samples, ts.samples)


def test_manifest(tmp_path):
    for name in ("a.txt", "b.txt"):
        (tmp_path / name).write_text("1\n2\n3\n")
    man = tmp_path / "m.csv"
    man.write_text("path,label,rate\na.txt,H,100\nb.txt,neuropathy,200\n")
    m = sio.load_manifest(man)
    assert [e.label for e in m.entries] == [H, N]
    assert [e.sampling_rate for e in m.entries] == [100.0, 200.0]
    series = m.load()
    assert [s.source_id for s in series] == ["a", "b"]
    again = sio.load_manifest(sio.write_manifest(m, tmp_path / "copy.csv"))
    assert again.entries == m.entries


def test_manifest_errors(tmp_path):
    with pytest.raises(MissingFile):
        sio.load_manifest(tmp_path / "none.csv")
    p = tmp_path / "m.csv"
    p.write_text("file,class,fs\na.txt,H,1\n")
    with pytest.raises(SchemaMismatch):
        sio.load_manifest(p)
    p.write_text("path,label,rate\na.txt,X,1\n")
    with pytest.raises(UnknownLabel):
        sio.load_manifest(p)
    p.write_text("path,label,rate\na.txt,H,1\na.txt,M,1\n")
    with pytest.raises(DuplicatePath):
        sio.load_manifest(p)


def test_label_parse():
    assert ClassLabel.parse("m") is M
    assert ClassLabel.parse(" Healthy ") is H
    assert [lab.index for lab in (H, M, N)] == [0, 1, 2]
    with pytest.raises(UnknownLabel):
        ClassLabel.parse("Q")


def test_synthesis_is_deterministic():
    a = sio.synthesize_emg(M, 7)
    b = sio.synthesize_emg(M, 7)
    assert np.array_equal(a.samples, b.samples)
    assert a.source_id == "synth-M-7" and a.label is M and len(a) == 4000
    assert not np.array_equal(a.samples, sio.synthesize_emg(M, 8).samples)
    assert not np.array_equal(a.samples, sio.synthesize_emg(H, 7).samples)


def _burst_width_ms(ts):
    env = linear_envelope(ts).samples
    on = np.concatenate([[0], (env > 0.2 * env.max()).astype(int), [0]])
    d = np.diff(on)
    return np.median(np.flatnonzero(d == -1) - np.flatnonzero(d == 1)) / ts.sampling_rate * 1000


def test_class_regimes_are_ordered():
    # neuropathy bursts are largest and longest, myopathy smallest and shortest
    for seed in range(20):
        s = {lab: sio.synthesize_emg(lab, seed) for lab in (H, M, N)}
        amp = {lab: np.abs(t.samples).max() for lab, t in s.items()}
        width = {lab: _burst_width_ms(t) for lab, t in s.items()}
        assert amp[N] > amp[H] > amp[M]
        assert width[N] > width[H] > width[M]


def test_synthesis_params():
    quiet = sio.synthesize_emg(H, 1, duration=0.5, params=sio.SynthParams(noise_std=0.0))
    assert len(quiet) == 2000
    # bursts stay clear of the series ends
    assert np.all(quiet.samples[:100] == 0.0)
    with pytest.raises(InvalidParams):
        sio.synthesize_emg(H, 1, params=sio.SynthParams(noise_std=-1.0))
    w = sio.muap(64, 3)
    assert np.max(np.abs(w)) == pytest.approx(1.0)


def test_graph_exports(tmp_path):
    g = nvg_fast([3.0, 1.0, 2.0, 0.5])
    root = ET.parse(sio.export_graph(g, tmp_path / "g.graphml")).getroot()
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    assert len(root.findall(".//g:node", ns)) == 4
    edges = {(e.get("source"), e.get("target")) for e in root.findall(".//g:edge", ns)}
    assert edges == {(f"n{u}", f"n{v}") for u, v in g.edge_set()}
    dot = sio.export_graph(g, tmp_path / "g.dot", "dot").read_text()
    assert dot.startswith("graph G {") and dot.count("--") == g.edge_count
    back = sio.read_edge_csv(sio.export_graph(g, tmp_path / "g.csv", "edge-csv"), 4)
    assert back == g
    with pytest.raises(ValueError):
        sio.export_graph(g, tmp_path / "g.x", "gexf")


def test_feature_matrix_round_trip(tmp_path, rng):
    vecs = [extract_features(nvg_fast(rng.standard_normal(40)), lab) for lab in (H, M, N, H)]
    m = build_matrix(vecs)
    back = sio.read_feature_matrix(sio.write_feature_matrix(m, tmp_path / "f.csv"))
    assert back.feature_names == m.feature_names
    assert back.labels == m.labels
    assert np.array_equal(back.values, m.values)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaMismatch):
        sio.read_feature_matrix(bad)


def test_small_exports(tmp_path, rng):
    assert sio.load_series(_write(tmp_path / "s.txt", "0.0\n1.5\n-2.0"), 4000.0).samples.tolist() == [0.0, 1.5, -2.0]
    csv_path = _write(tmp_path / "s.csv", "time,value\n0,0.1\n0.00025,0.2\n")
    assert sio.load_series(csv_path, 4000.0).samples.tolist() == [0.1, 0.2]
    p3 = nvg_fast([1.0, 2.0, 3.0])
    text = sio.export_graph(p3, tmp_path / "p3.csv", "edge-csv").read_text().splitlines()
    assert text[1:] == ["0,1", "1,2"]
    tri = nvg_fast([3.0, 1.0, 2.0])
    xml = sio.export_graph(tri, tmp_path / "k3.graphml").read_text()
    assert xml.count("<node ") == 3 and xml.count("<edge ") == 3
    for i in range(100):
        g = nvg_fast(rng.standard_normal(int(rng.integers(2, 60))).cumsum())
        back = sio.read_edge_csv(sio.export_graph(g, tmp_path / "r.csv", "edge-csv"), g.node_count)
        assert back.edge_count == g.edge_count


def test_matrix_file_has_header_plus_rows(tmp_path):
    vecs = [extract_features(nvg_fast([3.0, 1.0, 2.0, 4.0]), lab) for lab in (H, M, N)]
    path = sio.write_feature_matrix(build_matrix(vecs), tmp_path / "m.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 4 and lines[0].endswith(",label")


def test_manifest_three_rows(tmp_path):
    for name in "abc":
        _write(tmp_path / f"{name}.txt", "1\n")
    man = _write(tmp_path / "m.csv", "path,label,rate\na.txt,H,4000\nb.txt,M,4000\nc.txt,N,4000\n")
    assert len(sio.load_manifest(man)) == 3


def _write(path, text):
    path.write_text(text)
    return path
