import re

import pytest

from negcheck import fixtures
from negcheck.dot import emit_dot, witness_marks
from negcheck.model import PreconditionError
from negcheck.patterns import det_soundness
from negcheck.plotting import layers, render_figure

EDGE = re.compile(r'^\s*"(\w+)" -> "(\w+)" \[(.*)\];$')


def edges(dot: str):
    return [m.groups() for m in map(EDGE.match, dot.splitlines()) if m]


def test_circuit_edges_are_highlighted():
    neg = fixtures.load("ANTI-C")
    witness = det_soundness(neg).witness
    dot = emit_dot(neg, [witness])
    hot = {(u, v) for u, v, attrs in edges(dot) if "highlight=true" in attrs}
    assert hot == {("n1", "n2"), ("n2", "n3"), ("n3", "n1")}


def test_hyper_arc_gives_two_dashed_edges():
    dot = emit_dot(fixtures.load("FIG1M"))
    from_n0 = [(v, attrs) for u, v, attrs in edges(dot) if u == "n0" and 'label="p1:a"' in attrs]
    assert sorted(v for v, _ in from_n0) == ["n2", "n3"]
    assert all("style=dashed" in attrs for _, attrs in from_n0)


def test_plain_export_has_every_edge_and_no_highlight():
    dot = emit_dot(fixtures.load("FIG1L"))
    assert len(edges(dot)) == 10
    assert "highlight" not in dot
    assert dot.startswith('digraph "FIG1L"')


def test_unknown_witness_marks_nothing():
    marks = witness_marks(fixtures.load("FIG1L"), object())
    assert not marks.nodes and not marks.edges


@pytest.mark.parametrize("name", ["FIG1L", "FIG1M", "ANTI-C"])
def test_layers_keep_bars_apart(name):
    neg = fixtures.load(name)
    row = layers(neg)
    lane = {p: i for i, p in enumerate(neg.processes)}
    placed = {}
    for n in neg.nodes:
        span = (min(lane[p] for p in neg.dom[n]), max(lane[p] for p in neg.dom[n]))
        for lo, hi in placed.get(row[n], []):
            assert span[1] < lo or hi < span[0]
        placed.setdefault(row[n], []).append(span)
    assert row[neg.fin] == max(row.values())


@pytest.mark.parametrize("suffix", [".png", ".svg"])
def test_figure_is_written(tmp_path, suffix):
    neg = fixtures.load("ANTI-F")
    out = render_figure(neg, tmp_path / f"anti{suffix}", det_soundness(neg).witness)
    assert out.exists() and out.stat().st_size > 1000


def test_figure_format_is_checked(tmp_path):
    with pytest.raises(PreconditionError):
        render_figure(fixtures.load("FIG1L"), tmp_path / "x.gif")
