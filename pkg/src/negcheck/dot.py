"""Graphviz export of the graph of a negotiation, with witnesses drawn on top."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .graph import Edge, graph_of
from .model import Negotiation, Run
from .oracle import SpecWitness
from .patterns import Fork, PatternB, PatternC, PatternF

HIGHLIGHT = "crimson"


@dataclass
class Marks:
    """Nodes and edges a witness points at."""
    nodes: set[str] = field(default_factory=set)
    edges: set[Edge] = field(default_factory=set)

    def update(self, other: "Marks") -> None:
        self.nodes |= other.nodes
        self.edges |= other.edges


def _run_marks(neg: Negotiation, run: Run) -> Marks:
    marks = Marks()
    for n, a in run.steps:
        marks.nodes.add(n)
        for p in neg.dom[n]:
            for t in neg.delta[(n, a, p)]:
                marks.edges.add(Edge(n, p, a, t))
    return marks


def _fork_marks(neg: Negotiation, fork: Fork) -> Marks:
    n, a = fork.branch
    marks = Marks({n, fork.n1, fork.n2} | set(fork.nodes1) | set(fork.nodes2),
                  set(fork.path1) | set(fork.path2))
    marks.edges.add(Edge(n, fork.p1, a, fork.start1))
    marks.edges.add(Edge(n, fork.p2, a, fork.start2))
    return marks


def witness_marks(neg: Negotiation, witness: object) -> Marks:
    """What to highlight for any witness the analyses produce; unknown kinds mark nothing."""
    # local imports keep this module usable from the analyses that import it
    from .data import RaceVerdict, SharedPath
    from .weak import ConflictCounterexample, DetPartUnsound, OneProcCounterexample

    if witness is None:
        return Marks()
    if isinstance(witness, Marks):
        return witness
    if isinstance(witness, Run):
        return _run_marks(neg, witness)
    if isinstance(witness, Fork):
        return _fork_marks(neg, witness)
    if isinstance(witness, PatternF):
        return _fork_marks(neg, witness.fork)
    if isinstance(witness, PatternB):
        marks = Marks({witness.node}, set(witness.path))
        marks.nodes |= {e.src for e in witness.path}
        return marks
    if isinstance(witness, PatternC):
        return Marks(set(witness.nodes), set(witness.circuit))
    if isinstance(witness, DetPartUnsound):
        return witness_marks(neg, witness.witness)
    if isinstance(witness, (OneProcCounterexample, ConflictCounterexample)):
        marks = _run_marks(neg, witness.run)
        marks.nodes &= set(neg.nodes)
        marks.edges = {e for e in marks.edges if e.dst in neg.node_index}
        marks.nodes |= {witness.m, witness.n}
        if isinstance(witness, ConflictCounterexample):
            marks.nodes.add(witness.n1)
        return marks
    if isinstance(witness, SharedPath):
        return Marks({witness.first, witness.second}, set(witness.path))
    if isinstance(witness, RaceVerdict):
        marks = witness_marks(neg, witness.fork)
        marks.nodes |= {witness.m, witness.n} if witness.race else set()
        return marks
    if isinstance(witness, SpecWitness):
        return _run_marks(neg, witness.run)
    return Marks()


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(neg: Negotiation, overlays: Iterable[object] = ()) -> str:
    """DOT text for the graph of ``neg``; one edge per hyper-arc target.

    Highlighted nodes and edges carry ``highlight=true`` and a colour.
    """
    marks = Marks()
    for overlay in overlays:
        marks.update(witness_marks(neg, overlay))
    lines = [f"digraph {_quote(neg.name)} {{", "  rankdir=TB;", "  node [shape=box, fontname=Helvetica];",
             "  edge [fontname=Helvetica, fontsize=10];"]
    for n in neg.nodes:
        # identifiers never need escaping, and \n is the DOT line break
        attrs = [f'label="{n}\\n{{{",".join(neg.dom[n])}}}"']
        if n == neg.init:
            attrs.append("style=bold")
        if n == neg.fin:
            attrs.append("peripheries=2")
        if n in marks.nodes:
            attrs += [f"color={HIGHLIGHT}", "highlight=true"]
        lines.append(f"  {_quote(n)} [{', '.join(attrs)}];")
    for e in graph_of(neg).edges:
        attrs = [f"label={_quote(f'{e.proc}:{e.result}')}"]
        if len(neg.delta[(e.src, e.result, e.proc)]) > 1:
            attrs.append("style=dashed")
        if e in marks.edges:
            attrs += [f"color={HIGHLIGHT}", "penwidth=2", "highlight=true"]
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
