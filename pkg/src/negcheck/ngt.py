"""Reader and writer for the NGT text format.

    negotiation <name>
    processes <p>...
    init <node> ; fin <node>
    node <id> { <p>... }
    out <id> : <r>...
    arc <id> <r> <p> -> <id> [<id>...]
    label <id> <r> : <op> <var> [<op> <var>]...

``#`` starts a comment and ``;`` separates statements on one line.
A label on the final node under a result it does not declare names the
virtual final result used by data specifications.
"""
from __future__ import annotations

import re
from pathlib import Path

from .data import OPERATIONS, DataNegotiation
from .model import Negotiation, NegotiationError, validate

_TOKEN = re.compile(r"\s*(->|[{}:]|[A-Za-z0-9_]+)")
_IDENT = re.compile(r"[A-Za-z0-9_]+\Z")


class NgtSyntaxError(NegotiationError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _tokenize(text: str, lineno: int) -> list[str]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            bad = text[pos:].strip()[:1]
            raise NgtSyntaxError(f"unexpected character {bad!r}", lineno)
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _ident(tok: str, what: str, lineno: int) -> str:
    if not _IDENT.match(tok):
        raise NgtSyntaxError(f"expected {what}, found {tok!r}", lineno)
    return tok


def parse_ngt(text: str) -> Negotiation | DataNegotiation:
    name = "negotiation"
    processes: list[str] | None = None
    nodes: list[str] = []
    dom: dict[str, list[str]] = {}
    out: dict[str, list[str]] = {}
    delta: dict[tuple[str, str, str], list[str]] = {}
    labels: dict[tuple[str, str], list[tuple[str, str]]] = {}
    label_lines: dict[tuple[str, str], int] = {}
    variables: list[str] = []
    ends: dict[str, str] = {}
    saw_data = False

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        for stmt in line.split(";"):
            toks = _tokenize(stmt, lineno)
            if not toks:
                continue
            kw, args = toks[0], toks[1:]
            if kw == "negotiation":
                if len(args) != 1:
                    raise NgtSyntaxError("negotiation takes one name", lineno)
                name = _ident(args[0], "name", lineno)
            elif kw == "processes":
                if processes is not None:
                    raise NgtSyntaxError("duplicate processes declaration", lineno)
                processes = [_ident(t, "process", lineno) for t in args]
                if len(set(processes)) != len(processes):
                    raise NgtSyntaxError("duplicate process", lineno)
            elif kw in ("init", "fin"):
                if len(args) != 1:
                    raise NgtSyntaxError(f"{kw} takes one node", lineno)
                if kw in ends:
                    raise NgtSyntaxError(f"duplicate {kw} declaration", lineno)
                ends[kw] = _ident(args[0], "node", lineno)
            elif kw == "node":
                if len(args) < 3 or args[1] != "{" or args[-1] != "}":
                    raise NgtSyntaxError("expected: node <id> { <process>... }", lineno)
                n = _ident(args[0], "node", lineno)
                if n in dom:
                    raise NgtSyntaxError(f"duplicate node {n}", lineno)
                nodes.append(n)
                dom[n] = [_ident(t, "process", lineno) for t in args[2:-1]]
            elif kw == "out":
                if len(args) < 2 or args[1] != ":":
                    raise NgtSyntaxError("expected: out <id> : <result>...", lineno)
                n = _ident(args[0], "node", lineno)
                if n in out:
                    raise NgtSyntaxError(f"duplicate out declaration for {n}", lineno)
                out[n] = [_ident(t, "result", lineno) for t in args[2:]]
            elif kw == "arc":
                if len(args) < 5 or args[3] != "->":
                    raise NgtSyntaxError("expected: arc <id> <result> <process> -> <id>...", lineno)
                key = tuple(_ident(t, "identifier", lineno) for t in args[:3])
                if key in delta:
                    raise NgtSyntaxError(f"duplicate arc for ({','.join(key)})", lineno)
                delta[key] = [_ident(t, "node", lineno) for t in args[4:]]
            elif kw == "label":
                if len(args) < 5 or args[2] != ":" or (len(args) - 3) % 2:
                    raise NgtSyntaxError("expected: label <id> <result> : <op> <var>...", lineno)
                key = (_ident(args[0], "node", lineno), _ident(args[1], "result", lineno))
                if key in labels:
                    raise NgtSyntaxError(f"duplicate label for ({key[0]},{key[1]})", lineno)
                ops = []
                for op, var in zip(args[3::2], args[4::2]):
                    if op not in OPERATIONS:
                        raise NgtSyntaxError(f"unknown operation {op!r}", lineno)
                    ops.append((op, _ident(var, "variable", lineno)))
                    if var not in variables:
                        variables.append(var)
                labels[key] = ops
                label_lines[key] = lineno
                saw_data = True
            elif kw == "variables":
                for var in args:
                    if _ident(var, "variable", lineno) not in variables:
                        variables.append(var)
                saw_data = True
            else:
                raise NgtSyntaxError(f"unknown statement {kw!r}", lineno)

    neg = validate({
        "name": name,
        "processes": processes or [],
        "nodes": nodes,
        "dom": dom,
        "out": out,
        "delta": delta,
        "init": ends.get("init"),
        "fin": ends.get("fin"),
    })
    if not saw_data:
        return neg

    final_result = "end"
    virtual = [key for key in labels if key[0] == neg.fin and key[1] not in neg.out[neg.fin]]
    if virtual:
        if neg.out[neg.fin]:
            key = virtual[0]
            raise NgtSyntaxError(f"unknown result {key[1]} of {key[0]}", label_lines[key])
        if len(virtual) > 1:
            raise NgtSyntaxError("labels name two virtual final results", label_lines[virtual[1]])
        final_result = virtual[0][1]
    for key, ops in labels.items():
        n, a = key
        if n not in neg.node_index:
            raise NgtSyntaxError(f"label on unknown node {n}", label_lines[key])
        if a not in neg.out[n] and not (n == neg.fin and a == final_result):
            raise NgtSyntaxError(f"unknown result {a} of {n}", label_lines[key])
        seen = [var for _, var in ops]
        if len(set(seen)) != len(seen):
            raise NgtSyntaxError(f"two operations on one variable in ({n},{a})", label_lines[key])
    return DataNegotiation(
        neg,
        tuple(variables),
        {key: frozenset(ops) for key, ops in labels.items()},
        final_result,
    )


def read_ngt(path: str | Path) -> Negotiation | DataNegotiation:
    return parse_ngt(Path(path).read_text())


def emit_ngt(neg: Negotiation | DataNegotiation) -> str:
    data = neg if isinstance(neg, DataNegotiation) else None
    base = data.base if data else neg
    lines = [
        f"negotiation {base.name}",
        f"processes {' '.join(base.processes)}",
        f"init {base.init} ; fin {base.fin}",
    ]
    for n in base.nodes:
        lines.append(f"node {n} {{ {' '.join(base.dom[n])} }}")
    for n in base.nodes:
        if base.out[n]:
            lines.append(f"out {n} : {' '.join(base.out[n])}")
    for (n, a, p), tgts in base.delta.items():
        lines.append(f"arc {n} {a} {p} -> {' '.join(tgts)}")
    if data:
        lines.append(f"variables {' '.join(data.variables)}")
        for (n, a), ops in data.labels.items():
            ordered = sorted(ops, key=lambda op: (data.variables.index(op[1]), op[0]))
            lines.append(f"label {n} {a} : " + " ".join(f"{op} {var}" for op, var in ordered))
    return "\n".join(lines) + "\n"
