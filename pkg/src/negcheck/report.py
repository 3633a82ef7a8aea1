"""Reports printed by the command line: text, JSON and TSV renderings."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

from .graph import Edge
from .model import ClassFlags, Run

EXIT_OK = 0
EXIT_FOUND = 1
EXIT_INPUT = 2
EXIT_PRECONDITION = 3

TSV_COLUMNS = ("file", "name", "verdict", "method", "seconds", "nodes", "processes", "witness")


def to_jsonable(obj: Any) -> Any:
    """Plain JSON data for the values the analyses return."""
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, Edge):
        return {"src": obj.src, "process": obj.proc, "result": obj.result, "dst": obj.dst}
    if isinstance(obj, Run):
        return [list(s) for s in obj.steps]
    if isinstance(obj, ClassFlags):
        return obj.as_dict()
    if isinstance(obj, (frozenset, set)):
        return sorted((to_jsonable(x) for x in obj), key=repr)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj):
        out = {"kind": type(obj).__name__}
        for f in dataclasses.fields(obj):
            if f.name != "negotiation":
                out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    return str(obj)


def _key(k: Any) -> str:
    if isinstance(k, tuple):
        return " ".join(_key(x) for x in k)
    return str(k)


@dataclass
class Report:
    command: str
    source: str
    name: str
    verdict: str
    exit_code: int
    method: str | None = None
    routing: str | None = None
    witness: Any = None
    witness_text: str = ""
    seconds: float = 0.0
    flags: ClassFlags | None = None
    size: tuple[int, int] = (0, 0)
    details: list[str] = field(default_factory=list)
    figure: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "source": self.source,
            "name": self.name,
            "verdict": self.verdict,
            "exit_code": self.exit_code,
            "method": self.method,
            "routing": self.routing,
            "witness": to_jsonable(self.witness),
            "witness_text": self.witness_text,
            "seconds": round(self.seconds, 6),
            "flags": to_jsonable(self.flags),
            "nodes": self.size[0],
            "processes": self.size[1],
            "details": self.details,
            "figure": self.figure,
        }

    def to_text(self) -> str:
        lines = [f"{self.name}: {self.verdict}"]
        if self.routing:
            lines.append(f"routing: {self.routing}")
        if self.method:
            lines.append(f"method: {self.method}")
        if self.witness_text:
            lines.append(f"witness: {self.witness_text}")
        lines += self.details
        if self.figure:
            lines.append(f"figure: {self.figure}")
        lines.append(f"time: {self.seconds:.3f}s")
        return "\n".join(lines) + "\n"

    def tsv_row(self) -> str:
        cells = (self.source, self.name, self.verdict, self.method or "", f"{self.seconds:.4f}",
                 str(self.size[0]), str(self.size[1]), self.witness_text)
        return "\t".join(c.replace("\t", " ").replace("\n", " ") for c in cells)


def render(report: Report, as_json: bool) -> str:
    if as_json:
        return json.dumps(report.to_json(), indent=2) + "\n"
    return report.to_text()
