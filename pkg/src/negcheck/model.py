"""Negotiation data model, well-formedness rules and execution semantics.

A configuration is a tuple of frozensets aligned with ``neg.processes``:
entry ``i`` is the set of nodes process ``processes[i]`` is ready to engage in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

Configuration = tuple[frozenset[str], ...]
Step = tuple[str, str]


class NegotiationError(Exception):
    """Base class for every error raised by the toolkit."""


class ValidationError(NegotiationError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NotEnabled(NegotiationError):
    pass


class UnknownResult(NegotiationError):
    pass


class PreconditionError(NegotiationError):
    """The input lies outside the class an algorithm is correct for."""


class BudgetExceeded(NegotiationError):
    pass


@dataclass(frozen=True)
class Negotiation:
    processes: tuple[str, ...]
    nodes: tuple[str, ...]
    dom: Mapping[str, tuple[str, ...]]
    out: Mapping[str, tuple[str, ...]]
    delta: Mapping[tuple[str, str, str], tuple[str, ...]]
    init: str
    fin: str
    name: str = field(default="negotiation", compare=False)
    # memo table for derived structures; excluded from equality
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def memo(self, key: Any, compute):
        try:
            return self._cache[key]
        except KeyError:
            value = self._cache[key] = compute()
            return value

    @property
    def proc_index(self) -> dict[str, int]:
        return self.memo("proc_index", lambda: {p: i for i, p in enumerate(self.processes)})

    @property
    def node_index(self) -> dict[str, int]:
        return self.memo("node_index", lambda: {n: i for i, n in enumerate(self.nodes)})

    @property
    def results(self) -> tuple[str, ...]:
        """Global result alphabet in first-use order."""
        def compute():
            seen: dict[str, None] = {}
            for n in self.nodes:
                for a in self.out[n]:
                    seen.setdefault(a)
            return tuple(seen)
        return self.memo("results", compute)

    def domset(self, n: str) -> frozenset[str]:
        sets = self.memo("domset", lambda: {m: frozenset(self.dom[m]) for m in self.nodes})
        return sets[n]

    def targets(self, n: str, a: str, p: str) -> tuple[str, ...]:
        return self.delta[(n, a, p)]

    def initial_config(self) -> Configuration:
        return tuple(frozenset([self.init]) for _ in self.processes)

    def final_config(self) -> Configuration:
        return tuple(frozenset([self.fin]) for _ in self.processes)

    def config(self, ready: Mapping[str, Iterable[str]]) -> Configuration:
        """Build a configuration from a process -> nodes mapping."""
        missing = [p for p in self.processes if p not in ready]
        if missing:
            raise ValueError(f"configuration lacks processes {missing}")
        return tuple(frozenset(ready[p]) for p in self.processes)

    def config_mapping(self, c: Configuration) -> dict[str, frozenset[str]]:
        return dict(zip(self.processes, c))

    def describe(self, c: Configuration) -> str:
        order = self.node_index
        parts = []
        for p, ready in zip(self.processes, c):
            parts.append(f"{p}={{{','.join(sorted(ready, key=order.__getitem__))}}}")
        return "(" + ", ".join(parts) + ")"


def validate(raw: Mapping[str, Any]) -> Negotiation:
    """Check a raw description and build a Negotiation.

    ``raw`` holds ``processes``, ``nodes``, ``dom``, ``out``, ``delta``,
    ``init``, ``fin`` and optionally ``name``. ``delta`` maps
    ``(node, result, process)`` to an iterable of target nodes.
    Raises ValidationError carrying every violation found.
    """
    errors: list[str] = []
    processes = tuple(raw.get("processes", ()))
    nodes = tuple(raw.get("nodes", ()))
    for kind, items in (("process", processes), ("node", nodes)):
        seen: set[str] = set()
        for item in items:
            if item in seen:
                errors.append(f"duplicate {kind} {item}")
            seen.add(item)
    pset, nset = set(processes), set(nodes)
    pidx = {p: i for i, p in enumerate(processes)}
    nidx = {n: i for i, n in enumerate(nodes)}
    if not processes:
        errors.append("no processes declared")

    init, fin = raw.get("init"), raw.get("fin")
    for role, node in (("init", init), ("fin", fin)):
        if node is None:
            errors.append(f"{role} node missing")
        elif node not in nset:
            errors.append(f"dangling identifier: {role} node {node}")

    raw_dom = raw.get("dom", {})
    dom: dict[str, tuple[str, ...]] = {}
    for n in raw_dom:
        if n not in nset:
            errors.append(f"dangling identifier: node {n} in dom")
    for n in nodes:
        procs = list(dict.fromkeys(raw_dom.get(n, ())))
        bad = [p for p in procs if p not in pset]
        for p in bad:
            errors.append(f"dangling identifier: process {p} in dom({n})")
        procs = sorted((p for p in procs if p in pset), key=pidx.__getitem__)
        if not procs:
            errors.append(f"empty domain for {n}")
        dom[n] = tuple(procs)
    for role, node in (("init", init), ("fin", fin)):
        if node in dom and set(dom[node]) != pset:
            errors.append(f"{role} domain incomplete")

    raw_out = raw.get("out", {})
    out: dict[str, tuple[str, ...]] = {}
    for n in raw_out:
        if n not in nset:
            errors.append(f"dangling identifier: node {n} in out")
    for n in nodes:
        out[n] = tuple(dict.fromkeys(raw_out.get(n, ())))
        if not out[n] and n != fin:
            errors.append(f"no results for {n}")

    raw_delta = raw.get("delta", {})
    delta: dict[tuple[str, str, str], tuple[str, ...]] = {}
    for key, tgts in raw_delta.items():
        n, a, p = key
        if n not in nset:
            errors.append(f"dangling identifier: node {n} in delta")
            continue
        if a not in out[n]:
            errors.append(f"delta defined for ({n},{a},{p}) but {a} is not a result of {n}")
            continue
        if p not in dom[n]:
            errors.append(f"delta defined for ({n},{a},{p}) but {p} is not in dom({n})")
            continue
        tgts = list(dict.fromkeys(tgts))
        if not tgts:
            errors.append(f"empty delta for ({n},{a},{p})")
            continue
        ok = True
        for t in tgts:
            if t not in nset:
                errors.append(f"dangling identifier: target {t} of ({n},{a},{p})")
                ok = False
            elif p not in dom[t]:
                errors.append(f"target {t} of ({n},{a},{p}) lacks {p} in its domain")
                ok = False
        if ok:
            delta[(n, a, p)] = tuple(sorted(tgts, key=nidx.__getitem__))
    for n in nodes:
        for a in out[n]:
            for p in dom[n]:
                if (n, a, p) not in raw_delta:
                    errors.append(f"delta undefined for ({n},{a},{p})")
    if errors:
        raise ValidationError(errors)
    # rebuild delta in canonical (node, result, process) order
    ordered = {(n, a, p): delta[(n, a, p)] for n in nodes for a in out[n] for p in dom[n]}
    return Negotiation(processes, nodes, dom, out, ordered, init, fin, raw.get("name", "negotiation"))


def to_raw(neg: Negotiation) -> dict[str, Any]:
    """Inverse of validate: a plain description that rebuilds ``neg``."""
    return {
        "name": neg.name,
        "processes": list(neg.processes),
        "nodes": list(neg.nodes),
        "dom": {n: list(neg.dom[n]) for n in neg.nodes},
        "out": {n: list(neg.out[n]) for n in neg.nodes},
        "delta": {k: list(v) for k, v in neg.delta.items()},
        "init": neg.init,
        "fin": neg.fin,
    }


def is_enabled(neg: Negotiation, c: Configuration, n: str) -> bool:
    idx = neg.proc_index
    return all(n in c[idx[p]] for p in neg.dom[n])


def enabled(neg: Negotiation, c: Configuration) -> tuple[str, ...]:
    """Nodes enabled in ``c``, in node order."""
    idx = neg.proc_index
    candidates = set().union(*c)
    order = neg.node_index
    found = [n for n in candidates if all(n in c[idx[p]] for p in neg.dom[n])]
    return tuple(sorted(found, key=order.__getitem__))


def is_terminal(neg: Negotiation, c: Configuration) -> bool:
    """A run has succeeded once the final node is enabled."""
    return all(neg.fin in ready for ready in c)


def step(neg: Negotiation, c: Configuration, n: str, a: str) -> Configuration:
    if n not in neg.node_index:
        raise NotEnabled(f"unknown node {n}")
    if a not in neg.out[n]:
        raise UnknownResult(f"{a} is not a result of {n}")
    if not is_enabled(neg, c, n):
        raise NotEnabled(f"{n} is not enabled in {neg.describe(c)}")
    nxt = list(c)
    idx = neg.proc_index
    for p in neg.dom[n]:
        nxt[idx[p]] = frozenset(neg.delta[(n, a, p)])
    return tuple(nxt)


@dataclass(frozen=True)
class Run:
    steps: tuple[Step, ...]
    origin: Configuration

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def replay(self, neg: Negotiation) -> list[Configuration]:
        """Configurations visited, origin included. Raises on an illegal step."""
        configs = [self.origin]
        for n, a in self.steps:
            configs.append(step(neg, configs[-1], n, a))
        return configs

    def final(self, neg: Negotiation) -> Configuration:
        return self.replay(neg)[-1]

    def is_successful(self, neg: Negotiation) -> bool:
        return self.origin == neg.initial_config() and is_terminal(neg, self.final(neg))

    def __str__(self) -> str:
        return "".join(f"({n},{a})" for n, a in self.steps) or "<empty run>"


@dataclass(frozen=True)
class ClassFlags:
    deterministic: bool
    weakly_nd: bool
    very_weakly_nd: bool
    acyclic: bool
    det_acyclic: bool
    all_nodes_locally_reachable: bool

    def as_dict(self) -> dict[str, bool]:
        return dict(self.__dict__)


def deterministic_processes(neg: Negotiation) -> tuple[str, ...]:
    def compute():
        nd = {p for (n, a, p), tgts in neg.delta.items() if len(tgts) > 1}
        return tuple(p for p in neg.processes if p not in nd)
    return neg.memo("det_procs", compute)


def nondeterministic_processes(neg: Negotiation) -> tuple[str, ...]:
    det = set(deterministic_processes(neg))
    return tuple(p for p in neg.processes if p not in det)


def _has_cycle(nodes: Iterable[str], succ: Mapping[str, Iterable[str]]) -> bool:
    indeg = {n: 0 for n in nodes}
    for n in indeg:
        for m in succ.get(n, ()):
            indeg[m] += 1
    stack = [n for n, d in indeg.items() if d == 0]
    seen = 0
    while stack:
        n = stack.pop()
        seen += 1
        for m in succ.get(n, ()):
            indeg[m] -= 1
            if indeg[m] == 0:
                stack.append(m)
    return seen != len(indeg)


def classify(neg: Negotiation) -> ClassFlags:
    def compute():
        det = set(deterministic_processes(neg))
        succ: dict[str, set[str]] = {n: set() for n in neg.nodes}
        det_succ: dict[str, set[str]] = {n: set() for n in neg.nodes}
        for (n, a, p), tgts in neg.delta.items():
            succ[n].update(tgts)
            if p in det:
                det_succ[n].update(tgts)
        very_weak = True
        for (n, a, p), tgts in neg.delta.items():
            common = det.intersection(*(neg.domset(t) for t in tgts))
            if not common:
                very_weak = False
                break
        det_nodes = [n for n in neg.nodes if det & neg.domset(n)]
        reach = {neg.init}
        stack = [neg.init]
        while stack:
            n = stack.pop()
            for m in succ[n]:
                if m not in reach:
                    reach.add(m)
                    stack.append(m)
        return ClassFlags(
            deterministic=len(det) == len(neg.processes),
            weakly_nd=all(det & neg.domset(n) for n in neg.nodes),
            very_weakly_nd=very_weak,
            acyclic=not _has_cycle(neg.nodes, succ),
            det_acyclic=not _has_cycle(det_nodes, det_succ),
            all_nodes_locally_reachable=len(reach) == len(neg.nodes),
        )
    return neg.memo("classify", compute)


def restrict(neg: Negotiation, keep: Iterable[str]) -> Negotiation:
    """Restriction to the processes in ``keep``; nodes left without participants vanish."""
    keep = set(keep)
    unknown = keep - set(neg.processes)
    if unknown:
        raise ValueError(f"unknown processes {sorted(unknown)}")
    if not keep:
        raise ValueError("restriction to an empty process set")
    procs = tuple(p for p in neg.processes if p in keep)
    nodes = tuple(n for n in neg.nodes if keep & neg.domset(n))
    kept = set(nodes)
    dom = {n: tuple(p for p in neg.dom[n] if p in keep) for n in nodes}
    out = {n: neg.out[n] for n in nodes}
    delta = {}
    for n in nodes:
        for a in out[n]:
            for p in dom[n]:
                delta[(n, a, p)] = tuple(t for t in neg.delta[(n, a, p)] if t in kept)
    name = f"{neg.name}|{'+'.join(procs)}"
    return Negotiation(procs, nodes, dom, out, delta, neg.init, neg.fin, name)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a soundness analysis."""
    sound: bool
    method: str
    witness: Any = None
    unreachable: tuple[str, ...] = ()
    stats: Mapping[str, Any] = field(default_factory=dict, compare=False)
