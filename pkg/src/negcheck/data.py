"""Races and data-flow specifications over negotiations with data."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .games import solve_omitting
from .graph import Edge, local_path, local_reach, path_nodes, reachable_from_init
from .model import Configuration, Negotiation, PreconditionError, Run, Step, classify
from .oracle import DEFAULT_BUDGET, SpecWitness, oracle_concurrent, oracle_spec
from .patterns import Fork, det_soundness, find_fork

OPERATIONS = ("alloc", "read", "write", "dealloc")


@dataclass(frozen=True)
class DataNegotiation:
    """A negotiation whose results are labelled with operations on variables.

    When the final node has no results, ``final_result`` names a virtual
    result appended after termination so specifications can refer to the
    end of a run.
    """
    base: Negotiation
    variables: tuple[str, ...]
    labels: Mapping[Step, frozenset[tuple[str, str]]]
    final_result: str = "end"

    def ops(self, n: str, a: str) -> frozenset[tuple[str, str]]:
        return self.labels.get((n, a), frozenset())

    @property
    def virtual_final(self) -> bool:
        return not self.base.out[self.base.fin]

    @property
    def final_pairs(self) -> tuple[Step, ...]:
        fin = self.base.fin
        if self.virtual_final:
            return ((fin, self.final_result),)
        return tuple((fin, r) for r in self.base.out[fin])

    @property
    def pairs(self) -> tuple[Step, ...]:
        """Every (node, result) pair, the virtual final one included."""
        real = tuple((n, a) for n in self.base.nodes for a in self.base.out[n])
        return real + (self.final_pairs if self.virtual_final else ())

    def touching(self, x: str, ops: Iterable[str]) -> frozenset[Step]:
        wanted = {(op, x) for op in ops}
        return frozenset(pair for pair in self.pairs if self.ops(*pair) & wanted)


@dataclass(frozen=True)
class DataSpec:
    o1: frozenset[Step]
    o2: frozenset[Step]
    o: frozenset[Step]
    name: str = "spec"


@dataclass(frozen=True)
class SharedPath:
    """m and n share a process and a local path leads from one to the other."""
    first: str
    second: str
    path: tuple[Edge, ...]

    def __str__(self) -> str:
        return f"local path {'>'.join(path_nodes(self.first, self.path))}"


@dataclass(frozen=True)
class RaceVerdict:
    race: bool
    m: str
    n: str
    method: str
    fork: Fork | None = None
    reason: str | None = None
    path: tuple[Edge, ...] = ()
    config: Configuration | None = None

    def __str__(self) -> str:
        if self.race:
            how = self.fork if self.fork is not None else "both enabled in a reachable configuration"
            return f"race between {self.m} and {self.n}: {how}"
        detail = f" ({'>'.join(path_nodes(self.path[0].src, self.path))})" if self.path else ""
        return f"no race between {self.m} and {self.n}: {self.reason}{detail}"


@dataclass(frozen=True)
class DataVerdict:
    """Outcome of a data analysis; ``violations`` maps each offending pair of steps to its evidence."""
    ok: bool
    kind: str
    method: str
    violations: Mapping[tuple[Step, Step], object] = field(default_factory=dict)

    @property
    def first(self) -> tuple[tuple[Step, Step], object] | None:
        return next(iter(self.violations.items()), None)


def _require_sound_deterministic(neg: Negotiation) -> None:
    if not classify(neg).deterministic:
        raise PreconditionError(f"{neg.name} is not deterministic")
    if not det_soundness(neg).sound:
        raise PreconditionError(f"{neg.name} is not sound")


def co_occur(neg: Negotiation, m: str, n: str) -> Fork | SharedPath | None:
    """Evidence that some run from the initial configuration executes both m and n."""
    _require_sound_deterministic(neg)
    for x in (m, n):
        if x not in neg.node_index:
            raise ValueError(f"unknown node {x}")
    reach = reachable_from_init(neg)
    if m not in reach or n not in reach:
        return None
    if m == n:
        return SharedPath(m, m, ())
    fork = find_fork(neg, ends=(m, n))
    if fork is not None or not neg.domset(m) & neg.domset(n):
        return fork
    # a shared process executes both, so one must lie on a local path after the other
    for a, b in ((m, n), (n, m)):
        path = local_path(neg, [a], b)
        if path is not None:
            return SharedPath(a, b, tuple(path))
    return None


def race(neg: Negotiation, m: str, n: str, budget: int = DEFAULT_BUDGET) -> RaceVerdict:
    """Whether m and n can be enabled together in a reachable configuration.

    Acyclic sound deterministic input gets the graph criterion; anything
    else is decided on the state space.
    """
    for x in (m, n):
        if x not in neg.node_index:
            raise ValueError(f"unknown node {x}")
    if neg.domset(m) & neg.domset(n):
        return RaceVerdict(False, m, n, "races", reason="shared-domain")
    if not _fast_path_applies(neg):
        config = oracle_concurrent(neg, m, n, budget)
        if config is None:
            return RaceVerdict(False, m, n, "oracle", reason="never-enabled-together")
        return RaceVerdict(True, m, n, "oracle", config=config)
    for a, b in ((m, n), (n, m)):
        path = local_path(neg, [a], b)
        if path is not None:
            return RaceVerdict(False, m, n, "races", reason="local-path", path=tuple(path))
    fork = co_occur(neg, m, n)
    if fork is None:
        return RaceVerdict(False, m, n, "races", reason="never-together")
    return RaceVerdict(True, m, n, "races", fork=fork)


def _successors(neg: Negotiation, n: str, a: str) -> frozenset[str]:
    if n == neg.fin:
        return frozenset()
    return local_reach(neg, [t for p in neg.dom[n] for t in neg.delta[(n, a, p)]])


def spec_compliance(dneg: DataNegotiation, spec: DataSpec) -> DataVerdict:
    """Checks every pair of O1 x O2 with one omitting query each.

    A violation at (m,a),(n,b) needs a successful run with both pairs that
    skips every O pair lying on a local path between them. Final-node pairs
    mark the end of the run, so they never need to be included.
    """
    neg = dneg.base
    if not classify(neg).acyclic:
        raise PreconditionError(f"{neg.name} is not acyclic; use the state-space oracle")
    _require_sound_deterministic(neg)
    _check_pairs(dneg, spec)
    after = {pair: _successors(neg, *pair) for pair in dneg.pairs}
    found: dict[tuple[Step, Step], SpecWitness] = {}
    for first in sorted(spec.o1):
        m, a = first
        if m == neg.fin or m not in reachable_from_init(neg):
            continue
        for second in sorted(spec.o2):
            n, b = second
            if n == m or m in after[second]:
                continue
            between = frozenset(
                pair for pair in spec.o
                if pair[0] != neg.fin and pair[0] in after[first] and n in after[pair]
            )
            include = [first] if n == neg.fin else [first, second]
            plan = solve_omitting(neg, include=include, omit_pairs=between, assume_sound=True)
            if plan is not None:
                found[(first, second)] = _isolate(dneg, plan.run, first, second)
    return DataVerdict(not found, spec.name, "omitting", found)


def _isolate(dneg: DataNegotiation, run: Run, first: Step, second: Step) -> SpecWitness:
    """Reorders a run so that only steps causally between two marked steps separate them.

    Order: steps unrelated to either mark, the first mark, steps after it
    and before the second mark, the second mark, everything else. Each block
    only depends on earlier ones because the second mark does not precede
    the first causally.
    """
    neg = dneg.base
    steps = list(run.steps)
    end = len(steps)
    i = steps.index(first)
    j = steps.index(second) if second[0] != neg.fin else end
    doms = [neg.domset(n) for n, _ in steps]

    def closure(start: int, indices) -> set[int]:
        got = {start}
        for k in indices:
            if any(doms[k] & doms[x] for x in got):
                got.add(k)
        return got

    after_i = closure(i, range(i + 1, end))
    after_j = closure(j, range(j + 1, end)) if j < end else set()
    before_j = closure(j, range(j - 1, -1, -1)) if j < end else set(range(end))
    middle = [i] + [k for k in range(end) if k in after_i and k in before_j and k not in (i, j)]
    seq = [k for k in range(end) if k not in after_i and k not in after_j] + middle
    seq += [j] if j < end else []
    placed = set(seq)
    seq += [k for k in range(end) if k not in placed]
    reordered = Run(tuple(steps[k] for k in seq), run.origin)
    final = second if second[0] == neg.fin else None
    return SpecWitness(reordered, seq.index(i), seq.index(j) if j < end else end,
                       dneg.virtual_final, final)


def check_violation(dneg: DataNegotiation, spec: DataSpec, witness: SpecWitness) -> list[str]:
    """Problems with a claimed violation, read off the run directly; empty when it holds."""
    neg = dneg.base
    problems = []
    if not witness.run.is_successful(neg):
        problems.append("run is not successful")
    steps = list(witness.run.steps)
    if witness.final_step is not None:
        if witness.final_step not in dneg.final_pairs:
            problems.append(f"{witness.final_step} is not a final result")
        steps.append(witness.final_step)
    i, j = witness.i, witness.j
    if not 0 <= i < j < len(steps):
        return problems + [f"indices {i},{j} out of order or range"]
    if steps[i] not in spec.o1:
        problems.append(f"{steps[i]} is not in O1")
    if steps[j] not in spec.o2:
        problems.append(f"{steps[j]} is not in O2")
    for k in range(i + 1, j):
        if steps[k] in spec.o:
            problems.append(f"{steps[k]} in O lies between the marked steps")
    return problems


def oracle_compliance(dneg: DataNegotiation, spec: DataSpec, budget: int = DEFAULT_BUDGET) -> DataVerdict:
    """Per-pair state-space search, so every violating pair is reported."""
    _check_pairs(dneg, spec)
    found = {}
    for first in sorted(spec.o1):
        for second in sorted(spec.o2):
            single = DataSpec(frozenset([first]), frozenset([second]), spec.o, spec.name)
            witness = oracle_spec(dneg, single, budget)
            if witness is not None:
                found[(first, second)] = witness
    return DataVerdict(not found, spec.name, "oracle", found)


def check_spec(dneg: DataNegotiation, spec: DataSpec, budget: int = DEFAULT_BUDGET) -> DataVerdict:
    """Omitting queries on acyclic sound deterministic input, the state space otherwise."""
    if _fast_path_applies(dneg.base):
        return spec_compliance(dneg, spec)
    return oracle_compliance(dneg, spec, budget)


def _fast_path_applies(neg: Negotiation) -> bool:
    flags = classify(neg)
    return flags.acyclic and flags.deterministic and det_soundness(neg).sound


def _check_pairs(dneg: DataNegotiation, spec: DataSpec) -> None:
    known = set(dneg.pairs)
    for pair in spec.o1 | spec.o2 | spec.o:
        if pair not in known:
            raise ValueError(f"({pair[0]},{pair[1]}) is not a result of the negotiation")


SPEC_KINDS = ("weakly-redundant", "weakly-redundant-strict", "never-destroyed")
KINDS = ("inconsistent",) + SPEC_KINDS


def make_spec(dneg: DataNegotiation, kind: str, x: str) -> DataSpec:
    """The (O1, O2, O) encoding of a built-in property for variable x.

    ``weakly-redundant`` lets only reads of x interrupt a write and its
    deallocation, so an overwrite still counts as redundant;
    ``weakly-redundant-strict`` lets any operation on x interrupt.
    """
    if x not in dneg.variables:
        raise ValueError(f"unknown variable {x}")
    final = set(dneg.final_pairs)
    if kind == "weakly-redundant":
        return DataSpec(dneg.touching(x, ["write"]), dneg.touching(x, ["dealloc"]) | final,
                        dneg.touching(x, ["read"]), f"{kind}({x})")
    if kind == "weakly-redundant-strict":
        return DataSpec(dneg.touching(x, ["write"]), dneg.touching(x, ["dealloc"]) | final,
                        dneg.touching(x, OPERATIONS), f"{kind}({x})")
    if kind == "never-destroyed":
        return DataSpec(dneg.touching(x, ["alloc"]), frozenset(final),
                        dneg.touching(x, ["alloc", "dealloc"]) | final, f"{kind}({x})")
    raise ValueError(f"unknown specification kind {kind}; expected one of {', '.join(SPEC_KINDS)}")


def inconsistent(dneg: DataNegotiation, x: str, budget: int = DEFAULT_BUDGET) -> DataVerdict:
    """Pairs where one result reads or writes x while a concurrent one writes, allocates or frees it."""
    if x not in dneg.variables:
        raise ValueError(f"unknown variable {x}")
    neg = dneg.base
    fast = _fast_path_applies(neg)
    uses = dneg.touching(x, ["read", "write"])
    changes = dneg.touching(x, ["write", "alloc", "dealloc"])
    found: dict[tuple[Step, Step], object] = {}
    verdicts: dict[tuple[str, str], RaceVerdict] = {}
    for first in sorted(uses):
        for second in sorted(changes):
            key = tuple(sorted((first[0], second[0])))
            if key not in verdicts:
                verdicts[key] = race(neg, *key, budget=budget)
            if verdicts[key].race:
                found[(first, second)] = verdicts[key]
    return DataVerdict(not found, f"inconsistent({x})", "races" if fast else "oracle", found)


def builtin_spec(dneg: DataNegotiation, kind: str, x: str, budget: int = DEFAULT_BUDGET) -> DataVerdict:
    if kind == "inconsistent":
        return inconsistent(dneg, x, budget)
    return check_spec(dneg, make_spec(dneg, kind, x), budget)


def parse_dataspec(text: str, dneg: DataNegotiation | None = None, name: str = "spec") -> DataSpec:
    """Reads ``O1:``, ``O2:`` and ``O:`` lines of node:result tokens; '#' starts a comment."""
    sets: dict[str, set[Step]] = {}
    known = set(dneg.pairs) if dneg is not None else None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        head = head.strip()
        if not sep or head not in ("O1", "O2", "O"):
            raise ValueError(f"line {lineno}: expected O1:, O2: or O:")
        if head in sets:
            raise ValueError(f"line {lineno}: duplicate {head} line")
        pairs = set()
        for tok in rest.split():
            n, sep, a = tok.partition(":")
            if not sep or not n or not a:
                raise ValueError(f"line {lineno}: expected node:result, got {tok!r}")
            if known is not None and (n, a) not in known:
                raise ValueError(f"line {lineno}: ({n},{a}) is not a result of the negotiation")
            pairs.add((n, a))
        sets[head] = pairs
    spec = DataSpec(frozenset(sets.get("O1", ())), frozenset(sets.get("O2", ())),
                    frozenset(sets.get("O", ())), name)
    if dneg is not None:
        _check_pairs(dneg, spec)
    return spec


def emit_dataspec(spec: DataSpec) -> str:
    return "\n".join(
        f"{label}: " + " ".join(f"{n}:{a}" for n, a in sorted(pairs))
        for label, pairs in (("O1", spec.o1), ("O2", spec.o2), ("O", spec.o))
    ) + "\n"
