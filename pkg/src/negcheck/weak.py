"""Soundness of acyclic weakly non-deterministic negotiations.

The check first decides the deterministic part with the anti-patterns.
It then handles each non-deterministic process p on its own, on the
restriction to p and the deterministic processes. For a single such p,
unsoundness means a run of the deterministic part that executes (m,a) and
then (n,b) while p, sent by (m,a) elsewhere, never reaches n.
"""
from __future__ import annotations

from dataclasses import dataclass

from .games import solve_omitting
from .graph import local_reach, topo_order
from .model import (
    Negotiation,
    PreconditionError,
    Run,
    Verdict,
    classify,
    deterministic_processes,
    nondeterministic_processes,
    restrict,
)
from .patterns import AntiPatternWitness, det_soundness


@dataclass(frozen=True)
class DetPartUnsound:
    witness: AntiPatternWitness

    def __str__(self) -> str:
        return f"deterministic part unsound: {self.witness}"


@dataclass(frozen=True)
class OneProcCounterexample:
    process: str
    m: str
    a: str
    n: str
    b: str | None
    omitted: tuple[str, ...]
    run: Run

    def __str__(self) -> str:
        second = f"({self.n},{self.b})" if self.b is not None else f"final node {self.n}"
        avoid = "{" + ",".join(self.omitted) + "}"
        return (f"process {self.process}: ({self.m},{self.a}) then {second} omitting {avoid}, "
                f"deterministic run {self.run}")


@dataclass(frozen=True)
class ConflictCounterexample:
    process: str
    m: str
    a: str
    n: str
    b: str
    n1: str
    c: str
    omitted: tuple[str, ...]
    run: Run

    def __str__(self) -> str:
        avoid = "{" + ",".join(self.omitted) + "}"
        return (f"process {self.process}: ({self.m},{self.a}) offers {self.n} and {self.n1} together, "
                f"omitting {avoid}; taking {self.n1} strands {self.n}; deterministic run {self.run}")


WeakWitness = DetPartUnsound | OneProcCounterexample | ConflictCounterexample


def _require_acyclic(neg: Negotiation) -> None:
    if not classify(neg).acyclic:
        raise PreconditionError(f"{neg.name} is not acyclic")


def _one_process(neg: Negotiation, p: str, det_part: Negotiation) -> OneProcCounterexample | None:
    order = topo_order(neg)
    nodes = [x for x in order if p in neg.domset(x)]
    for i, m in enumerate(nodes):
        for n in nodes[i + 1:]:
            for a in neg.out[m]:
                targets = neg.delta[(m, a, p)]
                if n in targets:
                    continue
                # successful runs never execute the final node, so omitting it is vacuous
                omitted = tuple(t for t in targets
                                if order.rank[t] < order.rank[n] and t != neg.fin)
                # a successful run always ends with the final node enabled
                results = neg.out[n] if n != neg.fin else (None,)
                for b in results:
                    include = [(m, a)] if b is None else [(m, a), (n, b)]
                    plan = solve_omitting(det_part, include=include, omit=omitted, assume_sound=True)
                    if plan is not None:
                        return OneProcCounterexample(p, m, a, n, b, omitted, plan.run)
    return None


def _delayed(neg: Negotiation, order: list[str], n: str) -> dict[str, int]:
    """Ranks of a topological order that puts n and its descendants last."""
    later = local_reach(neg, [t for (x, _, _), tgts in neg.delta.items() if x == n for t in tgts])
    later = later | {n}
    seq = [x for x in order if x not in later] + [x for x in order if x in later]
    return {x: i for i, x in enumerate(seq)}


def _conflict(neg: Negotiation, p: str, det_part: Negotiation) -> ConflictCounterexample | None:
    """Two targets u, v of one (m,a) for p that can be enabled together.

    Executing the one not reachable from the other moves p past it for
    good, stranding its deterministic participants. Any topological order
    works for the search: take a successful run of the deterministic part
    sorted by it, with (m,a), u and then v, skipping the targets of (m,a)
    between m and u, where every deterministic participant of v arrives
    from a node before u. The prefix before u lifts to a run enabling both.
    The check tries the fixed order and the orders delaying u or v.
    """
    base = list(topo_order(neg))
    for m in base:
        if p not in neg.domset(m):
            continue
        for a in neg.out[m]:
            targets = [t for t in base if t in neg.delta[(m, a, p)] and t != neg.fin]
            for i, x in enumerate(targets):
                for y in targets[i + 1:]:
                    for rank in (topo_order(neg).rank, _delayed(neg, base, x), _delayed(neg, base, y)):
                        u, v = (x, y) if rank[x] < rank[y] else (y, x)
                        found = _conflict_in_order(neg, p, det_part, rank, m, a, u, v, targets)
                        if found is not None:
                            return found
    return None


def _conflict_in_order(neg, p, det_part, rank, m, a, u, v, targets):
    omitted = tuple(t for t in targets if rank[m] < rank[t] < rank[u])
    late = frozenset(
        (x, r) for (x, r, q), tgts in det_part.delta.items()
        if tgts == (v,) and rank[x] >= rank[u] and q in det_part.domset(v)
    )
    for b in neg.out[u]:
        if (u, b) in late:
            continue
        for c in neg.out[v]:
            plan = solve_omitting(det_part, include=[(m, a), (u, b), (v, c)],
                                  omit=omitted, omit_pairs=late, assume_sound=True)
            if plan is not None:
                return ConflictCounterexample(p, m, a, u, b, v, c, omitted, plan.run)
    return None


def check_single_nd(neg: Negotiation, process: str | None = None, *, conflicts: bool = True) -> Verdict:
    """Soundness when ``process`` is the only process allowed to branch.

    Without ``process`` the negotiation must have exactly one
    non-deterministic process. A deterministic process may be named
    explicitly, as long as every node keeps another participant.
    """
    _require_acyclic(neg)
    nondet = nondeterministic_processes(neg)
    if process is None:
        if len(nondet) != 1:
            raise PreconditionError(
                f"{neg.name} has {len(nondet)} non-deterministic processes, expected one")
        process = nondet[0]
    elif process not in neg.processes:
        raise ValueError(f"unknown process {process}")
    elif set(nondet) - {process}:
        raise PreconditionError(f"{neg.name} has non-deterministic processes besides {process}")
    others = [q for q in neg.processes if q != process]
    if not others or any(neg.domset(x) == {process} for x in neg.nodes):
        raise PreconditionError(f"some node of {neg.name} has no participant besides {process}")
    det_part = restrict(neg, others)
    base = det_soundness(det_part)
    if not base.sound:
        return Verdict(False, "weak", DetPartUnsound(base.witness))
    found = _per_process(neg, process, det_part, conflicts)
    if found is not None:
        return Verdict(False, "weak", found)
    return Verdict(True, "weak")


def _per_process(neg: Negotiation, p: str, det_part: Negotiation, conflicts: bool):
    found = _one_process(neg, p, det_part)
    if found is None and conflicts:
        found = _conflict(neg, p, det_part)
    return found


def weak_soundness(neg: Negotiation, *, conflicts: bool = True) -> Verdict:
    """Soundness of an acyclic weakly non-deterministic negotiation.

    With ``conflicts`` off only the per-target condition is checked; it
    misses deadlocks where two targets of one result are enabled together.
    """
    _require_acyclic(neg)
    if not classify(neg).weakly_nd:
        raise PreconditionError(f"{neg.name} is not weakly non-deterministic")
    det = deterministic_processes(neg)
    det_part = restrict(neg, det)
    base = det_soundness(det_part)
    if not base.sound:
        return Verdict(False, "weak", DetPartUnsound(base.witness))
    for p in nondeterministic_processes(neg):
        single = restrict(neg, set(det) | {p})
        found = _per_process(single, p, det_part, conflicts)
        if found is not None:
            return Verdict(False, "weak", found)
    return Verdict(True, "weak")
