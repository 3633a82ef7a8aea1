"""The omitting game and the K-omitting solver for deterministic acyclic negotiations.

Eve picks a result at each node, Adam picks which participant's successor
the play follows. Eve wins by reaching the final node and loses on an
omitted node or when every result she may pick is forbidden.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .graph import topo_order
from .model import Negotiation, PreconditionError, Run, Step, classify, step
from .patterns import det_soundness

DEFAULT_K = 4


@dataclass(frozen=True)
class GameArena:
    negotiation: Negotiation
    omit: frozenset[str]
    omit_pairs: frozenset[Step]
    eve_positions: tuple[str, ...]
    adam_positions: tuple[Step, ...]
    eve_edges: Mapping[str, tuple[Step, ...]]
    adam_edges: Mapping[Step, tuple[str, ...]]
    initial: str


@dataclass(frozen=True)
class StrategyMax:
    arena: GameArena
    winning: frozenset
    sigma: Mapping[str, tuple[str, ...]]

    @property
    def eve_wins(self) -> bool:
        return self.arena.initial in self.winning

    @property
    def winning_nodes(self) -> frozenset[str]:
        return frozenset(x for x in self.winning if isinstance(x, str))


@dataclass(frozen=True)
class OmitInstance:
    include: frozenset[Step] = frozenset()
    omit: frozenset[str] = frozenset()
    omit_pairs: frozenset[Step] = frozenset()


@dataclass(frozen=True)
class OmitPlan:
    choices: Mapping[str, str]
    run: Run
    branching: tuple[str, ...] = ()
    instance: OmitInstance = field(default_factory=OmitInstance)

    def table(self) -> str:
        return "\n".join(f"{n}: {a}" for n, a in self.choices.items())


def build_arena(neg: Negotiation, omit: Iterable[str] = (), omit_pairs: Iterable[Step] = ()) -> GameArena:
    omit, omit_pairs = frozenset(omit), frozenset(omit_pairs)
    if neg.fin in omit:
        raise ValueError("the final node cannot be omitted")
    unknown = omit - set(neg.nodes)
    if unknown:
        raise ValueError(f"unknown nodes {sorted(unknown)}")
    eve = tuple(n for n in neg.nodes if n not in omit)
    eve_edges = {n: tuple((n, a) for a in neg.out[n] if (n, a) not in omit_pairs) for n in eve}
    adam = tuple((n, a) for n in neg.nodes for a in neg.out[n])
    adam_edges = {
        (n, a): tuple(dict.fromkeys(t for p in neg.dom[n] for t in neg.delta[(n, a, p)]))
        for n, a in adam
    }
    return GameArena(neg, omit, omit_pairs, eve, adam, eve_edges, adam_edges, neg.init)


def eve_winning(arena: GameArena) -> StrategyMax:
    """Eve's winning region as the complement of Adam's attractor to losing positions."""
    neg = arena.negotiation
    preds: dict[object, list[object]] = {}
    for n, moves in arena.eve_edges.items():
        for pos in moves:
            preds.setdefault(pos, []).append(n)
    for pos, tgts in arena.adam_edges.items():
        for t in tgts:
            preds.setdefault(t, []).append(pos)
    # Eve loses at a node once all her moves lose; Adam wins at (n,a) once one successor loses
    options = {n: len(moves) for n, moves in arena.eve_edges.items()}
    losing = set(arena.omit)
    queue = deque(arena.omit)
    for n, count in options.items():
        if count == 0 and n != neg.fin:
            losing.add(n)
            queue.append(n)
    while queue:
        pos = queue.popleft()
        for pre in preds.get(pos, ()):
            if pre in losing:
                continue
            if isinstance(pre, tuple):
                losing.add(pre)
                queue.append(pre)
            elif pre != neg.fin:
                options[pre] -= 1
                if options[pre] == 0:
                    losing.add(pre)
                    queue.append(pre)
    winning = frozenset(
        [n for n in arena.eve_positions if n not in losing]
        + [pos for pos in arena.adam_positions if pos not in losing]
    )
    sigma = {
        n: tuple(a for (_, a) in arena.eve_edges[n] if (n, a) in winning)
        for n in arena.eve_positions if n in winning
    }
    return StrategyMax(arena, winning, sigma)


def run_from_strategy(neg: Negotiation, choices: Mapping[str, str]) -> tuple[Run, frozenset[str]]:
    """Execute the nodes visited by plays of a deterministic strategy in topological order."""
    reached = {neg.init}
    stack = [neg.init]
    while stack:
        n = stack.pop()
        if n == neg.fin:
            continue
        a = choices[n]
        for p in neg.dom[n]:
            for t in neg.delta[(n, a, p)]:
                if t not in reached:
                    reached.add(t)
                    stack.append(t)
    order = topo_order(neg)
    steps = tuple((n, choices[n]) for n in order.sort(reached) if n != neg.fin)
    return Run(steps, neg.initial_config()), frozenset(reached)


def _check_preconditions(neg: Negotiation, assume_sound: bool) -> None:
    flags = classify(neg)
    if not flags.deterministic:
        raise PreconditionError(f"{neg.name} is not deterministic")
    if not flags.acyclic:
        raise PreconditionError(f"{neg.name} is not acyclic")
    if not assume_sound and not det_soundness(neg).sound:
        raise PreconditionError(f"{neg.name} is not sound")


def solve_omitting(
    neg: Negotiation,
    instance: OmitInstance | None = None,
    *,
    include: Iterable[Step] = (),
    omit: Iterable[str] = (),
    omit_pairs: Iterable[Step] = (),
    k: int = DEFAULT_K,
    assume_sound: bool = False,
) -> OmitPlan | None:
    """A successful run executing every pair of ``include`` and avoiding the omitted ones.

    Works on the graph of Eve's maximal winning strategy. Each pending
    target travels as a token, and tokens sit at nodes. The earliest
    occupied node in topological order is expanded next: it gets one
    result, and its tokens are spread over that result's successors.
    Tokens meeting at a node merge, so every node receives a single
    result. Tokens split at most ``len(include) - 1`` times.
    """
    _check_preconditions(neg, assume_sound)
    if instance is not None:
        include, omit, omit_pairs = sorted(instance.include), instance.omit, instance.omit_pairs
    include = tuple(dict.fromkeys(include))
    if len(include) > k:
        raise PreconditionError(f"{len(include)} pairs to include exceeds the bound {k}")
    for n, a in include:
        if n not in neg.node_index or a not in neg.out[n]:
            raise ValueError(f"({n},{a}) is not a result of the negotiation")
    instance = OmitInstance(frozenset(include), frozenset(omit), frozenset(omit_pairs))
    arena = build_arena(neg, instance.omit, instance.omit_pairs)
    forced: dict[str, str] = {}
    for n, a in include:
        if forced.setdefault(n, a) != a:
            return None
    if neg.init in instance.omit:
        return None
    strategy = eve_winning(arena)
    if not strategy.eve_wins:
        return None
    sigma = strategy.sigma
    for n, a in forced.items():
        if a not in sigma.get(n, ()):
            return None

    allowed = {n: ((forced[n],) if n in forced else moves) for n, moves in sigma.items()}
    target_bit = {n: 1 << i for i, n in enumerate(forced)}
    full = (1 << len(forced)) - 1
    order = topo_order(neg)

    # reach[n]: targets reachable from n through allowed moves
    reach: dict[str, int] = {}
    for n in reversed(order.order):
        if n not in allowed:
            continue
        mask = target_bit.get(n, 0)
        for a in allowed[n]:
            for p in neg.dom[n]:
                mask |= reach.get(neg.delta[(n, a, p)][0], 0)
        reach[n] = mask
    if reach.get(neg.init, 0) != full:
        return None

    rank = order.rank
    failed: set[tuple] = set()

    def search(tokens: tuple[tuple[str, int], ...]) -> dict[str, str] | None:
        if not tokens:
            return {}
        if tokens in failed:
            return None
        (x, mask), rest = tokens[0], tokens[1:]
        mask &= ~target_bit.get(x, 0)
        if not mask:
            found = search(rest)
            if found is not None and x in forced:
                found[x] = forced[x]
            return found
        for a in allowed[x]:
            succs = list(dict.fromkeys(neg.delta[(x, a, p)][0] for p in neg.dom[x]))
            bits = [1 << i for i in range(len(forced)) if mask >> i & 1]
            for assignment in _assignments(bits, succs, reach):
                merged = dict(rest)
                for node, got in assignment.items():
                    merged[node] = merged.get(node, 0) | got
                nxt = tuple(sorted(merged.items(), key=lambda t: rank[t[0]]))
                found = search(nxt)
                if found is not None:
                    found[x] = a
                    if len(assignment) > 1:
                        branching.append(x)
                    return found
        failed.add(tokens)
        return None

    branching: list[str] = []
    chosen = search(((neg.init, full),))
    if chosen is None:
        return None
    choices = {n: chosen.get(n, moves[0]) for n, moves in allowed.items() if moves}
    run, reached = run_from_strategy(neg, choices)
    config = neg.initial_config()
    for n, a in run.steps:
        config = step(neg, config, n, a)
    if config != neg.final_config():
        raise PreconditionError(f"{neg.name} is not sound: strategy run does not terminate")
    used = {n: choices[n] for n in order.sort(reached) if n != neg.fin}
    return OmitPlan(used, run, tuple(reversed(branching)), instance)


def _assignments(bits: list[int], succs: list[str], reach: dict[str, int]):
    """Every way to hand each target bit to a successor that can still reach it."""
    def rec(i: int, acc: dict[str, int]):
        if i == len(bits):
            yield dict(acc)
            return
        b = bits[i]
        for s in succs:
            if reach.get(s, 0) & b:
                acc[s] = acc.get(s, 0) | b
                yield from rec(i + 1, acc)
                acc[s] ^= b
                if not acc[s]:
                    del acc[s]
    yield from rec(0, {})
