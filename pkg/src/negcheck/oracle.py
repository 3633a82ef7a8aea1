"""Brute-force reference semantics over the explicit configuration graph.

Everything here enumerates reachable configurations breadth-first, so
witnesses are shortest and ties follow node and result declaration order.
The fast analyses are tested against these functions.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from . import model
from .graph import Edge, topo_order

DEFAULT_BUDGET = 1_000_000

_Config = tuple[int, ...]  # one node bitmask per process


class PathNotRealizable(model.NegotiationError):
    pass


class Engine:
    """Bitmask encoding of a negotiation's step relation."""

    def __init__(self, neg: model.Negotiation):
        self.neg = neg
        pidx, nidx = neg.proc_index, neg.node_index
        self.dom = [tuple(pidx[p] for p in neg.dom[n]) for n in neg.nodes]
        self.anchor = [d[0] for d in self.dom]
        self.moves: list[list[tuple[str, tuple[tuple[int, int], ...]]]] = []
        for n in neg.nodes:
            moves = []
            for a in neg.out[n]:
                updates = []
                for p in neg.dom[n]:
                    mask = 0
                    for t in neg.delta[(n, a, p)]:
                        mask |= 1 << nidx[t]
                    updates.append((pidx[p], mask))
                moves.append((a, tuple(updates)))
            self.moves.append(moves)
        self.fin_bit = 1 << nidx[neg.fin]
        self.initial: _Config = tuple(1 << nidx[neg.init] for _ in neg.processes)

    @classmethod
    def of(cls, neg: model.Negotiation) -> "Engine":
        return neg.memo("engine", lambda: cls(neg))

    def enabled(self, cfg: _Config) -> list[int]:
        found = []
        dom, anchor = self.dom, self.anchor
        for p, mask in enumerate(cfg):
            while mask:
                low = mask & -mask
                mask ^= low
                n = low.bit_length() - 1
                if anchor[n] == p and all(cfg[q] & low for q in dom[n]):
                    found.append(n)
        found.sort()
        return found

    def successors(self, cfg: _Config) -> Iterator[tuple[int, str, _Config]]:
        for n in self.enabled(cfg):
            for a, updates in self.moves[n]:
                nxt = list(cfg)
                for q, mask in updates:
                    nxt[q] = mask
                yield n, a, tuple(nxt)

    def terminal(self, cfg: _Config) -> bool:
        fb = self.fin_bit
        return all(m & fb for m in cfg)

    def encode(self, c: model.Configuration) -> _Config:
        nidx = self.neg.node_index
        return tuple(sum(1 << nidx[n] for n in ready) for ready in c)

    def decode(self, cfg: _Config) -> model.Configuration:
        nodes = self.neg.nodes
        out = []
        for mask in cfg:
            members = []
            while mask:
                low = mask & -mask
                mask ^= low
                members.append(nodes[low.bit_length() - 1])
            out.append(frozenset(members))
        return tuple(out)


@dataclass
class ReachGraph:
    negotiation: model.Negotiation
    configs: list[_Config]
    succ: list[list[tuple[str, str, int]]]
    parent: list[tuple[int, str, str] | None]
    terminal: frozenset[int]
    initial: int = 0
    _coreach: frozenset[int] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.configs)

    def configuration(self, i: int) -> model.Configuration:
        return Engine.of(self.negotiation).decode(self.configs[i])

    @property
    def edges(self) -> Iterator[tuple[int, str, str, int]]:
        for i, out in enumerate(self.succ):
            for n, a, j in out:
                yield i, n, a, j

    def run_to(self, i: int) -> model.Run:
        """The BFS-tree (hence shortest) run from the initial configuration to ``i``."""
        steps = []
        while self.parent[i] is not None:
            i, n, a = self.parent[i]
            steps.append((n, a))
        steps.reverse()
        return model.Run(tuple(steps), self.negotiation.initial_config())

    def coreachable(self) -> frozenset[int]:
        """Indices from which some terminal configuration is reachable."""
        if self._coreach is None:
            preds: list[list[int]] = [[] for _ in self.configs]
            for i, out in enumerate(self.succ):
                for _, _, j in out:
                    preds[j].append(i)
            seen = set(self.terminal)
            stack = list(seen)
            while stack:
                j = stack.pop()
                for i in preds[j]:
                    if i not in seen:
                        seen.add(i)
                        stack.append(i)
            self._coreach = frozenset(seen)
        return self._coreach

    def deadlocks(self) -> list[int]:
        return [i for i, out in enumerate(self.succ) if not out and i not in self.terminal]


def _explore(neg: model.Negotiation, budget: int, halt_on_deadlock: bool) -> tuple[ReachGraph, int | None]:
    """Breadth-first exploration; optionally stops at the first deadlock popped."""
    eng = Engine.of(neg)
    configs = [eng.initial]
    index = {eng.initial: 0}
    succ: list[list[tuple[str, str, int]]] = []
    parent: list[tuple[int, str, str] | None] = [None]
    terminal = set()
    names = neg.nodes
    i = 0
    while i < len(configs):
        cfg = configs[i]
        is_terminal = eng.terminal(cfg)
        if is_terminal:
            terminal.add(i)
        out = []
        for n, a, nxt in eng.successors(cfg):
            j = index.get(nxt)
            if j is None:
                j = index[nxt] = len(configs)
                if j >= budget:
                    raise model.BudgetExceeded(f"more than {budget} configurations")
                configs.append(nxt)
                parent.append((i, names[n], a))
            out.append((names[n], a, j))
        succ.append(out)
        if halt_on_deadlock and not out and not is_terminal:
            return ReachGraph(neg, configs, succ, parent, frozenset(terminal)), i
        i += 1
    return ReachGraph(neg, configs, succ, parent, frozenset(terminal)), None


def build_reach(neg: model.Negotiation, budget: int = DEFAULT_BUDGET) -> ReachGraph:
    cached = neg._cache.get("reach")
    if cached is None:
        cached = neg._cache["reach"] = _explore(neg, budget, False)[0]
    return cached


def oracle_sound(neg: model.Negotiation, budget: int = DEFAULT_BUDGET) -> model.Verdict:
    """Sound iff every reachable configuration can still reach a terminal one.

    The witness is a shortest initial run into a deadlock when one is
    reachable, else into some configuration that can no longer terminate.
    """
    graph = neg._cache.get("reach")
    if graph is None:
        # configurations are popped in index order, so the first deadlock is the shortest
        graph, stuck = _explore(neg, budget, True)
        if stuck is not None:
            return model.Verdict(False, "oracle", graph.run_to(stuck), stats={"states": len(graph)})
        neg._cache["reach"] = graph
    good = graph.coreachable()
    stats = {"states": len(graph)}
    bad = [i for i in range(len(graph)) if i not in good]
    if not bad:
        return model.Verdict(True, "oracle", stats=stats)
    stuck = graph.deadlocks()
    # indices are BFS discovery order, so the smallest is a shortest run
    target = stuck[0] if stuck else bad[0]
    return model.Verdict(False, "oracle", graph.run_to(target), stats=stats)


def oracle_omit(
    neg: model.Negotiation,
    include: Iterable[model.Step] = (),
    omit: Iterable[str] = (),
    omit_pairs: Iterable[model.Step] = (),
    max_steps: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> model.Run | None:
    """Shortest successful run executing every pair of ``include`` and nothing omitted.

    Searches the product of configurations with the subset of ``include``
    covered so far, which is finite for cyclic inputs as well.
    """
    include = list(dict.fromkeys(include))
    bit = {pair: 1 << k for k, pair in enumerate(include)}
    full = (1 << len(include)) - 1
    omit, omit_pairs = set(omit), set(omit_pairs)
    eng = Engine.of(neg)
    names = neg.nodes
    start = (eng.initial, 0)
    parent: dict[tuple[_Config, int], tuple | None] = {start: None}
    queue = deque([(start, 0)])
    while queue:
        state, depth = queue.popleft()
        cfg, mask = state
        if mask == full and eng.terminal(cfg):
            steps = []
            while parent[state] is not None:
                state, n, a = parent[state]
                steps.append((n, a))
            steps.reverse()
            return model.Run(tuple(steps), neg.initial_config())
        if max_steps is not None and depth >= max_steps:
            continue
        for n, a, nxt in eng.successors(cfg):
            node = names[n]
            if node in omit or (node, a) in omit_pairs:
                continue
            key = (nxt, mask | bit.get((node, a), 0))
            if key not in parent:
                if len(parent) >= budget:
                    raise model.BudgetExceeded(f"more than {budget} product states")
                parent[key] = (state, node, a)
                queue.append((key, depth + 1))
    return None


def oracle_concurrent(
    neg: model.Negotiation, m: str, n: str, budget: int = DEFAULT_BUDGET
) -> model.Configuration | None:
    """First reachable configuration (BFS order) enabling both m and n."""
    if neg.domset(m) & neg.domset(n):
        return None
    graph = build_reach(neg, budget)
    eng = Engine.of(neg)
    nidx = neg.node_index
    bm, bn = 1 << nidx[m], 1 << nidx[n]
    pidx = neg.proc_index
    dm = [pidx[p] for p in neg.dom[m]]
    dn = [pidx[p] for p in neg.dom[n]]
    for cfg in graph.configs:
        if all(cfg[q] & bm for q in dm) and all(cfg[q] & bn for q in dn):
            return eng.decode(cfg)
    return None


@dataclass(frozen=True)
class SpecWitness:
    """A successful run with marked positions i < j violating a specification.

    Position ``len(run)`` denotes the final node's result, executed once
    after the run has terminated; ``virtual_end`` says whether that result
    is declared or only virtual.
    """
    run: model.Run
    i: int
    j: int
    virtual_end: bool
    final_step: model.Step | None = None

    def step_at(self, k: int) -> model.Step:
        if k == len(self.run.steps):
            assert self.final_step is not None
            return self.final_step
        return self.run.steps[k]

    @property
    def pairs(self) -> tuple[model.Step, model.Step]:
        return self.step_at(self.i), self.step_at(self.j)


def oracle_spec(dneg, spec, budget: int = DEFAULT_BUDGET) -> SpecWitness | None:
    """Search (configuration, phase) pairs for a violation of (O1, O2, O).

    Phase 0 waits for an O1 step, phase 1 has marked one and has seen no O
    step since, phase 2 has closed the violation with an O2 step.
    """
    neg = dneg.base
    o1, o2, o = set(spec.o1), set(spec.o2), set(spec.o)
    eng = Engine.of(neg)
    names = neg.nodes
    virtual = not neg.out[neg.fin]

    def advance(phase: int, s: model.Step) -> list[tuple[int, str]]:
        if phase == 2:
            return [(2, "")]
        if phase == 0:
            options = [(0, "")]
            if s in o1:
                options.append((1, "mark"))
            return options
        options = []
        if s in o2:
            options.append((2, "close"))
        if s in o1:
            options.append((1, "mark"))
        elif s not in o:
            options.append((1, ""))
        return options

    start = (eng.initial, 0)
    parent: dict[tuple[_Config, int], tuple | None] = {start: None}
    queue = deque([start])

    def witness(state, last_tag: str | None, final_step: model.Step | None) -> SpecWitness:
        tags, steps = [], []
        while parent[state] is not None:
            state, n, a, tag = parent[state]
            steps.append((n, a))
            tags.append(tag)
        steps.reverse()
        tags.reverse()
        if last_tag is not None:
            tags.append(last_tag)
        j = tags.index("close")
        i = max(k for k in range(j) if tags[k] == "mark")
        return SpecWitness(model.Run(tuple(steps), neg.initial_config()), i, j, virtual, final_step)

    while queue:
        state = queue.popleft()
        cfg, phase = state
        if eng.terminal(cfg):
            if phase == 2:
                return witness(state, None, None)
            for final_step in dneg.final_pairs:
                for nphase, tag in advance(phase, final_step):
                    if nphase == 2:
                        return witness(state, tag or "close", final_step)
        for n, a, nxt in eng.successors(cfg):
            s = (names[n], a)
            if s[0] == neg.fin:
                continue
            for nphase, tag in advance(phase, s):
                key = (nxt, nphase)
                if key not in parent:
                    if len(parent) >= 3 * budget:
                        raise model.BudgetExceeded(f"more than {budget} configurations")
                    parent[key] = (state, s[0], s[1], tag)
                    queue.append(key)
    return None


def _run_to_terminal(eng: Engine, cfg: _Config, budget: int) -> list[tuple[str, str, _Config]]:
    """Shortest step sequence from ``cfg`` to a terminal configuration."""
    parent: dict[_Config, tuple | None] = {cfg: None}
    queue = deque([cfg])
    names = eng.neg.nodes
    while queue:
        cur = queue.popleft()
        if eng.terminal(cur):
            path = []
            while parent[cur] is not None:
                prev, n, a = parent[cur]
                path.append((n, a, cur))
                cur = prev
            path.reverse()
            return path
        for n, a, nxt in eng.successors(cur):
            if nxt not in parent:
                if len(parent) >= budget:
                    raise model.BudgetExceeded(f"more than {budget} configurations")
                parent[nxt] = (cur, names[n], a)
                queue.append(nxt)
    raise PathNotRealizable("no terminal configuration is reachable")


def realize_path(
    neg: model.Negotiation,
    path: Sequence[Edge],
    c: model.Configuration | None = None,
    budget: int = DEFAULT_BUDGET,
) -> model.Run:
    """A run from ``c`` executing the steps of a local path in order.

    After each path step the run is extended along a shortest completion
    until the next path node becomes enabled. That node holds the path's
    process, so the filler steps never involve it.
    """
    if c is None:
        c = neg.initial_config()
    eng = Engine.of(neg)
    cfg = eng.encode(c)
    nidx = neg.node_index
    steps: list[model.Step] = []
    if not path:
        return model.Run((), c)
    if not model.is_enabled(neg, c, path[0].src):
        raise PathNotRealizable(f"{path[0].src} is not enabled in {neg.describe(c)}")
    for e in path:
        if e.dst not in neg.delta.get((e.src, e.result, e.proc), ()):
            raise ValueError(f"{e} is not an edge of {neg.name}")
        for n, a, nxt in eng.successors(cfg):
            if neg.nodes[n] == e.src and a == e.result:
                cfg = nxt
                break
        else:
            raise PathNotRealizable(f"{e.src} is not enabled when the path needs it")
        steps.append((e.src, e.result))
        target = 1 << nidx[e.dst]
        dom = eng.dom[nidx[e.dst]]
        if all(cfg[q] & target for q in dom):
            continue
        for n, a, nxt in _run_to_terminal(eng, cfg, budget):
            steps.append((n, a))
            cfg = nxt
            if all(cfg[q] & target for q in dom):
                break
        else:
            raise PathNotRealizable(f"{e.dst} never becomes enabled")
    return model.Run(tuple(steps), c)


def reorder_topologically(neg: model.Negotiation, run: model.Run) -> model.Run:
    """Bubble steps towards topological order using only legal swaps.

    Adjacent steps may trade places when their nodes have disjoint domains.
    For valid runs of acyclic negotiations every out-of-order adjacent pair
    is swappable, so the result is sorted; otherwise blocked pairs stay put.
    """
    order = topo_order(neg)
    steps = list(run.steps)
    changed = True
    while changed:
        changed = False
        for k in range(len(steps) - 1):
            m, n = steps[k][0], steps[k + 1][0]
            if order.precedes(n, m) and not (neg.domset(m) & neg.domset(n)):
                steps[k], steps[k + 1] = steps[k + 1], steps[k]
                changed = True
    return model.Run(tuple(steps), run.origin)
