"""Soundness of deterministic negotiations via the three anti-patterns.

B: a process can reach a node from which it cannot reach the final node.
F: a fork whose two branches each reach a node that waits for the other branch.
C: a reachable local circuit none of whose nodes dominates the others.

A deterministic negotiation is unsound exactly when one of them occurs.

The F search uses a first-hit reduction that is exact on cyclic graphs too.
Cut each fork branch at the first node containing the other branch's
process. After the cut, the branches can only meet at their endpoints,
so the paths are disjoint iff the two endpoints differ. The search
therefore only asks which first-hit nodes each branch can reach.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .graph import (
    Edge,
    bfs_path,
    graph_of,
    p_reach,
    path_nodes,
    proc_adjacency,
    reachable_from_init,
    strongly_connected_components,
    topo_order,
)
from .model import (
    BudgetExceeded,
    Negotiation,
    PreconditionError,
    Step,
    Verdict,
    classify,
)

SIMPLE_PATH_BUDGET = 200_000


@dataclass(frozen=True)
class Fork:
    p1: str
    p2: str
    n1: str
    n2: str
    branch: Step
    start1: str
    start2: str
    path1: tuple[Edge, ...]
    path2: tuple[Edge, ...]

    @property
    def nodes1(self) -> list[str]:
        return path_nodes(self.start1, self.path1)

    @property
    def nodes2(self) -> list[str]:
        return path_nodes(self.start2, self.path2)

    def __str__(self) -> str:
        n, a = self.branch
        return (f"fork ({self.p1},{self.p2},{self.n1},{self.n2}) at ({n},{a}): "
                f"{self.p1} via {'>'.join(self.nodes1)}, {self.p2} via {'>'.join(self.nodes2)}")


@dataclass(frozen=True)
class PatternB:
    process: str
    node: str
    path: tuple[Edge, ...]

    def __str__(self) -> str:
        return f"B: {self.process} reaches {self.node} but no {self.process}-path leads on to the final node"


@dataclass(frozen=True)
class PatternF:
    fork: Fork

    def __str__(self) -> str:
        return f"F: {self.fork}"


@dataclass(frozen=True)
class PatternC:
    circuit: tuple[Edge, ...]

    @property
    def nodes(self) -> list[str]:
        return [e.src for e in self.circuit]

    def __str__(self) -> str:
        loop = self.nodes + [self.nodes[0]]
        return f"C: circuit {'>'.join(loop)} has no dominating node"


AntiPatternWitness = PatternB | PatternF | PatternC


def _require_deterministic(neg: Negotiation) -> None:
    if not classify(neg).deterministic:
        raise PreconditionError(f"{neg.name} is not deterministic")


def find_pattern_B(neg: Negotiation) -> PatternB | None:
    adj = proc_adjacency(neg)
    for p in neg.processes:
        alive = p_reach(neg, p, [neg.fin], "bwd")
        path = bfs_path([neg.init], lambda n: adj[p].get(n, ()), lambda n: n not in alive)
        if path is not None:
            node = path[-1].dst if path else neg.init
            return PatternB(p, node, tuple(path))
    return None


def find_pattern_C(neg: Negotiation) -> PatternC | None:
    """Peel strongly connected regions by domain size.

    In a region whose largest nodes all carry the union of the region's
    domains, every circuit through them is dominated, so only circuits in
    what remains after deleting them can be anti-patterns.
    """
    reach = reachable_from_init(neg)
    succ = graph_of(neg).succ
    targets = {n: [e.dst for e in succ[n]] for n in neg.nodes}
    order = neg.node_index
    verts = [n for n in neg.nodes if n in reach]
    work = deque(sorted(
        (c for c in strongly_connected_components(verts, targets.__getitem__) if len(c) > 1),
        key=lambda c: min(order[n] for n in c),
    ))
    while work:
        region = sorted(work.popleft(), key=order.__getitem__)
        inside = set(region)
        size = max(len(neg.dom[n]) for n in region)
        union = frozenset().union(*(neg.domset(n) for n in region))
        for u in region:
            if len(neg.dom[u]) == size and neg.domset(u) != union:
                p = next(q for q in neg.processes if q in union and q not in neg.domset(u))
                circuit = _circuit_through(neg, inside, u, p)
                if circuit is not None:
                    return PatternC(tuple(circuit))
        rest = [n for n in region if len(neg.dom[n]) < size]
        subs = [c for c in strongly_connected_components(rest, targets.__getitem__) if len(c) > 1]
        subs.sort(key=lambda c: min(order[n] for n in c))
        work.extend(subs)
    return None


def _circuit_through(neg: Negotiation, inside: set[str], u: str, p: str) -> list[Edge] | None:
    succ = graph_of(neg).succ
    step = lambda n: succ[n]
    allowed = inside.__contains__
    there = bfs_path([u], step, lambda n: p in neg.domset(n), allowed)
    if there is None:
        return None
    v = there[-1].dst
    back = bfs_path([v], step, lambda n: n == u, allowed)
    if back is None:
        return None
    circuit = there + back
    if dominating_nodes(neg, [e.src for e in circuit]):
        return None
    return circuit


def dominating_nodes(neg: Negotiation, circuit_nodes: list[str]) -> list[str]:
    union = frozenset().union(*(neg.domset(n) for n in circuit_nodes))
    return [n for n in dict.fromkeys(circuit_nodes) if neg.domset(n) == union]


def _branches(neg: Negotiation) -> Iterator[tuple[str, str, dict[str, str]]]:
    """Reachable (node, result) pairs that send some two processes to different nodes."""
    reach = reachable_from_init(neg)
    for n in neg.nodes:
        if n not in reach or len(neg.dom[n]) < 2:
            continue
        for a in neg.out[n]:
            starts = {p: neg.delta[(n, a, p)][0] for p in neg.dom[n]}
            if len(set(starts.values())) > 1:
                yield n, a, starts


class _FirstHits:
    """For a start node x and process p1: per other process q, the nodes
    reachable from x by a p1-path whose nodes before the last all lack q
    and whose last node has q."""

    def __init__(self, neg: Negotiation, p1: str, x: str, watched: int):
        pidx = neg.proc_index
        dommask = neg.memo("dommask", lambda: {
            n: sum(1 << pidx[p] for p in neg.dom[n]) for n in neg.nodes})
        adj = proc_adjacency(neg)[p1]
        z = {x: watched}
        queue = deque([x])
        while queue:
            v = queue.popleft()
            passing = z[v] & ~dommask[v]
            if not passing:
                continue
            for e in adj.get(v, ()):
                old = z.get(e.dst, 0)
                new = old | passing
                if new != old:
                    z[e.dst] = new
                    queue.append(e.dst)
        self.hits: dict[int, list[str]] = {}
        for v, mask in z.items():
            hit = mask & dommask[v]
            while hit:
                low = hit & -hit
                hit ^= low
                self.hits.setdefault(low.bit_length() - 1, []).append(v)


def _cross_fork(neg: Negotiation) -> Fork | None:
    pidx = neg.proc_index
    order = neg.node_index
    adj = proc_adjacency(neg)
    memo: dict[tuple, _FirstHits] = {}
    for n, a, starts in _branches(neg):
        dom = neg.dom[n]
        watched = sum(1 << pidx[p] for p in dom)
        info = {}
        for p in dom:
            key = (p, starts[p], watched & ~(1 << pidx[p]))
            if key not in memo:
                memo[key] = _FirstHits(neg, p, starts[p], key[2])
            info[p] = memo[key]
        for i, p1 in enumerate(dom):
            for p2 in dom[i + 1:]:
                if starts[p1] == starts[p2]:
                    continue
                ends1 = sorted(info[p1].hits.get(pidx[p2], ()), key=order.__getitem__)
                ends2 = sorted(info[p2].hits.get(pidx[p1], ()), key=order.__getitem__)
                pair = next(((u, v) for u in ends1 for v in ends2 if u != v), None)
                if pair is None:
                    continue
                n1, n2 = pair
                path1 = bfs_path([starts[p1]], lambda w: adj[p1].get(w, ()), lambda w: w == n1,
                                 lambda w: w == n1 or p2 not in neg.domset(w))
                path2 = bfs_path([starts[p2]], lambda w: adj[p2].get(w, ()), lambda w: w == n2,
                                 lambda w: w == n2 or p1 not in neg.domset(w))
                return Fork(p1, p2, n1, n2, (n, a), starts[p1], starts[p2], tuple(path1), tuple(path2))
    return None


def _lockstep_paths(neg, p1, x, n1, p2, y, n2):
    """Disjoint p1-path x->n1 and p2-path y->n2 in an acyclic negotiation.

    Always advancing the endpoint that is earlier in the topological order
    means neither path can later step on a node the other has left behind.
    """
    rank = topo_order(neg).rank
    adj1, adj2 = proc_adjacency(neg)[p1], proc_adjacency(neg)[p2]
    start = (x, y)
    parent: dict[tuple[str, str], tuple | None] = {start: None}
    queue = deque([start])
    while queue:
        u, v = state = queue.popleft()
        if u == n1 and v == n2:
            path1, path2 = [], []
            while parent[state] is not None:
                state, side, e = parent[state]
                (path1 if side == 1 else path2).append(e)
            return path1[::-1], path2[::-1]
        moves = []
        if rank[u] < rank[v] or v == n2:
            moves += [(1, e, (e.dst, v)) for e in adj1.get(u, ())]
        if rank[v] < rank[u] or u == n1:
            moves += [(2, e, (u, e.dst)) for e in adj2.get(v, ())]
        for side, e, nxt in moves:
            if nxt[0] != nxt[1] and nxt not in parent:
                parent[nxt] = (state, side, e)
                queue.append(nxt)
    return None


def _enumerated_paths(neg, p1, x, n1, p2, y, n2, budget=SIMPLE_PATH_BUDGET):
    """Cyclic case: try each simple p1-path, then look for a p2-path around it."""
    adj1, adj2 = proc_adjacency(neg)[p1], proc_adjacency(neg)[p2]
    tried = 0
    stack = [(x, [], {x})]
    while stack:
        u, path, used = stack.pop()
        if u == n1:
            tried += 1
            if tried > budget:
                raise BudgetExceeded(f"more than {budget} simple paths while searching a fork")
            other = bfs_path([y], lambda w: adj2.get(w, ()), lambda w: w == n2,
                             lambda w: w not in used)
            if other is not None:
                return path, other
            continue
        for e in reversed(adj1.get(u, ())):
            if e.dst not in used:
                stack.append((e.dst, path + [e], used | {e.dst}))
    return None


def find_fork(
    neg: Negotiation,
    ends: tuple[str, str] | None = None,
    cross_domain: bool = False,
) -> Fork | None:
    """First fork in (node, result, process pair) order.

    With ``ends`` the fork must end at exactly those nodes; with
    ``cross_domain`` each end must also involve the other fork process.
    """
    _require_deterministic(neg)
    if ends is None:
        if cross_domain:
            return _cross_fork(neg)
        for n, a, starts in _branches(neg):
            dom = neg.dom[n]
            for i, p1 in enumerate(dom):
                for p2 in dom[i + 1:]:
                    if starts[p1] != starts[p2]:
                        return Fork(p1, p2, starts[p1], starts[p2], (n, a),
                                    starts[p1], starts[p2], (), ())
        return None
    n1, n2 = ends
    if n1 == n2:
        return None
    search = _lockstep_paths if classify(neg).acyclic else _enumerated_paths
    d1, d2 = neg.domset(n1), neg.domset(n2)
    for n, a, starts in _branches(neg):
        for p1 in neg.dom[n]:
            if p1 not in d1 or (cross_domain and p1 not in d2):
                continue
            for p2 in neg.dom[n]:
                if p2 == p1 or p2 not in d2 or (cross_domain and p2 not in d1):
                    continue
                x, y = starts[p1], starts[p2]
                if x == y:
                    continue
                if n1 not in p_reach(neg, p1, [x]) or n2 not in p_reach(neg, p2, [y]):
                    continue
                found = search(neg, p1, x, n1, p2, y, n2)
                if found is not None:
                    return Fork(p1, p2, n1, n2, (n, a), x, y, tuple(found[0]), tuple(found[1]))
    return None


def find_pattern_F(neg: Negotiation) -> PatternF | None:
    fork = find_fork(neg, cross_domain=True)
    return PatternF(fork) if fork else None


def det_soundness(neg: Negotiation) -> Verdict:
    """Checks B, then F, then C; the first anti-pattern found is the witness."""
    _require_deterministic(neg)

    def compute():
        reach = reachable_from_init(neg)
        dropped = tuple(n for n in neg.nodes if n not in reach)
        for finder in (find_pattern_B, find_pattern_F, find_pattern_C):
            witness = finder(neg)
            if witness is not None:
                return Verdict(False, "patterns", witness, dropped)
        return Verdict(True, "patterns", None, dropped)
    return neg.memo("det_soundness", compute)


def check_fork(neg: Negotiation, fork: Fork) -> list[str]:
    """Problems with a fork, by direct inspection; empty when it is valid."""
    problems = []
    n, a = fork.branch
    if n not in reachable_from_init(neg):
        problems.append(f"branch node {n} is not reachable")
    for p, start, end, path in ((fork.p1, fork.start1, fork.n1, fork.path1),
                                (fork.p2, fork.start2, fork.n2, fork.path2)):
        if p not in neg.domset(n) or p not in neg.domset(end):
            problems.append(f"{p} is not in the domain of both {n} and {end}")
        if neg.delta[(n, a, p)] != (start,):
            problems.append(f"{start} is not the {p}-successor of ({n},{a})")
        cur = start
        for e in path:
            if e.src != cur or e.proc != p or e.dst not in neg.delta.get((e.src, e.result, p), ()):
                problems.append(f"{e} does not continue a {p}-path")
            cur = e.dst
        if cur != end:
            problems.append(f"{p}-path ends at {cur}, not {end}")
    if set(fork.nodes1) & set(fork.nodes2):
        problems.append("paths share a node")
    return problems
