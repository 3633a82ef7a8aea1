"""The graph of a negotiation and reachability primitives over it."""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Callable, Collection, Iterable, Iterator, NamedTuple, Sequence

from .model import Negotiation, NegotiationError


class Edge(NamedTuple):
    src: str
    proc: str
    result: str
    dst: str

    def __str__(self) -> str:
        return f"{self.src}-({self.proc},{self.result})->{self.dst}"


class CycleFound(NegotiationError):
    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__("negotiation is cyclic: " + " -> ".join(self.cycle))


@dataclass(frozen=True)
class NegGraph:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    succ: dict[str, tuple[Edge, ...]]
    pred: dict[str, tuple[Edge, ...]]

    def proc_succ(self, p: str) -> dict[str, tuple[Edge, ...]]:
        return {n: tuple(e for e in es if e.proc == p) for n, es in self.succ.items()}


def graph_of(neg: Negotiation) -> NegGraph:
    def compute():
        edges = [Edge(n, p, a, t) for (n, a, p), tgts in neg.delta.items() for t in tgts]
        succ: dict[str, list[Edge]] = {n: [] for n in neg.nodes}
        pred: dict[str, list[Edge]] = {n: [] for n in neg.nodes}
        for e in edges:
            succ[e.src].append(e)
            pred[e.dst].append(e)
        return NegGraph(
            neg.nodes,
            tuple(edges),
            {n: tuple(es) for n, es in succ.items()},
            {n: tuple(es) for n, es in pred.items()},
        )
    return neg.memo("graph", compute)


def proc_adjacency(neg: Negotiation) -> dict[str, dict[str, tuple[Edge, ...]]]:
    """Per-process successor edges: ``adj[p][n]`` lists the p-edges leaving n."""
    def compute():
        adj: dict[str, dict[str, list[Edge]]] = {p: {} for p in neg.processes}
        for e in graph_of(neg).edges:
            adj[e.proc].setdefault(e.src, []).append(e)
        return {p: {n: tuple(es) for n, es in m.items()} for p, m in adj.items()}
    return neg.memo("proc_adj", compute)


def proc_adjacency_rev(neg: Negotiation) -> dict[str, dict[str, tuple[Edge, ...]]]:
    def compute():
        adj: dict[str, dict[str, list[Edge]]] = {p: {} for p in neg.processes}
        for e in graph_of(neg).edges:
            adj[e.proc].setdefault(e.dst, []).append(e)
        return {p: {n: tuple(es) for n, es in m.items()} for p, m in adj.items()}
    return neg.memo("proc_adj_rev", compute)


class TopoOrder:
    """A fixed linear extension of the edge relation of an acyclic negotiation."""

    def __init__(self, order: Sequence[str]):
        self.order = tuple(order)
        self.rank = {n: i for i, n in enumerate(self.order)}

    def precedes(self, m: str, n: str) -> bool:
        """Strict: m comes before n."""
        return self.rank[m] < self.rank[n]

    def sort(self, nodes: Iterable[str]) -> list[str]:
        return sorted(nodes, key=self.rank.__getitem__)

    def __iter__(self) -> Iterator[str]:
        return iter(self.order)

    def __len__(self) -> int:
        return len(self.order)

    def __repr__(self) -> str:
        return f"TopoOrder({', '.join(self.order)})"


def topo_order(neg: Negotiation) -> TopoOrder:
    """Kahn's algorithm; ties go to the node declared first. Raises CycleFound."""
    def compute():
        g = graph_of(neg)
        idx = neg.node_index
        indeg = {n: 0 for n in neg.nodes}
        targets = {n: {e.dst for e in g.succ[n]} for n in neg.nodes}
        for n in neg.nodes:
            for m in targets[n]:
                indeg[m] += 1
        heap = [idx[n] for n in neg.nodes if indeg[n] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            n = neg.nodes[heapq.heappop(heap)]
            order.append(n)
            for m in targets[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    heapq.heappush(heap, idx[m])
        if len(order) != len(neg.nodes):
            left = [n for n in neg.nodes if indeg[n] > 0]
            return CycleFound(_some_cycle(left, targets))
        return TopoOrder(order)
    result = neg.memo("topo", compute)
    if isinstance(result, CycleFound):
        raise CycleFound(result.cycle)
    return result


def _some_cycle(nodes: list[str], targets: dict[str, set[str]]) -> list[str]:
    # every node left over by Kahn has a predecessor that is also left over,
    # so walking backwards must close a cycle; the walk starts at the node
    # declared last, which reports a cycle near the final node
    inside = set(nodes)
    preds: dict[str, str] = {}
    for n in nodes:
        for m in targets[n]:
            if m in inside:
                preds.setdefault(m, n)
    walk, seen = [nodes[-1]], {nodes[-1]: 0}
    while True:
        nxt = preds[walk[-1]]
        if nxt in seen:
            cycle = walk[seen[nxt]:]
            cycle.reverse()
            return cycle + [cycle[0]]
        seen[nxt] = len(walk)
        walk.append(nxt)


def bfs_path(
    starts: Iterable[str],
    succ: Callable[[str], Iterable[Edge]],
    goal: Callable[[str], bool],
    allowed: Callable[[str], bool] = lambda n: True,
) -> list[Edge] | None:
    """Shortest edge path from some start to a goal node; [] if a start is a goal.

    Only nodes satisfying ``allowed`` are entered (starts included).
    """
    parent: dict[str, Edge | None] = {}
    queue: deque[str] = deque()
    for s in starts:
        if s not in parent and allowed(s):
            parent[s] = None
            queue.append(s)
    while queue:
        n = queue.popleft()
        if goal(n):
            path = []
            while parent[n] is not None:
                e = parent[n]
                path.append(e)
                n = e.src
            path.reverse()
            return path
        for e in succ(n):
            if e.dst not in parent and allowed(e.dst):
                parent[e.dst] = e
                queue.append(e.dst)
    return None


def p_reach(neg: Negotiation, p: str, sources: Iterable[str], direction: str = "fwd") -> frozenset[str]:
    """Nodes connected to ``sources`` by p-paths (reflexive)."""
    if direction == "fwd":
        adj, end = proc_adjacency(neg)[p], "dst"
    elif direction == "bwd":
        adj, end = proc_adjacency_rev(neg)[p], "src"
    else:
        raise ValueError(f"direction must be fwd or bwd, not {direction!r}")
    seen = set(sources)
    stack = list(seen)
    while stack:
        n = stack.pop()
        for e in adj.get(n, ()):
            m = getattr(e, end)
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return frozenset(seen)


def p_path(neg: Negotiation, p: str, sources: Iterable[str], target: str) -> list[Edge] | None:
    adj = proc_adjacency(neg)[p]
    return bfs_path(sources, lambda n: adj.get(n, ()), lambda n: n == target)


def local_reach(neg: Negotiation, sources: Iterable[str]) -> frozenset[str]:
    succ = graph_of(neg).succ
    seen = set(sources)
    stack = list(seen)
    while stack:
        n = stack.pop()
        for e in succ[n]:
            if e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return frozenset(seen)


def reachable_from_init(neg: Negotiation) -> frozenset[str]:
    return neg.memo("reach_init", lambda: local_reach(neg, [neg.init]))


def local_path(neg: Negotiation, sources: Iterable[str], target: str) -> list[Edge] | None:
    succ = graph_of(neg).succ
    return bfs_path(sources, succ.__getitem__, lambda n: n == target)


def strongly_connected_components(
    vertices: Collection[str], succ: Callable[[str], Iterable[str]]
) -> list[list[str]]:
    """Iterative Tarjan over the subgraph induced by ``vertices``."""
    inside = vertices if isinstance(vertices, (set, frozenset)) else set(vertices)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        work = [(root, iter([m for m in succ(root) if m in inside]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([m for m in succ(w) if m in inside])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def sccs(
    graph: NegGraph,
    vertex_filter: Callable[[str], bool] | None = None,
    required_hits: Sequence[Collection[str]] = (),
) -> frozenset[str] | None:
    """First SCC of the filtered graph that has an edge and meets every hit set."""
    verts = [n for n in graph.nodes if vertex_filter is None or vertex_filter(n)]
    targets = {n: [e.dst for e in graph.succ[n]] for n in verts}
    for comp in strongly_connected_components(verts, targets.__getitem__):
        members = set(comp)
        has_edge = len(comp) > 1 or comp[0] in targets[comp[0]]
        if has_edge and all(members & set(h) for h in required_hits):
            return frozenset(members)
    return None


def path_nodes(start: str, path: Sequence[Edge]) -> list[str]:
    return [start] + [e.dst for e in path]
