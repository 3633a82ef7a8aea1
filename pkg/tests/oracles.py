"""Naive reference implementations used to cross-check the analyses.

They enumerate configurations or runs directly from ``enabled`` and
``step`` and share no code with the package's search routines.
"""
from __future__ import annotations

import itertools
from collections import deque

from negcheck.model import Run, enabled, is_terminal, step


def configurations(neg, limit=200_000):
    """Reachable configurations and successor lists, by plain BFS."""
    start = neg.initial_config()
    succ = {start: []}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        # runs may go on after the final node is enabled, so terminal configurations still step
        for n in enabled(neg, c):
            for a in neg.out[n]:
                d = step(neg, c, n, a)
                succ[c].append(((n, a), d))
                if d not in succ:
                    if len(succ) >= limit:
                        raise RuntimeError("naive exploration too large")
                    succ[d] = []
                    queue.append(d)
    return succ


def is_sound(neg) -> bool:
    succ = configurations(neg)
    good = {c for c in succ if is_terminal(neg, c)}
    changed = True
    while changed:
        changed = False
        for c, outs in succ.items():
            if c not in good and any(d in good for _, d in outs):
                good.add(c)
                changed = True
    return len(good) == len(succ)


def successful_runs(neg, limit=100_000):
    """Every successful run of an acyclic negotiation, depth first."""
    found = []

    def walk(c, steps):
        if len(found) >= limit:
            raise RuntimeError("too many runs")
        # a run that has succeeded may still go on and succeed again later
        if is_terminal(neg, c):
            found.append(tuple(steps))
        for n in enabled(neg, c):
            for a in neg.out[n]:
                steps.append((n, a))
                walk(step(neg, c, n, a), steps)
                steps.pop()

    walk(neg.initial_config(), [])
    return found


def omit_exists(neg, include=(), omit=(), omit_pairs=()) -> bool:
    include, omit, omit_pairs = set(include), set(omit), set(omit_pairs)
    for run in successful_runs(neg):
        steps = set(run)
        if include <= steps and not any(n in omit for n, _ in run) and not steps & omit_pairs:
            return True
    return False


def concurrent(neg, m, n) -> bool:
    if neg.domset(m) & neg.domset(n):
        return False
    return any(m in enabled(neg, c) and n in enabled(neg, c) for c in configurations(neg))


def realizes(neg, run: Run, path) -> bool:
    """Whether ``run`` realizes the local ``path`` from its origin.

    Between the i-th and (i+1)-th path steps no step may involve the
    process labelling the i-th edge; the tail after the last one may not
    involve the last edge's process either.
    """
    steps = list(run.steps)
    pos = 0
    for k, e in enumerate(path):
        if pos >= len(steps) or steps[pos] != (e.src, e.result):
            return False
        pos += 1
        nxt = path[k + 1] if k + 1 < len(path) else None
        while pos < len(steps) and (nxt is None or steps[pos] != (nxt.src, nxt.result)):
            if e.proc in neg.domset(steps[pos][0]):
                return False
            pos += 1
    try:
        run.replay(neg)
    except Exception:
        return False
    return True


def swap_equivalent(neg, a: Run, b: Run) -> bool:
    """Trace equivalence: same steps, and every pair of steps sharing a
    process appears in the same relative order."""
    if sorted(a.steps) != sorted(b.steps):
        return False

    def tagged(run):
        seen: dict = {}
        out = []
        for s in run.steps:
            seen[s] = seen.get(s, 0) + 1
            out.append((s, seen[s]))
        return out

    ta, tb = tagged(a), tagged(b)
    pos = {x: i for i, x in enumerate(tb)}
    for (x, y) in itertools.combinations(ta, 2):
        if neg.domset(x[0][0]) & neg.domset(y[0][0]) and pos[x] > pos[y]:
            return False
    return True


def _p_graph(neg, p):
    import networkx as nx
    g = nx.DiGraph()
    g.add_nodes_from(n for n in neg.nodes if p in neg.domset(n))
    for (n, a, q), tgts in neg.delta.items():
        if q == p:
            g.add_edges_from((n, t) for t in tgts)
    return g


def fork_exists(neg, n1, n2, cross_domain=False) -> bool:
    """Brute-force fork search over simple process paths (deterministic input)."""
    import networkx as nx
    if n1 == n2:
        return False
    reach = nx.descendants(_full_graph(neg), neg.init) | {neg.init}
    graphs = {p: _p_graph(neg, p) for p in neg.processes}

    def paths(p, src, dst):
        if src == dst:
            return [[src]]
        return list(nx.all_simple_paths(graphs[p], src, dst))

    for n in reach:
        for a in neg.out[n]:
            for p1 in neg.dom[n]:
                for p2 in neg.dom[n]:
                    if p1 == p2 or p1 not in neg.domset(n1) or p2 not in neg.domset(n2):
                        continue
                    if cross_domain and (p2 not in neg.domset(n1) or p1 not in neg.domset(n2)):
                        continue
                    (x,), (y,) = neg.delta[(n, a, p1)], neg.delta[(n, a, p2)]
                    for one in paths(p1, x, n1):
                        for two in paths(p2, y, n2):
                            if not set(one) & set(two):
                                return True
    return False


def _full_graph(neg):
    import networkx as nx
    g = nx.DiGraph()
    g.add_nodes_from(neg.nodes)
    for (n, a, p), tgts in neg.delta.items():
        g.add_edges_from((n, t) for t in tgts)
    return g


def verify_fork(neg, fork) -> None:
    n, a = fork.branch
    import networkx as nx
    assert n == neg.init or n in nx.descendants(_full_graph(neg), neg.init)
    walks = []
    for p, start, end, path in ((fork.p1, fork.start1, fork.n1, fork.path1),
                                (fork.p2, fork.start2, fork.n2, fork.path2)):
        assert p in neg.domset(n) and p in neg.domset(end)
        assert neg.delta[(n, a, p)] == (start,)
        nodes = [start]
        for e in path:
            assert e.src == nodes[-1] and e.proc == p
            assert neg.delta[(e.src, e.result, p)] == (e.dst,)
            nodes.append(e.dst)
        assert nodes[-1] == end
        walks.append(nodes)
    assert fork.p1 != fork.p2
    assert not set(walks[0]) & set(walks[1])


def verify_circuit(neg, circuit) -> None:
    nodes = [e.src for e in circuit]
    for e, nxt in zip(circuit, circuit[1:] + circuit[:1]):
        assert e.dst == nxt.src
        assert e.dst in neg.delta[(e.src, e.result, e.proc)]
    for n in nodes:
        assert any(not neg.domset(m) <= neg.domset(n) for m in nodes), f"{n} dominates"
    import networkx as nx
    reach = nx.descendants(_full_graph(neg), neg.init) | {neg.init}
    assert reach & set(nodes)


def spec_violations(dneg, spec) -> set:
    """Violating (first, second) pairs over every successful run of an acyclic base."""
    found = set()
    for run in successful_runs(dneg.base):
        for end in dneg.final_pairs:
            seq = list(run) + [end]
            for i, x in enumerate(seq):
                if x not in spec.o1:
                    continue
                for j in range(i + 1, len(seq)):
                    if seq[j] in spec.o2:
                        found.add((x, seq[j]))
                    if seq[j] in spec.o:
                        break
    return found


def co_occurring(neg, m, n) -> bool:
    """Some successful run of an acyclic sound negotiation executes both nodes."""
    return any({m, n} <= {x for x, _ in run} for run in successful_runs(neg))
