"""Negotiation constructors: hardness gadgets and random instances."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Negotiation, NegotiationError, classify, validate


class SamplingBudgetExceeded(NegotiationError):
    pass


@dataclass(frozen=True)
class Cnf3:
    """3-CNF formula; literal +i is x_i and -i its negation, variables count from 1."""
    variable_count: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.variable_count < 1:
            raise ValueError("a formula needs at least one variable")
        if not self.clauses:
            raise ValueError("a formula needs at least one clause")
        for clause in self.clauses:
            if len(clause) != 3:
                raise ValueError(f"clause {clause} does not have three literals")
            for lit in clause:
                if lit == 0 or abs(lit) > self.variable_count:
                    raise ValueError(f"literal {lit} is not over x1..x{self.variable_count}")

    def satisfied_by(self, valuation: Sequence[bool]) -> bool:
        return all(any(valuation[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses)

    def satisfiable(self) -> bool:
        return any(self.satisfied_by(v)
                   for v in itertools.product((False, True), repeat=self.variable_count))

    def __str__(self) -> str:
        lit = lambda l: f"x{l}" if l > 0 else f"~x{-l}"
        return " & ".join("(" + " | ".join(lit(l) for l in c) + ")" for c in self.clauses)


def parse_dimacs(text: str) -> Cnf3:
    header = None
    literals: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(("c", "%")):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        literals.extend(int(tok) for tok in line.split())
    if header is None:
        raise ValueError("missing 'p cnf' line")
    clauses, current = [], []
    for lit in literals:
        if lit == 0:
            clauses.append(tuple(current))
            current = []
        else:
            current.append(lit)
    if current:
        raise ValueError("last clause is not terminated by 0")
    if len(clauses) != header[1]:
        raise ValueError(f"header announces {header[1]} clauses, found {len(clauses)}")
    return Cnf3(header[0], tuple(clauses))


def gen_from_cnf(f: Cnf3) -> Negotiation:
    """Negotiation that is unsound iff ``f`` is satisfiable.

    Process E picks a valuation through m0..mk. For literal d of clause j,
    P_j_d reads the choice on its variable and ends up at r_j_d when the
    literal is true, which forces m_j_d before n_j_d. Processes T, T' and
    V then order t_1 < t'_1 < ... < t'_m < t_1 when every clause is true.
    """
    k, clauses = f.variable_count, f.clauses
    m = len(clauses)
    E = "E"
    V = [f"V{j}" for j in range(1, m + 1)]
    lits = [(j, d) for j in range(1, m + 1) for d in (1, 2, 3)]
    T = {jd: f"T{jd[0]}_{jd[1]}" for jd in lits}
    Tp = {jd: f"Tp{jd[0]}_{jd[1]}" for jd in lits}
    P = {jd: f"P{jd[0]}_{jd[1]}" for jd in lits}
    literal = {(j, d): clauses[j - 1][d - 1] for j, d in lits}
    procs = [E] + V + [x for jd in lits for x in (T[jd], Tp[jd], P[jd])]
    on_var = {i: [P[jd] for jd in lits if abs(literal[jd]) == i] for i in range(1, k + 1)}

    dom: dict[str, list[str]] = {"init": procs}
    out: dict[str, list[str]] = {"init": ["a"]}
    delta: dict[tuple[str, str, str], list[str]] = {}
    for i in range(k + 1):
        dom[f"m{i}"] = [E] + (on_var[i + 1] if i < k else [])
        out[f"m{i}"] = ["1", "0"] if i < k else ["a"]
    for i in range(1, k + 1):
        for sign in ("pos", "neg"):
            dom[f"n{i}{sign}"] = [E] + on_var[i]
            out[f"n{i}{sign}"] = ["a"]
    for j, d in lits:
        s = f"{j}_{d}"
        dom[f"m{s}"] = [T[(j, d)]]
        dom[f"n{s}"] = [Tp[(j, d)], P[(j, d)]]
        dom[f"r{s}"] = [T[(j, d)], P[(j, d)]]
        for x in ("m", "n", "r"):
            out[f"{x}{s}"] = ["a"]
    for j in range(1, m + 1):
        prev = V[j - 2] if j > 1 else V[m - 1]
        dom[f"t{j}"] = [prev] + [T[(j, d)] for d in (1, 2, 3)]
        dom[f"tp{j}"] = [V[j - 1]] + [Tp[(j, d)] for d in (1, 2, 3)]
        out[f"t{j}"] = ["a"]
        out[f"tp{j}"] = ["a"]
    dom["fin"] = procs
    out["fin"] = []

    delta[("init", "a", E)] = ["m0"]
    for j in range(1, m + 1):
        delta[("init", "a", V[j - 1])] = [f"tp{j}"]
    for j, d in lits:
        s, i = f"{j}_{d}", abs(literal[(j, d)])
        delta[("init", "a", T[(j, d)])] = [f"t{j}"]
        delta[("init", "a", Tp[(j, d)])] = [f"n{s}"]
        delta[("init", "a", P[(j, d)])] = [f"m{i - 1}"]
    for i in range(1, k + 1):
        for res, sign in (("1", "pos"), ("0", "neg")):
            for p in dom[f"m{i - 1}"]:
                delta[(f"m{i - 1}", res, p)] = [f"n{i}{sign}"]
            delta[(f"n{i}{sign}", "a", E)] = [f"m{i}"]
    delta[(f"m{k}", "a", E)] = ["fin"]
    for j, d in lits:
        s, lit = f"{j}_{d}", literal[(j, d)]
        i = abs(lit)
        true_side = "pos" if lit > 0 else "neg"
        false_side = "neg" if lit > 0 else "pos"
        delta[(f"n{i}{true_side}", "a", P[(j, d)])] = [f"r{s}"]
        delta[(f"n{i}{false_side}", "a", P[(j, d)])] = [f"n{s}"]
        delta[(f"m{s}", "a", T[(j, d)])] = [f"r{s}"]
        delta[(f"r{s}", "a", T[(j, d)])] = ["fin"]
        delta[(f"r{s}", "a", P[(j, d)])] = ["fin", f"n{s}"]
        delta[(f"n{s}", "a", Tp[(j, d)])] = [f"tp{j}"]
        delta[(f"n{s}", "a", P[(j, d)])] = ["fin", f"r{s}"]
    for j in range(1, m + 1):
        prev = V[j - 2] if j > 1 else V[m - 1]
        delta[(f"t{j}", "a", prev)] = ["fin"]
        for d in (1, 2, 3):
            delta[(f"t{j}", "a", T[(j, d)])] = [f"m{j}_{d}"]
            delta[(f"tp{j}", "a", Tp[(j, d)])] = ["fin"]
        delta[(f"tp{j}", "a", V[j - 1])] = [f"t{j % m + 1}"]

    nodes = (["init", "m0"]
             + [x for i in range(1, k + 1) for x in (f"n{i}pos", f"n{i}neg", f"m{i}")]
             + [f"{x}{j}_{d}" for j, d in lits for x in ("m", "n", "r")]
             + [x for j in range(1, m + 1) for x in (f"t{j}", f"tp{j}")]
             + ["fin"])
    return validate({
        "name": "cnf",
        "processes": procs,
        "nodes": nodes,
        "dom": dom,
        "out": out,
        "delta": delta,
        "init": "init",
        "fin": "fin",
    })


def enumerate_cnf(max_vars: int = 3, max_clauses: int = 3) -> list[Cnf3]:
    """Every 3-CNF up to renaming and negating variables, one representative each.

    Clauses are multisets of literals and formulas multisets of clauses.
    Only variables that occur are counted, so each class appears once,
    with the smallest variable count that covers it.
    """
    lits = [s * i for i in range(1, max_vars + 1) for s in (1, -1)]
    clause_pool = list(itertools.combinations_with_replacement(sorted(lits), 3))
    maps = []
    for perm in itertools.permutations(range(1, max_vars + 1)):
        for signs in itertools.product((1, -1), repeat=max_vars):
            maps.append({i: perm[i - 1] * signs[i - 1] for i in range(1, max_vars + 1)})

    def canon(formula):
        best = None
        for mp in maps:
            img = tuple(sorted(tuple(sorted((1 if l > 0 else -1) * mp[abs(l)] for l in c))
                               for c in formula))
            if best is None or img < best:
                best = img
        return best

    seen = set()
    found = []
    for count in range(1, max_clauses + 1):
        for formula in itertools.combinations_with_replacement(clause_pool, count):
            key = canon(formula)
            if key in seen:
                continue
            seen.add(key)
            used = sorted({abs(l) for c in key for l in c})
            rename = {v: i for i, v in enumerate(used, start=1)}
            clauses = tuple(tuple((1 if l > 0 else -1) * rename[abs(l)] for l in c) for c in key)
            found.append(Cnf3(len(used), clauses))
    return found


def parse_edge_list(text: str) -> list[tuple[str, str]]:
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 2:
            raise ValueError(f"line {lineno}: expected two vertices")
        edges.append((line[0], line[1]))
    return edges


def gen_from_digraph(
    edges: Iterable[tuple[str, str]],
    s: str,
    t: str,
    vertices: Iterable[str] = (),
) -> Negotiation:
    """One-process negotiation that is sound iff ``t`` is reachable from ``s``.

    Each vertex is a node, each edge (u,v) a result ``to_v`` of u, and every
    node but ``t`` also has a result ``back`` returning to ``s``.
    """
    edges = list(dict.fromkeys(edges))
    verts = list(dict.fromkeys([s, *vertices, *(x for e in edges for x in e), t]))
    if s == t:
        raise ValueError("source and target must differ")
    if any(v == s for _, v in edges):
        raise ValueError(f"source {s} has an incoming edge")
    if any(u == t for u, _ in edges):
        raise ValueError(f"target {t} has an outgoing edge")
    p = "p"
    out: dict[str, list[str]] = {v: [] for v in verts}
    delta = {}
    for u, v in edges:
        out[u].append(f"to_{v}")
        delta[(u, f"to_{v}", p)] = [v]
    for v in verts:
        if v != t:
            out[v].append("back")
            delta[(v, "back", p)] = [s]
    return validate({
        "name": "digraph",
        "processes": [p],
        "nodes": verts,
        "dom": {v: [p] for v in verts},
        "out": out,
        "delta": delta,
        "init": s,
        "fin": t,
    })


def random_dag(vertex_count: int, edge_prob: float, rng: random.Random) -> list[tuple[str, str]]:
    """Random DAG over v0..v{n-1}; v0 has no incoming and the last vertex no outgoing edge."""
    names = [f"v{i}" for i in range(vertex_count)]
    edges = []
    for i in range(vertex_count):
        for j in range(i + 1, vertex_count):
            if rng.random() < edge_prob:
                edges.append((names[i], names[j]))
    return edges


@dataclass(frozen=True)
class RandomParams:
    nodes: int = 8
    procs: int = 3
    max_results: int = 2
    acyclic: bool = True
    deterministic: bool = True
    weakly_nd: bool = False
    back_arc_prob: float = 0.15
    hyper_prob: float = 0.3
    max_tries: int = 1000

    def __post_init__(self):
        if self.nodes < 2 or self.procs < 1 or self.max_results < 1:
            raise ValueError("need at least two nodes, one process and one result")
        if self.deterministic and self.weakly_nd:
            # deterministic negotiations are weakly non-deterministic anyway
            object.__setattr__(self, "weakly_nd", True)


def gen_random(params: RandomParams, seed: int) -> Negotiation:
    """Reproducible random negotiation of the requested class.

    ``acyclic=False`` allows back-arcs without demanding a cycle. With
    ``weakly_nd`` a random nonempty set of processes stays deterministic
    and every node gets one of them; hyper-arcs go to the others only.
    """
    rng = random.Random(seed)
    for _ in range(params.max_tries):
        neg = _sample(params, rng, seed)
        flags = classify(neg)
        if params.acyclic and not flags.acyclic:
            continue
        if params.deterministic and not flags.deterministic:
            continue
        if params.weakly_nd and not flags.weakly_nd:
            continue
        return neg
    raise SamplingBudgetExceeded(f"no sample of {params} after {params.max_tries} tries")


def _sample(params: RandomParams, rng: random.Random, seed: int) -> Negotiation:
    procs = [f"p{i}" for i in range(params.procs)]
    nodes = [f"n{i}" for i in range(params.nodes)]
    if params.deterministic:
        det = set(procs)
    elif params.weakly_nd:
        det = set(rng.sample(procs, rng.randint(1, max(1, len(procs) - 1))))
    else:
        det = set()
    anchors = sorted(det)
    dom: dict[str, list[str]] = {nodes[0]: procs, nodes[-1]: procs}
    for n in nodes[1:-1]:
        size = min(len(procs), 1 + int(rng.expovariate(1.0)))
        members = set(rng.sample(procs, size))
        if params.weakly_nd and not members & det:
            members.add(rng.choice(anchors))
        dom[n] = [p for p in procs if p in members]
    out = {n: [chr(ord("a") + r) for r in range(rng.randint(1, params.max_results))] for n in nodes[:-1]}
    out[nodes[-1]] = []
    delta = {}
    for i, n in enumerate(nodes[:-1]):
        for a in out[n]:
            for p in dom[n]:
                later = [x for x in nodes[i + 1:] if p in dom[x]]
                earlier = [x for x in nodes[:i + 1] if p in dom[x]]
                pool = later
                if not params.acyclic and earlier and rng.random() < params.back_arc_prob:
                    pool = earlier
                if p not in det and len(later) > 1 and rng.random() < params.hyper_prob:
                    size = rng.randint(2, min(3, len(later)))
                    delta[(n, a, p)] = rng.sample(later, size)
                else:
                    delta[(n, a, p)] = [rng.choice(pool)]
    return validate({
        "name": f"random{seed}",
        "processes": procs,
        "nodes": nodes,
        "dom": dom,
        "out": out,
        "delta": delta,
        "init": nodes[0],
        "fin": nodes[-1],
    })


class _Builder:
    def __init__(self, rng: random.Random, loops: bool):
        self.rng = rng
        self.loops = loops
        self.nodes: list[str] = []
        self.dom: dict[str, list[str]] = {}
        self.out: dict[str, list[str]] = {}
        self.delta: dict[tuple[str, str, str], list[str]] = {}

    def node(self, procs: Sequence[str], results: Sequence[str]) -> str:
        n = f"n{len(self.nodes)}"
        self.nodes.append(n)
        self.dom[n] = list(procs)
        self.out[n] = list(results)
        return n

    def connect(self, pending: Iterable[tuple[str, str, str]], target: str) -> None:
        for key in pending:
            self.delta[key] = [target]

    def block(self, procs: list[str], budget: int) -> tuple[dict[str, str], list[tuple[str, str, str]]]:
        """Sound fragment over ``procs``: entry node per process and dangling exit arcs."""
        rng = self.rng
        if budget <= 1:
            n = self.node(procs, ["a"])
            return {p: n for p in procs}, [(n, "a", p) for p in procs]
        kinds = ["seq", "choice"]
        if len(procs) > 1:
            kinds += ["par", "par"]
        if self.loops and budget >= 3:
            kinds.append("loop")
        kind = rng.choice(kinds)
        if kind == "par":
            shuffled = procs[:]
            rng.shuffle(shuffled)
            cut = rng.randint(1, len(procs) - 1)
            left, right = sorted(shuffled[:cut]), sorted(shuffled[cut:])
            share = rng.randint(1, budget - 1)
            e1, x1 = self.block(left, share)
            e2, x2 = self.block(right, budget - share)
            return {**e1, **e2}, x1 + x2
        if kind == "seq":
            parts = min(budget, rng.randint(2, 4))
            sizes = _split(budget, parts, rng)
            entry, pending = self.block(procs, sizes[0])
            for size in sizes[1:]:
                e, x = self.block(procs, size)
                for key in pending:
                    self.delta[key] = [e[key[2]]]
                pending = x
            return entry, pending
        if kind == "choice":
            branches = min(budget - 1, rng.randint(2, 3))
            results = [chr(ord("a") + r) for r in range(branches)]
            head = self.node(procs, results)
            pending = []
            for res, size in zip(results, _split(budget - 1, branches, rng)):
                e, x = self.block(procs, size)
                for p in procs:
                    self.delta[(head, res, p)] = [e[p]]
                pending += x
            return {p: head for p in procs}, pending
        # loop: body, then a node that either exits or restarts the body
        entry, pending = self.block(procs, budget - 1)
        tail = self.node(procs, ["exit", "again"])
        for key in pending:
            self.delta[key] = [tail]
        for p in procs:
            self.delta[(tail, "again", p)] = [entry[p]]
        return entry, [(tail, "exit", p) for p in procs]


def _split(total: int, parts: int, rng: random.Random) -> list[int]:
    cuts = sorted(rng.sample(range(1, total), parts - 1)) if parts > 1 else []
    bounds = [0, *cuts, total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def gen_structured(nodes: int, procs: int, seed: int, loops: bool = False) -> Negotiation:
    """Sound deterministic negotiation assembled from nested blocks.

    Blocks are single nodes, sequences, parallel splits of the process set,
    exclusive choices and, with ``loops``, repeat-until loops. Every such
    composition is sound, so the result is sound by construction. The node
    count is close to ``nodes``.
    """
    rng = random.Random(seed)
    names = [f"p{i}" for i in range(procs)]
    b = _Builder(rng, loops)
    init = b.node(names, ["a"])
    entry, pending = b.block(names, max(1, nodes - 2))
    for p in names:
        b.delta[(init, "a", p)] = [entry[p]]
    fin = b.node(names, [])
    b.connect(pending, fin)
    return validate({
        "name": f"structured{seed}",
        "processes": names,
        "nodes": b.nodes,
        "dom": b.dom,
        "out": b.out,
        "delta": b.delta,
        "init": init,
        "fin": fin,
    })


def gen_random_data(
    neg: Negotiation, variables: int, seed: int, density: float = 0.4
) -> "DataNegotiation":
    """Labels every result, the virtual final one included, with random operations."""
    from .data import OPERATIONS, DataNegotiation

    rng = random.Random(seed)
    names = tuple(f"x{i + 1}" for i in range(variables))
    pairs = [(n, a) for n in neg.nodes for a in neg.out[n]]
    if not neg.out[neg.fin]:
        pairs.append((neg.fin, "end"))
    labels = {}
    for pair in pairs:
        ops = frozenset((rng.choice(OPERATIONS), x) for x in names if rng.random() < density)
        if ops:
            labels[pair] = ops
    return DataNegotiation(neg, names, labels)
