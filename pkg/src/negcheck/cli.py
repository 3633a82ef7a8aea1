"""Command-line entry point: ``negcheck <command> ...``.

Exit codes: 0 sound / complies / no race / run found, 1 unsound /
violates / race / no run, 2 input error, 3 precondition unmet.
"""
from __future__ import annotations

import argparse
import glob
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import data as data_mod
from .dot import emit_dot
from .games import solve_omitting
from .generators import (
    RandomParams,
    gen_from_cnf,
    gen_from_digraph,
    gen_random,
    gen_structured,
    parse_dimacs,
    parse_edge_list,
)
from .model import (
    BudgetExceeded,
    Negotiation,
    NegotiationError,
    PreconditionError,
    classify,
    deterministic_processes,
)
from .ngt import emit_ngt, read_ngt
from .oracle import DEFAULT_BUDGET, oracle_omit, oracle_sound
from .patterns import det_soundness
from .report import (
    EXIT_FOUND,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_PRECONDITION,
    TSV_COLUMNS,
    Report,
    render,
)
from .weak import check_single_nd, weak_soundness

METHODS = ("auto", "patterns", "game", "weak", "oracle")


class InputError(Exception):
    pass


def _load(path: str):
    try:
        return read_ngt(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except NegotiationError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _base(loaded) -> Negotiation:
    return loaded.base if isinstance(loaded, data_mod.DataNegotiation) else loaded


def _pair(token: str) -> tuple[str, str]:
    n, sep, a = token.partition(":")
    if not sep or not n or not a:
        raise argparse.ArgumentTypeError(f"expected node:result, got {token!r}")
    return n, a


def route(neg: Negotiation, method: str) -> tuple[str, str | None]:
    """The analysis to run and, under ``auto``, why it was picked."""
    if method != "auto":
        return method, None
    flags = classify(neg)
    if flags.deterministic:
        return "patterns", "deterministic -> anti-patterns"
    if flags.acyclic and flags.weakly_nd:
        return "weak", "acyclic, weakly non-deterministic -> deterministic part plus games"
    return "oracle", "non-deterministic" + ("" if flags.acyclic else ", cyclic") + " -> state space"


def check_file(path: str, method: str = "auto", budget: int = DEFAULT_BUDGET,
               process: str | None = None, conflicts: bool = True, figure: str | None = None) -> Report:
    """One ``check`` run; never raises, failures become exit codes 2 and 3."""
    start = time.perf_counter()
    try:
        neg = _base(_load(path))
    except InputError as exc:
        return Report("check", path, "", "input-error", EXIT_INPUT, details=[str(exc)])
    flags = classify(neg)
    chosen, why = route(neg, method)
    report = Report("check", path, neg.name, "", EXIT_OK, chosen, why, flags=flags,
                    size=(len(neg.nodes), len(neg.processes)))
    try:
        if chosen == "patterns":
            verdict = det_soundness(neg)
        elif chosen == "game":
            verdict = check_single_nd(neg, process, conflicts=conflicts)
        elif chosen == "weak":
            verdict = weak_soundness(neg, conflicts=conflicts)
        else:
            verdict = oracle_sound(neg, budget)
            report.details.append(f"states: {verdict.stats['states']}")
    except (PreconditionError, BudgetExceeded) as exc:
        report.verdict, report.exit_code = "precondition-unmet", EXIT_PRECONDITION
        report.details.append(str(exc))
        report.seconds = time.perf_counter() - start
        return report
    report.verdict = "sound" if verdict.sound else "unsound"
    report.exit_code = EXIT_OK if verdict.sound else EXIT_FOUND
    report.witness = verdict.witness
    report.witness_text = "" if verdict.witness is None else str(verdict.witness)
    if verdict.unreachable:
        report.details.append("unreachable: " + " ".join(verdict.unreachable))
    report.seconds = time.perf_counter() - start
    if figure:
        from .plotting import render_figure
        report.figure = str(render_figure(neg, figure, verdict.witness))
    return report


def _check_job(args: tuple) -> Report:
    return check_file(*args)


def cmd_check(ns) -> int:
    if ns.glob:
        return _check_batch(ns)
    if not ns.file:
        print("check: give a file or --glob", file=sys.stderr)
        return EXIT_INPUT
    report = check_file(ns.file, ns.method, ns.budget, ns.process, not ns.no_conflict_check, ns.figure)
    return _emit(ns, report)


def _check_batch(ns) -> int:
    files = sorted(glob.glob(ns.glob, recursive=True))
    if not files:
        print(f"check: no files match {ns.glob}", file=sys.stderr)
        return EXIT_INPUT
    fig_dir = Path(ns.figure) if ns.figure else None
    if fig_dir:
        fig_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(f, ns.method, ns.budget, ns.process, not ns.no_conflict_check,
             str(fig_dir / (Path(f).stem + ".png")) if fig_dir else None) for f in files]
    workers = max(1, min(ns.jobs or os.cpu_count() or 1, len(jobs)))
    if workers == 1:
        reports = [_check_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_check_job, jobs))
    if ns.json:
        import json
        text = json.dumps([r.to_json() for r in reports], indent=2) + "\n"
    else:
        text = "\t".join(TSV_COLUMNS) + "\n" + "".join(r.tsv_row() + "\n" for r in reports)
    _write(ns, text)
    for r in reports:
        for line in r.details if r.exit_code in (EXIT_INPUT, EXIT_PRECONDITION) else ():
            print(f"{r.source}: {line}", file=sys.stderr)
    return max(r.exit_code for r in reports)


def _write(ns, text: str) -> None:
    if getattr(ns, "output", None):
        Path(ns.output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit(ns, report: Report) -> int:
    if report.exit_code in (EXIT_INPUT, EXIT_PRECONDITION):
        for line in report.details:
            print(f"{report.command}: {line}", file=sys.stderr)
        if not ns.json:
            return report.exit_code
    _write(ns, render(report, ns.json))
    return report.exit_code


def _loaded_or_exit(ns, command: str):
    try:
        return _load(ns.file)
    except InputError as exc:
        print(f"{command}: {exc}", file=sys.stderr)
        return None


def cmd_classify(ns) -> int:
    loaded = _loaded_or_exit(ns, "classify")
    if loaded is None:
        return EXIT_INPUT
    neg = _base(loaded)
    flags = classify(neg)
    report = Report("classify", ns.file, neg.name, "classified", EXIT_OK, flags=flags,
                    size=(len(neg.nodes), len(neg.processes)))
    report.details = [f"{k}: {'yes' if v else 'no'}" for k, v in flags.as_dict().items()]
    report.details.append("deterministic processes: " + " ".join(deterministic_processes(neg)))
    return _emit(ns, report)


def cmd_omit(ns) -> int:
    loaded = _loaded_or_exit(ns, "omit")
    if loaded is None:
        return EXIT_INPUT
    neg = _base(loaded)
    start = time.perf_counter()
    report = Report("omit", ns.file, neg.name, "", EXIT_OK, ns.method,
                    size=(len(neg.nodes), len(neg.processes)))
    try:
        if ns.method == "oracle":
            run = oracle_omit(neg, ns.include, ns.omit, ns.omit_pair, budget=ns.budget)
            plan = None
        else:
            plan = solve_omitting(neg, include=ns.include, omit=ns.omit, omit_pairs=ns.omit_pair, k=ns.k)
            run = plan.run if plan else None
    except (PreconditionError, BudgetExceeded) as exc:
        report.verdict, report.exit_code = "precondition-unmet", EXIT_PRECONDITION
        report.details.append(str(exc))
        return _emit(ns, report)
    except ValueError as exc:
        report.verdict, report.exit_code = "input-error", EXIT_INPUT
        report.details.append(str(exc))
        return _emit(ns, report)
    report.seconds = time.perf_counter() - start
    if run is None:
        report.verdict, report.exit_code = "no-run", EXIT_FOUND
    else:
        report.verdict, report.witness, report.witness_text = "run-found", run, str(run)
        if plan is not None:
            report.details.append("choices: " + " ".join(f"{n}:{a}" for n, a in plan.choices.items()))
    return _emit(ns, report)


def cmd_race(ns) -> int:
    loaded = _loaded_or_exit(ns, "race")
    if loaded is None:
        return EXIT_INPUT
    neg = _base(loaded)
    start = time.perf_counter()
    report = Report("race", ns.file, neg.name, "", EXIT_OK, size=(len(neg.nodes), len(neg.processes)))
    if (ns.m is None) != (ns.n is None):
        print("race: give two nodes or none", file=sys.stderr)
        return EXIT_INPUT
    pairs = [(ns.m, ns.n)] if ns.m else [
        (m, n) for i, m in enumerate(neg.nodes) for n in neg.nodes[i + 1:]]
    try:
        verdicts = [data_mod.race(neg, m, n, ns.budget) for m, n in pairs]
    except ValueError as exc:
        report.verdict, report.exit_code = "input-error", EXIT_INPUT
        report.details.append(str(exc))
        return _emit(ns, report)
    except (PreconditionError, BudgetExceeded) as exc:
        report.verdict, report.exit_code = "precondition-unmet", EXIT_PRECONDITION
        report.details.append(str(exc))
        return _emit(ns, report)
    report.seconds = time.perf_counter() - start
    found = [v for v in verdicts if v.race]
    report.method = verdicts[0].method if verdicts else None
    report.verdict = "race" if found else "no-race"
    report.exit_code = EXIT_FOUND if found else EXIT_OK
    if ns.m:
        report.witness, report.witness_text = verdicts[0], str(verdicts[0])
    else:
        report.witness = found
        report.details = [str(v) for v in found]
    return _emit(ns, report)


def cmd_data(ns) -> int:
    loaded = _loaded_or_exit(ns, "data")
    if loaded is None:
        return EXIT_INPUT
    if not isinstance(loaded, data_mod.DataNegotiation):
        print(f"data: {ns.file} has no label lines", file=sys.stderr)
        return EXIT_INPUT
    dneg = loaded
    start = time.perf_counter()
    report = Report("data", ns.file, dneg.base.name, "", EXIT_OK,
                    size=(len(dneg.base.nodes), len(dneg.base.processes)))
    try:
        if ns.spec:
            spec = data_mod.parse_dataspec(Path(ns.spec).read_text(), dneg, name=Path(ns.spec).stem)
            results = [data_mod.check_spec(dneg, spec, ns.budget)]
        else:
            kinds = data_mod.KINDS if ns.kind == "all" else (ns.kind,)
            variables = [ns.var] if ns.var else list(dneg.variables)
            results = [data_mod.builtin_spec(dneg, k, x, ns.budget) for k in kinds for x in variables]
    except (OSError, ValueError) as exc:
        report.verdict, report.exit_code = "input-error", EXIT_INPUT
        report.details.append(str(exc))
        return _emit(ns, report)
    except (PreconditionError, BudgetExceeded) as exc:
        report.verdict, report.exit_code = "precondition-unmet", EXIT_PRECONDITION
        report.details.append(str(exc))
        return _emit(ns, report)
    report.seconds = time.perf_counter() - start
    bad = [r for r in results if not r.ok]
    report.verdict = "violates" if bad else "complies"
    report.exit_code = EXIT_FOUND if bad else EXIT_OK
    report.method = ",".join(sorted({r.method for r in results}))
    report.witness = {r.kind: r.violations for r in results}
    for r in results:
        if r.ok:
            report.details.append(f"{r.kind}: holds")
            continue
        for (first, second), evidence in r.violations.items():
            report.details.append(f"{r.kind}: ({first[0]},{first[1]}) vs ({second[0]},{second[1]}): "
                                  f"{_evidence_text(evidence)}")
    return _emit(ns, report)


def _evidence_text(evidence) -> str:
    if isinstance(evidence, data_mod.SpecWitness):
        steps = list(evidence.run.steps)
        if evidence.final_step is not None:
            steps.append(evidence.final_step)
        marked = [f"[{n},{a}]" if k in (evidence.i, evidence.j) else f"({n},{a})"
                  for k, (n, a) in enumerate(steps)]
        return "run " + "".join(marked)
    return str(evidence)


def cmd_gen(ns) -> int:
    try:
        if ns.kind == "cnf":
            neg = gen_from_cnf(parse_dimacs(_read_input(ns.source)))
        elif ns.kind == "digraph":
            if not ns.s or not ns.t:
                raise ValueError("digraph needs --s and --t")
            neg = gen_from_digraph(parse_edge_list(_read_input(ns.source)), ns.s, ns.t)
        elif ns.kind == "random":
            params = RandomParams(nodes=ns.nodes, procs=ns.procs, max_results=ns.max_results,
                                  acyclic=not ns.cyclic, deterministic=not ns.nondeterministic,
                                  weakly_nd=ns.weakly_nd)
            neg = gen_random(params, ns.seed)
        else:
            neg = gen_structured(ns.nodes, ns.procs, ns.seed, loops=ns.cyclic)
    except (OSError, ValueError, NegotiationError) as exc:
        print(f"gen: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _write(ns, emit_ngt(neg))
    return EXIT_OK


def _read_input(source: str | None) -> str:
    if source is None or source == "-":
        return sys.stdin.read()
    return Path(source).read_text()


def cmd_dot(ns) -> int:
    loaded = _loaded_or_exit(ns, "dot")
    if loaded is None:
        return EXIT_INPUT
    neg = _base(loaded)
    witness = None
    if ns.witness:
        report = check_file(ns.file, ns.method, ns.budget)
        if report.exit_code == EXIT_PRECONDITION:
            print(f"dot: {'; '.join(report.details)}", file=sys.stderr)
            return EXIT_PRECONDITION
        witness = report.witness
    _write(ns, emit_dot(neg, [witness] if witness is not None else []))
    if ns.figure:
        from .plotting import render_figure
        render_figure(neg, ns.figure, witness)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="negcheck", description="Soundness and data-flow analysis of negotiations.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, file=True):
        if file:
            p.add_argument("file", nargs=None if file is True else "?", help="NGT file")
        p.add_argument("--json", action="store_true", help="machine-readable report")
        p.add_argument("-o", "--output", help="write the report to this file")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="state budget for the oracle")

    p = sub.add_parser("check", help="decide soundness")
    common(p, file="optional")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--process", help="branching process for --method game")
    p.add_argument("--no-conflict-check", action="store_true",
                   help="weak/game: skip the check for two targets of one result enabled together")
    p.add_argument("--glob", help="check every matching file; prints TSV")
    p.add_argument("--jobs", type=int, help="worker processes for --glob")
    p.add_argument("--figure", help="write a lane diagram (a directory under --glob)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="print class flags")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("omit", help="find a successful run including and omitting given steps")
    common(p)
    p.add_argument("--include", type=_pair, nargs="*", default=[], metavar="NODE:RESULT")
    p.add_argument("--omit", nargs="*", default=[], metavar="NODE")
    p.add_argument("--omit-pair", type=_pair, nargs="*", default=[], metavar="NODE:RESULT")
    p.add_argument("--method", choices=("game", "oracle"), default="game")
    p.add_argument("-k", type=int, default=4, help="bound on included pairs for the game method")
    p.set_defaults(func=cmd_omit)

    p = sub.add_parser("race", help="can two nodes be enabled together")
    common(p)
    p.add_argument("m", nargs="?")
    p.add_argument("n", nargs="?")
    p.set_defaults(func=cmd_race)

    p = sub.add_parser("data", help="check data specifications")
    common(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--kind", choices=data_mod.KINDS + ("all",))
    group.add_argument("--spec", help="file with O1:, O2: and O: lines")
    p.add_argument("--var", help="variable for --kind (default: all)")
    p.set_defaults(func=cmd_data)

    p = sub.add_parser("gen", help="generate negotiations")
    p.add_argument("kind", choices=("cnf", "digraph", "random", "structured"))
    p.add_argument("source", nargs="?", help="DIMACS or edge-list file ('-' for stdin)")
    p.add_argument("--s", help="source vertex for digraph")
    p.add_argument("--t", help="target vertex for digraph")
    p.add_argument("--nodes", type=int, default=8)
    p.add_argument("--procs", type=int, default=3)
    p.add_argument("--max-results", type=int, default=2)
    p.add_argument("--cyclic", action="store_true")
    p.add_argument("--nondeterministic", action="store_true")
    p.add_argument("--weakly-nd", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dot", help="export the graph as DOT")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--witness", action="store_true", help="overlay the check witness")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--figure", help="also write a lane diagram")
    p.set_defaults(func=cmd_dot)
    return parser


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    return ns.func(ns)


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
