"""Command-line front end.

Exit status: 0 success, 1 parse or load error, 2 query error,
3 approximation did not converge.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .bdd import export_script, to_dot
from .errors import LoadError, ParseError, QueryError
from .inference import BoundsConfig, bounds, exact, explanation, kbest, monte_carlo
from .loader import load_program
from .parser import parse_query
from .terms import format_term

__all__ = ["QueryReport", "build_parser", "run", "main", "format_probability"]

EXIT_OK, EXIT_LOAD, EXIT_QUERY, EXIT_NONCONVERGED = 0, 1, 2, 3


def format_probability(p: float) -> str:
    # twelve significant digits hide the last-bit noise of BDD evaluation
    return f"{p:.12g}"


@dataclass
class ProofRecord:
    facts: list[str]
    probability: float


@dataclass
class QueryReport:
    mode: str
    query: str
    probability: float | None = None
    interval: list[float] | None = None
    proofs: list[ProofRecord] = field(default_factory=list)
    answer: dict[str, str] | None = None
    n_proofs: int = 0
    trie_nodes: int = 0
    bdd_nodes: int = 0
    samples: int = 0
    half_width: float | None = None
    iterations: int = 0
    converged: bool = True
    seed: int | None = None
    search_time: float | None = None
    bdd_time: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> QueryReport:
        data = json.loads(text)
        data["proofs"] = [ProofRecord(**p) for p in data.get("proofs", [])]
        return cls(**data)

    def to_text(self) -> str:
        lines = []
        if self.interval is not None:
            low, high = self.interval
            lines.append(f"P in [{format_probability(low)}, {format_probability(high)}]")
        if self.probability is not None:
            lines.append(f"P = {format_probability(self.probability)}")
        for proof in self.proofs:
            lines.append(f"  {format_probability(proof.probability)}  {', '.join(proof.facts)}")
        if self.answer:
            lines.append("  " + ", ".join(f"{k} = {v}" for k, v in self.answer.items()))
        counts = []
        if self.mode in ("exact", "kbest", "bounds"):
            counts += [f"proofs={self.n_proofs}", f"trie_nodes={self.trie_nodes}"]
        if self.mode in ("exact", "kbest"):
            counts.append(f"bdd_nodes={self.bdd_nodes}")
        if self.mode == "bounds":
            counts.append(f"iterations={self.iterations}")
        if self.mode == "mc":
            counts += [f"samples={self.samples}", f"half_width={format_probability(self.half_width or 0.0)}"]
        if counts:
            lines.append("  " + " ".join(counts))
        if self.search_time is not None:
            timing = f"  T_P = {self.search_time * 1000:.1f} ms"
            if self.bdd_time is not None:
                timing += f"  T_B = {self.bdd_time * 1000:.1f} ms"
            lines.append(timing)
        if not self.converged:
            lines.append("  warning: did not converge")
        return "\n".join(lines)


def _proof_records(proofs) -> list[ProofRecord]:
    ranked = sorted(proofs, key=lambda p: -p.log_prob)
    return [ProofRecord([format_term(t) for t in p.terms], p.probability) for p in ranked]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", "--program", action="append", default=[], metavar="FILE", help="ProbLog program file (repeatable)")
    common.add_argument("-q", "--query", required=True, help="query goal, e.g. \"path(c,d)\"")
    common.add_argument("--graph", action="append", default=[], metavar="FILE", help="TSV/CSV edge list: source, target, probability")
    common.add_argument("--predicate", default="edge", help="predicate name for --graph facts (default: edge)")
    common.add_argument("--no-prelude", action="store_true", help="do not add the standard prelude (absent/2)")
    common.add_argument("--max-depth", type=int, default=None, metavar="N", help="abort derivations deeper than N")
    common.add_argument("--dump-script", metavar="PATH", help="write the BDD generation script")
    common.add_argument("--dump-dot", metavar="PATH", help="write the BDD in Graphviz DOT format")
    common.add_argument("--json", action="store_true", help="print a machine-readable report")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in --json output")

    parser = argparse.ArgumentParser(prog="problite", description="Probabilistic Prolog inference.")
    sub = parser.add_subparsers(dest="mode", required=True)
    p = sub.add_parser("exact", parents=[common], help="exact success probability")
    p.add_argument("--max-proofs", type=int, default=None, metavar="N", help="fail if more than N proofs are found")
    sub.add_parser("explain", parents=[common], help="probability of the most likely proof")
    p = sub.add_parser("kbest", parents=[common], help="probability of the k most likely proofs")
    p.add_argument("-k", type=int, required=True)
    p = sub.add_parser("bounds", parents=[common], help="lower and upper bounds by iterative deepening")
    p.add_argument("--delta", type=float, default=0.01, help="target interval width (default 0.01)")
    p.add_argument("--gamma", type=float, default=0.5, help="initial probability threshold (default 0.5)")
    p.add_argument("--beta", type=float, default=0.5, help="threshold shrink factor (default 0.5)")
    p.add_argument("--max-iterations", type=int, default=100)
    p = sub.add_parser("mc", parents=[common], help="Monte Carlo estimate")
    p.add_argument("--delta", type=float, default=0.01, help="target half-width (default 0.01)")
    p.add_argument("--batch", type=int, default=1000, help="samples per batch (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-samples", type=int, default=None)
    return parser


def _answer(program, args) -> tuple[QueryReport, object]:
    goal = parse_query(args.query)
    query = format_term(goal)
    depth = args.max_depth
    if args.mode == "mc":
        r = monte_carlo(program, goal, args.delta, args.batch, args.seed, threads=args.threads,
                        max_samples=args.max_samples, max_depth=depth)
        report = QueryReport("mc", query, r.probability, [max(0.0, r.probability - r.half_width), min(1.0, r.probability + r.half_width)],
                             samples=r.samples, half_width=r.half_width, converged=r.converged, seed=args.seed, search_time=r.search_time)
        return report, None
    if args.mode == "exact":
        r = exact(program, goal, max_depth=depth, max_proofs=args.max_proofs)
    elif args.mode == "explain":
        r = explanation(program, goal, max_depth=depth)
    elif args.mode == "kbest":
        if args.k < 1:
            raise QueryError("k must be at least 1")
        r = kbest(program, goal, args.k, max_depth=depth)
    else:
        cfg = BoundsConfig(args.delta, args.gamma, args.beta, args.max_iterations)
        r = bounds(program, goal, cfg, max_depth=depth)
    report = QueryReport(
        args.mode, query, r.probability if r.interval is None else None,
        list(r.interval) if r.interval is not None else None,
        _proof_records(r.proofs) if args.mode != "exact" else [],
        n_proofs=r.n_proofs, trie_nodes=r.trie_nodes, bdd_nodes=r.bdd_nodes,
        iterations=r.iterations, converged=r.converged,
        search_time=r.search_time, bdd_time=r.bdd_time,
    )
    if args.mode == "explain" and r.proofs:
        report.answer = {k: format_term(v) for k, v in r.proofs[0].answer.items()}
    return report, r


def _dump(result, args, err) -> None:
    if not (args.dump_script or args.dump_dot):
        return
    if result is None or result.trie is None:
        print(f"note: no BDD is built in {args.mode} mode; nothing dumped", file=err)
        return
    names = {}
    for proof in result.proofs:
        names.update(zip(proof.facts, (format_term(t) for t in proof.terms)))
    name = lambda gid: names.get(gid, str(gid))
    if args.dump_script:
        text = export_script(result.trie).to_text(name) if len(result.trie) else ""
        Path(args.dump_script).write_text(text + "\n", encoding="utf-8")
    if args.dump_dot:
        Path(args.dump_dot).write_text(to_dot(result.manager, result.root, name), encoding="utf-8")


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    if not args.program and not args.graph:
        print("error: give a program with -p or a graph with --graph", file=err)
        return EXIT_LOAD
    try:
        program = load_program(args.program, args.graph, predicate=args.predicate, prelude=not args.no_prelude)
    except (ParseError, LoadError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_LOAD
    try:
        report, result = _answer(program, args)
    except ParseError as exc:
        print(f"error in query: {exc}", file=err)
        return EXIT_LOAD
    except (QueryError, ValueError, RecursionError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_QUERY
    _dump(result, args, err)
    if args.json:
        if not args.timings:
            report.search_time = report.bdd_time = None
        print(report.to_json(), file=out)
    else:
        print(report.to_text(), file=out)
    if not report.converged:
        print("error: approximation did not converge", file=err)
        return EXIT_NONCONVERGED
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
