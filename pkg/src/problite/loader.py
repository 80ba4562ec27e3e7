"""Loading programs, graph datasets and the standard prelude."""

from __future__ import annotations

import csv
import io
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import LoadError
from .parser import parse_program
from .program import Probability, Program
from .terms import Atom, Compound

__all__ = ["prelude_text", "add_prelude", "load_graph", "read_graph", "load_program"]


def prelude_text() -> str:
    return resources.files("problite").joinpath("data/prelude.pl").read_text(encoding="utf-8")


def add_prelude(program: Program) -> Program:
    """Add prelude clauses for every predicate ``program`` does not define."""
    prelude = parse_program(prelude_text())
    missing = {c.indicator for c in prelude.clauses if not program.defines(*c.indicator)}
    for clause in prelude.clauses:
        if clause.indicator in missing:
            program.add_clause(clause)
    return program


def read_graph(text: str, predicate: str = "edge", program: Program | None = None, *, delimiter: str | None = None) -> Program:
    """Add one ``p::predicate(source,target)`` fact per row of ``text``.

    Rows hold source, target and probability separated by tabs or commas.
    A first row whose probability column is not a number is a header.
    """
    program = Program() if program is None else program
    if delimiter is None:
        first = next((line for line in text.splitlines() if line.strip()), "")
        delimiter = "\t" if "\t" in first else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        if len(row) != 3:
            raise LoadError(f"line {lineno}: expected 3 columns (source, target, probability), got {len(row)}")
        source, target, prob = (cell.strip() for cell in row)
        try:
            value = float(prob)
        except ValueError:
            if lineno == 1:
                continue
            raise LoadError(f"line {lineno}: probability {prob!r} is not a number") from None
        if not source or not target:
            raise LoadError(f"line {lineno}: empty node name")
        try:
            program.add_fact(Probability(value), Compound(predicate, (Atom(source), Atom(target))))
        except LoadError as exc:
            raise LoadError(f"line {lineno}: {exc}") from None
    return program


def load_graph(path, predicate: str = "edge", program: Program | None = None) -> Program:
    path = Path(path)
    delimiter = "," if path.suffix.lower() == ".csv" else None
    return read_graph(path.read_text(encoding="utf-8"), predicate, program, delimiter=delimiter)


def load_program(files: Iterable = (), graphs: Iterable = (), *, text: str | None = None, predicate: str = "edge", prelude: bool = True) -> Program:
    """Graph facts first, then program files and text, then the prelude."""
    program = Program()
    for graph in graphs:
        load_graph(graph, predicate, program)
    for path in files:
        parse_program(Path(path).read_text(encoding="utf-8"), program)
    if text is not None:
        parse_program(text, program)
    if prelude:
        add_prelude(program)
    return program
