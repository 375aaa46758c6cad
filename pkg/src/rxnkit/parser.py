"""Line-oriented text format for reaction networks.

Example::

    # Brusselator
    external: A, P
    A -> X, 1.92
    X -> Y, 5.76
    2 X + Y -> 3 X, 5.6
    X -> P, 4.8

Line kinds:

* ``external: A, P`` marks species as external (constant).
* ``species: A, B, C`` registers species in the given order.
* ``name = formula`` binds a species to a chemical formula.
* ``lhs -> rhs, k`` is an irreversible step; ``lhs <-> rhs, kf, kb``
  expands to a forward and a backward step.  A side is ``0`` or ``∅`` for
  the empty complex, otherwise ``+``-separated terms ``[coef] name``.
* ``#`` starts a comment.

Step lists used for decompositions carry no rate coefficients; parse them
with :func:`parse_steps`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import FormulaError, format_formula, parse_formula
from .network import Complex, Composition, ReactionNetwork, ReactionStep, Species

__all__ = [
    "ParseError",
    "parse_network",
    "parse_steps",
    "parse_species_file",
    "parse_reaction",
    "serialize_network",
    "format_step",
]

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TERM = re.compile(r"\s*(?:(\d+)\s*)?([A-Za-z_][A-Za-z0-9_]*)\s*$")
_ARROW = re.compile(r"<->|->")


class ParseError(ValueError):
    """Syntax or semantic error with a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass
class _Document:
    external: list[str]
    order: list[str]
    formulas: dict[str, Composition]
    steps: list[ReactionStep]


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _parse_side(text: str, lineno: int, col: int) -> Complex:
    stripped = text.strip()
    if stripped in ("0", "∅"):
        return Complex()
    if not stripped:
        raise ParseError("empty reaction side (use 0 for the empty complex)", lineno, col)
    terms: list[tuple[str, int]] = []
    offset = 0
    for part in text.split("+"):
        m = _TERM.match(part)
        pcol = col + offset + (len(part) - len(part.lstrip()))
        if not m:
            raise ParseError(f"malformed term {part.strip()!r}", lineno, pcol)
        coef = int(m.group(1)) if m.group(1) else 1
        if coef == 0:
            raise ParseError("zero stoichiometric coefficient", lineno, pcol)
        terms.append((m.group(2), coef))
        offset += len(part) + 1
    return Complex(terms)


def _parse_float(text: str, lineno: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"nonnumeric rate coefficient {text.strip()!r}", lineno, col) from None
    if not value >= 0 or value == float("inf"):
        raise ParseError(f"rate coefficient must be finite and nonnegative, got {text.strip()!r}", lineno, col)
    return value


def _parse_reaction_line(line: str, lineno: int, rates: str) -> list[ReactionStep]:
    m = _ARROW.search(line)
    reversible = m.group() == "<->"
    head, *rate_fields = line[m.end():].split(",")
    lhs = _parse_side(line[:m.start()], lineno, 1)
    rhs = _parse_side(head, lineno, m.end() + 1)
    expected = 2 if reversible else 1
    col = min(m.end() + len(head) + 2, len(line) + 1)
    if rates == "forbidden" and rate_fields:
        raise ParseError("step lists carry no rate coefficients", lineno, col)
    if rates == "required" and len(rate_fields) != expected:
        kind = "reversible" if reversible else "irreversible"
        raise ParseError(f"{kind} step needs exactly {expected} rate coefficient(s), got {len(rate_fields)}",
                         lineno, col)
    ks = []
    for f in rate_fields:
        ks.append(_parse_float(f, lineno, col))
        col += len(f) + 1
    ks += [1.0] * (expected - len(ks))
    try:
        steps = [ReactionStep(lhs, rhs, ks[0])]
        if reversible:
            steps.append(ReactionStep(rhs, lhs, ks[1]))
    except ValueError as exc:
        raise ParseError(str(exc), lineno, 1) from None
    return steps


def _name_list(text: str, lineno: int, col: int) -> list[str]:
    names = [n.strip() for n in text.split(",")]
    if names == [""]:
        return []
    for n in names:
        if not _NAME.fullmatch(n):
            raise ParseError(f"invalid species name {n!r}", lineno, col)
    return names


def _parse_document(text: str, rates: str) -> _Document:
    doc = _Document([], [], {}, [])
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        key, sep, rest = line.partition(":")
        if sep and key.strip() in ("external", "species") and not _ARROW.search(line):
            names = _name_list(rest, lineno, len(key) + 2)
            target = doc.external if key.strip() == "external" else doc.order
            for n in names:
                if n in target:
                    raise ParseError(f"duplicate {key.strip()} declaration of {n!r}", lineno, len(key) + 2)
                target.append(n)
            continue
        if _ARROW.search(line):
            doc.steps.extend(_parse_reaction_line(line, lineno, rates))
            continue
        name, eq, formula = line.partition("=")
        if eq:
            name = name.strip()
            if not _NAME.fullmatch(name):
                raise ParseError(f"invalid species name {name!r}", lineno, indent + 1)
            if name in doc.formulas:
                raise ParseError(f"duplicate formula for {name!r}", lineno, indent + 1)
            try:
                doc.formulas[name] = parse_formula(formula.strip())
            except FormulaError as exc:
                col = len(line) - len(formula.lstrip()) + 1 + exc.pos
                raise ParseError(str(exc), lineno, col) from None
            continue
        raise ParseError("expected a reaction, a declaration or a formula annotation", lineno, indent + 1)
    return doc


def _build(doc: _Document) -> ReactionNetwork:
    order: dict[str, None] = dict.fromkeys(doc.order)
    for name in doc.external:
        order.setdefault(name)
    for step in doc.steps:
        for name in (*step.reactants, *step.products):
            order.setdefault(name)
    for name in doc.formulas:
        order.setdefault(name)
    ext = set(doc.external)
    species = [Species(n, doc.formulas.get(n), n in ext) for n in order]
    return ReactionNetwork(tuple(species), tuple(doc.steps))


def parse_network(text: str) -> ReactionNetwork:
    """Parse a network with rate coefficients.

    Species are registered in order of first appearance (``species:``
    declarations, then ``external:`` declarations, then reactions, then
    formula annotations).  Raises :class:`ParseError`.
    """
    doc = _parse_document(text, rates="required")
    if not doc.steps:
        raise ParseError("no reactions", max(1, len(text.splitlines())), 1)
    return _build(doc)


def parse_steps(text: str) -> ReactionNetwork:
    """Parse a step list without rate coefficients (rates default to 1)."""
    doc = _parse_document(text, rates="optional")
    return _build(doc)


def parse_species_file(text: str) -> list[Species]:
    """Parse ``name = formula`` lines into species with compositions."""
    doc = _parse_document(text, rates="forbidden")
    if doc.steps:
        raise ParseError("species files contain no reactions", 1, 1)
    ext = set(doc.external)
    names = list(dict.fromkeys([*doc.order, *doc.formulas]))
    return [Species(n, doc.formulas.get(n), n in ext) for n in names]


def parse_reaction(text: str) -> ReactionStep:
    """Parse a single ``lhs -> rhs`` (optionally with ``, k``)."""
    if not _ARROW.search(text):
        raise ParseError("missing '->'", 1, 1)
    steps = _parse_reaction_line(text, 1, rates="optional")
    if len(steps) != 1:
        raise ParseError("expected an irreversible reaction", 1, 1)
    return steps[0]


def format_step(step: ReactionStep, species_order: list[str] | None = None, rate: bool = True) -> str:
    def side(c: Complex) -> str:
        names = [n for n in species_order if n in c] if species_order else list(c)
        if not names:
            return "0"
        return " + ".join(n if c[n] == 1 else f"{c[n]} {n}" for n in names)

    text = f"{side(step.reactants)} -> {side(step.products)}"
    return f"{text}, {step.rate!r}" if rate else text


def serialize_network(network: ReactionNetwork) -> str:
    """Canonical text; ``parse_network(serialize_network(n)) == n``."""
    names = network.species_names
    lines = [f"species: {', '.join(names)}"]
    if network.external_species:
        lines.append(f"external: {', '.join(network.external_species)}")
    for s in network.species:
        if s.composition is not None:
            lines.append(f"{s.name} = {format_formula(s.composition)}")
    lines.extend(format_step(step, names) for step in network.steps)
    return "\n".join(lines) + "\n"
