"""Chemical formula parsing.

Supported forms::

    H2C2O4            plain formula
    Mn(C2O4)2         parenthesised groups with multipliers
    MnO4^-  Mn^2+     charge after a caret: optional digits, mandatory sign
    CO2-  H+          bare trailing sign (always charge 1)
    C2O4 2-           digits + sign separated by whitespace
    [MnO2,H2C2O4]     complex: member compositions are summed
    [Mn(C2O4)]^+      outer charge of a complex is its total charge
    [X]2+             digits + sign directly after ``]`` is a charge

Trailing digits directly after an element are always a count, so ``Mn2+``
reads as Mn2 with charge +1; write ``Mn^2+`` for the dication.
"""

from __future__ import annotations

from .network import Composition

__all__ = ["parse_formula", "format_formula", "FormulaError", "ELEMENTS"]

ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
    Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce
    Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn
    Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl
    Mc Lv Ts Og D T""".split()
)


class FormulaError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos + 1} in {text!r}")
        self.text = text
        self.pos = pos


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def error(self, message: str, pos: int | None = None) -> FormulaError:
        return FormulaError(message, self.text, self.pos if pos is None else pos)

    def skip_space(self) -> None:
        while self.peek().isspace():
            self.pos += 1

    def number(self) -> int | None:
        start = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if self.pos == start:
            return None
        n = int(self.text[start:self.pos])
        if n == 0:
            raise self.error("zero multiplier", start)
        return n

    def sign(self) -> int | None:
        c = self.peek()
        if c and c in "+-":
            self.pos += 1
            return 1 if c == "+" else -1
        return None

    def charge(self, after_bracket: bool) -> int | None:
        """Parse an optional charge marker."""
        start = self.pos
        if self.peek() == "^":
            self.pos += 1
            n = self.number() or 1
            s = self.sign()
            if s is None:
                raise self.error("malformed charge: sign expected")
            return n * s
        self.skip_space()
        if after_bracket or self.pos > start:
            n = self.number()
            s = self.sign()
            if s is None:
                self.pos = start
                return None
            return (n or 1) * s
        s = self.sign()
        return s

    def group(self) -> Composition | None:
        """Element with count, or parenthesised group with multiplier."""
        c = self.peek()
        if c == "(":
            open_pos = self.pos
            self.pos += 1
            total = self.sequence()
            if self.peek() != ")":
                raise self.error("unbalanced parenthesis", open_pos)
            self.pos += 1
            if total is None:
                raise self.error("empty group", open_pos)
            return total * (self.number() or 1)
        if c.isupper():
            start = self.pos
            self.pos += 1
            if self.peek().islower():
                self.pos += 1
            symbol = self.text[start:self.pos]
            if symbol not in ELEMENTS:
                raise self.error(f"unknown element symbol {symbol!r}", start)
            return Composition({symbol: self.number() or 1})
        return None

    def sequence(self) -> Composition | None:
        total = None
        while (g := self.group()) is not None:
            total = g if total is None else total + g
        return total

    def species(self) -> tuple[dict, int]:
        """One formula or bracketed complex, including any charge marker."""
        self.skip_space()
        if self.peek() == "[":
            open_pos = self.pos
            self.pos += 1
            atoms: dict[str, int] = {}
            member_charge = 0
            while True:
                a, q = self.species()
                for el, n in a.items():
                    atoms[el] = atoms.get(el, 0) + n
                member_charge += q
                self.skip_space()
                if self.peek() == ",":
                    self.pos += 1
                    continue
                if self.peek() == "]":
                    self.pos += 1
                    break
                raise self.error("unbalanced bracket", open_pos)
            outer = self.charge(after_bracket=True)
            if outer is None:
                return atoms, member_charge
            if member_charge not in (0, outer):
                raise self.error(f"outer charge {outer:+d} disagrees with member charges {member_charge:+d}")
            return atoms, outer
        start = self.pos
        comp = self.sequence()
        q = self.charge(after_bracket=False)
        if comp is None:
            if q is None:
                raise self.error("formula expected", start)
            return {}, q
        return dict(comp.atoms), (q or 0) + comp.charge


def parse_formula(text: str) -> Composition:
    """Parse ``text`` into a :class:`Composition`.

    >>> parse_formula("MnO4^-")
    Composition(atoms={'Mn': 1, 'O': 4}, charge=-1)
    """
    reader = _Reader(text)
    atoms, charge = reader.species()
    reader.skip_space()
    if reader.pos != len(text):
        raise reader.error(f"unexpected character {reader.peek()!r}")
    try:
        return Composition(atoms, charge)
    except ValueError as exc:
        raise FormulaError(str(exc), text, 0) from None


def format_formula(comp: Composition) -> str:
    """Canonical text for ``comp``; :func:`parse_formula` inverts it."""
    body = "".join(el if n == 1 else f"{el}{n}" for el, n in sorted(comp.atoms.items()))
    if comp.charge:
        mag = abs(comp.charge)
        body += "^" + ("" if mag == 1 else str(mag)) + ("+" if comp.charge > 0 else "-")
    return body
