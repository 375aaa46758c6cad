"""Decomposition of overall reactions into elementary steps.

The pipeline:

1. :func:`atomic_matrix` collects the element (and charge) content of each
   species.
2. :func:`generate_steps` enumerates, for every reactant complex of order
   one or two, all product complexes with the same atomic and charge
   content.  Each reactant complex defines one small linear Diophantine
   system ``E b = E a, b >= 0``.
3. :func:`volpert_filter` drops steps that cannot fire from a given set of
   initial species.
4. :func:`lp_bounds` computes exact LP lower bounds on the number of steps
   in any decomposition.
5. :func:`enumerate_decompositions` lists every nonnegative integer
   solution of ``Gamma x = gamma_overall`` with ``sum(x)`` within budget,
   by depth-first branch and bound with exact LP pruning.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Optional, Union

import numpy as np

from .graphs import volpert_index
from .lp import ExactLP, Infeasible, Unbounded
from .network import Complex, ReactionNetwork, ReactionStep, Species

__all__ = [
    "AtomicMatrix",
    "ElementaryStep",
    "DecompositionSolution",
    "LPBounds",
    "NoDecomposition",
    "SearchBudgetExceeded",
    "atomic_matrix",
    "reactant_complexes",
    "generate_steps",
    "volpert_filter",
    "lp_bounds",
    "enumerate_decompositions",
    "INITIAL_PRESETS",
    "load_permanganate_species",
    "load_species_fixture",
    "SPECIES_FIXTURES",
    "overall_imbalance",
    "PERMANGANATE_OVERALL",
]

CHARGE = "charge"


@dataclass(frozen=True)
class AtomicMatrix:
    """Rows: sorted element symbols then ``"charge"``; columns: species."""

    rows: tuple[str, ...]
    species: tuple[str, ...]
    matrix: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.species.index(name)]

    def content(self, cplx: Complex) -> np.ndarray:
        out = np.zeros(len(self.rows), dtype=np.int64)
        for name, n in cplx.items():
            out += n * self.column(name)
        return out


@dataclass(frozen=True)
class ElementaryStep:
    reactants: Complex
    products: Complex

    def __post_init__(self):
        object.__setattr__(self, "reactants", Complex(self.reactants))
        object.__setattr__(self, "products", Complex(self.products))
        if self.reactants == self.products:
            raise ValueError("reactant and product complexes are identical")

    @property
    def order(self) -> int:
        return self.reactants.order

    def as_reaction_step(self, rate: float = 1.0) -> ReactionStep:
        return ReactionStep(self.reactants, self.products, rate)

    @classmethod
    def from_reaction_step(cls, step: ReactionStep) -> ElementaryStep:
        return cls(step.reactants, step.products)

    def __str__(self) -> str:
        return f"{self.reactants} -> {self.products}"


@dataclass(frozen=True)
class DecompositionSolution:
    multiplicities: dict[ElementaryStep, int]
    vector: tuple[int, ...]

    @property
    def total_steps(self) -> int:
        return sum(self.vector)

    def __str__(self) -> str:
        return "\n".join(f"{n} × {step}" for step, n in self.multiplicities.items())


@dataclass(frozen=True)
class LPBounds:
    min_total_steps: Fraction
    lower_bounds: dict[ElementaryStep, Fraction]
    witness: tuple[Fraction, ...]


class NoDecomposition(ValueError):
    """The overall reaction is not a nonnegative combination of the steps."""


class SearchBudgetExceeded(RuntimeError):
    """Enumeration hit its node limit; ``partial`` holds the solutions found."""

    def __init__(self, partial: list[DecompositionSolution], nodes: int):
        super().__init__(f"search stopped after {nodes} nodes with {len(partial)} solutions; result incomplete")
        self.partial = partial
        self.nodes = nodes


def atomic_matrix(species: Sequence[Species]) -> AtomicMatrix:
    missing = [s.name for s in species if s.composition is None]
    if missing:
        raise ValueError(f"species lacking a composition: {missing}")
    elements = sorted({el for s in species for el in s.composition.atoms})
    rows = (*elements, CHARGE)
    E = np.zeros((len(rows), len(species)), dtype=np.int64)
    for j, s in enumerate(species):
        for el, n in s.composition.atoms.items():
            E[elements.index(el), j] = n
        E[-1, j] = s.composition.charge
    return AtomicMatrix(rows, tuple(s.name for s in species), E)


def reactant_complexes(names: Sequence[str], max_order: int = 2) -> list[Complex]:
    """All complexes of order 1..max_order over ``names``: M + M + C(M, 2) for order two."""
    out = []
    for order in range(1, max_order + 1):
        for combo in combinations_with_replacement(range(len(names)), order):
            counts: dict[str, int] = {}
            for i in combo:
                counts[names[i]] = counts.get(names[i], 0) + 1
            out.append(Complex(counts))
    return out


def _balanced_complexes(target: np.ndarray, E: np.ndarray, candidates: list[int],
                        max_order: Optional[int]) -> list[tuple[int, ...]]:
    """Nonnegative integer ``b`` over ``candidates`` with ``E[:, candidates] b == target``."""
    n_atom_rows = E.shape[0] - 1
    cols = [E[:, j].tolist() for j in candidates]
    # elements still coverable by candidates[i:]
    cover = [set() for _ in range(len(candidates) + 1)]
    for i in range(len(candidates) - 1, -1, -1):
        cover[i] = cover[i + 1] | {e for e in range(n_atom_rows) if cols[i][e] > 0}
    out = []
    counts = [0] * len(candidates)
    budget = math.inf if max_order is None else max_order

    def rec(i: int, rem: list[int], used: int) -> None:
        if any(rem[e] > 0 and e not in cover[i] for e in range(n_atom_rows)):
            return
        if i == len(candidates):
            if not any(rem):
                out.append(tuple(counts))
            return
        col = cols[i]
        top = min(rem[e] // col[e] for e in range(n_atom_rows) if col[e] > 0)
        top = int(min(top, budget - used))
        for n in range(top, -1, -1):
            counts[i] = n
            rec(i + 1, [r - n * c for r, c in zip(rem, col)], used + n)
        counts[i] = 0

    rec(0, target.tolist(), 0)
    return out


def generate_steps(species: Sequence[Species], atomic: AtomicMatrix | None = None, max_order: int = 2,
                   max_product_order: Optional[int] = None,
                   allow_shared_species: bool = False) -> list[ElementaryStep]:
    """Combinatorially feasible elementary steps, balanced in atoms and charge.

    For every reactant complex of order ``1..max_order`` all product
    complexes with identical atomic and charge content are generated.  By
    default the product side has unrestricted order and no species may
    appear on both sides; with these conventions the 19-species
    permanganate/oxalate set yields 1022 steps.  ``max_product_order=2``
    with ``allow_shared_species=True`` gives the symmetric order-two
    convention instead.
    """
    atomic = atomic or atomic_matrix(species)
    names = list(atomic.species)
    E = atomic.matrix
    empty = [n for j, n in enumerate(names) if not E[:-1, j].any()]
    if empty:
        raise ValueError(f"species without atoms make product sides unbounded: {empty}")
    steps = []
    for a in reactant_complexes(names, max_order):
        target = atomic.content(a)
        cand = [j for j, n in enumerate(names) if allow_shared_species or n not in a]
        for b in _balanced_complexes(target, E, cand, max_product_order):
            prod = Complex({names[j]: n for j, n in zip(cand, b) if n})
            if prod != a and prod:
                steps.append(ElementaryStep(a, prod))
    return steps


def _as_network(steps: Sequence[ElementaryStep], species: Optional[Sequence[Union[str, Species]]]) -> ReactionNetwork:
    rsteps = [s.as_reaction_step() for s in steps]
    return ReactionNetwork.from_steps(rsteps, species=species or ())


def volpert_filter(steps: Sequence[ElementaryStep], initial: Iterable[str],
                   species: Optional[Sequence[Union[str, Species]]] = None) -> tuple[list[ElementaryStep], list[str]]:
    """Steps that can fire from ``initial`` and the species that can never be formed."""
    net = _as_network(steps, species)
    idx = volpert_index(net, initial)
    surviving = [s for s, i in zip(steps, idx.reaction_index.values()) if i is not None]
    return surviving, idx.unreachable_species


def _system(steps: Sequence[ElementaryStep], overall: Union[ElementaryStep, ReactionStep],
            species: Optional[Sequence[str]]) -> tuple[list[str], list[list[int]], list[int]]:
    names = list(species) if species else []
    seen = set(names)
    for s in (*steps, overall):
        for n in (*s.reactants, *s.products):
            if n not in seen:
                seen.add(n)
                names.append(n)
    G = [[s.products.get(n, 0) - s.reactants.get(n, 0) for s in steps] for n in names]
    g = [overall.products.get(n, 0) - overall.reactants.get(n, 0) for n in names]
    return names, G, g


def lp_bounds(steps: Sequence[ElementaryStep], overall: Union[ElementaryStep, ReactionStep],
              species: Optional[Sequence[str]] = None, per_step: bool = True) -> LPBounds:
    """Exact LP lower bounds on decompositions of ``overall``.

    ``min_total_steps`` is the optimum of ``min sum(x)`` over rational
    ``x >= 0`` with ``Gamma x = gamma_overall``; every integer
    decomposition needs at least ``ceil(min_total_steps)`` steps.  With
    ``per_step``, ``lower_bounds[s]`` is ``min x_s`` (only positive bounds
    are kept: those steps occur in every decomposition).
    """
    _, G, g = _system(steps, overall, species)
    try:
        lp = ExactLP(G, g)
    except Infeasible:
        raise NoDecomposition(f"{overall} is not a nonnegative combination of the given steps") from None
    try:
        best = lp.minimize([1] * len(steps))
        lower = {}
        if per_step:
            for r, step in enumerate(steps):
                c = [0] * len(steps)
                c[r] = 1
                v = lp.minimize(c).value
                if v > 0:
                    lower[step] = v
    except Unbounded:  # cannot happen for nonnegative objectives
        raise NoDecomposition("LP unbounded") from None
    return LPBounds(best.value, lower, best.x)


def enumerate_decompositions(steps: Sequence[ElementaryStep], overall: Union[ElementaryStep, ReactionStep],
                             max_total_steps: int, species: Optional[Sequence[str]] = None,
                             node_limit: Optional[int] = None) -> list[DecompositionSolution]:
    """All ``x >= 0`` integer with ``Gamma x = gamma_overall`` and ``sum(x) <= max_total_steps``.

    Depth-first branch and bound over ``x`` in step order.  At every node
    the LP relaxation of the remaining subproblem is solved exactly; the
    node is pruned if it is infeasible or its bound exceeds the remaining
    budget.  Raises :class:`SearchBudgetExceeded` (carrying the partial
    result) once more than ``node_limit`` nodes have been expanded.
    """
    steps = list(steps)
    _, G, g = _system(steps, overall, species)
    R = len(steps)
    cols = [[row[j] for row in G] for j in range(R)]
    solutions: list[DecompositionSolution] = []
    lp_cache: dict[tuple, Optional[Fraction]] = {}
    nodes = 0
    x = [0] * R

    def lower_bound(j: int, rem: tuple[int, ...]) -> Optional[Fraction]:
        key = (j, rem)
        if key not in lp_cache:
            if not any(rem):
                lp_cache[key] = Fraction(0)
            else:
                try:
                    sub = [row[j:] for row in G]
                    lp_cache[key] = ExactLP(sub, rem).minimize([1] * (R - j)).value
                except Infeasible:
                    lp_cache[key] = None
        return lp_cache[key]

    def emit() -> None:
        mult = {steps[r]: n for r, n in enumerate(x) if n}
        solutions.append(DecompositionSolution(mult, tuple(x)))

    def dfs(j: int, rem: tuple[int, ...], budget: int) -> None:
        nonlocal nodes
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            raise SearchBudgetExceeded(solutions, nodes)
        if j == R:
            if not any(rem):
                emit()
            return
        bound = lower_bound(j, rem)
        if bound is None or math.ceil(bound) > budget:
            return
        col = cols[j]
        for v in range(budget + 1):
            x[j] = v
            dfs(j + 1, tuple(r - v * c for r, c in zip(rem, col)), budget - v)
        x[j] = 0

    if max_total_steps >= 0:
        dfs(0, tuple(g), max_total_steps)
    return solutions


PERMANGANATE_OVERALL = "2 MnO4m + 6 Hp + 5 H2C2O4 -> 2 Mn2p + 8 H2O + 10 CO2"

# name -> (data file, overall reaction)
SPECIES_FIXTURES: dict[str, tuple[str, str]] = {
    "permanganate": ("permanganate_oxalate.txt", PERMANGANATE_OVERALL),
    "hydrogen-bromine": ("hydrogen_bromine.txt", "H2 + Br2 -> 2 HBr"),
}


def load_species_fixture(name: str) -> list[Species]:
    """Species (with compositions) of a bundled fixture, see :data:`SPECIES_FIXTURES`."""
    from importlib.resources import files

    from .parser import parse_species_file

    if name not in SPECIES_FIXTURES:
        raise KeyError(f"unknown species fixture {name!r}; choose from {sorted(SPECIES_FIXTURES)}")
    text = files("rxnkit.data").joinpath(SPECIES_FIXTURES[name][0]).read_text(encoding="utf-8")
    return parse_species_file(text)


def load_permanganate_species() -> list[Species]:
    """The 19 species of the permanganate/oxalic acid fixture."""
    return load_species_fixture("permanganate")

_NONCOMPLEX = ["H2C2O4", "HC2O4m", "Hp", "C2O4m2", "Mn2p", "MnC2O4", "MnO4m", "MnO2", "Mn3p", "CO2", "H2O", "CO2m"]

INITIAL_PRESETS: dict[str, tuple[str, ...]] = {
    # the five species present at the start of the experiment
    "bold": ("H2C2O4", "Mn2p", "MnO4m", "MnO2", "MnC2O4_2m"),
    # bold set plus the reactants of the overall reaction (adds H+)
    "bold+reactants": ("H2C2O4", "Mn2p", "MnO4m", "MnO2", "MnC2O4_2m", "Hp"),
    # every species that is not a bracketed complex
    "noncomplex": tuple(_NONCOMPLEX),
}


def overall_imbalance(overall: Union[ElementaryStep, ReactionStep], atomic: AtomicMatrix) -> dict[str, int]:
    """Nonzero net element and charge changes of ``overall`` (empty when balanced)."""
    diff = atomic.content(overall.products) - atomic.content(overall.reactants)
    return {row: int(v) for row, v in zip(atomic.rows, diff) if v}
