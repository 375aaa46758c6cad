"""Reaction network data model and mass-action kinetics.

A network is an ordered list of species and an ordered list of reaction
steps.  Each step carries its reactant and product complexes (species to
stoichiometric coefficient) and a rate coefficient.  From these the
molecularity matrices ``alpha`` (reactants), ``beta`` (products) and the
stoichiometric matrix ``gamma = beta - alpha`` follow, and the induced
kinetic differential equation reads::

    dc/dt = gamma @ (k * prod_m c_m ** alpha[m, :])

Rate coefficients carry units (concentration)**(1 - order) / time; they are
never checked.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .rational import integer_left_kernel

__all__ = [
    "Complex",
    "Composition",
    "Species",
    "ReactionStep",
    "ReactionNetwork",
    "KineticSystem",
    "stoichiometry",
    "mass_action_rhs",
    "mass_action_jacobian",
    "conserved_quantities",
    "arrhenius",
    "GAS_CONSTANT",
]

GAS_CONSTANT = 8.314462618  # J / (mol K)


class Complex(Mapping):
    """Immutable, hashable multiset of species: name -> positive coefficient.

    Zero coefficients are dropped; insertion order is kept for display.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        if isinstance(items, Mapping):
            items = items.items()
        data: dict[str, int] = {}
        for name, coef in items:
            if isinstance(coef, bool) or int(coef) != coef:
                raise ValueError(f"stoichiometric coefficient of {name!r} must be an integer, got {coef!r}")
            coef = int(coef)
            if coef < 0:
                raise ValueError(f"stoichiometric coefficient of {name!r} must be nonnegative, got {coef}")
            if coef:
                data[name] = data.get(name, 0) + coef
        self._items = data
        self._hash = hash(frozenset(data.items()))

    def __getitem__(self, name: str) -> int:
        return self._items[name]

    def get(self, name, default=0):
        return self._items.get(name, default)

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Complex):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == {k: v for k, v in other.items() if v}
        return NotImplemented

    @property
    def order(self) -> int:
        """Total stoichiometry of the complex."""
        return sum(self._items.values())

    def __str__(self) -> str:
        if not self._items:
            return "0"
        return " + ".join(name if c == 1 else f"{c} {name}" for name, c in self._items.items())

    def __repr__(self) -> str:
        return f"Complex({self._items!r})"


@dataclass(frozen=True)
class Composition:
    """Atom counts plus signed charge of one species."""

    atoms: Mapping[str, int]
    charge: int = 0

    def __post_init__(self):
        atoms = {el: int(n) for el, n in self.atoms.items() if n}
        if any(n < 0 for n in atoms.values()):
            raise ValueError("atom counts must be nonnegative")
        if not atoms and not self.charge:
            raise ValueError("a composition needs at least one atom or a nonzero charge")
        object.__setattr__(self, "atoms", atoms)

    def __hash__(self):
        return hash((frozenset(self.atoms.items()), self.charge))

    def __add__(self, other: Composition) -> Composition:
        atoms = dict(self.atoms)
        for el, n in other.atoms.items():
            atoms[el] = atoms.get(el, 0) + n
        return Composition(atoms, self.charge + other.charge)

    def __mul__(self, n: int) -> Composition:
        return Composition({el: c * n for el, c in self.atoms.items()}, self.charge * n)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Species:
    name: str
    composition: Optional[Composition] = None
    external: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("species name must be nonempty")


@dataclass(frozen=True)
class ReactionStep:
    """One irreversible reaction step ``reactants -> products`` with rate coefficient ``rate``."""

    reactants: Complex
    products: Complex
    rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "reactants", Complex(self.reactants))
        object.__setattr__(self, "products", Complex(self.products))
        rate = float(self.rate)
        if not rate >= 0 or math.isinf(rate):
            raise ValueError(f"rate coefficient must be finite and nonnegative, got {self.rate!r}")
        object.__setattr__(self, "rate", rate)
        if self.reactants == self.products:
            raise ValueError(f"reactant and product complexes are identical: {self.reactants}")

    @property
    def order(self) -> int:
        return self.reactants.order

    def __str__(self) -> str:
        return f"{self.reactants} -> {self.products}"


@dataclass(frozen=True)
class ReactionNetwork:
    """Ordered species and steps.  Immutable once built."""

    species: tuple[Species, ...]
    steps: tuple[ReactionStep, ...] = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        species = tuple(s if isinstance(s, Species) else Species(s) for s in self.species)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "steps", tuple(self.steps))
        if not species:
            raise ValueError("a network needs at least one species")
        index = {}
        for i, s in enumerate(species):
            if s.name in index:
                raise ValueError(f"duplicate species name {s.name!r}")
            index[s.name] = i
        object.__setattr__(self, "_index", index)
        for r, step in enumerate(self.steps):
            for name in (*step.reactants, *step.products):
                if name not in index:
                    raise ValueError(f"step {r + 1} ({step}) references unknown species {name!r}")

    @classmethod
    def from_steps(cls, steps: Iterable[ReactionStep], external: Iterable[str] = (), species: Iterable = ()) -> ReactionNetwork:
        """Build a network, registering species in first-appearance order."""
        steps = list(steps)
        external = set(external)
        names: dict[str, Species] = {}
        for s in species:
            s = s if isinstance(s, Species) else Species(s)
            names[s.name] = s
        for step in steps:
            for name in (*step.reactants, *step.products):
                names.setdefault(name, Species(name))
        for name in external:
            names.setdefault(name, Species(name))
        out = [Species(s.name, s.composition, s.external or s.name in external) for s in names.values()]
        return cls(tuple(out), tuple(steps))

    @property
    def species_names(self) -> list[str]:
        return [s.name for s in self.species]

    @property
    def internal_species(self) -> list[str]:
        return [s.name for s in self.species if not s.external]

    @property
    def external_species(self) -> list[str]:
        return [s.name for s in self.species if s.external]

    @property
    def rates(self) -> np.ndarray:
        return np.array([s.rate for s in self.steps], dtype=float)

    def index(self, name: str) -> int:
        return self._index[name]

    def __len__(self) -> int:
        return len(self.steps)

    def with_rates(self, k) -> ReactionNetwork:
        k = np.asarray(k, dtype=float)
        if k.shape != (len(self.steps),):
            raise ValueError(f"expected {len(self.steps)} rate coefficients, got shape {k.shape}")
        steps = tuple(ReactionStep(s.reactants, s.products, float(kr)) for s, kr in zip(self.steps, k))
        return ReactionNetwork(self.species, steps)


def stoichiometry(network: ReactionNetwork) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(alpha, beta, gamma)``, each of shape (M, R), rows in species order."""
    M, R = len(network.species), len(network.steps)
    alpha = np.zeros((M, R), dtype=np.int64)
    beta = np.zeros((M, R), dtype=np.int64)
    for r, step in enumerate(network.steps):
        for name, n in step.reactants.items():
            alpha[network.index(name), r] = n
        for name, n in step.products.items():
            beta[network.index(name), r] = n
    return alpha, beta, beta - alpha


class KineticSystem:
    """Mass-action ODE restricted to the internal species.

    External species are folded into effective rate coefficients: each
    step's ``k`` is multiplied by ``conc ** alpha`` of every external
    reactant.  Unspecified external concentrations default to 1.
    """

    def __init__(self, network: ReactionNetwork, k=None, external: Mapping[str, float] | None = None):
        self.network = network
        k = network.rates if k is None else np.asarray(k, dtype=float)
        if k.shape != (len(network.steps),):
            raise ValueError(f"expected {len(network.steps)} rate coefficients, got shape {k.shape}")
        if np.any(k < 0):
            raise ValueError("rate coefficients must be nonnegative")
        external = dict(external or {})
        unknown = set(external) - set(network.external_species)
        if unknown:
            raise ValueError(f"not external species: {sorted(unknown)}")
        alpha, _, gamma = stoichiometry(network)
        ext = np.array([s.external for s in network.species], dtype=bool)
        ext_conc = np.array([external.get(s.name, 1.0) for s in network.species])[ext]
        factor = np.prod(ext_conc[:, None] ** alpha[ext], axis=0) if ext.any() else np.ones(len(k))
        self.k = k * factor
        self.alpha = alpha[~ext]
        self.gamma = gamma[~ext]
        self.species = [s.name for s in network.species if not s.external]
        self._active = [np.flatnonzero(self.alpha[:, r]) for r in range(self.alpha.shape[1])]
        # flattened monomials, one padding factor (index M -> value 1.0) per step so no segment is empty
        M = self.alpha.shape[0]
        idx, pw, starts = [], [], []
        for r, active in enumerate(self._active):
            starts.append(len(idx))
            idx += [M, *active]
            pw += [1, *self.alpha[active, r]]
        self._mono_idx = np.array(idx, dtype=np.intp)
        self._mono_pow = np.array(pw, dtype=float)
        self._mono_start = np.array(starts, dtype=np.intp)

    @property
    def n_species(self) -> int:
        return self.alpha.shape[0]

    def _check(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n_species,):
            raise ValueError(f"state must have length {self.n_species}, got shape {c.shape}")
        return c

    def rates(self, c) -> np.ndarray:
        """Step rates ``k * prod(c ** alpha)`` with ``0 ** 0 = 1``."""
        return self._rates(self._check(c))

    def _rates(self, c: np.ndarray) -> np.ndarray:
        if not len(self.k):
            return np.zeros(0)
        vals = np.append(c, 1.0)[self._mono_idx] ** self._mono_pow
        return self.k * np.multiply.reduceat(vals, self._mono_start)

    def rhs(self, c) -> np.ndarray:
        return self.gamma @ self._rates(self._check(c))

    def _rhs(self, c: np.ndarray) -> np.ndarray:
        return self.gamma @ self._rates(c)

    def rate_jacobian(self, c) -> np.ndarray:
        """d(rate_r)/d(c_j), shape (R, M)."""
        c = self._check(c)
        M, R = self.alpha.shape
        D = np.zeros((R, M))
        for r in range(R):
            a = self.alpha[:, r]
            for j in self._active[r]:
                p = a.copy()
                p[j] -= 1
                D[r, j] = self.k[r] * a[j] * np.prod(c ** p)
        return D

    def jacobian(self, c) -> np.ndarray:
        return self.gamma @ self.rate_jacobian(c)


def mass_action_rhs(network: ReactionNetwork, k, c, external: Mapping[str, float] | None = None) -> np.ndarray:
    """Right-hand side ``gamma @ (k * c**alpha)`` over the internal species."""
    return KineticSystem(network, k, external).rhs(c)


def mass_action_jacobian(network: ReactionNetwork, k, c, external: Mapping[str, float] | None = None) -> np.ndarray:
    """Analytic Jacobian of :func:`mass_action_rhs` with respect to ``c``."""
    return KineticSystem(network, k, external).jacobian(c)


def conserved_quantities(network: ReactionNetwork) -> list[tuple[int, ...]]:
    """Integer basis of the left kernel of the internal stoichiometric matrix.

    Each returned vector ``v`` satisfies ``v @ gamma == 0`` exactly, so
    ``v . c(t)`` is constant along every solution.  Vectors are scaled to
    coprime integers with a positive leading entry.
    """
    _, _, gamma = stoichiometry(network)
    internal = [not s.external for s in network.species]
    g = [[Fraction(int(x)) for x in row] for row, keep in zip(gamma, internal) if keep]
    return integer_left_kernel(g, n_rows=sum(internal))


def arrhenius(k0: float, n: float, A: float, T: float, R_gas: float = GAS_CONSTANT) -> float:
    """Modified Arrhenius rate coefficient ``k0 * T**n * exp(-A / (R_gas T))``."""
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T!r}")
    if k0 < 0:
        raise ValueError(f"pre-exponential factor must be nonnegative, got {k0!r}")
    return k0 * T**n * math.exp(-A / (R_gas * T))
