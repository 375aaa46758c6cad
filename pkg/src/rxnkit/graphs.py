"""Volpert graph and Volpert indexing.

The Volpert graph is the directed bipartite multigraph with species and
reaction steps as vertices: ``alpha[m, r]`` edges run from species ``m``
into step ``r`` and ``beta[m, r]`` edges from step ``r`` into species
``m``.  Volpert indexing assigns reachability levels starting from a set
of initially present species: those get index 0, a step gets 1 + the
largest index among its reactants, and any other species gets the
smallest index among the steps producing it.  Species and steps that
never receive an index cannot occur; they are reported with index
``None``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import Optional, Union

from .network import ReactionNetwork, stoichiometry

__all__ = ["VolpertGraph", "VolpertIndexing", "volpert_graph", "volpert_index", "export_dot", "step_label"]


def step_label(r: int) -> str:
    """Vertex name of step ``r`` (0-based) in graphs and reports."""
    return f"R{r + 1}"


@dataclass(frozen=True)
class VolpertGraph:
    species_vertices: tuple[str, ...]
    reaction_vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]
    external: frozenset = frozenset()

    @property
    def edge_units(self) -> int:
        """Number of edges counted with multiplicity."""
        return sum(m for _, _, m in self.edges)


@dataclass(frozen=True)
class VolpertIndexing:
    species_index: dict[str, Optional[int]]
    reaction_index: dict[str, Optional[int]]
    graph: VolpertGraph

    @property
    def unreachable_species(self) -> list[str]:
        return [s for s, i in self.species_index.items() if i is None]

    @property
    def reachable_reactions(self) -> list[str]:
        return [r for r, i in self.reaction_index.items() if i is not None]

    def table(self) -> str:
        """Plain-text index table, species first."""
        def fmt(i):
            return "unreachable" if i is None else str(i)

        width = max(len(v) for v in (*self.species_index, *self.reaction_index, "vertex"))
        lines = [f"{'vertex':<{width}}  index"]
        lines += [f"{s:<{width}}  {fmt(i)}" for s, i in self.species_index.items()]
        lines += [f"{r:<{width}}  {fmt(i)}" for r, i in self.reaction_index.items()]
        return "\n".join(lines)


def volpert_graph(network: ReactionNetwork) -> VolpertGraph:
    alpha, beta, _ = stoichiometry(network)
    names = network.species_names
    reactions = tuple(step_label(r) for r in range(len(network.steps)))
    edges = []
    for r, rname in enumerate(reactions):
        for m, sname in enumerate(names):
            if alpha[m, r]:
                edges.append((sname, rname, int(alpha[m, r])))
        for m, sname in enumerate(names):
            if beta[m, r]:
                edges.append((rname, sname, int(beta[m, r])))
    return VolpertGraph(tuple(names), reactions, tuple(edges), frozenset(network.external_species))


def volpert_index(network: ReactionNetwork, initial: Iterable[str]) -> VolpertIndexing:
    """Volpert indices from the ``initial`` species (externals count as initial).

    Computed by a worklist fixpoint; the result does not depend on the
    processing order.
    """
    initial = set(initial)
    unknown = initial - set(network.species_names)
    if unknown:
        raise ValueError(f"unknown initial species: {sorted(unknown)}")
    initial |= set(network.external_species)

    sidx: dict[str, Optional[int]] = {s: (0 if s in initial else None) for s in network.species_names}
    steps = network.steps
    ridx: list[Optional[int]] = [None] * len(steps)
    consumers: dict[str, list[int]] = {s: [] for s in network.species_names}
    for r, step in enumerate(steps):
        for s in step.reactants:
            consumers[s].append(r)

    work = list(range(len(steps)))
    while work:
        pending = set()
        for r in work:
            reactants = steps[r].reactants
            if any(sidx[s] is None for s in reactants):
                continue
            level = 1 + max((sidx[s] for s in reactants), default=0)
            if ridx[r] is not None and ridx[r] <= level:
                continue
            ridx[r] = level
            for s in steps[r].products:
                if s not in initial and (sidx[s] is None or level < sidx[s]):
                    sidx[s] = level
                    pending.update(consumers[s])
        work = sorted(pending)
    reaction_index = {step_label(r): i for r, i in enumerate(ridx)}
    return VolpertIndexing(sidx, reaction_index, volpert_graph(network))


def _quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(obj: Union[VolpertGraph, VolpertIndexing], name: str = "volpert") -> str:
    """DOT digraph: species as ellipses, steps as boxes.

    Edges with multiplicity above one are labelled.  Given an indexing,
    vertices are labelled with their index and unreachable ones are grayed.
    """
    indexing = obj if isinstance(obj, VolpertIndexing) else None
    graph = obj.graph if indexing else obj
    lines = [f"digraph {_quote(name)} {{"]

    def node(v: str, shape: str, index: Optional[int], has_index: bool) -> str:
        attrs = [f"shape={shape}"]
        if has_index:
            label = _quote(v)[:-1] + "\\n" + ("unreachable" if index is None else str(index)) + '"'
            attrs.append(f"label={label}")
            if index is None:
                attrs += ["style=filled", "fillcolor=lightgray", "fontcolor=gray40", "color=gray60"]
        if v in graph.external:
            attrs.append("peripheries=2")
        return f"  {_quote(v)} [{', '.join(attrs)}];"

    for s in graph.species_vertices:
        i = indexing.species_index[s] if indexing else None
        lines.append(node(s, "ellipse", i, indexing is not None))
    for r in graph.reaction_vertices:
        i = indexing.reaction_index[r] if indexing else None
        lines.append(node(r, "box", i, indexing is not None))
    for a, b, m in graph.edges:
        label = f" [label={_quote(str(m))}]" if m > 1 else ""
        lines.append(f"  {_quote(a)} -> {_quote(b)}{label};")
    lines.append("}")
    return "\n".join(lines) + "\n"
