"""Benchmark networks with their published coefficients and initial data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import ReactionNetwork
from .parser import parse_network

__all__ = ["Builtin", "BUILTINS", "builtin", "builtin_entry", "AVOGADRO"]

AVOGADRO = 6.02214076e23


@dataclass(frozen=True)
class Builtin:
    network: ReactionNetwork
    c0: np.ndarray
    x0: Optional[np.ndarray] = None
    volume: Optional[float] = None
    rates_are_stochastic: bool = False
    note: str = ""

    @property
    def k(self) -> np.ndarray:
        return self.network.rates


def _make(text: str, c0, **kw) -> Builtin:
    return Builtin(parse_network(text), np.asarray(c0, dtype=float), **kw)


_BRUSSELATOR_VOLUME = 1e-21
_BRUSSELATOR_X0 = np.array([500.0, 720.0])

BUILTINS: dict[str, Builtin] = {
    "Robertson": _make(
        """
        A -> B, 0.04
        2 B -> B + C, 3e7
        B + C -> A + C, 1e4
        """,
        [1.0, 0.0, 0.0],
    ),
    "Brusselator": _make(
        """
        external: A, P
        A -> X, 1.92
        X -> Y, 5.76
        2 X + Y -> 3 X, 5.6
        X -> P, 4.8
        """,
        _BRUSSELATOR_X0 / (AVOGADRO * _BRUSSELATOR_VOLUME),
        x0=_BRUSSELATOR_X0,
        volume=_BRUSSELATOR_VOLUME,
        note="x0 = (500, 720) molecules in 1e-21 dm3; c0 is the matching concentration",
    ),
    "Autocatalator": _make(
        """
        external: A, P
        A -> X, 110.2
        X -> Y, 0.094
        X + 2 Y -> 3 Y, 0.011
        Y -> P, 90.34
        """,
        [15.0, 80.0],
        x0=np.array([15.0, 80.0]),
        volume=1.0 / AVOGADRO,
        rates_are_stochastic=True,
        note="no volume is published; the unit volume N_A V = 1 makes counts and concentrations coincide",
    ),
    "TwoXRevX": _make(
        """
        2 X <-> X, 0.33, 0.72
        """,
        [2.0],
    ),
}


def builtin_entry(name: str) -> Builtin:
    try:
        return BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None


def builtin(name: str) -> tuple[ReactionNetwork, np.ndarray, np.ndarray]:
    """``(network, default k, default c0)`` for a built-in benchmark."""
    entry = builtin_entry(name)
    return entry.network, entry.k.copy(), entry.c0.copy()
