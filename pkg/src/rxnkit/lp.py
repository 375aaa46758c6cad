"""Exact linear programming over the rationals.

Textbook two-phase primal simplex on a dense tableau of ``Fraction``
entries with Bland's rule, so it terminates and never suffers from
round-off.  Problems have the standard form::

    minimize c @ x  subject to  A @ x == b,  x >= 0
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = ["ExactLP", "LPResult", "Infeasible", "Unbounded", "linprog_exact"]


class Infeasible(Exception):
    """The constraint set ``A x = b, x >= 0`` is empty."""


class Unbounded(Exception):
    """The objective is unbounded below on the feasible set."""


@dataclass(frozen=True)
class LPResult:
    x: tuple[Fraction, ...]
    value: Fraction
    pivots: int


def _to_fractions(values) -> list[Fraction]:
    return [v if isinstance(v, Fraction) else Fraction(v) for v in values]


class ExactLP:
    """Feasible tableau for ``A x = b, x >= 0``, reusable for many objectives.

    Phase one runs at construction and raises :class:`Infeasible` if the
    system has no nonnegative solution.  Each call to :meth:`minimize`
    starts phase two from a copy of the feasible basis.
    """

    def __init__(self, A: Sequence[Sequence], b: Sequence):
        rows = [_to_fractions(r) for r in A]
        rhs = _to_fractions(b)
        if len(rows) != len(rhs):
            raise ValueError("A and b have different row counts")
        self.n = len(rows[0]) if rows else 0
        if any(len(r) != self.n for r in rows):
            raise ValueError("ragged constraint matrix")
        m = len(rows)
        for i in range(m):
            if rhs[i] < 0:
                rows[i] = [-v for v in rows[i]]
                rhs[i] = -rhs[i]
        # artificial columns n .. n+m-1
        self._rows = [r + [Fraction(int(i == k)) for k in range(m)] for i, r in enumerate(rows)]
        self._rhs = rhs
        self._basis = [self.n + i for i in range(m)]
        self.pivots = 0
        cost = [Fraction(0)] * self.n + [Fraction(1)] * m
        value = self._run(cost, allowed=range(self.n + m))
        if value != 0:
            raise Infeasible("no nonnegative solution of A x = b")
        self._drive_out_artificials()

    def _pivot(self, i: int, j: int) -> None:
        rows, rhs = self._rows, self._rhs
        prow = rows[i]
        piv = prow[j]
        if piv != 1:
            prow[:] = [v / piv for v in prow]
            rhs[i] /= piv
        nz = [k for k, v in enumerate(prow) if v]
        for r, row in enumerate(rows):
            if r != i:
                f = row[j]
                if f:
                    for k in nz:
                        row[k] -= f * prow[k]
                    rhs[r] -= f * rhs[i]
        self._basis[i] = j
        self.pivots += 1

    def _run(self, cost: list[Fraction], allowed) -> Fraction:
        """Primal simplex with Bland's rule from the current basis; returns the optimum."""
        allowed = list(allowed)
        while True:
            # reduced costs d_j = c_j - c_B B^-1 A_j
            d = {j: cost[j] for j in allowed}
            for i, bj in enumerate(self._basis):
                cb = cost[bj]
                if cb:
                    row = self._rows[i]
                    for j in allowed:
                        if row[j]:
                            d[j] -= cb * row[j]
            entering = next((j for j in allowed if d[j] < 0), None)
            if entering is None:
                return sum((cost[bj] * self._rhs[i] for i, bj in enumerate(self._basis)), Fraction(0))
            best = None
            for i, row in enumerate(self._rows):
                a = row[entering]
                if a > 0:
                    ratio = self._rhs[i] / a
                    key = (ratio, self._basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise Unbounded("objective unbounded below")
            self._pivot(best[1], entering)

    def _drive_out_artificials(self) -> None:
        i = 0
        while i < len(self._rows):
            if self._basis[i] >= self.n:
                j = next((j for j in range(self.n) if self._rows[i][j]), None)
                if j is None:
                    # redundant equality
                    del self._rows[i], self._rhs[i], self._basis[i]
                    continue
                self._pivot(i, j)
            i += 1
        for row in self._rows:
            del row[self.n:]

    def minimize(self, c: Sequence) -> LPResult:
        cost = _to_fractions(c)
        if len(cost) != self.n:
            raise ValueError(f"objective has length {len(cost)}, expected {self.n}")
        saved = ([r[:] for r in self._rows], self._rhs[:], self._basis[:], self.pivots)
        try:
            value = self._run(cost, allowed=range(self.n))
            x = [Fraction(0)] * self.n
            for i, bj in enumerate(self._basis):
                x[bj] = self._rhs[i]
            return LPResult(tuple(x), value, self.pivots - saved[3])
        finally:
            self._rows, self._rhs, self._basis, self.pivots = saved


def linprog_exact(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    """Solve ``min c x  s.t.  A x = b, x >= 0`` exactly.

    Raises :class:`Infeasible` or :class:`Unbounded`.
    """
    return ExactLP(A, b).minimize(c)
