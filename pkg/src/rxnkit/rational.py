"""Exact linear algebra over the rationals."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce


def rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns.  ``rows`` is not modified."""
    A = [list(map(Fraction, r)) for r in rows]
    if not A:
        return A, []
    n = len(A[0])
    pivots: list[int] = []
    i = 0
    for j in range(n):
        p = next((r for r in range(i, len(A)) if A[r][j] != 0), None)
        if p is None:
            continue
        A[i], A[p] = A[p], A[i]
        piv = A[i][j]
        A[i] = [x / piv for x in A[i]]
        for r in range(len(A)):
            if r != i and A[r][j] != 0:
                f = A[r][j]
                A[r] = [x - f * y for x, y in zip(A[r], A[i])]
        pivots.append(j)
        i += 1
        if i == len(A):
            break
    return A, pivots


def nullspace(rows: list[list[Fraction]], n_cols: int) -> list[list[Fraction]]:
    """Basis of ``{x : A x = 0}`` for an ``m x n_cols`` matrix."""
    R, pivots = rref(rows)
    free = [j for j in range(n_cols) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -R[i][f]
        basis.append(v)
    return basis


def to_coprime_integers(v: list[Fraction]) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers with positive first nonzero entry."""
    den = reduce(math.lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(math.gcd, ints, 0)
    if g == 0:
        return tuple(ints)
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def integer_left_kernel(rows: list[list[Fraction]], n_rows: int) -> list[tuple[int, ...]]:
    """Integer basis of ``{v : v^T A = 0}`` for the ``n_rows x n`` matrix ``rows``."""
    if n_rows == 0:
        return []
    n = len(rows[0]) if rows else 0
    transposed = [[rows[i][j] for i in range(n_rows)] for j in range(n)]
    return [to_coprime_integers(v) for v in nullspace(transposed, n_rows)]
