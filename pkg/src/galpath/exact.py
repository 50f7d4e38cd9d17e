"""Exact linear algebra over the rationals.

Rows are lists of ``Fraction`` (or ``int``).  Every routine scales rows to
integers and runs fraction-free (Bareiss) elimination, so no intermediate
value is ever rounded.  Pivots are taken in the first column that has a
nonzero entry, from the first row that has one.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

Matrix = list[list[int]]


def _integer_row(row: Sequence) -> list[int]:
    fr = [Fraction(v) for v in row]
    scale = lcm(1, *(f.denominator for f in fr))
    return [int(f * scale) for f in fr]


def echelon(rows: Sequence[Sequence], ncols: Optional[int] = None) -> tuple[Matrix, list[int]]:
    """Fraction-free row echelon form.

    Returns the reduced integer matrix and the list of pivot columns.  The
    input is not modified.
    """
    m = [_integer_row(r) for r in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    nrows = len(m)
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            m[p], m[r] = m[r], m[p]
        piv = m[r][c]
        for i in range(r + 1, nrows):
            f = m[i][c]
            row_i = m[i]
            row_r = m[r]
            for j in range(c + 1, ncols):
                q, rem = divmod(piv * row_i[j] - f * row_r[j], prev)
                assert rem == 0, "Bareiss division must be exact"
                row_i[j] = q
            row_i[c] = 0
        # rows above the pivot row are left untouched, rows below keep the
        # Bareiss invariant only relative to this pivot
        prev = piv
        pivots.append(c)
        r += 1
    return m, pivots


def rank(rows: Sequence[Sequence], ncols: Optional[int] = None) -> int:
    if not rows:
        return 0
    return len(echelon(rows, ncols)[1])


def _back_substitute(m: Matrix, pivots: list[int], ncols: int, free_values: dict[int, Fraction],
                     rhs: Optional[list[int]] = None) -> list[Fraction]:
    sol = [Fraction(0)] * ncols
    for c, v in free_values.items():
        sol[c] = v
    for r in range(len(pivots) - 1, -1, -1):
        c = pivots[r]
        s = Fraction(rhs[r]) if rhs is not None else Fraction(0)
        row = m[r]
        for j in range(c + 1, ncols):
            if row[j]:
                s -= row[j] * sol[j]
        sol[c] = s / row[c]
    return sol


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of ``{x : A x = 0}``, one vector per free column."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    m, pivots = echelon(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        values = {c: Fraction(0) for c in free}
        values[f] = Fraction(1)
        basis.append(_back_substitute(m, pivots, ncols, values))
    return basis


def solve(rows: Sequence[Sequence], rhs: Sequence) -> Optional[list[Fraction]]:
    """One exact solution of ``A x = b`` (free variables set to zero), or None."""
    if not rows:
        return None
    ncols = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    m, pivots = echelon(aug, ncols + 1)
    if pivots and pivots[-1] == ncols:
        return None
    free = {c: Fraction(0) for c in range(ncols) if c not in set(pivots)}
    rhs_col = [row[ncols] for row in m]
    return _back_substitute([row[:ncols] for row in m], pivots, ncols, free, rhs_col)


def matvec(rows: Sequence[Sequence], x: Sequence) -> list[Fraction]:
    return [sum((Fraction(a) * b for a, b in zip(r, x)), Fraction(0)) for r in rows]
