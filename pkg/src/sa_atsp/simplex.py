"""Exact rational two-phase simplex.

Solves  min c.x  subject to  A_eq x = b_eq,  A_ge x >= b_ge,  x >= 0  over
Fractions.  Bland's rule everywhere, so cycling is impossible and every
number is exact.  Intended for desk-scale systems (a few hundred rows);
rows arrive as sparse {column: coeff} dicts.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class LpError(Exception):
    pass


class Infeasible(LpError):
    pass


class Unbounded(LpError):
    pass


_ZERO = Fraction(0)
_ONE = Fraction(1)


def solve(c: Sequence[Fraction],
          eqs: list[tuple[dict[int, Fraction], Fraction]],
          ges: list[tuple[dict[int, Fraction], Fraction]],
          n: int) -> tuple[list[Fraction], Fraction]:
    """Return (x, value) at an exact optimum."""
    n_ge = len(ges)
    rows_in = [(dict(coeffs), Fraction(rhs)) for coeffs, rhs in eqs]
    for i, (coeffs, rhs) in enumerate(ges):
        row = dict(coeffs)
        row[n + i] = -_ONE  # surplus
        rows_in.append((row, Fraction(rhs)))
    n_cols = n + n_ge  # structural + surplus
    n_rows = len(rows_in)

    # dense tableau with one artificial per row; flip rows to rhs >= 0
    width = n_cols + n_rows + 1
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    for i, (coeffs, rhs) in enumerate(rows_in):
        row = [_ZERO] * width
        sign = -_ONE if rhs < 0 else _ONE
        for j, a in coeffs.items():
            row[j] = sign * a
        row[-1] = sign * rhs
        row[n_cols + i] = _ONE
        tab.append(row)
        basis.append(n_cols + i)

    def pivot(r: int, col: int) -> None:
        prow = tab[r]
        piv = prow[col]
        if piv != _ONE:
            inv = _ONE / piv
            tab[r] = prow = [v * inv for v in prow]
        for i, row in enumerate(tab):
            if i == r:
                continue
            f = row[col]
            if f:
                tab[i] = [a - f * b for a, b in zip(row, prow)]
        basis[r] = col

    def reduced_costs(cost: list[Fraction]) -> list[Fraction]:
        red = list(cost) + [_ZERO]
        for r, b in enumerate(basis):
            cb = cost[b]
            if cb:
                row = tab[r]
                for j in range(width):
                    if row[j]:
                        red[j] -= cb * row[j]
        return red

    def run(cost: list[Fraction], allowed: int) -> list[Fraction]:
        """Bland-rule iterations over columns [0, allowed); returns the
        final reduced-cost row."""
        red = reduced_costs(cost)
        while True:
            enter = -1
            for j in range(allowed):
                if red[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return red
            leave = -1
            best = None
            for r in range(n_rows):
                a = tab[r][enter]
                if a > 0:
                    ratio = tab[r][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                        best = ratio
                        leave = r
            if leave < 0:
                raise Unbounded("improving direction with no blocking row")
            pivot(leave, enter)
            f = red[enter]
            if f:
                prow = tab[leave]
                for j in range(width):
                    if prow[j]:
                        red[j] -= f * prow[j]

    # phase 1: drive artificials to zero
    phase1_cost = [_ZERO] * n_cols + [_ONE] * n_rows
    run(phase1_cost, width - 1)
    total = sum((tab[r][-1] for r in range(n_rows) if basis[r] >= n_cols), _ZERO)
    if total != 0:
        raise Infeasible("artificial variables remain positive")
    # pivot lingering zero-level artificials out; rows that cannot release
    # theirs are redundant (all structural coefficients zero) and are dropped
    keep = []
    for r in range(n_rows):
        if basis[r] >= n_cols:
            col = next((j for j in range(n_cols) if tab[r][j] != 0), None)
            if col is None:
                continue
            pivot(r, col)
        keep.append(r)
    if len(keep) != n_rows:
        tab = [tab[r] for r in keep]
        basis = [basis[r] for r in keep]
        n_rows = len(keep)

    # phase 2 on the structural + surplus columns only (artificial columns
    # persist in the tableau but can no longer enter)
    phase2_cost = [Fraction(v) for v in c] + [_ZERO] * (width - 1 - n)
    run(phase2_cost, n_cols)

    x = [_ZERO] * n
    for r, b in enumerate(basis):
        if b < n:
            x[b] = tab[r][-1]
    value = sum((ci * xi for ci, xi in zip(c, x)), _ZERO)
    return x, value
