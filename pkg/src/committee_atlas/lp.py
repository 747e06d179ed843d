"""Exact LP feasibility over the rationals.

Phase-1 simplex with Bland's rule: minimizing the sum of artificial
variables decides feasibility of {Ax <= / == b, x >= 0} with bit-exact
verdicts and guaranteed termination. Dense tableau of Fractions; fine for
the few-hundred-cell systems the axiom checks produce.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

__all__ = ["find_feasible_point"]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def find_feasible_point(
    num_vars: int,
    leq: Sequence[tuple[Mapping[int, Fraction], Fraction]] = (),
    eq: Sequence[tuple[Mapping[int, Fraction], Fraction]] = (),
) -> list[Fraction] | None:
    """A nonnegative solution of the constraint system, or None if infeasible.

    Constraints are (sparse coefficient map, rhs) pairs over variables
    0..num_vars-1, all of which are implicitly >= 0.
    """
    rows: list[list[Fraction]] = []
    senses: list[str] = []
    for coeffs, rhs in leq:
        rows.append(_dense(coeffs, num_vars) + [Fraction(rhs)])
        senses.append("<=")
    for coeffs, rhs in eq:
        rows.append(_dense(coeffs, num_vars) + [Fraction(rhs)])
        senses.append("==")

    m = len(rows)
    if m == 0:
        return [_ZERO] * num_vars

    # normalize to nonnegative rhs, then add slacks; rows that lack a usable
    # slack get an artificial variable
    for i in range(m):
        if rows[i][-1] < 0:
            rows[i] = [-x for x in rows[i]]
            senses[i] = {"<=": ">=", ">=": "<=", "==": "=="}[senses[i]]

    num_slack = sum(1 for s in senses if s != "==")
    total = num_vars + num_slack
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    artificial_rows: list[int] = []
    slack_at = 0
    for i in range(m):
        row = rows[i][:-1] + [_ZERO] * num_slack + [rows[i][-1]]
        if senses[i] == "<=":
            row[num_vars + slack_at] = _ONE
            basis.append(num_vars + slack_at)
            slack_at += 1
        elif senses[i] == ">=":
            row[num_vars + slack_at] = -_ONE
            basis.append(-1)  # placeholder, gets an artificial below
            slack_at += 1
            artificial_rows.append(i)
        else:
            basis.append(-1)
            artificial_rows.append(i)
        tableau.append(row)

    num_art = len(artificial_rows)
    for idx, i in enumerate(artificial_rows):
        for row in tableau:
            row.insert(total + idx, _ZERO)
        tableau[i][total + idx] = _ONE
        basis[i] = total + idx
    width = total + num_art + 1

    # phase-1 objective: minimize the artificial sum; reduced costs are
    # c_j - z_j with c = 1 on artificial columns and 0 elsewhere, so basic
    # artificials start at reduced cost zero
    obj = [_ZERO] * width
    for i in artificial_rows:
        for j in range(width):
            obj[j] -= tableau[i][j]
    for idx in range(num_art):
        obj[total + idx] += _ONE

    while True:
        enter = -1
        for j in range(total + num_art):
            if obj[j] < 0:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best: Fraction | None = None
        for i in range(m):
            coef = tableau[i][enter]
            if coef > 0:
                ratio = tableau[i][-1] / coef
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            # unbounded phase-1 objective cannot happen (bounded below by 0)
            raise ArithmeticError("phase-1 simplex lost boundedness")
        _pivot(tableau, obj, leave, enter)
        basis[leave] = enter

    if -obj[-1] != 0:
        return None

    # drive leftover zero-level artificials out of the basis
    for i in range(m):
        if basis[i] >= total:
            for j in range(total):
                if tableau[i][j] != 0:
                    _pivot(tableau, obj, i, j)
                    basis[i] = j
                    break

    solution = [_ZERO] * num_vars
    for i in range(m):
        if basis[i] < num_vars:
            solution[basis[i]] = tableau[i][-1]
    return solution


def _dense(coeffs: Mapping[int, Fraction], num_vars: int) -> list[Fraction]:
    row = [_ZERO] * num_vars
    for j, val in coeffs.items():
        if not 0 <= j < num_vars:
            raise IndexError(f"variable {j} outside 0..{num_vars - 1}")
        row[j] = Fraction(val)
    return row


def _pivot(tableau: list[list[Fraction]], obj: list[Fraction], row: int, col: int) -> None:
    piv = tableau[row]
    inv = 1 / piv[col]
    if inv != 1:
        tableau[row] = piv = [x * inv for x in piv]
    for other in tableau:
        if other is piv:
            continue
        factor = other[col]
        if factor:
            for j, pj in enumerate(piv):
                if pj:
                    other[j] -= factor * pj
    factor = obj[col]
    if factor:
        for j, pj in enumerate(piv):
            if pj:
                obj[j] -= factor * pj
