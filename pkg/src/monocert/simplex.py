"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c^T x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq``,
``x >= 0``. Sized for the small, highly degenerate programs produced by the
weight searches (a handful of rows, a few thousand columns).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["LPResult", "linprog_simplex"]

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = "optimal", "infeasible", "unbounded", "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray]
    fun: float
    # d(fun)/d(b) for each constraint row (same sign convention as scipy)
    ineqlin_marginals: Optional[np.ndarray]
    eqlin_marginals: Optional[np.ndarray]
    nit: int

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray, tol: float):
        self.T = T            # rows 0..m-1: constraints, last column: rhs
        self.basis = basis
        self.tol = tol
        self.nit = 0

    def pivot(self, r: int, col: int):
        T = self.T
        T[r] /= T[r, col]
        factors = T[:, col].copy()
        factors[r] = 0.0
        T -= np.outer(factors, T[r])
        T[:, col] = 0.0
        T[r, col] = 1.0
        self.basis[r] = col
        self.nit += 1

    def run(self, cost_row: int, allowed: np.ndarray, max_iter: int) -> str:
        """Bland's rule on objective row ``cost_row`` (reduced costs, min form)."""
        T, tol = self.T, self.tol
        m = len(self.basis)
        while True:
            if self.nit >= max_iter:
                return ITERATION_LIMIT
            reduced = T[cost_row, :-1]
            candidates = np.flatnonzero((reduced < -tol) & allowed)
            if candidates.size == 0:
                return OPTIMAL
            col = int(candidates[0])
            column = T[:m, col]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            # Bland: leaving variable with the smallest index among ties
            r = int(ties[np.argmin(self.basis[ties])])
            self.pivot(r, col)


def linprog_simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                    tol: float = 1e-11, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    if A_ub.shape[1] != n or A_eq.shape[1] != n or b_ub.size != m_ub or b_eq.size != m_eq:
        raise ValueError("inconsistent LP dimensions")

    A = np.vstack([A_ub, A_eq])
    b = np.concatenate([b_ub, b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    # columns: x (n) | slack/surplus for ub rows (m_ub) | artificial (m)
    n_slack = m_ub
    n_art = m
    total = n + n_slack + n_art
    T = np.zeros((m + 2, total + 1))
    T[:m, :n] = A
    T[np.arange(m_ub), n + np.arange(m_ub)] = sign[:m_ub]
    art_cols = n + n_slack + np.arange(m)
    T[np.arange(m), art_cols] = 1.0
    T[:m, -1] = b

    # Rows that already have a +1 slack start with it in the basis.
    basis = art_cols.copy()
    slack_ok = np.flatnonzero(sign[:m_ub] > 0)
    basis[slack_ok] = n + slack_ok
    needs_art = np.ones(m, dtype=bool)
    needs_art[slack_ok] = False

    cost_row, phase1_row = m, m + 1
    T[cost_row, :n] = c
    # phase-1 objective: sum of artificials that are basic
    T[phase1_row, art_cols[needs_art]] = 1.0
    for row in (cost_row, phase1_row):
        for r in range(m):
            coef = T[row, basis[r]]
            if coef != 0.0:
                T[row] -= coef * T[r]

    scale = max(1.0, float(np.max(np.abs(T[:m]))) if m else 1.0)
    tab = _Tableau(T, basis, tol * scale)
    allowed = np.ones(total, dtype=bool)
    allowed[art_cols[~needs_art]] = False

    if needs_art.any():
        status = tab.run(phase1_row, allowed, max_iter)
        if status == ITERATION_LIMIT:
            return LPResult(status, None, np.nan, None, None, tab.nit)
        if -T[phase1_row, -1] > 1e-9 * max(1.0, float(np.max(np.abs(b)))):
            return LPResult(INFEASIBLE, None, np.nan, None, None, tab.nit)
        # drive remaining artificials out of the basis where possible
        for r in range(m):
            if basis[r] in art_cols:
                row = T[r, : n + n_slack]
                nz = np.flatnonzero(np.abs(row) > tab.tol)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
    allowed[art_cols] = False

    status = tab.run(cost_row, allowed, max_iter)
    if status != OPTIMAL:
        return LPResult(status, None, -np.inf if status == UNBOUNDED else np.nan, None, None, tab.nit)

    x = np.zeros(total)
    x[basis] = T[:m, -1]
    # reduced cost of the unit column e_r is -pi_r
    pi = -T[cost_row, art_cols]
    marg = pi * sign
    return LPResult(OPTIMAL, x[:n].copy(), float(c @ x[:n]), marg[:m_ub].copy(), marg[m_ub:].copy(), tab.nit)
