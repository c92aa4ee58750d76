"""Dense two-phase simplex for bounded-variable linear programs.

Solves  min c'x  s.t.  A x = b,  l <= x <= u  (l, u may be infinite).
Inequality rows are turned into equalities by the caller (slack columns).

The implementation is a textbook bounded-variable primal simplex with an
explicit basis inverse, Dantzig pricing, and a Bland fallback that kicks in
after a stretch of degenerate pivots so the method terminates on every
input.  Dense linear algebra only: instances of interest stay well under a
few thousand nonzeros, so no sparse machinery is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

AT_LOWER, AT_UPPER, BASIC, FREE = 0, 1, 2, 3

_REFACTOR_EVERY = 120
_STALL_LIMIT = 400
_PIVOT_TOL = 1e-7


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None
    reduced_costs: np.ndarray | None
    iterations: int


class _Tableau:
    """Mutable simplex state over fixed problem data."""

    refactor_every = _REFACTOR_EVERY

    def __init__(self, A: np.ndarray, b: np.ndarray, lower: np.ndarray,
                 upper: np.ndarray, tol: float):
        self.A = A
        self.b = b
        self.lower = lower
        self.upper = upper
        self.tol = tol
        self.m, self.n = A.shape
        self.vstat = np.empty(self.n, dtype=np.int8)
        self.values = np.zeros(self.n)
        # Nonbasic start: at the finite bound closest to zero, free vars at 0.
        for j in range(self.n):
            lo, hi = lower[j], upper[j]
            if np.isfinite(lo) and np.isfinite(hi):
                if abs(lo) <= abs(hi):
                    self.vstat[j], self.values[j] = AT_LOWER, lo
                else:
                    self.vstat[j], self.values[j] = AT_UPPER, hi
            elif np.isfinite(lo):
                self.vstat[j], self.values[j] = AT_LOWER, lo
            elif np.isfinite(hi):
                self.vstat[j], self.values[j] = AT_UPPER, hi
            else:
                self.vstat[j], self.values[j] = FREE, 0.0
        self.basis = np.empty(0, dtype=int)
        self.binv = np.empty((self.m, self.m))
        self.pivots_since_refactor = 0

    def set_basis(self, basis: np.ndarray) -> None:
        self.basis = basis.copy()
        self.refactor()

    def refactor(self) -> None:
        B = self.A[:, self.basis]
        binv = np.linalg.inv(B)
        # Reject numerically useless inverses so they never circulate.
        err = np.abs(B @ binv - np.eye(self.m)).max()
        if not np.isfinite(err) or err > 1e-6:
            raise np.linalg.LinAlgError(f"basis inverse quality {err:.2e}")
        self.binv = binv
        self.pivots_since_refactor = 0

    def basic_values(self) -> np.ndarray:
        rhs = self.b - self.A @ np.where(self.vstat == BASIC, 0.0, self.values)
        return self.binv @ rhs

    def sync_basics(self) -> None:
        xb = self.basic_values()
        self.values[self.basis] = xb

    def price(self, c: np.ndarray) -> np.ndarray:
        y = c[self.basis] @ self.binv
        d = c - y @ self.A
        d[self.basis] = 0.0
        return d

    def duals(self, c: np.ndarray) -> np.ndarray:
        return c[self.basis] @ self.binv


def _choose_entering(d: np.ndarray, vstat: np.ndarray, tol: float,
                     bland: bool, banned: set[int]) -> int:
    mask = (((vstat == AT_LOWER) & (d < -tol))
            | ((vstat == AT_UPPER) & (d > tol))
            | ((vstat == FREE) & (np.abs(d) > tol)))
    if banned:
        mask[list(banned)] = False
    if not mask.any():
        return -1
    idx = np.flatnonzero(mask)
    if bland:
        return int(idx[0])
    return int(idx[np.argmax(np.abs(d[idx]))])


def simplex_solve(c: np.ndarray, A: np.ndarray, b: np.ndarray,
                  lower: np.ndarray, upper: np.ndarray,
                  tol: float = 1e-9, max_iter: int | None = None
                  ) -> SimplexResult:
    """Two-phase bounded simplex on equality form.

    All arrays are dense float64; ``lower``/``upper`` may hold +-inf.
    Numerical breakdowns restart the solve deterministically with stricter
    settings (Bland pricing, tighter refactorization cadence).
    """
    attempts = ((False, _REFACTOR_EVERY), (True, 16), (True, 1))
    last = None
    for bland0, cadence in attempts:
        try:
            return _simplex_once(c, A, b, lower, upper, tol, max_iter,
                                 bland0, cadence)
        except np.linalg.LinAlgError as exc:
            last = exc
    raise RuntimeError(f"simplex: persistent numerical failure ({last})")


def _simplex_once(c: np.ndarray, A: np.ndarray, b: np.ndarray,
                  lower: np.ndarray, upper: np.ndarray,
                  tol: float, max_iter: int | None,
                  bland0: bool, cadence: int) -> SimplexResult:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if max_iter is None:
        max_iter = 4000 + 60 * (n + m)

    if m == 0:
        # Pure box problem.
        x = np.zeros(n)
        for j in range(n):
            if c[j] > tol:
                if not np.isfinite(lower[j]):
                    return SimplexResult("unbounded", None, -np.inf, None, None, 0)
                x[j] = lower[j]
            elif c[j] < -tol:
                if not np.isfinite(upper[j]):
                    return SimplexResult("unbounded", None, -np.inf, None, None, 0)
                x[j] = upper[j]
            else:
                x[j] = lower[j] if np.isfinite(lower[j]) else (
                    upper[j] if np.isfinite(upper[j]) else 0.0)
        return SimplexResult("optimal", x, float(c @ x), np.zeros(0), c.copy(), 0)

    # Append artificial columns forming the phase-1 basis.
    tab = _Tableau(
        np.hstack([A, np.eye(m)]), b,
        np.concatenate([lower, np.zeros(m)]),
        np.concatenate([upper, np.full(m, np.inf)]),
        tol,
    )
    tab.refactor_every = cadence
    resid = b - A @ tab.values[:n]
    for i in range(m):
        if resid[i] < 0.0:
            tab.A[i, n + i] = -1.0
    tab.set_basis(np.arange(n, n + m))
    tab.vstat[n:] = BASIC
    tab.sync_basics()

    art_cost = np.concatenate([np.zeros(n), np.ones(m)])
    total_iters, status = _run_phase(tab, art_cost, tol, max_iter, bland0)
    if status == "iteration_limit":
        raise RuntimeError("simplex: phase 1 iteration limit hit")
    phase1_obj = float(art_cost[tab.basis] @ tab.values[tab.basis])
    scale = 1.0 + float(np.max(np.abs(b))) if m else 1.0
    if phase1_obj > 1e-7 * scale:
        return SimplexResult("infeasible", None, np.inf, None, None, total_iters)

    _drive_out_artificials(tab, n)
    # Lock artificials at zero for phase 2.
    tab.lower[n:] = 0.0
    tab.upper[n:] = 0.0
    tab.values[n:][tab.vstat[n:] != BASIC] = 0.0

    full_cost = np.concatenate([c, np.zeros(m)])
    iters2, status = _run_phase(tab, full_cost, tol, max_iter, bland0)
    total_iters += iters2
    if status == "iteration_limit":
        raise RuntimeError("simplex: phase 2 iteration limit hit")
    if status == "unbounded":
        return SimplexResult("unbounded", None, -np.inf, None, None, total_iters)

    tab.sync_basics()
    x = tab.values[:n].copy()
    y = tab.duals(full_cost)
    d = tab.price(full_cost)[:n]
    return SimplexResult("optimal", x, float(c @ x), y, d, total_iters)


def _run_phase(tab: _Tableau, cost: np.ndarray, tol: float,
               max_iter: int, bland0: bool = False) -> tuple[int, str]:
    iters = 0
    stall = 0
    bland = bland0
    last_obj = np.inf
    banned: set[int] = set()
    while iters < max_iter:
        d = tab.price(cost)
        e = _choose_entering(d, tab.vstat, tol, bland, banned)
        if e < 0:
            return iters, "optimal"
        iters += 1

        increasing = tab.vstat[e] == AT_LOWER or (tab.vstat[e] == FREE and d[e] < 0)
        a_e = tab.A[:, e]
        col = tab.binv @ a_e
        # Guard against a drifted inverse: col must reproduce A_e through B.
        # On drift, refresh the factors and redo the whole pricing step so
        # the entering choice is made from accurate reduced costs.
        resid = tab.A[:, tab.basis] @ col - a_e
        if np.max(np.abs(resid)) > 1e-8 * (1.0 + np.max(np.abs(a_e))):
            if tab.pivots_since_refactor > 0:
                tab.refactor()
                tab.sync_basics()
                iters -= 1
                continue
        sign = 1.0 if increasing else -1.0
        del d
        # Basic variable i moves by -sign * col[i] * t.
        xb = tab.values[tab.basis]
        delta = sign * col
        with np.errstate(divide="ignore", invalid="ignore"):
            drop_t = (xb - tab.lower[tab.basis]) / delta
            rise_t = (xb - tab.upper[tab.basis]) / delta
        ratios = np.full(tab.m, np.inf)
        pos = delta > tol
        neg = delta < -tol
        ratios[pos] = drop_t[pos]
        ratios[neg] = rise_t[neg]
        np.clip(ratios, 0.0, None, out=ratios)
        step, leave = _ratio_test(tab, ratios, delta, xb, tol)
        span = tab.upper[e] - tab.lower[e]
        if np.isfinite(span) and span < step:
            step, leave = span, -2
        if not np.isfinite(step):
            return iters, "unbounded"
        if leave >= 0 and abs(col[leave]) < _PIVOT_TOL and tab.pivots_since_refactor > 0:
            # Suspicious pivot from a drifted inverse: refresh and redo.
            tab.refactor()
            tab.sync_basics()
            iters -= 1
            continue

        # Apply the step.
        move = sign * step
        if leave == -2:
            tab.values[tab.basis] = xb - delta * step
            tab.values[e] += move
            tab.vstat[e] = AT_UPPER if increasing else AT_LOWER
        else:
            lv = tab.basis[leave]
            undo = (tab.vstat[e], tab.values[e])
            tab.values[tab.basis] = xb - delta * step
            tab.values[e] += move
            hit_lower = delta[leave] > 0
            tab.vstat[lv] = AT_LOWER if hit_lower else AT_UPPER
            tab.values[lv] = tab.lower[lv] if hit_lower else tab.upper[lv]
            tab.vstat[e] = BASIC
            tab.basis[leave] = e
            try:
                _update_binv(tab, leave, col)
            except np.linalg.LinAlgError:
                # The committed column was numerically dependent: restore the
                # previous basis and skip this entering candidate for now.
                tab.basis[leave] = lv
                tab.vstat[lv] = BASIC
                tab.vstat[e], tab.values[e] = undo
                tab.refactor()
                tab.sync_basics()
                banned.add(e)
                continue
            banned.clear()
        obj = float(cost @ tab.values)

        if obj < last_obj - tol * (1.0 + abs(last_obj)):
            stall = 0
            bland = bland0
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        last_obj = obj
    return iters, "iteration_limit"


def _ratio_test(tab: _Tableau, ratios: np.ndarray, delta: np.ndarray,
                xb: np.ndarray, tol: float) -> tuple[float, int]:
    """Blocking step and leaving row, preferring well-sized pivots.

    Rows with pivots below ``_PIVOT_TOL`` are skipped unless honouring the
    larger step would push them past their bound by more than a feasibility
    window; among near-ties the largest pivot wins, then the lowest variable
    index (determinism).
    """
    finite = np.isfinite(ratios)
    if not finite.any():
        return np.inf, -1
    absd = np.abs(delta)
    big = finite & (absd > _PIVOT_TOL)

    def pick(mask: np.ndarray) -> tuple[float, int]:
        step0 = float(ratios[mask].min())
        near = np.flatnonzero(mask & (ratios <= step0 + tol * (1.0 + step0)))
        best = min(near, key=lambda i: (-absd[i], tab.basis[i]))
        return float(max(ratios[best], 0.0)), int(best)

    if not big.any():
        return pick(finite)
    step, leave = pick(big)
    tiny = finite & ~big & (ratios < step - tol * (1.0 + step))
    if tiny.any():
        over = (step - ratios[tiny]) * absd[tiny]
        window = 1e-7 * (1.0 + np.abs(xb[tiny]))
        blocked = over > window
        if blocked.any():
            idx = np.flatnonzero(tiny)[blocked]
            best = min(idx, key=lambda i: (ratios[i], -absd[i], tab.basis[i]))
            return float(max(ratios[best], 0.0)), int(best)
    return step, leave


def _update_binv(tab: _Tableau, row: int, col: np.ndarray) -> None:
    tab.pivots_since_refactor += 1
    pivot = col[row]
    if tab.pivots_since_refactor >= tab.refactor_every or abs(pivot) < 1e-7:
        tab.refactor()
        return
    e = -col / pivot
    e[row] = 1.0 / pivot
    # binv <- E @ binv with E = I + (e - unit_row) outer unit_row
    brow = tab.binv[row].copy()
    tab.binv += np.outer(e, brow)
    tab.binv[row] -= brow


def _drive_out_artificials(tab: _Tableau, n: int) -> None:
    """Pivot basic artificials (value ~0) onto structural columns."""
    for i in range(tab.m):
        bi = tab.basis[i]
        if bi < n:
            continue
        row = tab.binv[i] @ tab.A[:, :n]
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        cand = [j for j in cand if tab.vstat[j] != BASIC]
        if not cand:
            continue  # redundant row; artificial stays basic at zero
        j = int(max(cand, key=lambda k: abs(row[k])))
        col = tab.binv @ tab.A[:, j]
        tab.vstat[j] = BASIC
        tab.vstat[bi] = AT_LOWER
        tab.values[bi] = 0.0
        tab.basis[i] = j
        try:
            _update_binv(tab, i, col)
        except np.linalg.LinAlgError:
            tab.basis[i] = bi
            tab.vstat[bi] = BASIC
            tab.vstat[j] = AT_LOWER if np.isfinite(tab.lower[j]) else FREE
            tab.refactor()
        tab.sync_basics()
