"""Dense two-phase bounded-variable revised simplex and an independent certificate check.

Problems have the form::

    maximize    c^T x
    subject to  lo_i <= a_i^T x <= hi_i      (ranged rows; lo == hi for equalities)
                lb_j <= x_j <= ub_j

Internally every row gets a slack ``s_i = a_i^T x`` boxed by ``[lo_i, hi_i]``
and, if the starting point violates the row, an artificial variable driven
to zero in phase 1.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .matlib import InvalidInput

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
MAX_ITER = 1_000_000
STALL_LIMIT = 50
REFRESH_EVERY = 64
PRICE_BLOCK = 1 << 16
CERT_TOL = 1e-7


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class LpModel:
    objective: np.ndarray
    a_matrix: np.ndarray
    row_lo: np.ndarray
    row_hi: np.ndarray
    var_lb: np.ndarray
    var_ub: np.ndarray

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).ravel()
        n = c.size
        a = np.array(self.a_matrix, dtype=float)
        if a.size % max(n, 1) or (a.ndim == 2 and a.size and a.shape[1] != n):
            raise InvalidInput(f"constraint matrix of shape {a.shape} does not match {n} variables")
        a = a.reshape(-1, n) if n else np.zeros((0, 0))
        m = a.shape[0]
        vecs = {}
        for name, default, size in (("row_lo", -np.inf, m), ("row_hi", np.inf, m),
                                    ("var_lb", 0.0, n), ("var_ub", 1.0, n)):
            v = getattr(self, name)
            v = np.full(size, default) if v is None else np.array(v, dtype=float).ravel()
            if v.size != size:
                raise InvalidInput(f"{name} has length {v.size}, expected {size}")
            vecs[name] = v
        if n == 0:
            raise InvalidInput("an LP needs at least one variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a))):
            raise InvalidInput("objective and constraint coefficients must be finite")
        if np.any(np.isnan(vecs["row_lo"])) or np.any(np.isnan(vecs["row_hi"])):
            raise InvalidInput("row bounds must not be NaN")
        if np.any(vecs["row_lo"] > vecs["row_hi"]) or np.any(vecs["var_lb"] > vecs["var_ub"]):
            raise InvalidInput("every lower bound must not exceed its upper bound")
        for arr in (c, a, *vecs.values()):
            arr.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "a_matrix", a)
        for name, v in vecs.items():
            object.__setattr__(self, name, v)

    @classmethod
    def from_rows(cls, objective, rows, var_bounds=None) -> "LpModel":
        """``rows`` is a list of ``(coeffs, lo, hi)``; ``var_bounds`` defaults to ``(0, 1)`` each."""
        c = np.asarray(objective, dtype=float).ravel()
        a = np.array([np.asarray(r[0], dtype=float).ravel() for r in rows]).reshape(len(rows), c.size)
        lo = [(-np.inf if r[1] is None else r[1]) for r in rows]
        hi = [(np.inf if r[2] is None else r[2]) for r in rows]
        if var_bounds is None:
            lb, ub = None, None
        else:
            lb = [(-np.inf if b[0] is None else b[0]) for b in var_bounds]
            ub = [(np.inf if b[1] is None else b[1]) for b in var_bounds]
        return cls(c, a, lo, hi, lb, ub)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.a_matrix.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective_value: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Simplex:
    """Working state over columns ``[x | s | art]``."""

    def __init__(self, model: LpModel):
        self.model = model
        A = model.a_matrix
        m, n = A.shape
        self.m, self.n = m, n
        self.A = A

        x0 = np.where(np.isfinite(model.var_lb), model.var_lb,
                      np.where(np.isfinite(model.var_ub), model.var_ub, 0.0))
        r0 = A @ x0 if m else np.zeros(0)
        lo, hi = model.row_lo, model.row_hi

        self.lb = np.concatenate([model.var_lb, lo, np.zeros(m)])
        self.ub = np.concatenate([model.var_ub, hi, np.full(m, np.inf)])
        self.val = np.concatenate([x0, np.clip(r0, lo, hi), np.zeros(m)])
        self.art_sign = np.ones(m)
        self.basis = np.empty(m, dtype=np.int64)
        self.is_basic = np.zeros(n + 2 * m, dtype=bool)
        for i in range(m):
            if lo[i] - FEAS_TOL <= r0[i] <= hi[i] + FEAS_TOL:
                self.basis[i] = n + i
                self.val[n + i] = r0[i]
            else:
                target = lo[i] if r0[i] < lo[i] else hi[i]
                self.art_sign[i] = np.sign(target - r0[i])
                self.val[n + i] = target
                self.val[n + m + i] = abs(target - r0[i])
                self.basis[i] = n + m + i
        self.is_basic[self.basis] = True
        self.iterations = 0
        self._factor()

    # column j of [A | -I | diag(art_sign)]
    def column(self, j):
        n, m = self.n, self.m
        if j < n:
            return self.A[:, j]
        e = np.zeros(m)
        if j < n + m:
            e[j - n] = -1.0
        else:
            e[j - n - m] = self.art_sign[j - n - m]
        return e

    def _factor(self):
        m = self.m
        B = np.empty((m, m))
        for i, j in enumerate(self.basis):
            B[:, i] = self.column(j)
        self.B_inv = np.linalg.inv(B) if m else np.zeros((0, 0))
        self._recompute_basics()

    def _recompute_basics(self):
        n, m = self.n, self.m
        if not m:
            return
        nb = ~self.is_basic
        rhs = -(self.A @ np.where(nb[:n], self.val[:n], 0.0))
        s_nb = nb[n:n + m]
        rhs += np.where(s_nb, self.val[n:n + m], 0.0)
        a_nb = nb[n + m:]
        rhs -= np.where(a_nb, self.art_sign * self.val[n + m:], 0.0)
        self.val[self.basis] = self.B_inv @ rhs

    def reduced_costs(self, cost, y):
        n, m = self.n, self.m
        d = np.empty(n + 2 * m)
        for start in range(0, n, PRICE_BLOCK):
            stop = min(n, start + PRICE_BLOCK)
            d[start:stop] = cost[start:stop] - self.A[:, start:stop].T @ y
        d[n:n + m] = cost[n:n + m] + y
        d[n + m:] = cost[n + m:] - self.art_sign * y
        return d

    def run(self, cost, max_iter):
        """Maximize ``cost @ val`` from the current basis; returns a status string."""
        bland = False
        stall = 0
        bland_after = 10 * (self.n + self.m)
        local_iter = 0
        while True:
            if self.iterations >= max_iter:
                return LpStatus.ITERATION_LIMIT
            y = cost[self.basis] @ self.B_inv if self.m else np.zeros(0)
            d = self.reduced_costs(cost, y)

            movable = (~self.is_basic) & (self.ub > self.lb)
            at_lb = self.val <= self.lb
            at_ub = self.val >= self.ub
            up = movable & ~at_ub & (d > OPT_TOL)
            down = movable & ~at_lb & (d < -OPT_TOL)
            eligible = up | down
            if not eligible.any():
                return LpStatus.OPTIMAL
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if up[j] else -1.0

            w = self.B_inv @ self.column(j) if self.m else np.zeros(0)
            # basics move by -direction * t * w
            step = self.ub[j] - self.lb[j]
            leave = -1
            delta = -direction * w
            bvals = self.val[self.basis]
            blb, bub = self.lb[self.basis], self.ub[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.where(delta < -PIVOT_TOL, (bvals - blb) / -delta,
                               np.where(delta > PIVOT_TOL, (bub - bvals) / delta, np.inf))
            lim = np.maximum(lim, 0.0)
            if lim.size:
                best = lim.min()
                if best < step:
                    ties = np.flatnonzero(lim <= best + 1e-12)
                    if bland:
                        leave = int(ties[np.argmin(self.basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(w[ties]))])
                    step = best
            if not np.isfinite(step):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            local_iter += 1
            if leave < 0:
                # bound flip: land exactly on the opposite bound
                self.val[j] = self.ub[j] if direction > 0 else self.lb[j]
            else:
                self.val[j] += direction * step
            if self.m:
                self.val[self.basis] = bvals + step * delta
            if leave >= 0:
                out = int(self.basis[leave])
                self.val[out] = blb[leave] if delta[leave] < 0 else bub[leave]
                self.is_basic[out] = False
                self.is_basic[j] = True
                self.basis[leave] = j
                self._pivot(leave, w)
                if self.iterations % REFRESH_EVERY == 0:
                    self._factor()

            stall = stall + 1 if step <= FEAS_TOL else 0
            if not bland and (stall >= STALL_LIMIT or local_iter > bland_after):
                log.debug("switching to Bland's rule after %d iterations", local_iter)
                bland = True

    def _pivot(self, r, w):
        Binv = self.B_inv
        piv = w[r]
        row = Binv[r] / piv
        Binv -= np.outer(w, row)
        Binv[r] = row


def solve(model: LpModel, max_iter: int = MAX_ITER) -> LpSolution:
    """Two-phase bounded-variable revised simplex (maximization)."""
    sx = _Simplex(model)
    n, m = sx.n, sx.m
    n_cols = n + 2 * m

    if np.any(sx.basis >= n + m):
        phase1 = np.zeros(n_cols)
        phase1[n + m:] = -1.0
        status = sx.run(phase1, max_iter)
        if status is LpStatus.ITERATION_LIMIT:
            return _result(sx, LpStatus.ITERATION_LIMIT, model)
        sx._factor()
        infeas = float(sx.val[n + m:].sum())
        scale = 1.0 + float(np.abs(model.a_matrix).max(initial=0.0))
        if infeas > FEAS_TOL * scale:
            return _result(sx, LpStatus.INFEASIBLE, model)
    sx.ub[n + m:] = 0.0
    sx.val[n + m:] = np.where(sx.is_basic[n + m:], sx.val[n + m:], 0.0)

    cost = np.concatenate([model.objective, np.zeros(2 * m)])
    status = sx.run(cost, max_iter)
    sx._factor()
    return _result(sx, status, model)


def _result(sx: _Simplex, status: LpStatus, model: LpModel) -> LpSolution:
    n, m = sx.n, sx.m
    x = np.clip(sx.val[:n], model.var_lb, model.var_ub)
    if status is LpStatus.OPTIMAL and m:
        cost = np.concatenate([model.objective, np.zeros(2 * m)])
        y = cost[sx.basis] @ sx.B_inv
    else:
        y = np.zeros(m)
    r = model.objective - model.a_matrix.T @ y if m else model.objective.copy()
    obj = float(model.objective @ x) if status is LpStatus.OPTIMAL else float("nan")
    for arr in (x, y, r):
        arr.setflags(write=False)
    return LpSolution(status, x, obj, y, r, sx.iterations)


@dataclass
class CertificateReport:
    ok: bool
    primal_objective: float
    dual_objective: float
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def verify_certificate(model: LpModel, sol: LpSolution, tol: float = CERT_TOL) -> CertificateReport:
    """Check primal feasibility, dual signs, complementary slackness and the duality gap.

    Reduced costs are recomputed from the duals; the solution's own copy is not trusted.
    """
    viol = []
    if sol.status is not LpStatus.OPTIMAL:
        return CertificateReport(False, float("nan"), float("nan"), [f"status is {sol.status}"])
    x = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.duals, dtype=float)
    A, c = model.a_matrix, model.objective
    act = A @ x
    r = c - A.T @ y

    for j in np.flatnonzero((x < model.var_lb - tol) | (x > model.var_ub + tol)):
        viol.append(f"primal: x[{j}]={x[j]:.12g} outside [{model.var_lb[j]}, {model.var_ub[j]}]")
    for i in np.flatnonzero((act < model.row_lo - tol) | (act > model.row_hi + tol)):
        viol.append(f"primal: row {i} activity {act[i]:.12g} outside [{model.row_lo[i]}, {model.row_hi[i]}]")

    for j in range(x.size):
        if r[j] > tol and x[j] < model.var_ub[j] - tol:
            viol.append(f"dual: reduced cost {r[j]:.3g} > 0 but x[{j}] below its upper bound")
        elif r[j] < -tol and x[j] > model.var_lb[j] + tol:
            viol.append(f"dual: reduced cost {r[j]:.3g} < 0 but x[{j}] above its lower bound")
    for i in range(y.size):
        if y[i] > tol and act[i] < model.row_hi[i] - tol:
            viol.append(f"slackness: dual {y[i]:.3g} on row {i} not active at its upper bound")
        elif y[i] < -tol and act[i] > model.row_lo[i] + tol:
            viol.append(f"slackness: dual {y[i]:.3g} on row {i} not active at its lower bound")

    def bound_term(mult, low, high, point):
        # multipliers within tol of zero are priced at the point itself
        bound = np.where(mult > tol, high, np.where(mult < -tol, low, point))
        return float(np.sum(mult * bound))

    with np.errstate(invalid="ignore"):
        dual_obj = (bound_term(y, model.row_lo, model.row_hi, act)
                    + bound_term(r, model.var_lb, model.var_ub, x))
    primal = float(c @ x)
    if not np.isfinite(dual_obj) or abs(primal - dual_obj) > tol * (1.0 + abs(primal)):
        viol.append(f"gap: primal {primal:.15g} vs dual {dual_obj:.15g}")
    return CertificateReport(not viol, primal, dual_obj, viol)
