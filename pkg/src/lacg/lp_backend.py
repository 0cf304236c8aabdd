"""Thin LP/ILP interface over scipy's HiGHS bindings.

Every other module talks to the solver through :class:`LpModel` and
:class:`LpResult`, so the backend can be swapped without touching callers.

Dual sign convention: ``>=`` rows report duals ``>= 0`` and ``<=`` rows report
duals ``<= 0`` (the sensitivity of a minimisation objective to the rhs).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

LE, GE, EQ = "<=", ">=", "="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time-limit"
ERROR = "error"


@dataclass
class LpModel:
    """A minimisation problem ``min c.x  s.t.  A x (sense) rhs,  x >= 0``.

    Attributes:
        c: Objective coefficients, one per variable.
        A: Constraint matrix (any scipy sparse format or dense array).
        senses: One of ``"<="``, ``">="``, ``"="`` per row.
        rhs: Right-hand sides.
        integrality: Optional 0/1 flags marking integer variables.
        upper: Optional per-variable upper bounds (``inf`` when absent).
        var_names: Optional names used by :func:`write_lp`.
        row_names: Optional names used by :func:`write_lp`.
    """

    c: np.ndarray
    A: sp.csr_matrix
    senses: Sequence[str]
    rhs: np.ndarray
    integrality: np.ndarray | None = None
    upper: np.ndarray | None = None
    var_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.A = sp.csr_matrix(self.A, dtype=float)
        if self.A.shape[1] != len(self.c) and self.A.shape[0] == 0:
            self.A = sp.csr_matrix((0, len(self.c)))
        self.senses = list(self.senses)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if self.A.shape != (len(self.rhs), len(self.c)):
            raise ValueError(f"matrix shape {self.A.shape} does not match rows/vars")
        if len(self.senses) != len(self.rhs):
            raise ValueError("one sense per row required")
        if any(s not in (LE, GE, EQ) for s in self.senses):
            raise ValueError("senses must be '<=', '>=' or '='")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A.data))
                and np.all(np.isfinite(self.rhs))):
            raise ValueError("non-finite coefficient")

    @classmethod
    def from_triplets(cls, c, rows, cols, vals, senses, rhs, **kwargs) -> "LpModel":
        """Build from COO triplets; duplicate entries are summed."""
        shape = (len(rhs), len(c))
        A = sp.coo_matrix((np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64),
                           np.asarray(cols, dtype=np.int64))), shape=shape).tocsr()
        return cls(c=c, A=A, senses=senses, rhs=rhs, **kwargs)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.rhs)


@dataclass
class LpResult:
    """Outcome of a solve.

    ``duals`` is only filled for LP solves with status ``optimal``.
    """

    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = float("nan")
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _split(model: LpModel):
    senses = np.array(model.senses, dtype=object)
    le = np.flatnonzero(senses == LE)
    ge = np.flatnonzero(senses == GE)
    eq = np.flatnonzero(senses == EQ)
    return le, ge, eq


def solve_lp(model: LpModel) -> LpResult:
    """Solve the LP relaxation of ``model`` (integrality flags ignored)."""
    le, ge, eq = _split(model)
    A = model.A
    ub_rows = np.concatenate([le, ge])
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if len(ub_rows) else None
    b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]]) if len(ub_rows) else None
    A_eq = A[eq] if len(eq) else None
    b_eq = model.rhs[eq] if len(eq) else None
    upper = model.upper if model.upper is not None else np.full(model.n_vars, np.inf)
    bounds = np.column_stack([np.zeros(model.n_vars), upper])
    res = linprog(model.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpResult(INFEASIBLE, message=res.message)
    if res.status == 3:
        return LpResult(UNBOUNDED, message=res.message)
    if res.status != 0:
        return LpResult(ERROR, message=res.message)
    duals = np.zeros(model.n_rows)
    if len(ub_rows):
        marg = res.ineqlin.marginals
        duals[le] = marg[: len(le)]
        duals[ge] = -marg[len(le):]
    if len(eq):
        duals[eq] = res.eqlin.marginals
    return LpResult(OPTIMAL, x=np.asarray(res.x), duals=duals, objective=float(res.fun),
                    message=res.message)


def solve_ilp(model: LpModel, time_limit: float | None = None) -> LpResult:
    """Solve ``model`` honouring its integrality flags.

    Args:
        model: Problem; variables without a flag stay continuous.
        time_limit: Wall-clock seconds. When the limit is hit the best
            incumbent is returned with status ``time-limit`` (``x`` is
            ``None`` if no incumbent exists).
    """
    integrality = (np.zeros(model.n_vars) if model.integrality is None
                   else np.asarray(model.integrality, dtype=float))
    lo = np.full(model.n_rows, -np.inf)
    hi = np.full(model.n_rows, np.inf)
    for r, s in enumerate(model.senses):
        if s in (GE, EQ):
            lo[r] = model.rhs[r]
        if s in (LE, EQ):
            hi[r] = model.rhs[r]
    upper = model.upper if model.upper is not None else np.full(model.n_vars, np.inf)
    options = {}
    if time_limit is not None:
        if time_limit <= 0:
            return LpResult(TIME_LIMIT, message="time limit is zero")
        options["time_limit"] = float(time_limit)
    constraints = [LinearConstraint(model.A, lo, hi)] if model.n_rows else []
    res = milp(model.c, constraints=constraints, integrality=integrality,
               bounds=Bounds(np.zeros(model.n_vars), upper), options=options)
    if res.status == 0:
        return LpResult(OPTIMAL, x=np.asarray(res.x), objective=float(res.fun), message=res.message)
    if res.status == 2:
        return LpResult(INFEASIBLE, message=res.message)
    if res.status == 3:
        return LpResult(UNBOUNDED, message=res.message)
    if res.status == 1:
        x = None if res.x is None else np.asarray(res.x)
        obj = float(res.fun) if x is not None else float("nan")
        return LpResult(TIME_LIMIT, x=x, objective=obj, message=res.message)
    return LpResult(ERROR, message=res.message)


def write_lp(model: LpModel) -> str:
    """Render ``model`` in CPLEX LP text format for external debugging."""
    vn = model.var_names or [f"x{j}" for j in range(model.n_vars)]
    rn = model.row_names or [f"r{i}" for i in range(model.n_rows)]

    def expr(idx, coef):
        parts = []
        for j, a in zip(idx, coef):
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {abs(a):.12g} {vn[j]}")
        text = " ".join(parts) if parts else "0 " + vn[0]
        return text[2:] if text.startswith("+ ") else text

    nz = np.flatnonzero(model.c)
    lines = ["Minimize", " obj: " + expr(nz, model.c[nz]), "Subject To"]
    for i in range(model.n_rows):
        row = model.A.getrow(i)
        lines.append(f" {rn[i]}: {expr(row.indices, row.data)} {model.senses[i]} {model.rhs[i]:.12g}")
    if model.upper is not None:
        lines.append("Bounds")
        for j, u in enumerate(model.upper):
            if np.isfinite(u):
                lines.append(f" 0 <= {vn[j]} <= {u:.12g}")
    if model.integrality is not None and np.any(model.integrality):
        lines.append("General")
        lines.append(" " + " ".join(vn[j] for j in np.flatnonzero(model.integrality)))
    lines.append("End")
    return "\n".join(lines) + "\n"
