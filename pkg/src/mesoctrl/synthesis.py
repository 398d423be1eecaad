"""Masked finite-horizon synthesis as column-decoupled equality-constrained QPs.

For each disturbance column j the on-mask entries of R(k) e_j and M(k) e_j
are the variables; the dynamics recursion, boundary condition, and optional
terminal closure become equality constraints; off-mask entries are fixed
structural zeros (they are never materialized, so mask compliance is exact).
Each column's KKT system is solved by dense QR with column pivoting after a
rank-revealing pass removes dependent constraint rows.

Modes:
  "mdesign"  disturbance feedback; M may act at index 0 and the boundary is
             R(1) = I + B M(0).
  "sls"      state feedback; strictly causal, boundary R(1) = I.

`closure=True` adds A R(T) + B M(T) = 0, making the pair an exact
finite-impulse-response closed loop. Many locality patterns admit no exact
closure (the optimal localized response carries a geometrically decaying
tail), so closure defaults to off and the result reports the closure gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .constraints import SupportSpec
from .plant import LinearSystem
from .spectral import CAUSAL, STRICTLY_CAUSAL, CostSpec, FIRPair, h2_cost_sq

MDESIGN = "mdesign"
SLS = "sls"

_FEAS_TOL = 1e-7        # constraint violation above this marks a column infeasible
_KKT_RANK_TOL = 1e-10   # KKT diagonal ratio below this is degenerate


class DegenerateProblemError(RuntimeError):
    """The KKT system is rank deficient (e.g. zero-cost free directions)."""


@dataclass(frozen=True)
class SynthesisProblem:
    sys: LinearSystem
    cost: CostSpec
    support: SupportSpec
    horizon: int
    mode: str
    closure: bool = False

    def __post_init__(self):
        if self.mode not in (MDESIGN, SLS):
            raise ValueError(f"mode must be '{MDESIGN}' or '{SLS}', got {self.mode!r}")
        if self.mode == SLS and self.support.causality != STRICTLY_CAUSAL:
            raise ValueError("sls mode requires a strictly causal support")
        if self.horizon != self.support.horizon:
            raise ValueError(f"horizon {self.horizon} != support horizon "
                             f"{self.support.horizon}")
        if (self.support.n, self.support.m) != (self.sys.n, self.sys.m):
            raise ValueError("support dimensions do not match the system")
        if self.cost.Q.shape[0] != self.sys.n:
            raise ValueError("cost dimensions do not match the system")


@dataclass(frozen=True)
class ColumnStatus:
    column: int            # 1-based disturbance node
    feasible: bool
    residual: float        # max constraint violation (min achievable if infeasible)
    kkt_condition: float
    objective: float
    reason: str = ""


@dataclass(frozen=True)
class SynthesisResult:
    pair: FIRPair
    objective: float         # includes the eps * ||M||^2 input term
    state_objective: float   # state-only part of the objective
    per_column_status: tuple[ColumnStatus, ...]
    solver_stats: dict
    closure: bool
    closure_gap: float       # ||A R(T) + B M(T)||_F of the returned pair

    @property
    def feasible(self) -> bool:
        return all(s.feasible for s in self.per_column_status)


def synthesize(problem: SynthesisProblem) -> SynthesisResult:
    sys, support, cost = problem.sys, problem.support, problem.cost
    n, m, T = sys.n, sys.m, problem.horizon
    k0 = support.m_start

    R = {k: np.zeros((n, n)) for k in range(1, T + 1)}
    M = {k: np.zeros((m, n)) for k in range(k0, T + 1)}
    statuses = []
    for j in range(n):
        col = _solve_column(problem, j)
        statuses.append(col.status)
        if col.status.feasible:
            for k in range(1, T + 1):
                R[k][:, j] = col.R_cols[k]
            for k in range(k0, T + 1):
                M[k][:, j] = col.M_cols[k]

    pair = FIRPair(T, R, M, support.causality)
    objective = h2_cost_sq(pair, cost)
    state_objective = sum(float(np.trace(Rk.T @ cost.Q @ Rk)) for Rk in R.values())
    gap = float(np.linalg.norm(sys.A @ R[T] + sys.B @ M[T], "fro"))
    stats = {
        "variables_total": sum(int(mask.sum()) for mask in support.R_masks.values())
                           + sum(int(mask.sum()) for mask in support.M_masks.values()),
        "kkt_condition_max": max((s.kkt_condition for s in statuses
                                  if np.isfinite(s.kkt_condition)), default=0.0),
        "infeasible_columns": [s.column for s in statuses if not s.feasible],
    }
    return SynthesisResult(pair=pair, objective=objective,
                           state_objective=state_objective,
                           per_column_status=tuple(statuses), solver_stats=stats,
                           closure=problem.closure, closure_gap=gap)


@dataclass
class _ColumnSolve:
    status: ColumnStatus
    R_cols: dict[int, np.ndarray] = field(default_factory=dict)
    M_cols: dict[int, np.ndarray] = field(default_factory=dict)


def _solve_column(problem: SynthesisProblem, j: int) -> _ColumnSolve:
    sys, support, cost = problem.sys, problem.support, problem.cost
    A, B = sys.A, sys.B
    n, m, T = sys.n, sys.m, problem.horizon
    k0 = support.m_start

    r_vars = {k: np.flatnonzero(support.R_masks[k][:, j]) for k in range(1, T + 1)}
    m_vars = {k: np.flatnonzero(support.M_masks[k][:, j]) for k in range(k0, T + 1)}
    r_off = {}
    m_off = {}
    nv = 0
    for k in range(1, T + 1):
        r_off[k] = nv
        nv += len(r_vars[k])
    for k in range(k0, T + 1):
        m_off[k] = nv
        nv += len(m_vars[k])

    n_rows = n * (T + 1) if problem.closure else n * T
    C = np.zeros((n_rows, nv))
    b = np.zeros(n_rows)

    def put_R(rows, k, coefs):
        # coefs: (n_rows_block, n) acting on the full R(k) column
        C[rows[:, None], r_off[k] + np.arange(len(r_vars[k]))] += coefs[:, r_vars[k]]

    def put_M(rows, k, coefs):
        C[rows[:, None], m_off[k] + np.arange(len(m_vars[k]))] += coefs[:, m_vars[k]]

    eye = np.eye(n)
    rows = np.arange(n)
    put_R(rows, 1, eye)
    if k0 == 0:
        put_M(rows, 0, -B)
    b[j] = 1.0
    for k in range(1, T):
        rows = np.arange(k * n, (k + 1) * n)
        put_R(rows, k + 1, eye)
        put_R(rows, k, -A)
        put_M(rows, k, -B)
    if problem.closure:
        rows = np.arange(T * n, (T + 1) * n)
        put_R(rows, T, A)
        put_M(rows, T, B)

    nonzero_rows = np.abs(C).sum(axis=1) > 0
    forced = ~nonzero_rows & (np.abs(b) > 0)
    if np.any(forced) or nv == 0:
        min_viol = _min_violation(C, b)
        return _ColumnSolve(ColumnStatus(
            column=j + 1, feasible=False, residual=min_viol,
            kkt_condition=float("nan"), objective=float("nan"),
            reason="constraints unsatisfiable for any on-mask values"))
    C1, b1 = C[nonzero_rows], b[nonzero_rows]

    # independent constraint rows via rank-revealing QR on the transpose
    q_, r_, piv = scipy.linalg.qr(C1.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r_))
    if diag.size and diag[0] > 0:
        rank = int(np.sum(diag > max(C1.shape) * np.finfo(float).eps * diag[0]))
    else:
        rank = 0
    keep = np.sort(piv[:rank])
    Ck, bk = C1[keep], b1[keep]

    H = np.zeros((nv, nv))
    for k in range(1, T + 1):
        idx = r_off[k] + np.arange(len(r_vars[k]))
        H[idx[:, None], idx] = 2.0 * cost.Q[np.ix_(r_vars[k], r_vars[k])]
    for k in range(k0, T + 1):
        idx = m_off[k] + np.arange(len(m_vars[k]))
        H[idx, idx] = 2.0 * cost.eps

    dim = nv + rank
    KKT = np.zeros((dim, dim))
    KKT[:nv, :nv] = H
    KKT[:nv, nv:] = Ck.T
    KKT[nv:, :nv] = Ck
    rhs = np.concatenate([np.zeros(nv), bk])

    qk, rk, pk = scipy.linalg.qr(KKT, pivoting=True)
    dk = np.abs(np.diag(rk))
    cond = float(dk[0] / dk[-1]) if dk[-1] > 0 else float("inf")
    if dk[-1] <= _KKT_RANK_TOL * dk[0]:
        return _ColumnSolve(ColumnStatus(
            column=j + 1, feasible=False, residual=float("nan"),
            kkt_condition=cond, objective=float("nan"),
            reason="degenerate KKT system (rank deficient)"))

    def kkt_solve(v):
        out = np.empty(dim)
        out[pk] = scipy.linalg.solve_triangular(rk, qk.T @ v)
        return out

    # iterative refinement: multipliers scale like the adjoint of an unstable
    # plant, so one factored solve can leave O(cond * eps) constraint defects
    z = kkt_solve(rhs)
    for _ in range(3):
        defect = rhs - KKT @ z
        if float(np.max(np.abs(defect))) < 1e-14 * max(1.0, float(np.max(np.abs(rhs)))):
            break
        z = z + kkt_solve(defect)
    x = z[:nv]

    viol = float(np.max(np.abs(C1 @ x - b1)))
    if viol > 1e-9:
        # restoration: dependent rows dropped from the KKT can drift on badly
        # conditioned long-horizon problems; project back onto the full
        # constraint set (moves x by O(viol), objective by O(viol^2))
        corr, *_ = np.linalg.lstsq(C1, b1 - C1 @ x, rcond=None)
        x = x + corr
        viol = float(np.max(np.abs(C1 @ x - b1)))
    if viol > _FEAS_TOL:
        return _ColumnSolve(ColumnStatus(
            column=j + 1, feasible=False, residual=_min_violation(C1, b1),
            kkt_condition=cond, objective=float("nan"),
            reason="constraints inconsistent with the sparsity masks"))

    R_cols = {}
    M_cols = {}
    for k in range(1, T + 1):
        colv = np.zeros(n)
        colv[r_vars[k]] = x[r_off[k] + np.arange(len(r_vars[k]))]
        R_cols[k] = colv
    for k in range(k0, T + 1):
        colv = np.zeros(m)
        colv[m_vars[k]] = x[m_off[k] + np.arange(len(m_vars[k]))]
        M_cols[k] = colv
    obj = float(x @ (H @ x)) / 2.0
    status = ColumnStatus(column=j + 1, feasible=True, residual=viol,
                          kkt_condition=cond, objective=obj)
    return _ColumnSolve(status, R_cols, M_cols)


def _min_violation(C: np.ndarray, b: np.ndarray) -> float:
    """Max-abs residual of the least-squares closest point to the constraints."""
    if C.size == 0 or C.shape[1] == 0:
        return float(np.max(np.abs(b))) if b.size else 0.0
    x, *_ = np.linalg.lstsq(C, b, rcond=None)
    return float(np.max(np.abs(C @ x - b)))


def feasibility_residual(pair: FIRPair, sys: LinearSystem, closure: bool = True) -> float:
    """Max defect of the dynamics constraints over all spectral indices.

    Covers the boundary condition (per causality mode), the recursion
    R(k+1) = A R(k) + B M(k), and, when `closure` is set, the terminal
    condition A R(T) + B M(T) = 0.
    """
    A, B = sys.A, sys.B
    T = pair.horizon
    if pair.causality == CAUSAL:
        start = pair.R(1) - np.eye(pair.n) - B @ pair.M(0)
    else:
        start = pair.R(1) - np.eye(pair.n)
    worst = float(np.linalg.norm(start, "fro"))
    for k in range(1, T):
        defect = pair.R(k + 1) - A @ pair.R(k) - B @ pair.M(k)
        worst = max(worst, float(np.linalg.norm(defect, "fro")))
    if closure:
        worst = max(worst, float(np.linalg.norm(A @ pair.R(T) + B @ pair.M(T), "fro")))
    return worst


def normalized_cost(result: "SynthesisResult | float", baseline: float) -> float:
    """Objective divided by a positive baseline cost."""
    if baseline <= 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    objective = result.objective if isinstance(result, SynthesisResult) else float(result)
    return objective / baseline


@dataclass(frozen=True)
class StaticGainReport:
    K: np.ndarray
    residual: float           # sqrt(sum_k ||M(k) - K R(k)||_F^2)
    relative_residual: float  # residual / sqrt(sum_k ||M(k)||_F^2)


def to_static_gain_check(result: "SynthesisResult | FIRPair",
                         sys: LinearSystem) -> StaticGainReport:
    """Best least-squares static gain K with M(k) = K R(k); diagnostic only.

    A near-zero residual means the pair is realizable by static state
    feedback; localized designs generally are not.
    """
    pair = result.pair if isinstance(result, SynthesisResult) else result
    gram = np.zeros((pair.n, pair.n))
    cross = np.zeros((pair.m, pair.n))
    for k in range(1, pair.horizon + 1):
        Rk = pair.R(k)
        gram += Rk @ Rk.T
        cross += pair.M(k) @ Rk.T
    K = cross @ np.linalg.pinv(gram)
    sq = 0.0
    msq = 0.0
    for k in range(1, pair.horizon + 1):
        diff = pair.M(k) - K @ pair.R(k)
        sq += float(np.sum(diff * diff))
        msq += float(np.sum(pair.M(k) ** 2))
    residual = float(np.sqrt(sq))
    rel = residual / float(np.sqrt(msq)) if msq > 0 else 0.0
    return StaticGainReport(K=K, residual=residual, relative_residual=rel)
