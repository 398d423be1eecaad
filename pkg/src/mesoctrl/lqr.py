"""Dense optimal baseline: infinite-horizon discrete-time LQR.

The Riccati fixed point is found by plain value iteration from P0 = Q.
That trades speed for robustness, which is the right trade at the problem
sizes this package targets (tens to a few hundred states).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .plant import LinearSystem
from .spectral import STRICTLY_CAUSAL, CostSpec, FIRPair


class ConvergenceError(RuntimeError):
    """An iterative solve diverged or failed to reach its tolerance."""


@dataclass(frozen=True)
class LqrSolution:
    K: np.ndarray          # static gain, u = K x
    P: np.ndarray          # Riccati fixed point
    iterations: int
    residual: float        # Frobenius norm of the Riccati defect at P


_DIVERGENCE_BOUND = 1e12
_MAX_ITER = 100_000


def _riccati_step(A, B, Q, eps, P):
    G = np.linalg.solve(eps * np.eye(B.shape[1]) + B.T @ P @ B, B.T @ P @ A)
    Pn = Q + A.T @ P @ A - A.T @ P @ B @ G
    return 0.5 * (Pn + Pn.T)


def solve_dare(sys: LinearSystem, cost: CostSpec, tol: float = 1e-9,
               max_iter: int = _MAX_ITER) -> LqrSolution:
    """Value-iterate P <- Q + A'PA - A'PB (eps I + B'PB)^-1 B'PA from P = Q.

    Requires eps > 0. Raises ConvergenceError on divergence, nonconvergence,
    or an unstable closed loop (the a-posteriori stabilizability check).
    """
    if cost.eps <= 0:
        raise ValueError("solve_dare needs a strictly positive input penalty eps")
    if cost.Q.shape[0] != sys.n:
        raise ValueError(f"Q is {cost.Q.shape[0]}x{cost.Q.shape[0]} "
                         f"for an {sys.n}-state system")
    A, B, Q, eps = sys.A, sys.B, cost.Q, cost.eps
    P = Q.copy()
    for it in range(1, max_iter + 1):
        Pn = _riccati_step(A, B, Q, eps, P)
        step = float(np.linalg.norm(Pn - P, "fro"))
        P = Pn
        if np.linalg.norm(P, "fro") > _DIVERGENCE_BOUND:
            raise ConvergenceError(
                "Riccati iteration diverged: system not stabilizable or "
                "tolerance unreachable")
        if step <= 0.1 * tol:
            residual = float(np.linalg.norm(_riccati_step(A, B, Q, eps, P) - P, "fro"))
            if residual <= tol:
                K = -np.linalg.solve(eps * np.eye(sys.m) + B.T @ P @ B, B.T @ P @ A)
                rho = float(np.max(np.abs(np.linalg.eigvals(A + B @ K))))
                if rho >= 1.0:
                    raise ConvergenceError(
                        f"closed loop unstable (spectral radius {rho:.6g}); "
                        "system not stabilizable")
                return LqrSolution(K=K, P=P, iterations=it, residual=residual)
    raise ConvergenceError(
        f"Riccati iteration did not reach residual {tol:g} in {max_iter} steps "
        f"(last step change {step:.3g})")


def closed_loop_fir(sys: LinearSystem, K: np.ndarray, horizon: int) -> FIRPair:
    """Truncated closed-loop pair of a static gain: R(1)=I, R(k+1)=(A+BK)R(k),
    M(k)=K R(k).

    The truncation leftover is pair.tail_mass(); a warning is issued when the
    closed loop is unstable (the tail then grows instead of vanishing).
    """
    K = np.asarray(K, dtype=float)
    if K.shape != (sys.m, sys.n):
        raise ValueError(f"K must be {sys.m}x{sys.n}, got {K.shape}")
    Acl = sys.A + sys.B @ K
    rho = float(np.max(np.abs(np.linalg.eigvals(Acl))))
    if rho >= 1.0:
        warnings.warn(f"closed loop unstable (spectral radius {rho:.4g}); "
                      "the FIR truncation will not converge", stacklevel=2)
    R = {1: np.eye(sys.n)}
    for k in range(1, horizon):
        R[k + 1] = Acl @ R[k]
    M = {k: K @ R[k] for k in range(1, horizon + 1)}
    return FIRPair(horizon, R, M, STRICTLY_CAUSAL)


def lqr_cost(sys: LinearSystem, K: np.ndarray, cost: CostSpec,
             tol: float = 1e-11) -> float:
    """Exact infinite-horizon H2 cost of u = K x: trace of the solution X of
    X = (A+BK)' X (A+BK) + Q + eps K'K.

    Uses the doubling form of the Lyapunov iteration; fails on an unstable
    closed loop.
    """
    K = np.asarray(K, dtype=float)
    Acl = sys.A + sys.B @ K
    rho = float(np.max(np.abs(np.linalg.eigvals(Acl))))
    if rho >= 1.0:
        raise ConvergenceError(f"closed loop unstable (spectral radius {rho:.6g})")
    W = cost.Q + cost.eps * K.T @ K
    X = W.copy()
    Mk = Acl.T.copy()
    for _ in range(200):
        X = X + Mk @ X @ Mk.T
        Mk = Mk @ Mk
        if float(np.linalg.norm(Mk, "fro")) ** 2 * float(np.linalg.norm(X, "fro")) < 0.01 * tol:
            break
    X = 0.5 * (X + X.T)
    residual = float(np.linalg.norm(Acl.T @ X @ Acl + W - X, "fro"))
    if residual > tol:
        raise ConvergenceError(f"Lyapunov iteration residual {residual:.3g} > {tol:g}")
    return float(np.trace(X))
