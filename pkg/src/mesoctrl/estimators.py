"""Estimator-style front end: fit a controller to a plant, predict responses.

These wrappers follow the scikit-learn conventions (constructor stores
hyperparameters verbatim, fit() sets trailing-underscore attributes and
returns self, get_params/set_params/clone work), so the designs drop into
tooling that expects that protocol. fit() takes a LinearSystem; predict()
maps a disturbance sequence (steps x n array) to the closed-loop state
trajectory ((steps+1) x n array).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import synthesis
from .constraints import LocalityRule, locality_support
from .lqr import closed_loop_fir, lqr_cost, solve_dare
from .plant import LinearSystem
from .simulate import Trajectory, simulate_mdesign, simulate_sls, simulate_static
from .spectral import CAUSAL, STRICTLY_CAUSAL, CostSpec


def _check_system(X) -> LinearSystem:
    if not isinstance(X, LinearSystem):
        raise TypeError(f"expected a LinearSystem, got {type(X).__name__}")
    return X


class LqrController(BaseEstimator):
    """Dense optimal baseline; fit() solves the Riccati fixed point.

    Fitted attributes: gain_ (m x n), value_matrix_ (n x n), cost_,
    residual_, iterations_.
    """

    def __init__(self, eps: float = 1e-6, Q: np.ndarray | None = None,
                 tol: float = 1e-9, max_iter: int = 100_000):
        self.eps = eps
        self.Q = Q
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X: LinearSystem, y=None) -> "LqrController":
        sys = _check_system(X)
        cost = CostSpec(np.eye(sys.n) if self.Q is None else self.Q, self.eps)
        sol = solve_dare(sys, cost, tol=self.tol, max_iter=self.max_iter)
        self.system_ = sys
        self.gain_ = sol.K
        self.value_matrix_ = sol.P
        self.residual_ = sol.residual
        self.iterations_ = sol.iterations
        self.cost_ = lqr_cost(sys, sol.K, cost)
        return self

    def simulate(self, W: np.ndarray | None, steps: int | None = None) -> Trajectory:
        self._require_fitted()
        if steps is None:
            steps = len(np.atleast_2d(W)) if W is not None else 0
        return simulate_static(self.system_, self.gain_, W, steps)

    def predict(self, W: np.ndarray) -> np.ndarray:
        """Closed-loop state trajectory under the disturbance sequence W."""
        return self.simulate(W).x

    def fir_pair(self, horizon: int):
        self._require_fitted()
        return closed_loop_fir(self.system_, self.gain_, horizon)

    def _require_fitted(self):
        if not hasattr(self, "gain_"):
            raise NotFittedError("this LqrController has not been fitted yet")


class FirController(BaseEstimator):
    """Localized finite-horizon design; fit() solves the masked program.

    mode "sls" designs a strictly causal state-feedback pair; mode "mdesign"
    designs a causal disturbance-feedback pair. Fitted attributes: pair_,
    objective_, result_, support_.
    """

    def __init__(self, mode: str = "sls", horizon: int = 20, hop_radius: int = 2,
                 comm_delay: int = 0, self_delay: int = 0, eps: float = 1e-6,
                 Q: np.ndarray | None = None, closure: bool = False):
        self.mode = mode
        self.horizon = horizon
        self.hop_radius = hop_radius
        self.comm_delay = comm_delay
        self.self_delay = self_delay
        self.eps = eps
        self.Q = Q
        self.closure = closure

    def fit(self, X: LinearSystem, y=None) -> "FirController":
        sys = _check_system(X)
        cost = CostSpec(np.eye(sys.n) if self.Q is None else self.Q, self.eps)
        causality = STRICTLY_CAUSAL if self.mode == synthesis.SLS else CAUSAL
        rule = LocalityRule(d=self.hop_radius, comm_delay=self.comm_delay,
                            self_delay=self.self_delay)
        support = locality_support(sys, rule, self.horizon, causality)
        problem = synthesis.SynthesisProblem(sys=sys, cost=cost, support=support,
                                             horizon=self.horizon, mode=self.mode,
                                             closure=self.closure)
        result = synthesis.synthesize(problem)
        self.system_ = sys
        self.support_ = support
        self.result_ = result
        self.pair_ = result.pair
        self.objective_ = result.objective
        return self

    def simulate(self, W: np.ndarray | None, steps: int | None = None) -> Trajectory:
        self._require_fitted()
        if steps is None:
            steps = len(np.atleast_2d(W)) if W is not None else 0
        if self.mode == synthesis.SLS:
            return simulate_sls(self.system_, self.pair_, W, steps)
        return simulate_mdesign(self.system_, self.pair_, W, steps)

    def predict(self, W: np.ndarray) -> np.ndarray:
        """Closed-loop state trajectory under the disturbance sequence W."""
        return self.simulate(W).x

    def _require_fitted(self):
        if not hasattr(self, "pair_"):
            raise NotFittedError("this FirController has not been fitted yet")
