"""Finite-horizon transfer pairs stored as spectral elements.

A pair holds the maps from disturbance to state (R) and to input (M) as
constant matrices R(k), M(k), one per delay index k. R always starts at
k=1 (the plant map is strictly proper, so R(0) is identically zero and is
never stored). M starts at k=0 for "causal" pairs (disturbance-feedback
designs) and at k=1 for "strictly_causal" pairs (state-feedback designs).
Everything past the horizon is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_node, check_symmetric_psd

CAUSAL = "causal"
STRICTLY_CAUSAL = "strictly_causal"


def m_start(causality: str) -> int:
    """First stored index of M for a causality mode."""
    if causality == CAUSAL:
        return 0
    if causality == STRICTLY_CAUSAL:
        return 1
    raise ValueError(f"unknown causality mode {causality!r}")


@dataclass(frozen=True)
class FIRPair:
    """Spectral elements {R(k)}, {M(k)} of a finite-horizon transfer pair.

    R_elems maps k -> n x n matrix for k = 1..horizon; M_elems maps
    k -> m x n matrix for k = m_start..horizon.
    """

    horizon: int
    R_elems: dict[int, np.ndarray]
    M_elems: dict[int, np.ndarray]
    causality: str

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        k0 = m_start(self.causality)
        if sorted(self.R_elems) != list(range(1, self.horizon + 1)):
            raise ValueError("R_elems must have exactly the keys 1..horizon")
        if sorted(self.M_elems) != list(range(k0, self.horizon + 1)):
            raise ValueError(f"M_elems must have exactly the keys {k0}..horizon")
        n = np.asarray(self.R_elems[1]).shape[0]
        m = np.asarray(self.M_elems[k0]).shape[0]
        R = {}
        M = {}
        for k, mat in self.R_elems.items():
            mat = np.array(mat, dtype=float)
            if mat.shape != (n, n):
                raise ValueError(f"R({k}) must be {n}x{n}, got {mat.shape}")
            mat.setflags(write=False)
            R[k] = mat
        for k, mat in self.M_elems.items():
            mat = np.array(mat, dtype=float)
            if mat.shape != (m, n):
                raise ValueError(f"M({k}) must be {m}x{n}, got {mat.shape}")
            mat.setflags(write=False)
            M[k] = mat
        object.__setattr__(self, "R_elems", R)
        object.__setattr__(self, "M_elems", M)

    @property
    def n(self) -> int:
        return self.R_elems[1].shape[0]

    @property
    def m(self) -> int:
        return self.M_elems[self.m_start].shape[0]

    @property
    def m_start(self) -> int:
        return m_start(self.causality)

    def R(self, k: int) -> np.ndarray:
        """R(k), zero outside the stored range (R(0) is structurally zero)."""
        if k in self.R_elems:
            return self.R_elems[k]
        return np.zeros((self.n, self.n))

    def M(self, k: int) -> np.ndarray:
        if k in self.M_elems:
            return self.M_elems[k]
        return np.zeros((self.m, self.n))

    def tail_mass(self) -> float:
        """Frobenius norm of R(horizon); the truncation leftover."""
        return float(np.linalg.norm(self.R_elems[self.horizon], "fro"))

    @classmethod
    def zeros(cls, n: int, m: int, horizon: int,
              causality: str = STRICTLY_CAUSAL) -> "FIRPair":
        k0 = m_start(causality)
        return cls(horizon,
                   {k: np.zeros((n, n)) for k in range(1, horizon + 1)},
                   {k: np.zeros((m, n)) for k in range(k0, horizon + 1)},
                   causality)

    @classmethod
    def identity(cls, n: int, m: int, horizon: int,
                 causality: str = STRICTLY_CAUSAL) -> "FIRPair":
        """Pair with R(1) = I and all other elements zero."""
        pair = cls.zeros(n, m, horizon, causality)
        R = dict(pair.R_elems)
        R[1] = np.eye(n)
        return cls(horizon, R, pair.M_elems, causality)


@dataclass(frozen=True)
class CostSpec:
    """Quadratic state penalty Q (symmetric PSD) and input-penalty weight eps."""

    Q: np.ndarray
    eps: float

    def __post_init__(self):
        Q = check_symmetric_psd(self.Q, "Q")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "eps", float(self.eps))

    @classmethod
    def identity(cls, n: int, eps: float = 1e-6) -> "CostSpec":
        return cls(np.eye(n), eps)


def h2_cost_sq(pair: FIRPair, cost: CostSpec) -> float:
    """Squared H2 cost sum_k ||Q^(1/2) R(k)||_F^2 + eps * sum_k ||M(k)||_F^2."""
    if cost.Q.shape[0] != pair.n:
        raise ValueError(f"Q is {cost.Q.shape[0]}x{cost.Q.shape[0]} "
                         f"but the pair has {pair.n} states")
    total = 0.0
    for R in pair.R_elems.values():
        total += float(np.trace(R.T @ cost.Q @ R))
    for M in pair.M_elems.values():
        total += cost.eps * float(np.sum(M * M))
    return total


def convolve(M_elems: dict[int, np.ndarray], w_history: np.ndarray, t: int) -> np.ndarray:
    """u(t) = sum_k M(k) w(t-k); w before time 0 is zero (system at rest).

    w_history is a (steps, n) array with w_history[s] = w(s).
    """
    w = np.atleast_2d(np.asarray(w_history, dtype=float))
    some = next(iter(M_elems.values()))
    if w.shape[1] != some.shape[1]:
        raise ValueError(f"disturbance vectors must have length {some.shape[1]}, "
                         f"got {w.shape[1]}")
    u = np.zeros(some.shape[0])
    for k, M in M_elems.items():
        s = t - k
        if 0 <= s < w.shape[0]:
            u += M @ w[s]
    return u


def impulse_columns(pair: FIRPair, node: int) -> tuple[np.ndarray, np.ndarray]:
    """State and input responses to a unit impulse w(0) = e_node.

    Returns (x_resp, u_resp) of shapes (horizon+1, n) and (horizon+1, m);
    row k is the response at time k, i.e. column `node` of R(k) and M(k).
    """
    j = check_node(node, pair.n)
    x_resp = np.zeros((pair.horizon + 1, pair.n))
    u_resp = np.zeros((pair.horizon + 1, pair.m))
    for k, R in pair.R_elems.items():
        x_resp[k] = R[:, j]
    for k, M in pair.M_elems.items():
        u_resp[k] = M[:, j]
    return x_resp, u_resp
