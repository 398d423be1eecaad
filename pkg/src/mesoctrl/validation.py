"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import numpy as np


def as_square_matrix(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    return M


def check_node(node: int, n: int) -> int:
    """Validate a 1-based node id against n nodes; return the 0-based index."""
    if not isinstance(node, (int, np.integer)):
        raise ValueError(f"node id must be an integer, got {node!r}")
    if not 1 <= node <= n:
        raise ValueError(f"node id {node} out of range 1..{n}")
    return int(node) - 1


def check_symmetric_psd(Q: np.ndarray, name: str, tol: float = 1e-10) -> np.ndarray:
    Q = np.array(as_square_matrix(Q, name), dtype=float)
    scale = max(1.0, float(np.max(np.abs(Q))))
    if np.max(np.abs(Q - Q.T)) > tol * scale:
        raise ValueError(f"{name} must be symmetric")
    Q = 0.5 * (Q + Q.T)
    if np.min(np.linalg.eigvalsh(Q)) < -tol * scale:
        raise ValueError(f"{name} must be positive semidefinite")
    return Q


def as_disturbance_sequence(w_seq: np.ndarray | None, steps: int, n: int) -> np.ndarray:
    """Normalize a disturbance sequence to shape (steps, n), zero-padding."""
    out = np.zeros((steps, n))
    if w_seq is None:
        return out
    w = np.atleast_2d(np.asarray(w_seq, dtype=float))
    if w.shape[1] != n:
        raise ValueError(f"disturbance vectors must have length {n}, got {w.shape[1]}")
    take = min(steps, w.shape[0])
    out[:take] = w[:take]
    return out
