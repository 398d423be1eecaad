"""Time-domain closed-loop simulation.

Time convention: w(t) enters x(t+1) = A x(t) + B u(t) + w(t), so an impulse
at node i and time 0 first shows in the state at time 1. A nonzero initial
state is treated as a disturbance one step before time zero.

Three controller realizations are provided:
  * static gain u(t) = K x(t);
  * direct disturbance feedback u(t) = sum_k M(k) w(t-k) (requires the
    disturbance to be measurable, a tutorial assumption);
  * the state-feedback realization that reconstructs the disturbance from a
    one-step state prediction: dhat(t) = x(t) - xhat(t), u from M applied to
    the dhat history, xhat from the R tail. Requires R(1) = I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import LinearSystem, Topology, distance_matrix
from .spectral import CAUSAL, STRICTLY_CAUSAL, FIRPair
from .validation import as_disturbance_sequence, check_node

_DYNAMICS_TOL = 1e-10


class RealizationError(ValueError):
    """The pair cannot be realized by the requested controller structure."""


class SimulationError(RuntimeError):
    """A simulated trajectory failed its dynamics self-check."""


@dataclass(frozen=True)
class Trajectory:
    """Signals of one closed-loop run.

    x has steps+1 rows (x(0)..x(steps)); u and w have steps rows. For
    state-feedback runs, delta_hat has steps rows and x_hat has steps+1 rows
    (the final row is the prediction for the step after the run).
    """

    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    delta_hat: np.ndarray | None = None
    x_hat: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return self.w.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]


def _verify_dynamics(sys: LinearSystem, x, u, w):
    predicted = x[:-1] @ sys.A.T + u @ sys.B.T + w
    err = float(np.max(np.abs(x[1:] - predicted))) if len(w) else 0.0
    if err > _DYNAMICS_TOL:
        raise SimulationError(f"trajectory violates the plant dynamics by {err:.3g}")


class MemoryState:
    """Newest-first shift register of the last `depth` vectors.

    Each push discards the oldest entry; buf[i] is the value from i steps ago.
    """

    def __init__(self, depth: int, width: int):
        self.depth = depth
        self.buf = np.zeros((depth, width))

    def push(self, value: np.ndarray):
        if self.depth == 0:
            return
        self.buf[1:] = self.buf[:-1]
        self.buf[0] = value


def simulate_static(sys: LinearSystem, K: np.ndarray, w_seq: np.ndarray | None,
                    steps: int, x0: np.ndarray | None = None) -> Trajectory:
    """u(t) = K x(t); exact recursion x(t+1) = (A + BK) x(t) + w(t)."""
    K = np.asarray(K, dtype=float)
    if K.shape != (sys.m, sys.n):
        raise ValueError(f"K must be {sys.m}x{sys.n}, got {K.shape}")
    w = as_disturbance_sequence(w_seq, steps, sys.n)
    x = np.zeros((steps + 1, sys.n))
    if x0 is not None:
        x[0] = np.asarray(x0, dtype=float)
    u = np.zeros((steps, sys.m))
    for t in range(steps):
        u[t] = K @ x[t]
        x[t + 1] = sys.A @ x[t] + sys.B @ u[t] + w[t]
    _verify_dynamics(sys, x, u, w)
    return Trajectory(x=x, u=u, w=w)


def simulate_mdesign(sys: LinearSystem, pair: FIRPair, w_seq: np.ndarray | None,
                     steps: int) -> Trajectory:
    """Disturbance feedback u(t) = sum_k M(k) w(t-k) with an FIR memory.

    The controller reads the true disturbance directly; causal pairs use
    w(t) itself through M(0).
    """
    if (pair.n, pair.m) != (sys.n, sys.m):
        raise ValueError(f"pair is ({pair.n}, {pair.m}) but system is "
                         f"({sys.n}, {sys.m})")
    w = as_disturbance_sequence(w_seq, steps, sys.n)
    causal = pair.causality == CAUSAL
    memory = MemoryState(pair.horizon + 1 if causal else pair.horizon, sys.n)
    x = np.zeros((steps + 1, sys.n))
    u = np.zeros((steps, sys.m))
    for t in range(steps):
        if causal:
            memory.push(w[t])       # buf[k] = w(t-k), k = 0..T
            for k, Mk in pair.M_elems.items():
                u[t] += Mk @ memory.buf[k]
        else:
            for k, Mk in pair.M_elems.items():
                u[t] += Mk @ memory.buf[k - 1]   # buf[k-1] = w(t-k), k = 1..T
            memory.push(w[t])
        x[t + 1] = sys.A @ x[t] + sys.B @ u[t] + w[t]
    _verify_dynamics(sys, x, u, w)
    return Trajectory(x=x, u=u, w=w)


def simulate_sls(sys: LinearSystem, pair: FIRPair, w_seq: np.ndarray | None,
                 steps: int, x0: np.ndarray | None = None) -> Trajectory:
    """State-feedback realization with explicit disturbance reconstruction.

    Per step: dhat(t) = x(t) - xhat(t); u(t) = sum_{k>=1} M(k) dhat(t-k+1);
    xhat(t+1) = sum_{k>=2} R(k) dhat(t-k+2); then the plant advances with the
    true w(t). In state feedback the reconstruction is exact:
    dhat(t) = w(t-1).
    """
    if pair.causality != STRICTLY_CAUSAL:
        raise RealizationError("state-feedback realization needs a strictly causal pair")
    if (pair.n, pair.m) != (sys.n, sys.m):
        raise ValueError(f"pair is ({pair.n}, {pair.m}) but system is "
                         f"({sys.n}, {sys.m})")
    if float(np.max(np.abs(pair.R(1) - np.eye(sys.n)))) > 1e-12:
        raise RealizationError("state-feedback realization requires R(1) = I")
    w = as_disturbance_sequence(w_seq, steps, sys.n)
    memory = MemoryState(pair.horizon, sys.n)   # dhat(t), dhat(t-1), ...
    x = np.zeros((steps + 1, sys.n))
    if x0 is not None:
        x[0] = np.asarray(x0, dtype=float)
    u = np.zeros((steps, sys.m))
    dhat = np.zeros((steps, sys.n))
    xhat = np.zeros((steps + 1, sys.n))
    for t in range(steps):
        dhat[t] = x[t] - xhat[t]
        memory.push(dhat[t])
        for k in pair.M_elems:
            u[t] += pair.M_elems[k] @ memory.buf[k - 1]
        for k in range(2, pair.horizon + 1):
            xhat[t + 1] += pair.R_elems[k] @ memory.buf[k - 2]
        x[t + 1] = sys.A @ x[t] + sys.B @ u[t] + w[t]
    _verify_dynamics(sys, x, u, w)
    return Trajectory(x=x, u=u, w=w, delta_hat=dhat, x_hat=xhat)


@dataclass(frozen=True)
class LocalizationReport:
    """Where a single-impulse response is active.

    A node is active when any of its state or actuation samples exceeds the
    tolerance in magnitude; the radius is the largest hop distance from the
    impulse source to an active node.
    """

    radius: int
    active_nodes: tuple[int, ...]
    active_actuators: tuple[int, ...]


def localization_radius(traj: Trajectory, source: int, topology: Topology,
                        tol: float = 1e-6,
                        actuated: tuple[int, ...] | None = None) -> LocalizationReport:
    """Activity census of an impulse response.

    `actuated` maps actuator columns of u to node ids; it defaults to
    1..m (only correct under full actuation).
    """
    n = topology.node_count
    check_node(source, n)
    m = traj.u.shape[1]
    if actuated is None:
        actuated = tuple(range(1, m + 1))
    state_active = {i + 1 for i in range(n) if np.max(np.abs(traj.x[:, i])) > tol}
    act_active = {actuated[a] for a in range(m) if np.max(np.abs(traj.u[:, a])) > tol}
    active = sorted(state_active | act_active)
    dist = distance_matrix(topology)
    radius = 0
    for node in active:
        d = int(dist[source - 1, node - 1])
        if d < 0:
            continue
        radius = max(radius, d)
    return LocalizationReport(radius=radius, active_nodes=tuple(active),
                              active_actuators=tuple(sorted(act_active)))
