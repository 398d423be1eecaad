"""Node-level distributed realization of a state-feedback FIR pair.

Each node runs its own circuit: it senses its local state, reconstructs its
local disturbance by subtracting a locally computed one-step prediction,
stores recent reconstructed disturbances from itself and its in-neighbors in
a local memory patch, and (when actuated) produces its actuation from its
rows of M. Inter-node wires carry one scalar reconstructed-disturbance value
per round, delivered after a per-link delay.

Wiring comes from the support masks: node i receives from node j when any of
node i's mask rows (its R row, or its actuator's M row) allows column j.
Link delay is comm_delay * hop distance, taken from the support's
provenance. The memory patch for a source at delay D holds horizon - D
values; the triangular patch profile over increasingly distant sources
follows from that.

Pathway census: every actuated node owns one forward path, every node owns
one predictive internal-feedback path (its prediction circuitry), and every
in-edge is one communicative internal-feedback path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import SupportSpec, check_mask
from .plant import LinearSystem, distance_matrix
from .simulate import Trajectory, _verify_dynamics
from .spectral import STRICTLY_CAUSAL, FIRPair
from .validation import as_disturbance_sequence


class MemoryUnderrunError(RuntimeError):
    """A node needed a value its memory patch cannot supply."""


@dataclass(frozen=True)
class NodeCircuit:
    """Local controller and memory patch of one node.

    in_neighbors lists (source node id, link delay in steps); memory_patch
    lists (source node id, buffer depth) with the node itself first.
    R_rows holds the node's rows of R(k) for k >= 2 (the prediction path);
    M_rows holds its actuator's rows of M(k) (actuated nodes only).
    """

    node: int
    actuated: bool
    actuator_index: int | None
    in_neighbors: tuple[tuple[int, int], ...]
    memory_patch: tuple[tuple[int, int], ...]
    R_rows: dict[int, np.ndarray]
    M_rows: dict[int, np.ndarray]
    horizon: int


@dataclass(frozen=True)
class Message:
    t_send: int
    t_deliver: int
    sender: int
    receiver: int
    value: float


@dataclass(frozen=True)
class MessageLog:
    messages: tuple[Message, ...]

    def __len__(self) -> int:
        return len(self.messages)

    def per_step_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for msg in self.messages:
            counts[msg.t_send] = counts.get(msg.t_send, 0) + 1
        return counts


def build_mesocircuit(sys: LinearSystem, pair: FIRPair,
                      support: SupportSpec) -> list[NodeCircuit]:
    """One NodeCircuit per node; rejects pairs that violate the support."""
    if pair.causality != STRICTLY_CAUSAL:
        raise ValueError("distributed realization needs a strictly causal pair")
    if float(np.max(np.abs(pair.R(1) - np.eye(pair.n)))) > 1e-12:
        raise ValueError("distributed realization requires R(1) = I")
    check = check_mask(pair, support, tol=0.0)
    if not check.ok:
        which, k, row, col, value = check.violations[0]
        raise ValueError(
            f"pair violates the support: {which}({k})[{row},{col}] = {value:.3g} "
            f"({len(check.violations)} violations total)")
    n, T = sys.n, pair.horizon
    comm_delay = int(support.provenance.get("comm_delay", 0))
    dist = distance_matrix(sys.topology)
    act_col = {node: col for col, node in enumerate(sys.actuated)}

    circuits = []
    for node in range(1, n + 1):
        i0 = node - 1
        allowed = np.zeros(n, dtype=bool)
        for mask in support.R_masks.values():
            allowed |= mask[i0]
        if node in act_col:
            for mask in support.M_masks.values():
                allowed |= mask[act_col[node]]
        allowed[i0] = False
        in_neighbors = tuple(
            (int(j) + 1, comm_delay * int(dist[i0, j]))
            for j in np.flatnonzero(allowed))
        patch = [(node, T)]
        patch += [(src, max(0, T - delay)) for src, delay in in_neighbors]
        R_rows = {k: pair.R_elems[k][i0, :] for k in range(2, T + 1)}
        M_rows = {}
        if node in act_col:
            M_rows = {k: pair.M_elems[k][act_col[node], :] for k in range(1, T + 1)}
        circuits.append(NodeCircuit(
            node=node, actuated=node in act_col,
            actuator_index=act_col.get(node),
            in_neighbors=in_neighbors, memory_patch=tuple(patch),
            R_rows=R_rows, M_rows=M_rows, horizon=T))
    return circuits


class _Patch:
    """Per-source scalar history at one node, addressed by timestamp."""

    def __init__(self, owner: int, source: int, depth: int):
        self.owner = owner
        self.source = source
        self.depth = depth
        self.buf = np.zeros(max(depth, 1))
        self.newest_ts = -1

    def push(self, ts: int, value: float):
        if self.depth == 0:
            self.newest_ts = ts
            return
        self.buf[1:] = self.buf[:-1]
        self.buf[0] = value
        self.newest_ts = ts

    def read(self, ts: int) -> float:
        if ts < 0:
            return 0.0   # system at rest before time zero
        idx = self.newest_ts - ts
        if idx < 0:
            raise MemoryUnderrunError(
                f"node {self.owner} needs the value of source {self.source} at "
                f"time {ts}, which has not yet been received "
                f"(newest held: time {self.newest_ts})")
        if idx >= self.depth:
            raise MemoryUnderrunError(
                f"node {self.owner} needs the value of source {self.source} at "
                f"time {ts}, which is older than its patch depth {self.depth}")
        return float(self.buf[idx])


def simulate_distributed(circuits: list[NodeCircuit], sys: LinearSystem,
                         w_seq: np.ndarray | None, steps: int
                         ) -> tuple[Trajectory, MessageLog]:
    """Lock-step rounds of the node circuits against the global plant.

    Each round: deliver due messages, predict, reconstruct and share the
    local disturbance (zero-delay wires deliver after every node has
    computed its value), actuate, then advance the plant. Deterministic:
    nodes always execute in node-id order.
    """
    n = sys.n
    if len(circuits) != n:
        raise ValueError(f"{len(circuits)} circuits for an {n}-node system")
    T = circuits[0].horizon
    w = as_disturbance_sequence(w_seq, steps, n)

    patches: dict[tuple[int, int], _Patch] = {}
    out_edges: dict[int, list[tuple[int, int]]] = {c.node: [] for c in circuits}
    for c in circuits:
        for src, depth in c.memory_patch:
            patches[(c.node, src)] = _Patch(c.node, src, depth)
        for src, delay in c.in_neighbors:
            out_edges[src].append((c.node, delay))
    in_flight: dict[int, list[tuple[int, int, int, float]]] = {}

    x = np.zeros((steps + 1, n))
    u = np.zeros((steps, sys.m))
    dhat = np.zeros((steps, n))
    xhat = np.zeros((steps + 1, n))
    log: list[Message] = []

    for t in range(steps):
        for send_t, sender, receiver, value in in_flight.pop(t, []):
            patches[(receiver, sender)].push(send_t, value)

        for c in circuits:
            i0 = c.node - 1
            pred = 0.0
            for k, row in c.R_rows.items():
                for j in np.flatnonzero(row):
                    pred += row[j] * patches[(c.node, j + 1)].read(t - k + 1)
            xhat[t, i0] = pred
            dhat[t, i0] = x[t, i0] - pred

        same_round = []
        for c in circuits:
            value = float(dhat[t, c.node - 1])
            patches[(c.node, c.node)].push(t, value)
            for receiver, delay in out_edges[c.node]:
                log.append(Message(t, t + delay, c.node, receiver, value))
                if delay == 0:
                    same_round.append((t, c.node, receiver, value))
                else:
                    in_flight.setdefault(t + delay, []).append(
                        (t, c.node, receiver, value))
        for send_t, sender, receiver, value in same_round:
            patches[(receiver, sender)].push(send_t, value)

        for c in circuits:
            if not c.actuated:
                continue
            out = 0.0
            for k, row in c.M_rows.items():
                for j in np.flatnonzero(row):
                    out += row[j] * patches[(c.node, j + 1)].read(t - k + 1)
            u[t, c.actuator_index] = out

        x[t + 1] = sys.A @ x[t] + sys.B @ u[t] + w[t]

    # the final round's delivery and prediction, for parity with the
    # centralized run (which records the prediction for time `steps`)
    for send_t, sender, receiver, value in in_flight.pop(steps, []):
        patches[(receiver, sender)].push(send_t, value)
    for c in circuits:
        pred = 0.0
        for k, row in c.R_rows.items():
            for j in np.flatnonzero(row):
                pred += row[j] * patches[(c.node, j + 1)].read(steps - k + 1)
        xhat[steps, c.node - 1] = pred

    _verify_dynamics(sys, x, u, w)
    traj = Trajectory(x=x, u=u, w=w, delta_hat=dhat, x_hat=xhat)
    return traj, MessageLog(tuple(log))


@dataclass(frozen=True)
class MesoReport:
    forward_paths: int
    predictive_ifps: int
    communicative_ifps: int
    ratio_total_ifp_to_forward: float | None   # None when there is no forward path
    memory_total: int                          # scalars stored across all patches
    redundancy: dict[int, int]                 # disturbance node -> copy count


def census(circuits: list[NodeCircuit]) -> MesoReport:
    """Pathway counts of the wired mesocircuit."""
    forward = sum(1 for c in circuits if c.actuated)
    predictive = len(circuits)
    communicative = sum(len(c.in_neighbors) for c in circuits)
    ratio = (predictive + communicative) / forward if forward else None
    memory_total = sum(depth for c in circuits for _, depth in c.memory_patch)
    copies = {c.node: 1 for c in circuits}
    for c in circuits:
        for src, _ in c.in_neighbors:
            copies[src] = copies.get(src, 1) + 1
    return MesoReport(forward_paths=forward, predictive_ifps=predictive,
                      communicative_ifps=communicative,
                      ratio_total_ifp_to_forward=ratio,
                      memory_total=memory_total, redundancy=copies)


@dataclass(frozen=True)
class MemoryReport:
    per_node: dict[int, tuple[tuple[int, int], ...]]   # node -> ((source, depth), ...)
    total: int
    per_disturbance_copies: dict[int, int]


def memory_report(circuits: list[NodeCircuit]) -> MemoryReport:
    per_node = {c.node: c.memory_patch for c in circuits}
    total = sum(depth for patch in per_node.values() for _, depth in patch)
    copies = {c.node: 1 for c in circuits}
    for c in circuits:
        for src, _ in c.in_neighbors:
            copies[src] = copies.get(src, 1) + 1
    return MemoryReport(per_node=per_node, total=total,
                        per_disturbance_copies=copies)
