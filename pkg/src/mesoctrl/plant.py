"""Linear plants on graph topologies.

Node indices are 1-based in every public argument and report (matching the
usual node-1..node-n labelling of small network benchmarks); matrices are
plain 0-based numpy arrays.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .validation import as_square_matrix, check_node


@dataclass(frozen=True)
class Topology:
    """Undirected graph given by a symmetric boolean adjacency matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        as_square_matrix(adj, "adjacency")
        if adj.shape[0] < 1:
            raise ValueError("topology needs at least one node")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency must not store self-edges")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def ring(cls, n: int) -> "Topology":
        if n < 3:
            raise ValueError(f"ring needs n >= 3, got {n}")
        adj = np.zeros((n, n), dtype=bool)
        for i in range(n):
            adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = True
        return cls(adj)

    def neighbors(self, node: int) -> tuple[int, ...]:
        """1-based neighbors of a 1-based node."""
        i = check_node(node, self.node_count)
        return tuple(int(j) + 1 for j in np.flatnonzero(self.adjacency[i]))


def distance_matrix(topology: Topology) -> np.ndarray:
    """All-pairs hop distances by BFS; unreachable pairs are -1."""
    n = topology.node_count
    dist = np.full((n, n), -1, dtype=int)
    for s in range(n):
        dist[s, s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in np.flatnonzero(topology.adjacency[v]):
                if dist[s, u] < 0:
                    dist[s, u] = dist[s, v] + 1
                    queue.append(u)
    return dist


def hop_distance(topology: Topology, i: int, j: int) -> int | None:
    """Shortest hop count between 1-based nodes i and j; None if unreachable."""
    i0 = check_node(i, topology.node_count)
    j0 = check_node(j, topology.node_count)
    d = int(distance_matrix(topology)[i0, j0])
    return None if d < 0 else d


def _selector_matrix(n: int, actuated: tuple[int, ...]) -> np.ndarray:
    B = np.zeros((n, len(actuated)))
    for col, node in enumerate(actuated):
        B[node - 1, col] = 1.0
    return B


@dataclass(frozen=True)
class LinearSystem:
    """Discrete-time plant x(t+1) = A x(t) + B u(t) + w(t) on a topology.

    B is a 0/1 selector: column alpha actuates node actuated[alpha].
    """

    topology: Topology
    A: np.ndarray
    B: np.ndarray
    actuated: tuple[int, ...]

    def __post_init__(self):
        n = self.topology.node_count
        A = np.array(self.A, dtype=float)
        as_square_matrix(A, "A")
        if A.shape[0] != n:
            raise ValueError(f"A is {A.shape[0]}x{A.shape[0]} but topology has {n} nodes")
        off = (np.abs(A) > 0) & ~self.topology.adjacency & ~np.eye(n, dtype=bool)
        if np.any(off):
            i, j = np.argwhere(off)[0]
            raise ValueError(f"A[{i + 1},{j + 1}] nonzero but nodes are not adjacent")
        actuated = tuple(int(a) for a in self.actuated)
        for node in actuated:
            check_node(node, n)
        if len(set(actuated)) != len(actuated):
            raise ValueError("actuated nodes must be distinct")
        B = np.array(self.B, dtype=float)
        if B.shape != (n, len(actuated)):
            raise ValueError(f"B must be {n}x{len(actuated)}, got {B.shape}")
        if not np.array_equal(B, _selector_matrix(n, actuated)):
            raise ValueError("B columns must be standard basis vectors for the actuated nodes")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "actuated", actuated)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @classmethod
    def from_matrices(cls, topology: Topology, A: np.ndarray,
                      actuated: list[int] | tuple[int, ...]) -> "LinearSystem":
        actuated = tuple(int(a) for a in actuated)
        for node in actuated:
            check_node(node, topology.node_count)
        return cls(topology, A, _selector_matrix(topology.node_count, actuated), actuated)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


@dataclass(frozen=True)
class RingSpec:
    """Symmetric ring benchmark: n nodes, target spectral radius a."""

    n: int
    a: float
    actuated: tuple[int, ...]

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"ring needs n >= 3, got {self.n}")
        if not self.a > 0:
            raise ValueError(f"spectral radius target must be positive, got {self.a}")
        object.__setattr__(self, "actuated", tuple(int(a) for a in self.actuated))


def build_ring(spec: RingSpec) -> LinearSystem:
    """Ring plant with A = (a/3) * (self + both neighbors), spectral radius a."""
    topology = Topology.ring(spec.n)
    A = np.zeros((spec.n, spec.n))
    w = spec.a / 3.0
    for i in range(spec.n):
        A[i, i] = A[i, (i - 1) % spec.n] = A[i, (i + 1) % spec.n] = w
    return LinearSystem.from_matrices(topology, A, spec.actuated)


@dataclass(frozen=True)
class SystemReport:
    """Outcome of validate_system; report-only, never raises."""

    ok: bool
    spectral_radius: float
    issues: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


def validate_system(sys: LinearSystem) -> SystemReport:
    """Recheck structural invariants and flag stabilizability concerns.

    The stabilizability check is a rank heuristic on [A - lam*I, B] at the
    unstable eigenvalues, not a proof.
    """
    issues: list[str] = []
    warnings: list[str] = []
    n = sys.n
    off = (np.abs(sys.A) > 0) & ~sys.topology.adjacency & ~np.eye(n, dtype=bool)
    for i, j in np.argwhere(off):
        issues.append(f"A[{i + 1},{j + 1}] nonzero at non-adjacent pair")
    for col in range(sys.m):
        ones = np.flatnonzero(sys.B[:, col] != 0)
        if len(ones) != 1 or sys.B[ones[0], col] != 1.0:
            issues.append(f"B column {col + 1} is not a standard basis vector")
    rho = sys.spectral_radius()
    for lam in np.linalg.eigvals(sys.A):
        if abs(lam) >= 1.0 - 1e-12:
            pencil = np.hstack([sys.A - lam * np.eye(n), sys.B])
            smin = np.linalg.svd(pencil, compute_uv=False)[-1]
            if smin < 1e-8:
                warnings.append(
                    f"mode at eigenvalue {lam:.6g} may be uncontrollable; "
                    "system possibly not stabilizable")
                break
    return SystemReport(ok=not issues, spectral_radius=rho,
                        issues=tuple(issues), warnings=tuple(warnings))


def system_from_config(cfg: dict) -> LinearSystem:
    """Build a plant from a config mapping.

    Accepts {"ring": {"n", "a", "actuated"}} or
    {"general": {"adjacency", "A", "actuated"}}.
    """
    if "ring" in cfg:
        ring = cfg["ring"]
        return build_ring(RingSpec(n=int(ring["n"]), a=float(ring["a"]),
                                   actuated=tuple(ring["actuated"])))
    if "general" in cfg:
        gen = cfg["general"]
        topology = Topology(np.array(gen["adjacency"], dtype=bool))
        return LinearSystem.from_matrices(topology, np.array(gen["A"], dtype=float),
                                          tuple(gen["actuated"]))
    raise ValueError("plant config must contain a 'ring' or 'general' section")
