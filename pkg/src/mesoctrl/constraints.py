"""Sparsity supports for spectral elements: locality, delays, masking.

A SupportSpec holds one boolean mask per spectral index. Entry (i, j) of an
R mask marks whether state node i may respond to a disturbance at node j;
row alpha of an M mask belongs to the actuator at node actuated[alpha].

The locality rule allows entry (i, j) at index k iff

    dist(i, j) <= d   and   k >= k0 + comm_delay * dist(i, j),

where k0 is the first causal index of the mask family (0 for the M masks of
a causal pair, 1 otherwise): information about a disturbance at j must
travel dist hops before node i may react to it. A positive self_delay
additionally zeroes M-mask diagonals for k < k0 + self_delay (a sensing lag
on a node's own disturbance); it never constrains R masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .plant import LinearSystem, distance_matrix
from .spectral import FIRPair, m_start


@dataclass(frozen=True)
class LocalityRule:
    d: int
    comm_delay: int = 0
    self_delay: int = 0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"hop radius d must be >= 0, got {self.d}")
        if self.comm_delay < 0 or self.self_delay < 0:
            raise ValueError("delays must be >= 0")


def rule_from_config(cfg: dict) -> LocalityRule:
    """Read {"locality": {"d": 2, "comm_delay": 0, "self_delay": 0}}."""
    loc = cfg.get("locality", cfg)
    return LocalityRule(d=int(loc["d"]),
                        comm_delay=int(loc.get("comm_delay", 0)),
                        self_delay=int(loc.get("self_delay", 0)))


@dataclass(frozen=True)
class SupportSpec:
    """Boolean masks per spectral index, plus the rule that generated them."""

    horizon: int
    R_masks: dict[int, np.ndarray]
    M_masks: dict[int, np.ndarray]
    causality: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        k0 = m_start(self.causality)
        if sorted(self.R_masks) != list(range(1, self.horizon + 1)):
            raise ValueError("R_masks must have exactly the keys 1..horizon")
        if sorted(self.M_masks) != list(range(k0, self.horizon + 1)):
            raise ValueError(f"M_masks must have exactly the keys {k0}..horizon")
        R = {}
        M = {}
        for k, mask in self.R_masks.items():
            mask = np.array(mask, dtype=bool)
            mask.setflags(write=False)
            R[k] = mask
        for k, mask in self.M_masks.items():
            mask = np.array(mask, dtype=bool)
            mask.setflags(write=False)
            M[k] = mask
        object.__setattr__(self, "R_masks", R)
        object.__setattr__(self, "M_masks", M)

    @property
    def n(self) -> int:
        return self.R_masks[1].shape[0]

    @property
    def m(self) -> int:
        return self.M_masks[m_start(self.causality)].shape[0]

    @property
    def m_start(self) -> int:
        return m_start(self.causality)


def locality_support(sys: LinearSystem, rule: LocalityRule, horizon: int,
                     causality: str) -> SupportSpec:
    """Masks from hop distance, per-hop communication delay, and self delay.

    Unreachable pairs are never allowed. With comm_delay = 0 and
    self_delay = 0 every spectral index shares one mask.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    dist = distance_matrix(sys.topology)
    reach = dist >= 0
    local = reach & (dist <= rule.d)
    act_rows = [node - 1 for node in sys.actuated]
    k0_m = m_start(causality)

    R_masks = {}
    for k in range(1, horizon + 1):
        R_masks[k] = local & (k >= 1 + rule.comm_delay * dist)
    M_masks = {}
    for k in range(k0_m, horizon + 1):
        mk = local[act_rows] & (k >= k0_m + rule.comm_delay * dist[act_rows])
        if rule.self_delay > 0 and k < k0_m + rule.self_delay:
            for row, node0 in enumerate(act_rows):
                mk[row, node0] = False
        M_masks[k] = mk
    return SupportSpec(horizon, R_masks, M_masks, causality,
                       provenance={"rule": "locality", "d": rule.d,
                                   "comm_delay": rule.comm_delay,
                                   "self_delay": rule.self_delay,
                                   "actuated": list(sys.actuated)})


def apply_mask(pair: FIRPair, spec: SupportSpec) -> FIRPair:
    """Zero every entry outside the mask; idempotent."""
    _check_shapes(pair, spec)
    R = {k: np.where(spec.R_masks[k], pair.R_elems[k], 0.0) for k in pair.R_elems}
    M = {k: np.where(spec.M_masks[k], pair.M_elems[k], 0.0) for k in pair.M_elems}
    return FIRPair(pair.horizon, R, M, pair.causality)


@dataclass(frozen=True)
class MaskCheck:
    ok: bool
    violations: tuple[tuple, ...]  # (which, k, row_node, col_node, value)
    max_violation: float


def check_mask(pair: FIRPair, spec: SupportSpec, tol: float = 0.0) -> MaskCheck:
    """True iff every off-mask magnitude is <= tol.

    Violation rows/cols are 1-based node ids; an M violation's row is the
    actuator's node id.
    """
    _check_shapes(pair, spec)
    violations = []
    worst = 0.0
    for k, R in pair.R_elems.items():
        bad = (np.abs(R) > tol) & ~spec.R_masks[k]
        for i, j in np.argwhere(bad):
            violations.append(("R", k, int(i) + 1, int(j) + 1, float(R[i, j])))
            worst = max(worst, abs(float(R[i, j])))
    act = spec.provenance.get("actuated")
    for k, M in pair.M_elems.items():
        bad = (np.abs(M) > tol) & ~spec.M_masks[k]
        for a, j in np.argwhere(bad):
            row = int(act[a]) if act else int(a) + 1
            violations.append(("M", k, row, int(j) + 1, float(M[a, j])))
            worst = max(worst, abs(float(M[a, j])))
    return MaskCheck(ok=not violations, violations=tuple(violations), max_violation=worst)


def support_of(pair: FIRPair, tol: float = 1e-9) -> SupportSpec:
    """Observed support: entry true iff |value| > tol."""
    R = {k: np.abs(mat) > tol for k, mat in pair.R_elems.items()}
    M = {k: np.abs(mat) > tol for k, mat in pair.M_elems.items()}
    return SupportSpec(pair.horizon, R, M, pair.causality,
                       provenance={"rule": "observed", "tol": tol})


def _check_shapes(pair: FIRPair, spec: SupportSpec):
    if pair.horizon != spec.horizon:
        raise ValueError(f"pair horizon {pair.horizon} != support horizon {spec.horizon}")
    if pair.causality != spec.causality:
        raise ValueError(f"pair causality {pair.causality!r} != "
                         f"support causality {spec.causality!r}")
    if (pair.n, pair.m) != (spec.n, spec.m):
        raise ValueError(f"pair is ({pair.n} states, {pair.m} inputs) but support "
                         f"is ({spec.n}, {spec.m})")
