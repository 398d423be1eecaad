import numpy as np
import pytest

from mesoctrl import (CostSpec, LinearSystem, LocalityRule, RingSpec,
                      STRICTLY_CAUSAL, SynthesisProblem, Topology, build_ring,
                      locality_support, lqr_cost, solve_dare, synthesize)

BENCH_ACTUATED = (1, 3, 5, 7)


@pytest.fixture(scope="session")
def ring8():
    return build_ring(RingSpec(n=8, a=1.8, actuated=BENCH_ACTUATED))


@pytest.fixture(scope="session")
def bench_cost():
    return CostSpec.identity(8, eps=1e-6)


@pytest.fixture(scope="session")
def lqr_gain(ring8, bench_cost):
    return solve_dare(ring8, bench_cost)


@pytest.fixture(scope="session")
def lqr_baseline(ring8, bench_cost, lqr_gain):
    return lqr_cost(ring8, lqr_gain.K, bench_cost)


def bench_sls_problem(sys, cost, horizon):
    support = locality_support(sys, LocalityRule(d=2), horizon, STRICTLY_CAUSAL)
    return SynthesisProblem(sys=sys, cost=cost, support=support,
                            horizon=horizon, mode="sls")


@pytest.fixture(scope="session")
def bench_sls_30(ring8, bench_cost):
    return synthesize(bench_sls_problem(ring8, bench_cost, 30))


@pytest.fixture(scope="session")
def bench_sls_20(ring8, bench_cost):
    return synthesize(bench_sls_problem(ring8, bench_cost, 20))


def full_ring(n=8, a=1.8):
    """Fully actuated ring plant."""
    return build_ring(RingSpec(n=n, a=a, actuated=tuple(range(1, n + 1))))


def random_tree_system(rng, n, a=1.5, fully_actuated=True):
    """Random tree topology with A = (a/rho0) * (I + adjacency)."""
    adj = np.zeros((n, n), dtype=bool)
    for child in range(1, n):
        parent = int(rng.integers(0, child))
        adj[child, parent] = adj[parent, child] = True
    topology = Topology(adj)
    base = np.eye(n) + adj.astype(float)
    rho0 = float(np.max(np.abs(np.linalg.eigvals(base))))
    A = (a / rho0) * base
    actuated = tuple(range(1, n + 1)) if fully_actuated else (1,)
    return LinearSystem.from_matrices(topology, A, actuated)
