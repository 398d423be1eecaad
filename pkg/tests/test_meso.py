import numpy as np
import pytest

from mesoctrl import (CostSpec, FIRPair, LocalityRule, MemoryUnderrunError,
                      STRICTLY_CAUSAL, SupportSpec, SynthesisProblem,
                      build_mesocircuit, build_ring, census, locality_support,
                      memory_report, RingSpec, simulate_distributed,
                      simulate_sls, synthesize)

from conftest import full_ring, random_tree_system


def solve_sls(sys, d, horizon, comm_delay=0, closure=True, eps=1e-6):
    cost = CostSpec.identity(sys.n, eps=eps)
    support = locality_support(sys, LocalityRule(d=d, comm_delay=comm_delay),
                               horizon, STRICTLY_CAUSAL)
    result = synthesize(SynthesisProblem(sys=sys, cost=cost, support=support,
                                         horizon=horizon, mode="sls",
                                         closure=closure))
    assert result.feasible, result.solver_stats
    return result.pair, support


class TestBuildMesocircuit:
    def test_one_hop_delayed_wiring(self, ring8):
        support = locality_support(ring8, LocalityRule(d=1, comm_delay=1), 20,
                                   STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, FIRPair.identity(8, 4, 20), support)
        node4 = circuits[3]
        assert not node4.actuated
        assert node4.in_neighbors == ((3, 1), (5, 1))
        assert node4.memory_patch == ((4, 20), (3, 19), (5, 19))

    def test_unactuated_node_has_no_forward_rows(self, ring8):
        support = locality_support(ring8, LocalityRule(d=1, comm_delay=1), 10,
                                   STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, FIRPair.identity(8, 4, 10), support)
        assert circuits[3].M_rows == {}
        assert circuits[3].R_rows          # prediction circuitry stays
        assert circuits[2].actuated and circuits[2].M_rows

    def test_isolated_rule_no_neighbors(self, ring8):
        support = locality_support(ring8, LocalityRule(d=0), 5, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, FIRPair.identity(8, 4, 5), support)
        for c in circuits:
            assert c.in_neighbors == ()
        assert census(circuits).communicative_ifps == 0

    def test_rejects_noncompliant_pair(self, ring8, bench_sls_20):
        support = locality_support(ring8, LocalityRule(d=1, comm_delay=1), 20,
                                   STRICTLY_CAUSAL)
        with pytest.raises(ValueError, match="violates the support"):
            build_mesocircuit(ring8, bench_sls_20.pair, support)

    def test_rejects_non_identity_start(self, ring8):
        support = locality_support(ring8, LocalityRule(d=2), 5, STRICTLY_CAUSAL)
        with pytest.raises(ValueError, match="R\\(1\\)"):
            build_mesocircuit(ring8, FIRPair.zeros(8, 4, 5), support)


class TestDistributedEquivalence:
    def test_zero_disturbance_zero_messages(self, ring8, bench_sls_20):
        support = locality_support(ring8, LocalityRule(d=2), 20, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, bench_sls_20.pair, support)
        traj, log = simulate_distributed(circuits, ring8, None, 10)
        assert np.max(np.abs(traj.x)) == 0.0
        assert all(msg.value == 0.0 for msg in log.messages)

    def test_matches_centralized_benchmark(self, ring8, bench_sls_20):
        support = locality_support(ring8, LocalityRule(d=2), 20, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, bench_sls_20.pair, support)
        rng = np.random.default_rng(77)
        w = rng.standard_normal((50, 8))
        dist, _ = simulate_distributed(circuits, ring8, w, 50)
        central = simulate_sls(ring8, bench_sls_20.pair, w, 50)
        assert np.max(np.abs(dist.x - central.x)) <= 1e-9
        assert np.max(np.abs(dist.u - central.u)) <= 1e-9
        assert np.max(np.abs(dist.delta_hat - central.delta_hat)) <= 1e-9
        assert np.max(np.abs(dist.x_hat - central.x_hat)) <= 1e-9

    def test_matches_centralized_with_delays(self):
        # full-diameter locality with per-hop delay: information eventually
        # reaches everyone, so the closed design exists and the delayed wires
        # really carry the traffic
        sys = full_ring(8, 1.8)
        pair, support = solve_sls(sys, d=4, horizon=12, comm_delay=1)
        circuits = build_mesocircuit(sys, pair, support)
        assert any(delay == 4 for c in circuits for _, delay in c.in_neighbors)
        rng = np.random.default_rng(3)
        w = rng.standard_normal((40, 8))
        dist, log = simulate_distributed(circuits, sys, w, 40)
        central = simulate_sls(sys, pair, w, 40)
        assert np.max(np.abs(dist.x - central.x)) <= 1e-9
        assert np.max(np.abs(dist.u - central.u)) <= 1e-9

    def test_message_count_per_step(self, ring8, bench_sls_20):
        support = locality_support(ring8, LocalityRule(d=2), 20, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, bench_sls_20.pair, support)
        report = census(circuits)
        _, log = simulate_distributed(circuits, ring8, None, 7)
        counts = log.per_step_counts()
        assert sorted(counts) == list(range(7))
        assert all(counts[t] == report.communicative_ifps for t in counts)

    def test_deterministic_logs(self, ring8, bench_sls_20):
        support = locality_support(ring8, LocalityRule(d=2), 20, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, bench_sls_20.pair, support)
        rng = np.random.default_rng(1)
        w = rng.standard_normal((15, 8))
        _, log1 = simulate_distributed(circuits, ring8, w, 15)
        _, log2 = simulate_distributed(circuits, ring8, w, 15)
        assert log1 == log2

    def test_underrun_on_hand_made_bad_support(self):
        # masks allow reacting faster than the declared wire delay can deliver
        sys = full_ring(8, 1.8)
        good = locality_support(sys, LocalityRule(d=1, comm_delay=0), 6,
                                STRICTLY_CAUSAL)
        provenance = dict(good.provenance)
        provenance["comm_delay"] = 1   # claim delayed wires, keep instant masks
        lying = SupportSpec(6, dict(good.R_masks), dict(good.M_masks),
                            STRICTLY_CAUSAL, provenance)
        pair, _ = solve_sls(sys, d=1, horizon=6, closure=True)
        circuits = build_mesocircuit(sys, pair, lying)
        w = np.zeros((4, 8))
        w[0, 0] = 1.0
        with pytest.raises(MemoryUnderrunError, match="node"):
            simulate_distributed(circuits, sys, w, 4)

    def test_random_trees(self):
        rng = np.random.default_rng(42)
        for trial in range(3):
            n = int(rng.integers(5, 10))
            sys = random_tree_system(rng, n)
            pair, support = solve_sls(sys, d=1, horizon=10)
            circuits = build_mesocircuit(sys, pair, support)
            w = rng.standard_normal((30, n))
            dist, _ = simulate_distributed(circuits, sys, w, 30)
            central = simulate_sls(sys, pair, w, 30)
            assert np.max(np.abs(dist.x - central.x)) <= 1e-9


class TestCensus:
    def test_benchmark_one_hop_counts(self, ring8):
        support = locality_support(ring8, LocalityRule(d=1, comm_delay=1), 20,
                                   STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, FIRPair.identity(8, 4, 20), support)
        report = census(circuits)
        assert report.forward_paths == 4
        assert report.predictive_ifps == 8
        assert report.communicative_ifps == 16
        assert report.ratio_total_ifp_to_forward == pytest.approx(6.0)

    def test_fully_actuated_one_hop(self):
        sys = full_ring(8, 1.8)
        support = locality_support(sys, LocalityRule(d=1), 10, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(sys, FIRPair.identity(8, 8, 10), support)
        report = census(circuits)
        assert report.forward_paths == 8
        assert report.predictive_ifps == 8
        assert report.communicative_ifps == 16
        assert report.ratio_total_ifp_to_forward == pytest.approx(3.0)

    def test_single_isolated_actuated_node(self):
        import mesoctrl
        adj = np.zeros((1, 1), dtype=bool)
        top = mesoctrl.Topology(adj)
        sys = mesoctrl.LinearSystem.from_matrices(top, np.array([[0.5]]), (1,))
        support = locality_support(sys, LocalityRule(d=0), 3, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(sys, FIRPair.identity(1, 1, 3), support)
        report = census(circuits)
        assert report.forward_paths == 1
        assert report.predictive_ifps == 1
        assert report.communicative_ifps == 0
        assert report.ratio_total_ifp_to_forward == pytest.approx(1.0)

    def test_no_forward_paths_flagged(self):
        sys = build_ring(RingSpec(n=4, a=0.9, actuated=()))
        support = locality_support(sys, LocalityRule(d=1), 3, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(sys, FIRPair.identity(4, 0, 3), support)
        report = census(circuits)
        assert report.forward_paths == 0
        assert report.ratio_total_ifp_to_forward is None


class TestMemoryReport:
    def test_one_hop_stores_three_copies(self, ring8):
        support = locality_support(ring8, LocalityRule(d=1, comm_delay=1), 20,
                                   STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, FIRPair.identity(8, 4, 20), support)
        report = memory_report(circuits)
        assert all(v == 3 for v in report.per_disturbance_copies.values())

    def test_triangular_patch_profile(self):
        # horizon 5, everyone hears 4 nearest neighbors, delay grows with hops
        sys = full_ring(8, 1.8)
        support = locality_support(sys, LocalityRule(d=2, comm_delay=1), 5,
                                   STRICTLY_CAUSAL)
        circuits = build_mesocircuit(sys, FIRPair.identity(8, 8, 5), support)
        report = memory_report(circuits)
        for node in range(1, 9):
            depths = sorted((d for _, d in report.per_node[node]), reverse=True)
            assert depths == [5, 4, 4, 3, 3]

    def test_isolated_stores_once(self, ring8):
        support = locality_support(ring8, LocalityRule(d=0), 5, STRICTLY_CAUSAL)
        circuits = build_mesocircuit(ring8, FIRPair.identity(8, 4, 5), support)
        report = memory_report(circuits)
        assert all(v == 1 for v in report.per_disturbance_copies.values())
        assert report.total == 8 * 5
