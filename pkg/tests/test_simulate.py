import numpy as np
import pytest

from mesoctrl import (CostSpec, FIRPair, LocalityRule, RealizationError,
                      RingSpec, STRICTLY_CAUSAL, SynthesisProblem, build_ring,
                      closed_loop_fir, impulse_columns, localization_radius,
                      locality_support, simulate_mdesign, simulate_sls,
                      simulate_static, solve_dare, synthesize)

from conftest import full_ring


def impulse(n, node, steps, time=0):
    w = np.zeros((steps, n))
    w[time, node - 1] = 1.0
    return w


@pytest.fixture(scope="module")
def closed_full_ring_pair():
    """Exactly closed localized state-feedback pair on the full-actuation ring."""
    sys = full_ring(8, 1.8)
    cost = CostSpec.identity(8, eps=1e-6)
    support = locality_support(sys, LocalityRule(d=2), 12, STRICTLY_CAUSAL)
    result = synthesize(SynthesisProblem(sys=sys, cost=cost, support=support,
                                         horizon=12, mode="sls", closure=True))
    assert result.feasible
    return sys, result.pair


class TestSimulateStatic:
    def test_open_loop_powers(self, ring8):
        x0 = np.zeros(8)
        x0[0] = 1.0
        traj = simulate_static(ring8, np.zeros((4, 8)), None, 6, x0=x0)
        for t in range(7):
            expected = np.linalg.matrix_power(ring8.A, t) @ x0
            assert np.max(np.abs(traj.x[t] - expected)) <= 1e-9

    def test_lqr_impulse_goes_global(self, ring8, lqr_gain):
        traj = simulate_static(ring8, lqr_gain.K, impulse(8, 4, 12), 12)
        active_by_t4 = np.max(np.abs(traj.x[:5]), axis=0) > 1e-6
        assert active_by_t4.all()

    def test_matches_impulse_columns(self, ring8, lqr_gain):
        pair = closed_loop_fir(ring8, lqr_gain.K, 40)
        traj = simulate_static(ring8, lqr_gain.K, impulse(8, 4, 40), 40)
        x_resp, u_resp = impulse_columns(pair, 4)
        assert np.max(np.abs(traj.x[:41] - x_resp)) <= 1e-10
        assert np.max(np.abs(traj.u[:40] - u_resp[:40])) <= 1e-10

    def test_dimension_check(self, ring8):
        with pytest.raises(ValueError):
            simulate_static(ring8, np.zeros((3, 8)), None, 5)


class TestSimulateSls:
    def test_zero_disturbance_zero_signals(self, closed_full_ring_pair):
        sys, pair = closed_full_ring_pair
        traj = simulate_sls(sys, pair, None, 20)
        assert np.max(np.abs(traj.x)) == 0.0
        assert np.max(np.abs(traj.u)) == 0.0
        assert np.max(np.abs(traj.delta_hat)) == 0.0

    def test_reconstruction_identity(self, closed_full_ring_pair):
        sys, pair = closed_full_ring_pair
        rng = np.random.default_rng(23)
        w = rng.standard_normal((60, 8))
        traj = simulate_sls(sys, pair, w, 60)
        for t in range(60):
            expected = w[t - 1] if t >= 1 else np.zeros(8)
            assert np.max(np.abs(traj.delta_hat[t] - expected)) <= 1e-9

    def test_prediction_exact_when_no_disturbance(self, closed_full_ring_pair):
        sys, pair = closed_full_ring_pair
        w = np.zeros((30, 8))
        w[0, 3] = 1.0
        w[5, 1] = -0.7
        traj = simulate_sls(sys, pair, w, 30)
        for t in range(30):
            if np.max(np.abs(w[t])) == 0.0:
                assert np.max(np.abs(traj.x_hat[t + 1] - traj.x[t + 1])) <= 1e-9

    def test_impulse_matches_spectral_columns(self, closed_full_ring_pair):
        sys, pair = closed_full_ring_pair
        T = pair.horizon
        for node in (1, 4, 7):
            traj = simulate_sls(sys, pair, impulse(8, node, T), T)
            x_resp, u_resp = impulse_columns(pair, node)
            assert np.max(np.abs(traj.x - x_resp)) <= 1e-10
            assert np.max(np.abs(traj.u - u_resp[:T])) <= 1e-10

    def test_superposition(self, closed_full_ring_pair):
        sys, pair = closed_full_ring_pair
        rng = np.random.default_rng(5)
        w1 = rng.standard_normal((25, 8))
        w2 = rng.standard_normal((25, 8))
        a = simulate_sls(sys, pair, w1, 25)
        b = simulate_sls(sys, pair, w2, 25)
        both = simulate_sls(sys, pair, w1 + w2, 25)
        assert np.max(np.abs(both.x - a.x - b.x)) <= 1e-9
        assert np.max(np.abs(both.u - a.u - b.u)) <= 1e-9

    def test_initial_state_as_previous_disturbance(self, closed_full_ring_pair):
        sys, pair = closed_full_ring_pair
        x0 = np.arange(8.0) / 10.0
        traj = simulate_sls(sys, pair, None, 10, x0=x0)
        assert np.max(np.abs(traj.delta_hat[0] - x0)) <= 1e-12

    def test_requires_identity_first_element(self, ring8):
        pair = FIRPair.zeros(8, 4, 5)
        with pytest.raises(RealizationError):
            simulate_sls(ring8, pair, None, 5)

    def test_requires_strict_causality(self, ring8):
        pair = FIRPair.zeros(8, 4, 5, "causal")
        with pytest.raises(RealizationError):
            simulate_sls(ring8, pair, None, 5)


class TestSimulateMdesign:
    def test_zero_controller_open_loop(self):
        sys = build_ring(RingSpec(n=6, a=0.9, actuated=(1, 4)))
        pair = FIRPair.zeros(6, 2, 4, "causal")
        w = impulse(6, 2, 10)
        traj = simulate_mdesign(sys, pair, w, 10)
        for t in range(1, 11):
            expected = np.linalg.matrix_power(sys.A, t - 1)[:, 1]
            assert np.max(np.abs(traj.x[t] - expected)) <= 1e-9
        assert np.max(np.abs(traj.u)) == 0.0

    def test_m0_cancels_instantly(self):
        sys = full_ring(4, 1.2)
        pair = FIRPair.zeros(4, 4, 3, "causal")
        M = dict(pair.M_elems)
        M[0] = -np.eye(4)
        pair = FIRPair(3, dict(pair.R_elems), M, "causal")
        traj = simulate_mdesign(sys, pair, impulse(4, 2, 8), 8)
        assert np.max(np.abs(traj.x)) <= 1e-12

    def test_matches_spectral_columns(self, ring8, bench_cost):
        support = locality_support(ring8, LocalityRule(d=2, self_delay=1), 15,
                                   "causal")
        result = synthesize(SynthesisProblem(sys=ring8, cost=bench_cost,
                                             support=support, horizon=15,
                                             mode="mdesign"))
        assert result.feasible
        for node in (3, 4):
            traj = simulate_mdesign(ring8, result.pair, impulse(8, node, 15), 15)
            x_resp, u_resp = impulse_columns(result.pair, node)
            assert np.max(np.abs(traj.x - x_resp)) <= 1e-10
            assert np.max(np.abs(traj.u - u_resp[:15])) <= 1e-10


class TestLocalizationRadius:
    def test_zero_trajectory(self, ring8):
        traj = simulate_static(ring8, np.zeros((4, 8)), None, 5)
        report = localization_radius(traj, 4, ring8.topology,
                                     actuated=ring8.actuated)
        assert report.radius == 0
        assert report.active_nodes == ()
        assert report.active_actuators == ()

    def test_lqr_radius_is_full_ring(self, ring8, lqr_gain):
        traj = simulate_static(ring8, lqr_gain.K, impulse(8, 4, 12), 12)
        report = localization_radius(traj, 4, ring8.topology,
                                     actuated=ring8.actuated)
        assert report.radius == 4
        assert report.active_nodes == tuple(range(1, 9))

    def test_localized_pair_radius_one(self, ring8, bench_sls_30):
        traj = simulate_sls(ring8, bench_sls_30.pair, impulse(8, 4, 30), 30)
        report = localization_radius(traj, 4, ring8.topology, tol=1e-6,
                                     actuated=ring8.actuated)
        assert report.active_nodes == (3, 4, 5)
        assert report.active_actuators == (3, 5)
        assert report.radius == 1
