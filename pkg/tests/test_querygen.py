import numpy as np
import pytest

from prefshape import belief as belief_mod
from prefshape import dynamics, features, querygen
from prefshape.belief import BeliefState, PreferenceRecord
from prefshape.querygen import (
    DegenerateQueryError,
    Query,
    QueryGenConfig,
    best_of_n_trajectory,
    generate_query,
    generate_standardized_test,
    optimize_trajectory,
    reward_control_gradient,
    reward_of_controls,
    sample_support_uniform,
    select_weight_pair,
)
from tests.conftest import FAST_QUERYGEN


def brute_force_pair(samples, belief, mu):
    """Independent exhaustive search written against the scoring formula."""
    logp = np.array([belief_mod.log_unnorm_posterior(w, belief) for w in samples])
    p = np.exp(logp - logp.max())
    best_score, best_ij = -np.inf, None
    m = len(samples)
    for i in range(m):
        for j in range(i + 1, m):
            s = p[i] * p[j] + mu * np.linalg.norm(samples[i] - samples[j])
            if s > best_score + 1e-15:
                best_score, best_ij = s, (i, j)
    return best_ij


class TestSelectWeightPair:
    def test_matches_brute_force_oracle(self, rng):
        # oracle: independent exhaustive evaluation at M=20
        recs = tuple(
            PreferenceRecord(str(k), rng.normal(size=4), rng.normal(size=4),
                             int(rng.choice([1, -1])))
            for k in range(6))
        b = BeliefState(4, recs)
        for _ in range(5):
            samples = np.abs(rng.normal(size=(20, 4)))
            samples /= np.maximum(np.linalg.norm(samples, axis=1, keepdims=True), 1.0)
            i, j, wi, wj = select_weight_pair(samples, b, mu=0.1)
            assert (i, j) == brute_force_pair(samples, b, 0.1)
            np.testing.assert_array_equal(wi, samples[i])
            np.testing.assert_array_equal(wj, samples[j])

    def test_mu_zero_picks_highest_product(self, rng):
        b = BeliefState(3)
        samples = np.abs(rng.normal(size=(10, 3))) * 0.3
        i, j, _, _ = select_weight_pair(samples, b, mu=0.0)
        # uniform belief: all products equal, ties break to lowest pair
        assert (i, j) == (0, 1)

    def test_large_mu_picks_most_distant(self, rng):
        b = BeliefState(2)
        samples = np.array([[0.1, 0.1], [0.9, 0.1], [0.1, 0.12]])
        i, j, _, _ = select_weight_pair(samples, b, mu=1e6)
        dists = {(a, c): np.linalg.norm(samples[a] - samples[c])
                 for a in range(3) for c in range(a + 1, 3)}
        assert (i, j) == max(dists, key=dists.get)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            select_weight_pair(np.zeros((1, 4)), BeliefState(4), 0.1)

    def test_negative_mu_rejected(self):
        with pytest.raises(ValueError):
            select_weight_pair(np.zeros((3, 4)), BeliefState(4), -0.1)


class TestRewardOfControls:
    def test_matches_rollout_reward(self, scenario, rng):
        u = dynamics.sample_random_controls(rng, scenario)
        w = rng.uniform(0, 1, 4)
        traj = dynamics.rollout(scenario.initial_state, u, scenario)
        assert reward_of_controls(u.blocks.ravel(), w, scenario) == pytest.approx(
            features.reward(traj, w), abs=1e-14)

    def test_gradient_matches_slow_finite_difference(self, scenario, rng):
        # oracle: independent per-coordinate FD with a different step
        u = dynamics.sample_random_controls(rng, scenario)
        flat = u.blocks.ravel()
        w = rng.uniform(0, 1, 4)
        g = reward_control_gradient(flat, w, scenario)
        h = 3e-6
        for i in rng.choice(flat.size, size=6, replace=False):
            e = np.zeros_like(flat)
            e[i] = h
            fd = (reward_of_controls(flat + e, w, scenario)
                  - reward_of_controls(flat - e, w, scenario)) / (2 * h)
            assert g[i] == pytest.approx(fd, abs=1e-6)

    def test_fast_objective_matches_slow_path(self, scenario, rng):
        u = dynamics.sample_random_controls(rng, scenario)
        flat = u.blocks.ravel()
        w = rng.uniform(0, 1, 4)
        neg_f, neg_g = querygen._fast_neg_reward_and_grad(flat, w, scenario)
        assert -neg_f == pytest.approx(reward_of_controls(flat, w, scenario), abs=1e-10)
        np.testing.assert_allclose(-neg_g, reward_control_gradient(flat, w, scenario),
                                   atol=1e-8)


class TestOptimizeTrajectory:
    def test_keep_speed_weight_drives_fast(self, scenario, rng):
        traj = optimize_trajectory(np.array([0.0, 1.0, 0.0, 0.0]), scenario,
                                   restarts=3, rng=rng, max_iter=50)
        assert traj.states[:, 3].mean() >= 0.95

    def test_heading_weight_drives_straight(self, scenario, rng):
        traj = optimize_trajectory(np.array([0.0, 0.0, 1.0, 0.0]), scenario,
                                   restarts=3, rng=rng, max_iter=50)
        assert features.accumulate(traj)[2] >= 0.99

    def test_beats_every_restart_start(self, scenario):
        w = np.array([0.3, 0.2, 0.2, 0.9])
        rng1 = np.random.default_rng(21)
        traj = optimize_trajectory(w, scenario, restarts=4, rng=rng1, max_iter=30)
        val = features.reward(traj, w)
        rng2 = np.random.default_rng(21)
        for _ in range(4):
            x0 = dynamics.sample_random_controls(rng2, scenario).blocks.ravel()
            assert val >= reward_of_controls(x0, w, scenario) - 1e-12

    def test_controls_within_bounds(self, scenario, rng):
        traj = optimize_trajectory(rng.uniform(0, 1, 4), scenario,
                                   restarts=2, rng=rng, max_iter=30)
        assert np.all(np.abs(traj.controls.blocks[:, 0]) <= scenario.steer_max)
        assert np.all(np.abs(traj.controls.blocks[:, 1]) <= scenario.accel_max)

    def test_more_restarts_never_worse(self, scenario):
        w = np.array([0.5, 0.1, 0.7, 0.3])
        vals = []
        for restarts in (1, 4):
            traj = optimize_trajectory(w, scenario, restarts=restarts,
                                       rng=np.random.default_rng(3), max_iter=40)
            vals.append(features.reward(traj, w))
        assert vals[1] >= vals[0] - 1e-12

    def test_invalid_restarts(self, scenario):
        with pytest.raises(ValueError):
            optimize_trajectory(np.ones(4), scenario, restarts=0)


class TestGenerateQuery:
    def test_smoke_and_fields(self, scenario):
        b = BeliefState(4)
        q = generate_query(b, scenario, FAST_QUERYGEN, np.random.default_rng(5))
        assert isinstance(q, Query)
        assert q.traj_a.controls != q.traj_b.controls
        assert len(q.query_id) == 16
        assert "w_a" in q.provenance and "w_b" in q.provenance

    def test_deterministic_given_rng_stream(self, scenario):
        b = BeliefState(4)
        q1 = generate_query(b, scenario, FAST_QUERYGEN, np.random.default_rng(5))
        q2 = generate_query(b, scenario, FAST_QUERYGEN, np.random.default_rng(5))
        assert q1.query_id == q2.query_id
        assert np.array_equal(q1.traj_a.states, q2.traj_a.states)
        assert np.array_equal(q1.traj_b.states, q2.traj_b.states)

    def test_trajectories_resimulate_exactly(self, scenario):
        q = generate_query(BeliefState(4), scenario, FAST_QUERYGEN,
                           np.random.default_rng(9))
        for traj in (q.traj_a, q.traj_b):
            again = dynamics.rollout(traj.joint_state(0), traj.controls, scenario)
            assert np.array_equal(again.states, traj.states)

    def test_wrong_dimension_rejected(self, scenario):
        with pytest.raises(ValueError):
            generate_query(BeliefState(5), scenario, FAST_QUERYGEN,
                           np.random.default_rng(0))

    def test_json_round_trip(self, scenario):
        q = generate_query(BeliefState(4), scenario, FAST_QUERYGEN,
                           np.random.default_rng(2))
        back = Query.from_json_dict(q.to_json_dict())
        assert back.query_id == q.query_id
        assert np.array_equal(back.traj_a.states, q.traj_a.states)
        np.testing.assert_allclose(back.provenance["w_a"], q.provenance["w_a"])


class TestSampleSupportUniform:
    def test_in_support(self, rng):
        for _ in range(200):
            w = sample_support_uniform(rng, 4)
            assert np.all(w >= 0.0)
            assert np.linalg.norm(w) <= 1.0 + 1e-12

    def test_mean_matches_quadrature(self):
        # oracle: uniform quarter-disc mean is 4/(3 pi) per coordinate (d=2)
        rng = np.random.default_rng(0)
        ws = np.stack([sample_support_uniform(rng, 2) for _ in range(40000)])
        se = ws.std(axis=0, ddof=1) / np.sqrt(len(ws))
        np.testing.assert_array_less(np.abs(ws.mean(axis=0) - 4 / (3 * np.pi)), 4 * se)


class TestStandardizedTest:
    def test_count_and_provenance(self, scenario):
        qs = generate_standardized_test(5, scenario, np.random.default_rng(7),
                                        restarts=2, max_iter=25)
        assert len(qs) == 5
        for q in qs:
            assert q.provenance["source"] == "standardized"
            assert len(q.provenance["w_a"]) == 4

    def test_seeded_reproducibility(self, scenario):
        a = generate_standardized_test(3, scenario, np.random.default_rng(7),
                                       restarts=2, max_iter=25)
        b = generate_standardized_test(3, scenario, np.random.default_rng(7),
                                       restarts=2, max_iter=25)
        assert [q.query_id for q in a] == [q.query_id for q in b]

    def test_zero_count_rejected(self, scenario):
        with pytest.raises(ValueError):
            generate_standardized_test(0, scenario, np.random.default_rng(0))


class TestBestOfN:
    def test_n_one_is_single_rollout(self, scenario):
        w = np.ones(4)
        t1 = best_of_n_trajectory(w, scenario, 1, np.random.default_rng(4))
        u = dynamics.sample_random_controls(np.random.default_rng(4), scenario)
        t2 = dynamics.rollout(scenario.initial_state, u, scenario)
        assert np.array_equal(t1.states, t2.states)

    def test_reward_nondecreasing_in_n(self, scenario):
        w = np.array([0.3, 0.2, 0.2, 0.9])
        vals = []
        for n in (5, 50):
            traj = best_of_n_trajectory(w, scenario, n, np.random.default_rng(11))
            vals.append(features.reward(traj, w))
        assert vals[1] >= vals[0]

    def test_invalid_n(self, scenario):
        with pytest.raises(ValueError):
            best_of_n_trajectory(np.ones(4), scenario, 0, np.random.default_rng(0))
