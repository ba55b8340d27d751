"""Data-collection MDP tests: kinematics, accounting, rewards, contracts."""

import math

import numpy as np
import pytest

from usv_auv_sim.config import ExperimentConfig
from usv_auv_sim.errors import ConfigError, ContractError
from usv_auv_sim.ocean import Vortex, VortexSet, current_velocity
from usv_auv_sim.task import Action, DataCollectionEnv, link_rate, snr_db, thorp_absorption_db_per_km


def make_cfg(**kw):
    base = dict(sea_condition="ideal", n_nodes=5, episode_steps=10, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def still(env):
    return [Action(0.0, 0.0) for _ in range(env.n_auvs)]


class TestReset:
    def test_same_seed_gives_identical_observations(self):
        env = DataCollectionEnv(make_cfg())
        a = env.reset(11)
        b = env.reset(11)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_nodes_inside_area(self):
        env = DataCollectionEnv(make_cfg(n_nodes=30))
        env.reset(0)
        for n in env.nodes:
            assert 0.0 <= n.x <= 200.0 and 0.0 <= n.y <= 200.0

    def test_observation_count_matches_auvs(self):
        env = DataCollectionEnv(make_cfg(n_auvs=2))
        obs = env.reset(0)
        assert len(obs) == 2
        assert obs[0].shape == (env.obs_dim,)

    def test_zero_nodes_or_auvs_rejected(self):
        with pytest.raises(ConfigError):
            make_cfg(n_nodes=0)
        with pytest.raises(ConfigError):
            make_cfg(n_auvs=0)

    def test_usv_starts_at_center(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        assert env.usv_xy == (100.0, 100.0)


class TestKinematics:
    def test_pure_commanded_motion_without_current(self):
        env = DataCollectionEnv(make_cfg(w_coll=0.0))
        env.reset(0)
        x0, y0 = env.auvs[0].x, env.auvs[0].y
        env.step([Action(0.0, 2.0), Action(0.0, 0.0)])
        assert env.auvs[0].x == pytest.approx(x0 + 20.0, abs=1e-12)
        assert env.auvs[0].y == pytest.approx(y0, abs=1e-12)

    def test_vortex_drift_adds_exactly(self):
        cfg = make_cfg(
            sea_condition="extreme",
            seiche_amplitude=0.0,
            vortex_x=(120.0,),
            vortex_y=(60.0,),
            vortex_gamma=(15.0,),
            vortex_delta=(20.0,),
        )
        env = DataCollectionEnv(cfg)
        env.reset(0)
        a = env.auvs[0]
        x0, y0 = a.x, a.y
        drift = current_velocity(
            VortexSet((Vortex(120.0, 60.0, 15.0, 20.0),)), (x0, y0)
        )
        env.step([Action(0.3, 1.5), Action(0.0, 0.0)])
        expect_x = x0 + (1.5 * math.cos(0.3) + drift.vx) * 10.0
        expect_y = y0 + (1.5 * math.sin(0.3) + drift.vy) * 10.0
        assert a.x == pytest.approx(expect_x, abs=1e-9)
        assert a.y == pytest.approx(expect_y, abs=1e-9)

    def test_positions_clamped_to_area(self):
        env = DataCollectionEnv(make_cfg(auv_start_x=(2.0, 198.0), auv_start_y=(2.0, 198.0)))
        env.reset(0)
        for _ in range(5):
            out = env.step([Action(math.pi, 2.0), Action(0.0, 2.0)])
        for a in env.auvs:
            assert 0.0 <= a.x <= 200.0 and 0.0 <= a.y <= 200.0

    def test_ideal_sea_sees_zero_current(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        out = env.step(still(env))
        assert np.all(out.info["current_speeds"] == 0.0)
        for o in out.observations:
            assert o[-1] == 0.0


class TestObservation:
    def test_current_element_at_vortex_center(self):
        cfg = make_cfg(
            sea_condition="extreme",
            seiche_amplitude=0.0,
            auv_start_x=(120.0, 10.0),
            auv_start_y=(60.0, 10.0),
            vortex_x=(120.0,),
            vortex_y=(60.0,),
            vortex_gamma=(15.0,),
            vortex_delta=(20.0,),
        )
        env = DataCollectionEnv(cfg)
        obs = env.reset(0)
        assert obs[0][-1] == 0.0

    def test_current_element_at_core_radius(self):
        gamma, delta = 15.0, 20.0
        cfg = make_cfg(
            sea_condition="extreme",
            seiche_amplitude=0.0,
            auv_start_x=(120.0 + delta, 10.0),
            auv_start_y=(60.0, 10.0),
            vortex_x=(120.0,),
            vortex_y=(60.0,),
            vortex_gamma=(gamma,),
            vortex_delta=(delta,),
        )
        env = DataCollectionEnv(cfg)
        obs = env.reset(0)
        expect = gamma / (2.0 * math.pi * delta) * (1.0 - math.exp(-1.0))
        assert obs[0][-1] == pytest.approx(expect, abs=1e-9)

    def test_layout_and_normalization(self):
        env = DataCollectionEnv(make_cfg())
        obs = env.reset(0)
        a = env.auvs[0]
        assert obs[0][0] == a.x / 200.0
        assert obs[0][1] == a.y / 200.0
        # USV relative position occupies the two slots before the current element
        assert obs[0][-3] == (env.usv_xy[0] - a.x) / 200.0
        assert obs[0][-2] == (env.usv_xy[1] - a.y) / 200.0


class TestRewards:
    def test_usv_distance_reward_values(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        l_max = env.cfg.l_max
        env.estimates[0] = (env.usv_xy[0] + l_max, env.usv_xy[1])
        assert env.usv_distance_reward(0) == pytest.approx(1.0, rel=1e-12)
        env.estimates[0] = (env.usv_xy[0] + l_max / 2.0, env.usv_xy[1])
        assert env.usv_distance_reward(0) == pytest.approx(2.0, rel=1e-12)

    def test_usv_distance_reward_clamped_at_floor(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        env.estimates[0] = (env.usv_xy[0] + 0.1, env.usv_xy[1])
        assert env.usv_distance_reward(0) == pytest.approx(env.cfg.l_max, rel=1e-12)

    def test_stationary_auv_with_no_nodes_in_range_scores_zero_base(self):
        # shaping weight off isolates the base reward
        cfg = make_cfg(w_usv=0.0, comm_radius=0.001, auv_start_x=(60.0, 140.0))
        env = DataCollectionEnv(cfg)
        env.reset(0)
        out = env.step(still(env))
        assert np.all(out.rewards == 0.0)

    def test_collision_penalty_applies_to_both(self):
        cfg = make_cfg(
            w_usv=0.0,
            comm_radius=0.001,
            auv_start_x=(100.0, 103.0),
            auv_start_y=(60.0, 60.0),
        )
        env = DataCollectionEnv(cfg)
        env.reset(0)
        out = env.step(still(env))
        assert out.rewards[0] == pytest.approx(-cfg.w_coll)
        assert out.rewards[1] == pytest.approx(-cfg.w_coll)
        assert out.info["collisions"] == 2

    def test_boundary_counts_as_collision(self):
        cfg = make_cfg(w_usv=0.0, comm_radius=0.001, auv_start_x=(2.0, 100.0))
        env = DataCollectionEnv(cfg)
        env.reset(0)
        out = env.step(still(env))
        assert out.rewards[0] == pytest.approx(-cfg.w_coll)

    def test_energy_term_scales_with_speed_cubed(self):
        cfg = make_cfg(w_usv=0.0, w_coll=0.0, comm_radius=0.001)
        env = DataCollectionEnv(cfg)
        env.reset(0)
        out = env.step([Action(0.0, 2.0), Action(0.0, 0.0)])
        assert out.rewards[0] == pytest.approx(-cfg.w_energy * 1.0 * 2.0**3 * 10.0)
        assert out.rewards[1] == 0.0

    def test_link_rate_hand_computed(self):
        # scalar substitution: P=120 dB, kappa=1.5, l=10 m, f=20 kHz
        f2 = 20.0**2
        alpha = 0.11 * f2 / (1 + f2) + 44.0 * f2 / (4100 + f2) + 2.75e-4 * f2 + 0.003
        snr = 120.0 - 15.0 * math.log10(10.0) - alpha * 10.0 * 1e-3
        expected = math.log2(1.0 + 10.0 ** (snr / 10.0))
        assert thorp_absorption_db_per_km(20.0) == pytest.approx(alpha, rel=1e-12)
        assert snr_db(10.0, 120.0, 1.5, 20.0) == pytest.approx(snr, rel=1e-12)
        assert link_rate(10.0, 120.0, 1.5, 20.0) == pytest.approx(expected, rel=1e-12)

    def test_rate_reward_uses_link_rate(self):
        cfg = make_cfg(w_usv=0.0, w_coll=0.0, n_nodes=1)
        env = DataCollectionEnv(cfg)
        env.reset(0)
        # park the single node 10 m from AUV 0's position after a zero move
        a = env.auvs[0]
        node = env.nodes[0]
        node.x, node.y = a.x + 10.0, a.y
        node.queue = node.q0 = 1e9  # far from draining in one step
        out = env.step(still(env))
        expected = link_rate(10.0, cfg.tx_level_db, cfg.spreading_exponent, cfg.acoustic_freq_khz)
        assert out.rewards[0] == pytest.approx(cfg.w_rate * expected, rel=1e-12)


class TestAccounting:
    def test_queue_conservation(self):
        env = DataCollectionEnv(make_cfg(n_nodes=8, episode_steps=30))
        env.reset(5)
        total0 = sum(n.queue for n in env.nodes)
        rng = np.random.default_rng(0)
        done = False
        while not done:
            acts = [Action(rng.uniform(-math.pi, math.pi), rng.uniform(0, 2.0)) for _ in range(2)]
            done = env.step(acts).done
        total = sum(n.queue for n in env.nodes) + env.total_collected
        assert total == pytest.approx(total0, rel=1e-12)

    def test_energy_monotone_and_zero_at_rest(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        last = 0.0
        for _ in range(3):
            env.step(still(env))
            for a in env.auvs:
                assert a.energy_used == 0.0
        env.step([Action(0.0, 1.0), Action(0.0, 1.0)])
        for a in env.auvs:
            assert a.energy_used > 0.0

    def test_done_on_step_budget(self):
        env = DataCollectionEnv(make_cfg(episode_steps=3))
        env.reset(0)
        assert not env.step(still(env)).done
        assert not env.step(still(env)).done
        assert env.step(still(env)).done
        with pytest.raises(ContractError):
            env.step(still(env))

    def test_done_when_queues_drain(self):
        cfg = make_cfg(n_nodes=1, queue_init_min=1.0, queue_init_max=2.0, comm_radius=300.0)
        env = DataCollectionEnv(cfg)
        env.reset(0)
        out = env.step(still(env))
        assert out.done
        assert all(n.queue == 0.0 for n in env.nodes)

    def test_reward_shaping_monotone_in_distance(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        vals = []
        for d in (150.0, 100.0, 50.0, 10.0, 2.0):
            env.estimates[0] = (env.usv_xy[0] + d, env.usv_xy[1])
            vals.append(env.usv_distance_reward(0))
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestContracts:
    def test_wrong_action_count(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        with pytest.raises(ContractError):
            env.step([Action(0.0, 0.0)])

    def test_nan_action(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        with pytest.raises(ContractError):
            env.step([Action(float("nan"), 0.0), Action(0.0, 0.0)])

    def test_overspeed_action(self):
        env = DataCollectionEnv(make_cfg())
        env.reset(0)
        with pytest.raises(ContractError):
            env.step([Action(0.0, 99.0), Action(0.0, 0.0)])


class TestSeaConditions:
    def test_extreme_sea_is_seed_deterministic(self):
        cfg = make_cfg(sea_condition="extreme")
        rows = []
        for _ in range(2):
            env = DataCollectionEnv(cfg)
            env.reset(9)
            env.step([Action(0.3, 1.0), Action(-0.8, 1.5)])
            env.step([Action(0.1, 0.5), Action(0.4, 2.0)])
            rows.append([tuple(r) for r in env.last_records])
        assert rows[0] == rows[1]

    def test_extreme_sea_perturbs_the_surface(self):
        env = DataCollectionEnv(make_cfg(sea_condition="extreme"))
        env.reset(4)
        etas = [env.usv_eta]
        for _ in range(5):
            env.step(still(env))
            etas.append(env.usv_eta)
        assert max(etas) - min(etas) > 1e-3
        assert abs(np.mean(etas) - env.cfg.wave_amplitude) < 1.5

    def test_algorithm_ordering_trace(self):
        env = DataCollectionEnv(make_cfg())
        env.trace = []
        env.reset(0)
        env.step(still(env))
        env.step(still(env))
        # reset seeds estimates with one ping, then each step: plan -> measure -> act
        assert env.trace == ["measure", "plan", "measure", "act", "plan", "measure", "act"]


class TestFleetSizes:
    @pytest.mark.parametrize("n", [1, 3])
    def test_other_fleet_sizes_step_cleanly(self, n):
        cfg = make_cfg(
            sea_condition="extreme",
            n_auvs=n,
            auv_start_x=tuple(40.0 + 40.0 * k for k in range(n)),
            auv_start_y=tuple(60.0 + 30.0 * k for k in range(n)),
            auv_depths=tuple(95.0 + 5.0 * k for k in range(n)),
        )
        env = DataCollectionEnv(cfg)
        obs = env.reset(2)
        assert len(obs) == n and obs[0].shape == (env.obs_dim,)
        out = env.step([Action(0.5 * k, 1.0) for k in range(n)])
        assert out.rewards.shape == (n,)
        assert np.all(np.isfinite(out.rewards))
