"""Experiment orchestration: training runs, policy evaluation, the
three-way positioning comparison, and trajectory dumps.

All outputs are deterministic CSV files (seeded end to end, atomic
writes, fixed float formatting); plotting is left to external tools.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .csvio import atomic_write_csv
from .rl import (
    TrainConfig,
    epoch_seed_sequence,
    restore_agents,
    save_checkpoint,
    to_env_action,
    train,
)
from .task import TRACE_HEADER, DataCollectionEnv
from .usbl import MEASUREMENT_LOG_HEADER

METRICS_HEADER = ["epoch", "sdr", "ec", "arps"]
EVAL_HEADER = ["episode", "sdr", "sdr_total", "ec", "arps", "steps", "rmse"]
POSITIONING_SUMMARY_HEADER = ["strategy", "rmse", "samples", "dropouts", "episodes"]
POSITIONING_ERRORS_HEADER = ["strategy", "episode", "t", "auv_id", "error"]
PLANNER_TRACE_HEADER = ["t", "usv_x", "usv_y", "target_x", "target_y", "det_j"]


@dataclass
class RunSummary:
    """Across-episode aggregates of the three evaluation metrics."""

    episodes: int
    sdr_mean: float
    sdr_std: float
    ec_mean: float
    ec_std: float
    arps_mean: float
    arps_std: float
    positioning_rmse: dict = field(default_factory=dict)

    def lines(self):
        out = [
            f"episodes: {self.episodes}",
            f"SDR  (mean per-step sum data rate): {self.sdr_mean:.4g} +/- {self.sdr_std:.4g}",
            f"EC   (episode propulsion energy):   {self.ec_mean:.4g} +/- {self.ec_std:.4g}",
            f"ARPS (avg reward per timestep):     {self.arps_mean:.4g} +/- {self.arps_std:.4g}",
        ]
        for k, v in self.positioning_rmse.items():
            out.append(f"positioning RMSE [{k}]: {v:.4g} m")
        return out


def summarize(episode_stats, positioning_rmse=None) -> RunSummary:
    sdr = np.array([s["sdr"] for s in episode_stats])
    ec = np.array([s["ec"] for s in episode_stats])
    arps = np.array([s["arps"] for s in episode_stats])
    std = lambda v: float(np.std(v)) if len(v) > 1 else 0.0
    return RunSummary(
        episodes=len(episode_stats),
        sdr_mean=float(np.mean(sdr)),
        sdr_std=std(sdr),
        ec_mean=float(np.mean(ec)),
        ec_std=std(ec),
        arps_mean=float(np.mean(arps)),
        arps_std=std(arps),
        positioning_rmse=positioning_rmse or {},
    )


# --- policies ---------------------------------------------------------------


class GreedyPolicy:
    """Noise-free actions from trained agents."""

    def __init__(self, agents):
        self.agents = agents

    def actions(self, env, obs):
        return [
            to_env_action(agent.act(o, explore=False), env.cfg.v_auv_max)
            for agent, o in zip(self.agents, obs)
        ]


class RandomPolicy:
    """Uniform actions; the no-learning baseline."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)

    def actions(self, env, obs):
        return [
            to_env_action(self.rng.uniform(-1.0, 1.0, 2), env.cfg.v_auv_max)
            for _ in range(env.n_auvs)
        ]


class ScriptedPolicy:
    """Seeded waypoint-patrol actions, independent of anything the USV does.

    The fleet works a regional focus (as the data-collection task induces
    around node clusters): waypoints are drawn around a per-episode focus
    point that drifts across episodes. Each AUV heads for its current
    waypoint and advances to the next within 10 m. Motion depends only on
    the AUV's own position, which is identical across USV strategies for
    a fixed episode seed, so replays share trajectories.
    """

    def __init__(self, seed: int, n_auvs: int, steps: int, area: float = 200.0):
        rng = np.random.default_rng(seed)
        focus = rng.uniform(0.15 * area, 0.85 * area, 2)
        spread = 0.2 * area
        self.waypoints = np.clip(
            focus + rng.uniform(-spread, spread, (steps + 1, n_auvs, 2)),
            0.025 * area,
            0.975 * area,
        )
        self.speed_frac = rng.uniform(0.6, 1.0, (steps + 1, n_auvs))
        self.idx = [0] * n_auvs
        self.i = 0
        self.area = area

    def reset(self):
        self.idx = [0] * len(self.idx)
        self.i = 0

    def actions(self, env, obs):
        from .task import Action

        out = []
        row = min(self.i, self.speed_frac.shape[0] - 1)
        self.i += 1
        for k, o in enumerate(obs):
            pos = np.array([o[0], o[1]]) * env.area
            wp = self.waypoints[self.idx[k] % self.waypoints.shape[0], k]
            if np.hypot(*(wp - pos)) < 10.0:
                self.idx[k] += 1
                wp = self.waypoints[self.idx[k] % self.waypoints.shape[0], k]
            d = wp - pos
            heading = math.atan2(d[1], d[0])
            out.append(
                Action(heading=heading, speed=float(self.speed_frac[row, k] * env.cfg.v_auv_max))
            )
        return out


def run_policy_episode(env, policy, seed: int, collect_traces: bool = False):
    """One greedy episode; returns stats and, optionally, per-step traces."""
    if hasattr(policy, "reset"):
        policy.reset()
    obs = env.reset(seed)
    rates, rewards = [], []
    energy = 0.0
    rows, planner_rows, error_rows, meas_rows = [], [], [], []
    sq_err, n_err = 0.0, 0
    done = False
    while not done:
        out = env.step(policy.actions(env, obs))
        rates.append(out.info["sum_rate"])
        rewards.append(float(np.sum(out.rewards)))
        energy += out.info["energy"]
        errs = env.positioning_errors()
        sq_err += float(np.sum(errs**2))
        n_err += errs.size
        if collect_traces:
            rows.extend(env.last_records)
            t = env.t - env.cfg.dt
            planner_rows.append(
                (
                    t,
                    out.info["usv_x"],
                    out.info["usv_y"],
                    out.info["planner_target"][0],
                    out.info["planner_target"][1],
                    out.info["planner_det"],
                )
            )
            for k, meas in enumerate(env._last_meas):
                r = env.last_records[k]
                meas_rows.append((t, k, meas.dphi_x, meas.dphi_y, r[4], r[5], r[2], r[3]))
        for k, e in enumerate(errs):
            error_rows.append((env.t - env.cfg.dt, k, float(e)))
        obs = out.observations
        done = out.done
    stats = {
        "sdr": float(np.mean(rates)),
        "sdr_total": float(np.sum(rates)),
        "ec": energy,
        "arps": float(np.mean(rewards)),
        "steps": len(rates),
        "rmse": math.sqrt(sq_err / n_err) if n_err else 0.0,
        "dropouts": env.dropouts,
    }
    return stats, rows, planner_rows, error_rows, meas_rows


# --- commands ---------------------------------------------------------------


def cmd_train(cfg: ExperimentConfig, out_dir: str):
    """Train per the config; writes metrics.csv and checkpoint.npz.

    On numerical divergence a diagnostic snapshot is written and its path
    attached to the error before it propagates (exit code 3 in the CLI).
    """
    from .errors import TrainingDivergenceError

    env = DataCollectionEnv(cfg)
    tcfg = TrainConfig.from_experiment(cfg)
    try:
        agents, metrics = train(env, tcfg, cfg.seed)
    except TrainingDivergenceError as err:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "divergence.txt")
        from .csvio import atomic_write_text

        details = [f"{k} = {v}" for k, v in sorted(err.context.items())]
        atomic_write_text(path, "training divergence diagnostic\n" + "\n".join(details) + "\n")
        err.context["diagnostic_path"] = path
        raise
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_csv(
        os.path.join(out_dir, "metrics.csv"),
        "train-metrics",
        METRICS_HEADER,
        [(m.epoch, m.sdr, m.ec, m.arps) for m in metrics],
    )
    save_checkpoint(
        os.path.join(out_dir, "checkpoint.npz"),
        agents,
        {"seed": cfg.seed, "sea_condition": cfg.sea_condition},
    )
    last = metrics[-1]
    tail = metrics[-min(10, len(metrics)) :]
    lines = [
        f"trained {tcfg.algorithm} for {len(metrics)} epochs "
        f"({cfg.sea_condition} sea, seed {cfg.seed})",
        f"final epoch: sdr={last.sdr:.4g} ec={last.ec:.4g} arps={last.arps:.4g}",
        f"last-{len(tail)}-epoch mean arps: {np.mean([m.arps for m in tail]):.4g}",
        f"wrote {os.path.join(out_dir, 'metrics.csv')} and checkpoint.npz",
    ]
    return metrics, lines


def cmd_eval(cfg: ExperimentConfig, checkpoint: str, episodes: int, out_dir: str):
    """Greedy evaluation of a checkpoint; writes eval_episodes.csv."""
    env = DataCollectionEnv(cfg)
    tcfg = TrainConfig.from_experiment(cfg)
    meta, agents = restore_agents(checkpoint, tcfg, expect_obs_dim=env.obs_dim)
    policy = GreedyPolicy(agents)
    seeds = epoch_seed_sequence(cfg.seed, episodes)
    stats = []
    for i in range(episodes):
        s, _, _, _, _ = run_policy_episode(env, policy, int(seeds[i]))
        stats.append(s)
    summary = summarize(
        stats, {"fim" if cfg.usv_strategy == "fim" else "fixed": _pooled_rmse(stats)}
    )
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_csv(
        os.path.join(out_dir, "eval_episodes.csv"),
        "eval-episodes",
        EVAL_HEADER,
        [
            (i, s["sdr"], s["sdr_total"], s["ec"], s["arps"], s["steps"], s["rmse"])
            for i, s in enumerate(stats)
        ],
    )
    lines = [f"evaluated {checkpoint} under {cfg.sea_condition} sea"] + summary.lines()
    return summary, stats, lines


def _pooled_rmse(stats) -> float:
    # episode rmse values are over equal step counts, so pool via mean square
    return math.sqrt(float(np.mean([s["rmse"] ** 2 for s in stats])))


STRATEGIES = (
    ("fim", None),
    ("fixed-0-0", (0.0, 0.0)),
    ("fixed-100-100", (100.0, 100.0)),
)


def cmd_compare_positioning(cfg: ExperimentConfig, episodes: int, out_dir: str):
    """Replay identical AUV trajectories under three USV strategies.

    Writes positioning_errors.csv (per-step) and positioning_summary.csv
    (per-strategy RMSE and dropout counts).
    """
    seeds = epoch_seed_sequence(cfg.seed, episodes)
    error_rows = []
    summary_rows = []
    rmse = {}
    for name, fixed in STRATEGIES:
        if fixed is None:
            scfg = cfg.replace(usv_strategy="fim")
        else:
            scfg = cfg.replace(usv_strategy="fixed", usv_fixed_x=fixed[0], usv_fixed_y=fixed[1])
        env = DataCollectionEnv(scfg)
        sq, n, dropouts = 0.0, 0, 0
        for i in range(episodes):
            policy = ScriptedPolicy(cfg.seed + 17 * i, cfg.n_auvs, cfg.episode_steps)
            _, _, _, errs, _ = run_policy_episode(env, policy, int(seeds[i]))
            for t, k, e in errs:
                error_rows.append((name, i, t, k, e))
                sq += e * e
                n += 1
            dropouts += env.dropouts
        rmse[name] = math.sqrt(sq / n) if n else 0.0
        summary_rows.append((name, rmse[name], n, dropouts, episodes))
    os.makedirs(out_dir, exist_ok=True)
    atomic_write_csv(
        os.path.join(out_dir, "positioning_errors.csv"),
        "positioning-errors",
        POSITIONING_ERRORS_HEADER,
        error_rows,
    )
    atomic_write_csv(
        os.path.join(out_dir, "positioning_summary.csv"),
        "positioning-summary",
        POSITIONING_SUMMARY_HEADER,
        summary_rows,
    )
    lines = [f"positioning comparison over {episodes} episodes ({cfg.sea_condition} sea):"]
    for name, _ in STRATEGIES:
        lines.append(f"  RMSE [{name}]: {rmse[name]:.4g} m")
    return rmse, lines


def cmd_dump_trajectories(cfg: ExperimentConfig, checkpoint: str, out_dir: str):
    """One greedy episode; writes wide trajectories.csv plus planner and
    measurement traces."""
    env = DataCollectionEnv(cfg)
    tcfg = TrainConfig.from_experiment(cfg)
    meta, agents = restore_agents(checkpoint, tcfg, expect_obs_dim=env.obs_dim)
    policy = GreedyPolicy(agents)
    stats, rows, planner_rows, _, meas_rows = run_policy_episode(
        env, policy, cfg.seed, collect_traces=True
    )
    os.makedirs(out_dir, exist_ok=True)
    by_t = {}
    for r in rows:
        by_t.setdefault(r[0], {})[r[1]] = r
    header = ["t", "usv_x", "usv_y"]
    for k in range(cfg.n_auvs):
        header += [f"auv{k}_x", f"auv{k}_y", f"auv{k}_x_hat", f"auv{k}_y_hat"]
    wide = []
    for t in sorted(by_t):
        rec = by_t[t]
        row = [t, rec[0][10], rec[0][11]]
        for k in range(cfg.n_auvs):
            row += [rec[k][2], rec[k][3], rec[k][4], rec[k][5]]
        wide.append(tuple(row))
    atomic_write_csv(os.path.join(out_dir, "trajectories.csv"), "trajectories", header, wide)
    atomic_write_csv(
        os.path.join(out_dir, "episode_trace.csv"), "episode-trace", TRACE_HEADER, rows
    )
    atomic_write_csv(
        os.path.join(out_dir, "planner_trace.csv"),
        "planner-trace",
        PLANNER_TRACE_HEADER,
        planner_rows,
    )
    atomic_write_csv(
        os.path.join(out_dir, "measurements.csv"),
        "usbl-measurements",
        MEASUREMENT_LOG_HEADER,
        meas_rows,
    )
    lines = [
        f"dumped one {stats['steps']}-step episode to {out_dir}",
        f"sdr={stats['sdr']:.4g} ec={stats['ec']:.4g} arps={stats['arps']:.4g} "
        f"rmse={stats['rmse']:.4g} m",
    ]
    return stats, lines
