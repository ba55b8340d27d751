"""Multi-AUV underwater data-collection task.

Each decision step: the surface vehicle replans and moves, pings every
AUV and inverts the phase measurements into position estimates, then the
AUVs execute their commanded velocities (advected by the vortex current),
collect data from seabed nodes in acoustic range, and receive rewards
balancing data rate, energy, collisions, and staying close to the USV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError, ContractError, InfeasibleGeometryError
from .fim import plan_usv_waypoint, step_usv
from .ocean import (
    CurrentSample,
    Vortex,
    VortexSet,
    ZERO_CURRENT,
    current_velocity,
    initial_wave_field,
    sample_eta,
    step_wave,
)
from .usbl import AuvTruth, UsvState, estimate_position, synthesize_measurement


def thorp_absorption_db_per_km(f_khz: float) -> float:
    """Seawater absorption coefficient (dB/km) at frequency f (kHz)."""
    f2 = f_khz * f_khz
    return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003


def snr_db(dist_m: float, tx_level_db: float, kappa: float, f_khz: float) -> float:
    """Received SNR (dB): source level minus spreading and absorption losses."""
    d = max(dist_m, 1.0)
    return tx_level_db - 10.0 * kappa * math.log10(d) - thorp_absorption_db_per_km(f_khz) * d * 1e-3


def link_rate(dist_m: float, tx_level_db: float, kappa: float, f_khz: float) -> float:
    """Spectral efficiency log2(1 + SNR) of one node uplink (bit/s per Hz)."""
    return math.log2(1.0 + 10.0 ** (snr_db(dist_m, tx_level_db, kappa, f_khz) / 10.0))


@dataclass
class SensorNode:
    """Seabed node with a queue of buffered data (bits) and a comm radius (m)."""

    x: float
    y: float
    queue: float
    q0: float
    comm_radius: float


@dataclass
class AuvAgentState:
    """Per-AUV simulation state; energy_used is cumulative over the episode."""

    x: float
    y: float
    z: float
    vx: float = 0.0
    vy: float = 0.0
    energy_used: float = 0.0
    current: CurrentSample = ZERO_CURRENT


@dataclass(frozen=True)
class Action:
    """Commanded heading (rad) and speed (m/s)."""

    heading: float
    speed: float


@dataclass
class StepOutcome:
    observations: list
    rewards: np.ndarray
    done: bool
    info: dict


TRACE_HEADER = [
    "t", "auv_id", "x", "y", "x_hat", "y_hat", "reward", "rate",
    "energy", "current_speed", "usv_x", "usv_y",
]


class DataCollectionEnv:
    """The data-collection MDP. One instance per logical worker; strictly sequential."""

    def __init__(self, cfg: ExperimentConfig):
        if cfg.n_auvs < 1:
            raise ConfigError("need at least one AUV")
        if cfg.n_nodes < 1:
            raise ConfigError("need at least one sensor node")
        self.cfg = cfg
        self.n_auvs = cfg.n_auvs
        self.area = cfg.area_size
        self.wave_cfg = cfg.wave_config()
        self.usbl_cfgs = [cfg.usbl_config(k) for k in range(cfg.n_auvs)]
        self.planner_cfg = cfg.planner_config()
        self.trace = None  # set to a list to record event ordering
        self.rng = None
        self._done = True
        # the surface evolves identically every episode (the initial tide +
        # seiche state is deterministic and nothing feeds back into it), so
        # stepped fields are memoized per instance and reused across episodes
        self._wave_states = []

    # --- episode lifecycle ---------------------------------------------------

    def reset(self, seed: int | None = None):
        """Start a fresh episode; deterministic per seed. Returns observations."""
        cfg = self.cfg
        self.rng = np.random.default_rng(cfg.seed if seed is None else seed)
        self.t = 0.0
        self.step_count = 0
        self._done = False
        xy = self.rng.uniform(0.0, self.area, (cfg.n_nodes, 2))
        q0 = self.rng.uniform(cfg.queue_init_min, cfg.queue_init_max, cfg.n_nodes)
        self.nodes = [
            SensorNode(x=xy[i, 0], y=xy[i, 1], queue=q0[i], q0=q0[i], comm_radius=cfg.comm_radius)
            for i in range(cfg.n_nodes)
        ]
        self.total_collected = 0.0
        self.auvs = []
        for k in range(self.n_auvs):
            self.auvs.append(
                AuvAgentState(
                    x=float(cfg.auv_start_x[k % len(cfg.auv_start_x)]),
                    y=float(cfg.auv_start_y[k % len(cfg.auv_start_y)]),
                    z=float(cfg.auv_depths[k % len(cfg.auv_depths)]),
                )
            )
        self.usv_xy = (self.area / 2.0, self.area / 2.0)
        if cfg.extreme:
            if not self._wave_states:
                self._wave_states.append(
                    initial_wave_field(self.wave_cfg, self.area, self.area, cfg.seiche_amplitude)
                )
            self.wave = self._wave_states[0]
            if cfg.vortex_x:
                self.vortices = VortexSet(
                    tuple(
                        Vortex(
                            cfg.vortex_x[i], cfg.vortex_y[i], cfg.vortex_gamma[i], cfg.vortex_delta[i]
                        )
                        for i in range(len(cfg.vortex_x))
                    )
                )
            else:
                self.vortices = VortexSet.random(
                    self.rng,
                    cfg.n_vortices,
                    self.area,
                    (cfg.vortex_gamma_min, cfg.vortex_gamma_max),
                    (cfg.vortex_delta_min, cfg.vortex_delta_max),
                )
        else:
            self.wave = None
            self.vortices = VortexSet()
        self.dropouts = 0
        self.estimates = [None] * self.n_auvs
        self._measure()  # seed the estimates before the first plan
        self.last_records = []
        return [self.observation(k) for k in range(self.n_auvs)]

    @property
    def usv_eta(self) -> float:
        if self.wave is None:
            return 0.0
        return sample_eta(self.wave, self.usv_xy[0], self.usv_xy[1])

    def _measure(self):
        """Ping every AUV and refresh position estimates; dropouts keep the old one."""
        usv = UsvState(self.usv_xy[0], self.usv_xy[1], self.usv_eta)
        self._last_meas = []
        for k, a in enumerate(self.auvs):
            truth = AuvTruth(a.x, a.y, a.z)
            meas = synthesize_measurement(usv, truth, self.usbl_cfgs[k], self.rng)
            self._last_meas.append(meas)
            try:
                est = estimate_position(meas, a.z, usv, self.usbl_cfgs[k])
            except InfeasibleGeometryError:
                self.dropouts += 1
                est = self.estimates[k] if self.estimates[k] is not None else (a.x, a.y)
            self.estimates[k] = est
        if self.trace is not None:
            self.trace.append("measure")

    def _plan_and_move_usv(self):
        cfg = self.cfg
        if cfg.usv_strategy == "fixed":
            plan_target = (cfg.usv_fixed_x, cfg.usv_fixed_y)
            det = 0.0
            degenerate = False
        else:
            ests = [(e[0], e[1], a.z) for e, a in zip(self.estimates, self.auvs)]
            # planning uses one nominal channel: the waypoint depends on the
            # shared geometry, and a per-channel frequency mix would skew the
            # determinant toward the strongest transmitter
            plan = plan_usv_waypoint(
                ests, self.usbl_cfgs[0], self.planner_cfg, current=self.usv_xy
            )
            plan_target, det, degenerate = plan.target, plan.det, plan.degenerate
        self.usv_xy = step_usv(
            self.usv_xy, plan_target, cfg.usv_vmax, cfg.dt, bounds=self.planner_cfg.bounds
        )
        if self.trace is not None:
            self.trace.append("plan")
        return plan_target, det, degenerate

    def step(self, actions) -> StepOutcome:
        cfg = self.cfg
        if self._done:
            raise ContractError("episode is done; call reset() first")
        if len(actions) != self.n_auvs:
            raise ContractError(f"expected {self.n_auvs} actions, got {len(actions)}")
        for a in actions:
            if not (math.isfinite(a.heading) and math.isfinite(a.speed)):
                raise ContractError("non-finite action")
            if a.speed < -1e-9 or a.speed > cfg.v_auv_max * (1.0 + 1e-9):
                raise ContractError(
                    f"speed {a.speed} outside [0, {cfg.v_auv_max}]"
                )

        # surface vehicle: replan, move, then ping the fleet from the new vantage
        plan_target, plan_det, degenerate = self._plan_and_move_usv()
        self._measure()
        meas_truth = [(a.x, a.y) for a in self.auvs]

        # underwater vehicles: commanded velocity plus local current, clamped to area
        step_energy = np.zeros(self.n_auvs)
        for k, (a, act) in enumerate(zip(self.auvs, actions)):
            speed = min(max(act.speed, 0.0), cfg.v_auv_max)
            cur = (
                current_velocity(self.vortices, (a.x, a.y)) if cfg.extreme else ZERO_CURRENT
            )
            a.current = cur
            a.vx = speed * math.cos(act.heading) + cur.vx
            a.vy = speed * math.sin(act.heading) + cur.vy
            a.x = min(max(a.x + a.vx * cfg.dt, 0.0), self.area)
            a.y = min(max(a.y + a.vy * cfg.dt, 0.0), self.area)
            step_energy[k] = cfg.c_energy * speed**3 * cfg.dt
            a.energy_used += step_energy[k]
        if self.trace is not None:
            self.trace.append("act")

        # data collection from nodes within range of each AUV's new position
        step_rate = np.zeros(self.n_auvs)
        for k, a in enumerate(self.auvs):
            for node in self.nodes:
                if node.queue <= 0.0:
                    continue
                dist = math.hypot(node.x - a.x, node.y - a.y)
                if dist > node.comm_radius:
                    continue
                rate = link_rate(
                    dist, cfg.tx_level_db, cfg.spreading_exponent, cfg.acoustic_freq_khz
                )
                got = min(rate * cfg.dt, node.queue)
                node.queue -= got
                self.total_collected += got
                step_rate[k] += got / cfg.dt

        # collisions: another AUV or the area boundary within the collision radius
        collided = np.zeros(self.n_auvs, dtype=bool)
        for k, a in enumerate(self.auvs):
            if (
                min(a.x, a.y, self.area - a.x, self.area - a.y)
                < cfg.collision_radius
            ):
                collided[k] = True
        for i in range(self.n_auvs):
            for j in range(i + 1, self.n_auvs):
                d = math.hypot(
                    self.auvs[i].x - self.auvs[j].x, self.auvs[i].y - self.auvs[j].y
                )
                if d < cfg.collision_radius:
                    collided[i] = True
                    collided[j] = True

        rewards = np.zeros(self.n_auvs)
        for k in range(self.n_auvs):
            rewards[k] = self.base_reward(
                k, step_rate[k], step_energy[k], bool(collided[k])
            ) + cfg.w_usv * self.usv_distance_reward(k)

        # sea surface evolves over the interval; clock advances
        if self.wave is not None:
            if len(self._wave_states) <= self.step_count + 1:
                self._wave_states.append(
                    step_wave(self._wave_states[self.step_count], self.wave_cfg, cfg.dt)
                )
            self.wave = self._wave_states[self.step_count + 1]
        self.t += cfg.dt
        self.step_count += 1

        queues_empty = all(n.queue <= 0.0 for n in self.nodes)
        self._done = self.step_count >= cfg.episode_steps or queues_empty

        info = {
            "sum_rate": float(np.sum(step_rate)),
            "rate": step_rate.copy(),
            "energy": float(np.sum(step_energy)),
            "collisions": int(np.count_nonzero(collided)),
            "dropouts": self.dropouts,
            "usv_x": self.usv_xy[0],
            "usv_y": self.usv_xy[1],
            "planner_target": plan_target,
            "planner_det": plan_det,
            "planner_degenerate": degenerate,
            "current_speeds": np.array([a.current.speed for a in self.auvs]),
        }
        self.last_records = [
            (
                self.t - cfg.dt,
                k,
                meas_truth[k][0],
                meas_truth[k][1],
                self.estimates[k][0],
                self.estimates[k][1],
                float(rewards[k]),
                float(step_rate[k]),
                float(step_energy[k]),
                self.auvs[k].current.speed,
                self.usv_xy[0],
                self.usv_xy[1],
            )
            for k in range(self.n_auvs)
        ]
        return StepOutcome(
            observations=[self.observation(k) for k in range(self.n_auvs)],
            rewards=rewards,
            done=self._done,
            info=info,
        )

    # --- per-AUV views -------------------------------------------------------

    @property
    def obs_dim(self) -> int:
        return 2 + 3 * self.cfg.k_nearest_nodes + 2 * (self.n_auvs - 1) + 2 + 1

    def observation(self, k: int) -> np.ndarray:
        """State vector of AUV k.

        [own position / area,
         for the K nearest nodes: relative position / area and queue fill,
         other AUVs' relative positions / area,
         USV relative position / area,
         perceived current magnitude]  -- the last element is exactly the
        norm of the local current velocity.
        """
        cfg = self.cfg
        a = self.auvs[k]
        area = self.area
        parts = [a.x / area, a.y / area]
        order = sorted(
            range(len(self.nodes)),
            key=lambda i: (
                math.hypot(self.nodes[i].x - a.x, self.nodes[i].y - a.y),
                i,
            ),
        )
        for i in order[: cfg.k_nearest_nodes]:
            n = self.nodes[i]
            parts.extend(((n.x - a.x) / area, (n.y - a.y) / area, n.queue / n.q0))
        for _ in range(cfg.k_nearest_nodes - len(self.nodes)):
            parts.extend((0.0, 0.0, 0.0))
        for j in range(self.n_auvs):
            if j == k:
                continue
            parts.extend(((self.auvs[j].x - a.x) / area, (self.auvs[j].y - a.y) / area))
        parts.extend(((self.usv_xy[0] - a.x) / area, (self.usv_xy[1] - a.y) / area))
        cur = current_velocity(self.vortices, (a.x, a.y)) if cfg.extreme else ZERO_CURRENT
        parts.append(cur.speed)
        return np.array(parts, dtype=float)

    def usv_distance_reward(self, k: int) -> float:
        """Proximity shaping l_max / l with l the (estimated) horizontal
        distance to the USV, clamped below at the floor distance."""
        e = self.estimates[k]
        l = math.hypot(e[0] - self.usv_xy[0], e[1] - self.usv_xy[1])
        l = max(l, self.cfg.usv_reward_floor_dist)
        return self.cfg.l_max / l

    def base_reward(self, k: int, step_rate: float, step_energy: float, collided: bool):
        """Task reward without the USV-proximity shaping term: weighted data
        rate minus propulsion energy minus the collision penalty."""
        cfg = self.cfg
        return (
            cfg.w_rate * step_rate
            - cfg.w_energy * step_energy
            - cfg.w_coll * (1.0 if collided else 0.0)
        )

    def positioning_errors(self) -> np.ndarray:
        """Horizontal estimate errors against truth at the last measurement."""
        return np.array([math.hypot(r[4] - r[2], r[5] - r[3]) for r in self.last_records])
