"""Experiment configuration: one flat, human-editable key-value file.

Syntax is a flat subset of TOML: `key = value` lines, `#` comments,
quoted strings, booleans, numbers, and comma-separated number lists.
Unknown keys are hard errors (a silent typo in a physics constant is the
costliest failure mode here). Any key can be overridden by an
environment variable named USVAUV_<KEY IN UPPER CASE>.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .fim import PlannerConfig
from .ocean import WaveConfig
from .usbl import UsblConfig

ENV_PREFIX = "USVAUV_"


@dataclass
class ExperimentConfig:
    # run
    sea_condition: str = "extreme"  # "ideal" or "extreme"
    seed: int = 0
    output_dir: str = "runs"
    # mission area and task
    area_size: float = 200.0
    n_auvs: int = 2
    n_nodes: int = 30
    episode_steps: int = 100
    dt: float = 10.0
    auv_depths: tuple = (100.0, 110.0)
    auv_start_x: tuple = (50.0, 150.0)
    auv_start_y: tuple = (50.0, 150.0)
    v_auv_max: float = 2.0
    comm_radius: float = 25.0
    collision_radius: float = 5.0
    # reward weights and channel constants
    w_rate: float = 1.0
    w_energy: float = 0.05
    w_coll: float = 10.0
    w_usv: float = 0.1
    c_energy: float = 1.0
    spreading_exponent: float = 1.5
    tx_level_db: float = 120.0
    acoustic_freq_khz: float = 20.0
    queue_init_min: float = 2000.0
    queue_init_max: float = 6000.0
    k_nearest_nodes: int = 5
    usv_reward_max_dist: float = 0.0  # 0 = auto: mission-area diagonal
    usv_reward_floor_dist: float = 1.0
    # usbl
    usbl_freq_hz: tuple = (15000.0, 18000.0)
    usbl_spacing: float = 0.033
    sound_speed: float = 1500.0
    phase_noise_std: float = 0.01
    # surface waves
    wave_depth: float = 120.0
    gravity: float = 9.81
    wave_omega: float = 2.0 * math.pi / 43200.0
    wave_amplitude: float = 5.0
    offshore_length: float = 200.0
    wave_dx: float = 4.0
    seiche_amplitude: float = 1.0
    # vortices (explicit lists override the seeded-random draw)
    n_vortices: int = 3
    vortex_gamma_min: float = 5.0
    vortex_gamma_max: float = 20.0
    vortex_delta_min: float = 10.0
    vortex_delta_max: float = 30.0
    vortex_x: tuple = ()
    vortex_y: tuple = ()
    vortex_gamma: tuple = ()
    vortex_delta: tuple = ()
    # usv planning
    planner_grid_res: float = 5.0
    planner_refine_iters: int = 20
    planner_refine_step: float = 0.25
    usv_vmax: float = 5.0
    usv_strategy: str = "fim"  # "fim" or "fixed"
    usv_fixed_x: float = 100.0
    usv_fixed_y: float = 100.0
    # learning
    algorithm: str = "ddpg"  # "ddpg" or "sac"
    gamma: float = 0.99
    tau: float = 0.005
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 100000
    warmup_steps: int = 1000
    exploration_noise: float = 0.2  # std on the unit-normalized action
    epochs: int = 300
    hidden_size: int = 128
    optimizer: str = "adam"  # "adam" or "sgd" (momentum)
    momentum: float = 0.9
    reward_scale: float = 0.02
    grad_clip: float = 10.0  # 0 disables
    sac_alpha: float = 0.2
    eval_episodes: int = 20

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.sea_condition not in ("ideal", "extreme"):
            raise ConfigError(f"sea_condition must be ideal or extreme, got {self.sea_condition!r}")
        if self.usv_strategy not in ("fim", "fixed"):
            raise ConfigError(f"usv_strategy must be fim or fixed, got {self.usv_strategy!r}")
        if self.algorithm not in ("ddpg", "sac"):
            raise ConfigError(f"algorithm must be ddpg or sac, got {self.algorithm!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.n_auvs < 1:
            raise ConfigError("need at least one AUV")
        if self.n_nodes < 1:
            raise ConfigError("need at least one sensor node")
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError("gamma must lie in (0, 1)")
        if not (0.0 < self.tau <= 1.0):
            raise ConfigError("tau must lie in (0, 1]")
        explicit = (self.vortex_x, self.vortex_y, self.vortex_gamma, self.vortex_delta)
        lens = {len(t) for t in explicit}
        if lens != {0} and (len(lens) != 1 or 0 in lens):
            raise ConfigError("vortex_x/y/gamma/delta must all be given and equal length")

    # --- derived sub-configs -------------------------------------------------

    @property
    def extreme(self) -> bool:
        return self.sea_condition == "extreme"

    @property
    def l_max(self) -> float:
        if self.usv_reward_max_dist > 0:
            return self.usv_reward_max_dist
        return math.hypot(self.area_size, self.area_size)

    def wave_config(self) -> WaveConfig:
        return WaveConfig(
            h=self.wave_depth,
            g=self.gravity,
            omega=self.wave_omega,
            eta0=self.wave_amplitude,
            L=self.offshore_length,
            dx=self.wave_dx,
        )

    def usbl_config(self, k: int) -> UsblConfig:
        freqs = self.usbl_freq_hz or (15000.0,)
        return UsblConfig(
            f=float(freqs[k % len(freqs)]),
            d=self.usbl_spacing,
            c=self.sound_speed,
            sigma=self.phase_noise_std,
        )

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(
            grid_resolution=self.planner_grid_res,
            refine_iters=self.planner_refine_iters,
            refine_step=self.planner_refine_step,
            usv_vmax=self.usv_vmax,
            bounds=(0.0, 0.0, self.area_size, self.area_size),
        )

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _parse_scalar(name: str, text: str):
    text = text.strip()
    f = _FIELDS[name]
    if f.type in ("tuple", tuple) or isinstance(f.default, tuple):
        if text in ("", "()"):
            return ()
        return tuple(float(p) for p in text.split(",") if p.strip())
    if isinstance(f.default, bool):
        if text.lower() in ("true", "1"):
            return True
        if text.lower() in ("false", "0"):
            return False
        raise ConfigError(f"bad boolean for {name}: {text!r}")
    if isinstance(f.default, int):
        return int(text)
    if isinstance(f.default, float):
        return float(text)
    if text and text[0] in "\"'" and text[-1] == text[0]:
        text = text[1:-1]
    return text


def parse_config_text(text: str, apply_env: bool = True) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_scalar(key, val)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from e
    if apply_env:
        for key in _FIELDS:
            env = os.environ.get(ENV_PREFIX + key.upper())
            if env is not None:
                try:
                    values[key] = _parse_scalar(key, env)
                except (ValueError, TypeError) as e:
                    raise ConfigError(f"bad env override for {key}: {e}") from e
    try:
        return ExperimentConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path: str | None, apply_env: bool = True, **overrides) -> ExperimentConfig:
    """Parse a config file (or defaults when path is None) plus CLI overrides."""
    if path is None:
        cfg = parse_config_text("", apply_env=apply_env)
    else:
        try:
            with open(path) as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        cfg = parse_config_text(text, apply_env=apply_env)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        cfg = cfg.replace(**overrides)
        cfg.validate()
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text with every key materialized (round-trips through parse)."""
    lines = ["# usv-auv-sim experiment config v1"]
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            text = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, float):
            text = repr(v)  # shortest exact round-trip form
        elif isinstance(v, str):
            text = f'"{v}"'
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
