"""Actor-critic learners and the per-AUV independent training loop.

Replay, networks and updates are all local numpy code: a deterministic
policy learner (target networks, Polyak smoothing, exploration noise)
and a maximum-entropy variant (twin critics, tanh-squashed Gaussian
policy, fixed temperature). Every gradient is hand-derived and checked
against finite differences in the test suite.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import os
import tempfile
import zipfile
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InsufficientDataError, TrainingDivergenceError
from .nets import (
    clip_grads,
    clone_params,
    init_mlp,
    make_optimizer,
    mlp_backward,
    mlp_forward,
    polyak_update,
)

LOG2PI = math.log(2.0 * math.pi)
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6


@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    done: bool


@dataclass
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.005
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    batch_size: int = 64
    exploration_noise: float = 0.2
    epochs: int = 300
    algorithm: str = "ddpg"
    hidden: int = 128
    buffer_capacity: int = 100000
    warmup_steps: int = 1000
    update_every: int = 1
    optimizer: str = "adam"
    momentum: float = 0.9
    reward_scale: float = 0.02
    grad_clip: float = 10.0
    sac_alpha: float = 0.2

    @classmethod
    def from_experiment(cls, cfg) -> "TrainConfig":
        return cls(
            gamma=cfg.gamma,
            tau=cfg.tau,
            lr_actor=cfg.lr_actor,
            lr_critic=cfg.lr_critic,
            batch_size=cfg.batch_size,
            exploration_noise=cfg.exploration_noise,
            epochs=cfg.epochs,
            algorithm=cfg.algorithm,
            hidden=cfg.hidden_size,
            buffer_capacity=cfg.buffer_capacity,
            warmup_steps=cfg.warmup_steps,
            optimizer=cfg.optimizer,
            momentum=cfg.momentum,
            reward_scale=cfg.reward_scale,
            grad_clip=cfg.grad_clip,
            sac_alpha=cfg.sac_alpha,
        )


class ReplayBuffer:
    """Ring storage of transitions with FIFO eviction and uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self._head = 0

    def __len__(self) -> int:
        return self.size

    def push(self, s, a=None, r=None, s_next=None, done=None):
        if isinstance(s, Transition):
            s, a, r, s_next, done = s.s, s.a, s.r, s.s_next, s.done
        s = np.asarray(s, dtype=float)
        a = np.asarray(a, dtype=float)
        s_next = np.asarray(s_next, dtype=float)
        if not (
            np.all(np.isfinite(s))
            and np.all(np.isfinite(a))
            and math.isfinite(r)
            and np.all(np.isfinite(s_next))
        ):
            raise ContractError("non-finite transition rejected")
        i = self._head
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.done[i] = 1.0 if done else 0.0
        self._head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> dict:
        """Uniform with replacement; deterministic for a fixed generator state."""
        if self.size < n:
            raise InsufficientDataError(f"buffer holds {self.size} < batch {n}")
        idx = rng.integers(0, self.size, n)
        return {
            "s": self.s[idx],
            "a": self.a[idx],
            "r": self.r[idx],
            "s_next": self.s_next[idx],
            "done": self.done[idx],
        }


class DdpgAgent:
    """Deterministic-policy learner for one AUV (unit-normalized actions)."""

    algorithm = "ddpg"

    def __init__(self, obs_dim: int, act_dim: int, cfg: TrainConfig, seed: int):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.rng = np.random.default_rng(seed)
        h = cfg.hidden
        self.actor = init_mlp([obs_dim, h, h, act_dim], self.rng)
        self.critic = init_mlp([obs_dim + act_dim, h, h, 1], self.rng)
        self.actor_target = clone_params(self.actor)
        self.critic_target = clone_params(self.critic)
        self.opt_actor = make_optimizer(cfg.optimizer, self.actor, cfg.lr_actor, cfg.momentum)
        self.opt_critic = make_optimizer(cfg.optimizer, self.critic, cfg.lr_critic, cfg.momentum)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_dim, act_dim)
        self.updates = 0

    # --- acting ----------------------------------------------------------------

    def act(self, obs, explore: bool = False) -> np.ndarray:
        a, _ = mlp_forward(self.actor, obs, out_act="tanh")
        a = a[0]
        if explore:
            a = a + self.rng.normal(0.0, self.cfg.exploration_noise, self.act_dim)
        return np.clip(a, -1.0, 1.0)

    def act_warmup(self) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, self.act_dim)

    # --- updates ---------------------------------------------------------------

    def critic_target_values(self, batch) -> np.ndarray:
        """Bootstrap target r + gamma (1 - done) Q'(s', mu'(s'))."""
        cfg = self.cfg
        a_next, _ = mlp_forward(self.actor_target, batch["s_next"], out_act="tanh")
        q_next, _ = mlp_forward(
            self.critic_target, np.concatenate([batch["s_next"], a_next], axis=1)
        )
        r = cfg.reward_scale * batch["r"][:, None]
        return r + cfg.gamma * (1.0 - batch["done"][:, None]) * q_next

    def critic_loss_grads(self, batch, y: np.ndarray):
        """Mean squared error of Q(s, a) against a fixed target column y."""
        x = np.concatenate([batch["s"], batch["a"]], axis=1)
        q, cache = mlp_forward(self.critic, x)
        err = q - y
        loss = float(np.mean(err**2))
        grads, _ = mlp_backward(self.critic, cache, 2.0 * err / err.shape[0])
        return loss, grads

    def actor_loss_grads(self, batch):
        """Loss -mean Q(s, mu(s)); the chain rule runs through the critic input."""
        a, a_cache = mlp_forward(self.actor, batch["s"], out_act="tanh")
        x = np.concatenate([batch["s"], a], axis=1)
        q, q_cache = mlp_forward(self.critic, x)
        loss = float(-np.mean(q))
        n = q.shape[0]
        _, dx = mlp_backward(self.critic, q_cache, np.full_like(q, -1.0 / n))
        da = dx[:, self.obs_dim :]
        grads, _ = mlp_backward(self.actor, a_cache, da)
        return loss, grads

    def update_critic(self, batch) -> float:
        loss, grads = self.critic_loss_grads(batch, self.critic_target_values(batch))
        self._check_finite(loss, "critic")
        clip_grads(grads, self.cfg.grad_clip)
        self.opt_critic.step(self.critic, grads)
        return loss

    def update_actor(self, batch) -> float:
        loss, grads = self.actor_loss_grads(batch)
        self._check_finite(loss, "actor")
        clip_grads(grads, self.cfg.grad_clip)
        self.opt_actor.step(self.actor, grads)
        return loss

    def update(self, batch) -> dict:
        with np.errstate(over="ignore", invalid="ignore"):
            critic_loss = self.update_critic(batch)
            actor_loss = self.update_actor(batch)
        polyak_update(self.critic_target, self.critic, self.cfg.tau)
        polyak_update(self.actor_target, self.actor, self.cfg.tau)
        self.updates += 1
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}

    def _check_finite(self, loss: float, which: str):
        if not math.isfinite(loss):
            raise TrainingDivergenceError(
                f"non-finite {which} loss after {self.updates} updates",
                context={"updates": self.updates, "which": which},
            )

    # --- persistence -----------------------------------------------------------

    def param_arrays(self) -> dict:
        out = {}
        for name, params in (("actor", self.actor), ("critic", self.critic)):
            for i, (w, b) in enumerate(params):
                out[f"{name}_w{i}"] = w
                out[f"{name}_b{i}"] = b
        return out

    def load_param_arrays(self, arrays: dict):
        for name, params in (("actor", self.actor), ("critic", self.critic)):
            for i, pair in enumerate(params):
                pair[0][...] = arrays[f"{name}_w{i}"]
                pair[1][...] = arrays[f"{name}_b{i}"]
        self.actor_target = clone_params(self.actor)
        self.critic_target = clone_params(self.critic)


def _squash_log_prob(a: np.ndarray, eps: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log density of a tanh-squashed Gaussian sample, per row."""
    per_dim = -0.5 * eps**2 - log_std - 0.5 * LOG2PI - np.log(1.0 - a**2 + SQUASH_EPS)
    return per_dim.sum(axis=1, keepdims=True)


class SacAgent:
    """Maximum-entropy learner: twin critics and a stochastic squashed policy."""

    algorithm = "sac"

    def __init__(self, obs_dim: int, act_dim: int, cfg: TrainConfig, seed: int):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.rng = np.random.default_rng(seed)
        h = cfg.hidden
        self.actor = init_mlp([obs_dim, h, h, 2 * act_dim], self.rng)
        self.critic1 = init_mlp([obs_dim + act_dim, h, h, 1], self.rng)
        self.critic2 = init_mlp([obs_dim + act_dim, h, h, 1], self.rng)
        self.critic1_target = clone_params(self.critic1)
        self.critic2_target = clone_params(self.critic2)
        self.opt_actor = make_optimizer(cfg.optimizer, self.actor, cfg.lr_actor, cfg.momentum)
        self.opt_critic1 = make_optimizer(cfg.optimizer, self.critic1, cfg.lr_critic, cfg.momentum)
        self.opt_critic2 = make_optimizer(cfg.optimizer, self.critic2, cfg.lr_critic, cfg.momentum)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_dim, act_dim)
        self.updates = 0

    # --- policy ----------------------------------------------------------------

    def _policy_forward(self, obs):
        out, cache = mlp_forward(self.actor, obs)
        mu = out[:, : self.act_dim]
        raw = out[:, self.act_dim :]
        t = np.tanh(raw)
        log_std = LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (t + 1.0)
        return mu, raw, t, log_std, cache

    def sample_action(self, obs, eps):
        """Squashed sample a = tanh(mu + std * eps) and its log probability."""
        mu, raw, t, log_std, cache = self._policy_forward(np.atleast_2d(obs))
        std = np.exp(log_std)
        u = mu + std * eps
        a = np.tanh(u)
        logp = _squash_log_prob(a, eps, log_std)
        return a, logp, (mu, raw, t, log_std, std, eps, a, cache)

    def act(self, obs, explore: bool = False) -> np.ndarray:
        if explore:
            eps = self.rng.normal(0.0, 1.0, (1, self.act_dim))
            a, _, _ = self.sample_action(obs, eps)
            return a[0]
        mu, _, _, _, _ = self._policy_forward(np.atleast_2d(obs))
        return np.tanh(mu[0])

    def act_warmup(self) -> np.ndarray:
        return self.rng.uniform(-1.0, 1.0, self.act_dim)

    # --- updates ---------------------------------------------------------------

    def critic_target_values(self, batch, eps_next) -> np.ndarray:
        """r + gamma (1 - done) (min_i Q_i'(s', a') - alpha log pi(a'|s'))."""
        cfg = self.cfg
        a_next, logp_next, _ = self.sample_action(batch["s_next"], eps_next)
        x = np.concatenate([batch["s_next"], a_next], axis=1)
        q1, _ = mlp_forward(self.critic1_target, x)
        q2, _ = mlp_forward(self.critic2_target, x)
        q_min = np.minimum(q1, q2)
        r = cfg.reward_scale * batch["r"][:, None]
        return r + cfg.gamma * (1.0 - batch["done"][:, None]) * (
            q_min - cfg.sac_alpha * logp_next
        )

    def critic_loss_grads(self, batch, y: np.ndarray, which: int):
        critic = self.critic1 if which == 1 else self.critic2
        x = np.concatenate([batch["s"], batch["a"]], axis=1)
        q, cache = mlp_forward(critic, x)
        err = q - y
        loss = float(np.mean(err**2))
        grads, _ = mlp_backward(critic, cache, 2.0 * err / err.shape[0])
        return loss, grads

    def update_critics(self, batch, eps_next) -> float:
        y = self.critic_target_values(batch, eps_next)
        loss = 0.0
        for which, critic, opt in (
            (1, self.critic1, self.opt_critic1),
            (2, self.critic2, self.opt_critic2),
        ):
            l, grads = self.critic_loss_grads(batch, y, which)
            loss += l
            clip_grads(grads, self.cfg.grad_clip)
            opt.step(critic, grads)
        self._check_finite(loss, "critic")
        return loss

    def actor_loss_and_grads(self, s, eps):
        """Loss mean(alpha log pi - min_i Q_i(s, a)) and actor gradients."""
        cfg = self.cfg
        a, logp, ctx = self.sample_action(s, eps)
        mu, raw, t, log_std, std, eps, a, cache = ctx
        n = a.shape[0]
        x = np.concatenate([s, a], axis=1)
        q1, c1 = mlp_forward(self.critic1, x)
        q2, c2 = mlp_forward(self.critic2, x)
        q_min = np.minimum(q1, q2)
        loss = float(np.mean(cfg.sac_alpha * logp - q_min))
        # gradient through the critic minimum, action slice only
        m1 = (q1 <= q2).astype(float)
        _, dx1 = mlp_backward(self.critic1, c1, -m1 / n)
        _, dx2 = mlp_backward(self.critic2, c2, -(1.0 - m1) / n)
        da = dx1[:, self.obs_dim :] + dx2[:, self.obs_dim :]
        # gradient of the entropy term: alpha/n per row through log pi
        dlogp = cfg.sac_alpha / n
        da_total = da + dlogp * 2.0 * a / (1.0 - a**2 + SQUASH_EPS)
        du = da_total * (1.0 - a**2)
        dmu = du
        dlog_std = du * std * eps - dlogp
        draw = dlog_std * 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (1.0 - t**2)
        dout = np.concatenate([dmu, draw], axis=1)
        grads, _ = mlp_backward(self.actor, cache, dout)
        return loss, grads

    def update_actor(self, batch, eps) -> float:
        loss, grads = self.actor_loss_and_grads(batch["s"], eps)
        self._check_finite(loss, "actor")
        clip_grads(grads, self.cfg.grad_clip)
        self.opt_actor.step(self.actor, grads)
        return loss

    def update(self, batch) -> dict:
        n = batch["s"].shape[0]
        eps_next = self.rng.normal(0.0, 1.0, (n, self.act_dim))
        with np.errstate(over="ignore", invalid="ignore"):
            critic_loss = self.update_critics(batch, eps_next)
            eps = self.rng.normal(0.0, 1.0, (n, self.act_dim))
            actor_loss = self.update_actor(batch, eps)
        polyak_update(self.critic1_target, self.critic1, self.cfg.tau)
        polyak_update(self.critic2_target, self.critic2, self.cfg.tau)
        self.updates += 1
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}

    def _check_finite(self, loss: float, which: str):
        if not math.isfinite(loss):
            raise TrainingDivergenceError(
                f"non-finite {which} loss after {self.updates} updates",
                context={"updates": self.updates, "which": which},
            )

    # --- persistence -----------------------------------------------------------

    def param_arrays(self) -> dict:
        out = {}
        nets = (("actor", self.actor), ("critic1", self.critic1), ("critic2", self.critic2))
        for name, params in nets:
            for i, (w, b) in enumerate(params):
                out[f"{name}_w{i}"] = w
                out[f"{name}_b{i}"] = b
        return out

    def load_param_arrays(self, arrays: dict):
        nets = (("actor", self.actor), ("critic1", self.critic1), ("critic2", self.critic2))
        for name, params in nets:
            for i, pair in enumerate(params):
                pair[0][...] = arrays[f"{name}_w{i}"]
                pair[1][...] = arrays[f"{name}_b{i}"]
        self.critic1_target = clone_params(self.critic1)
        self.critic2_target = clone_params(self.critic2)


def make_agent(algorithm: str, obs_dim: int, act_dim: int, cfg: TrainConfig, seed: int):
    if algorithm == "ddpg":
        return DdpgAgent(obs_dim, act_dim, cfg, seed)
    if algorithm == "sac":
        return SacAgent(obs_dim, act_dim, cfg, seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def to_env_action(a_norm: np.ndarray, v_max: float):
    """Map a unit-normalized action to (heading, speed)."""
    from .task import Action

    heading = math.pi * float(a_norm[0])
    speed = v_max * (float(a_norm[1]) + 1.0) / 2.0
    return Action(heading=heading, speed=speed)


@dataclass
class EpochMetrics:
    epoch: int
    sdr: float  # mean per-step sum data rate
    ec: float  # total propulsion energy over the episode
    arps: float  # mean per-step total reward across AUVs


def epoch_seed_sequence(base_seed: int, n: int) -> np.ndarray:
    return np.random.default_rng(base_seed).integers(0, 2**63 - 1, n)


def run_training_episode(env, agents, seed: int, learn: bool, trace=None):
    """One episode following the per-step ordering: plan/measure (inside the
    environment step), act, then per AUV update-if-due and store."""
    cfg = agents[0].cfg
    obs = env.reset(seed)
    rates = []
    rewards = []
    energy = 0.0
    done = False
    while not done:
        a_norm = []
        for agent, o in zip(agents, obs):
            if learn and len(agent.buffer) < cfg.warmup_steps:
                a_norm.append(agent.act_warmup())
            else:
                a_norm.append(agent.act(o, explore=learn))
        actions = [to_env_action(a, env.cfg.v_auv_max) for a in a_norm]
        out = env.step(actions)
        if learn:
            for k, agent in enumerate(agents):
                ready = (
                    len(agent.buffer) >= max(cfg.warmup_steps, cfg.batch_size)
                    and env.step_count % cfg.update_every == 0
                )
                if ready:
                    agent.update(agent.buffer.sample(cfg.batch_size, agent.rng))
                    if trace is not None:
                        trace.append(f"update:{k}")
                agent.buffer.push(obs[k], a_norm[k], float(out.rewards[k]), out.observations[k], out.done)
                if trace is not None:
                    trace.append(f"store:{k}")
        rates.append(out.info["sum_rate"])
        rewards.append(float(np.sum(out.rewards)))
        energy += out.info["energy"]
        obs = out.observations
        done = out.done
    return {
        "sdr": float(np.mean(rates)),
        "sdr_total": float(np.sum(rates)),
        "ec": energy,
        "arps": float(np.mean(rewards)),
        "steps": len(rates),
    }


def train(env, cfg: TrainConfig, base_seed: int, trace=None, progress=None):
    """Run the full training schedule; returns (agents, per-epoch metrics)."""
    obs_dim = env.obs_dim
    act_dim = 2
    agents = [
        make_agent(cfg.algorithm, obs_dim, act_dim, cfg, base_seed + 1000 + k)
        for k in range(env.n_auvs)
    ]
    seeds = epoch_seed_sequence(base_seed, cfg.epochs)
    metrics = []
    for e in range(cfg.epochs):
        try:
            stats = run_training_episode(env, agents, int(seeds[e]), learn=True, trace=trace)
        except TrainingDivergenceError as err:
            err.context["epoch"] = e
            raise
        metrics.append(EpochMetrics(epoch=e, sdr=stats["sdr"], ec=stats["ec"], arps=stats["arps"]))
        if progress is not None:
            progress(e, metrics[-1])
    return agents, metrics


# --- checkpoints ----------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path: str, agents, meta: dict):
    """Write agent parameters and metadata as a deterministic zip of .npy files.

    Entry timestamps are fixed so identical contents give identical bytes;
    the archive remains loadable with numpy's standard loader.
    """
    meta = dict(meta)
    meta["version"] = CHECKPOINT_VERSION
    meta["algorithm"] = agents[0].algorithm
    meta["n_agents"] = len(agents)
    meta["obs_dim"] = agents[0].obs_dim
    meta["act_dim"] = agents[0].act_dim
    meta["hidden"] = agents[0].cfg.hidden
    meta["activation"] = "relu+tanh"
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    for k, agent in enumerate(agents):
        for name, arr in agent.param_arrays().items():
            arrays[f"agent{k}_{name}"] = arr
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            payload = io.BytesIO()
            np.lib.format.write_array(payload, np.ascontiguousarray(arrays[name]))
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, payload.getvalue())
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    with os.fdopen(fd, "wb") as f:
        f.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path: str):
    """Returns (meta dict, {agent index: {param name: array}})."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        agents = {}
        for key in data.files:
            if key == "meta":
                continue
            agent_tag, name = key.split("_", 1)
            k = int(agent_tag.removeprefix("agent"))
            agents.setdefault(k, {})[name] = data[key]
    return meta, agents


def restore_agents(path: str, cfg: TrainConfig, expect_obs_dim: int | None = None):
    """Rebuild greedy-ready agents from a checkpoint; validates dimensions."""
    meta, arrays = load_checkpoint(path)
    if expect_obs_dim is not None and meta["obs_dim"] != expect_obs_dim:
        raise ContractError(
            f"checkpoint observation dim {meta['obs_dim']} != environment {expect_obs_dim}"
        )
    cfg = dataclasses.replace(cfg, hidden=meta["hidden"], algorithm=meta["algorithm"])
    agents = []
    for k in range(meta["n_agents"]):
        agent = make_agent(meta["algorithm"], meta["obs_dim"], meta["act_dim"], cfg, seed=k)
        agent.load_param_arrays(arrays[k])
        agents.append(agent)
    return meta, agents
