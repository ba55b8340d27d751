#!/usr/bin/env python3
"""Learning walkthrough on a reduced task: a short training run under
extreme sea conditions, then a paired greedy-vs-random evaluation. The
full-scale experiment lives behind `usv-auv-sim train`; this script keeps
the same machinery at desk scale (a couple of minutes).
"""

import time

import numpy as np

from usv_auv_sim.config import ExperimentConfig
from usv_auv_sim.experiments import GreedyPolicy, RandomPolicy, run_policy_episode
from usv_auv_sim.rl import TrainConfig, epoch_seed_sequence, train
from usv_auv_sim.task import DataCollectionEnv

cfg = ExperimentConfig(seed=1, epochs=60, warmup_steps=600)
env = DataCollectionEnv(cfg)
print(f"task: {cfg.n_auvs} AUVs, {cfg.n_nodes} nodes, {cfg.episode_steps}-step episodes, "
      f"{cfg.sea_condition} sea; observation dim {env.obs_dim}")

t0 = time.time()
last = [0]
def progress(e, m):
    if e % 10 == 0 or e == cfg.epochs - 1:
        print(f"  epoch {e:3d}: sdr {m.sdr:7.2f}  ec {m.ec:8.1f}  arps {m.arps:8.2f}"
              f"   ({time.time() - t0:5.1f}s)")

agents, metrics = train(env, TrainConfig.from_experiment(cfg), cfg.seed, progress=progress)
arps = [m.arps for m in metrics]
print(f"\nARPS first-10 mean {np.mean(arps[:10]):.2f} -> last-10 mean {np.mean(arps[-10:]):.2f}")

seeds = epoch_seed_sequence(555, 10)
trained, rand = [], []
for i in range(10):
    s, *_ = run_policy_episode(env, GreedyPolicy(agents), int(seeds[i]))
    trained.append(s["arps"])
    s, *_ = run_policy_episode(env, RandomPolicy(900 + i), int(seeds[i]))
    rand.append(s["arps"])
print(f"greedy policy ARPS {np.mean(trained):.2f} vs random baseline {np.mean(rand):.2f} "
      f"over 10 paired episodes")
