#!/usr/bin/python
#
# Copyright 2026 The varskill Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Rolls out scripted collectors into an offline TrajectoryDataset."""
from typing import Any, Dict, List

import numpy as np

from dataset import trajectory_dataset
from envs import env_interface
from envs import scripted_policy
from utils import errors
from utils import logger

GENERATOR_VERSION = 1


def rollout_episode(
    env: env_interface.EnvInterface,
    policy: scripted_policy.ScriptedPolicy,
    rng: np.random.Generator,
    episode_index: int,
):
  """Returns (states, actions, return, success) for one episode."""
  state = env.reset(int(rng.integers(2**31 - 1)))
  policy.reset(rng, episode_index)
  states, actions, total_reward, success = [], [], 0.0, False
  done = False
  while not done:
    action = policy.act(state.observation)
    result = env.step(state, action)
    states.append(state.observation)
    actions.append(np.clip(action, -1.0, 1.0))
    total_reward += result.reward
    success = success or bool(result.info.get('success', False))
    state, done = result.state, result.done
  return np.array(states), np.array(actions), total_reward, success


def generate_dataset(
    env: env_interface.EnvInterface,
    episodes: int,
    noise: scripted_policy.NoiseProfile,
    seed: int,
    initial_skill_length: int = 10,
    min_skill_length: int = 4,
) -> trajectory_dataset.TrajectoryDataset:
  """Collects `episodes` scripted episodes; every H_t starts at 10.

  Episode i draws all of its randomness from child i of a SeedSequence rooted
  at `seed`, so equal arguments give bitwise-equal datasets.

  Raises:
    PreconditionError: episodes < 1.
    GenerationError: every episode was shorter than min_skill_length + 1.
  """
  if episodes < 1:
    raise errors.PreconditionError('episodes must be >= 1')
  policy = scripted_policy.ScriptedPolicy(env, noise)
  children = np.random.SeedSequence(seed).spawn(episodes)
  trajectories = []
  returns: List[float] = []
  successes: List[bool] = []
  dropped = 0
  for i, child in enumerate(children):
    states, actions, episode_return, success = rollout_episode(
        env, policy, np.random.default_rng(child), i
    )
    returns.append(float(episode_return))
    successes.append(bool(success))
    if len(states) < min_skill_length + 1:
      dropped += 1
      logger.Logger.get_instance().debug(
          'Dropping episode {} with {} steps'.format(i, len(states))
      )
      continue
    trajectories.append(
        trajectory_dataset.Trajectory(
            states, actions, initial_skill_length=initial_skill_length
        )
    )
  if not trajectories:
    raise errors.GenerationError(
        'all {} episodes were shorter than {} steps'.format(
            episodes, min_skill_length + 1
        )
    )
  metadata: Dict[str, Any] = {
      'seed': seed,
      'tier': noise.kind,
      'generator_version': GENERATOR_VERSION,
      'episodes_requested': episodes,
      'episode_returns': returns,
      'successes': successes,
      'dropped': dropped,
  }
  return trajectory_dataset.TrajectoryDataset(
      trajectories, env.spec.name, metadata
  )


def summarize(dataset: trajectory_dataset.TrajectoryDataset) -> Dict[str, Any]:
  successes = dataset.metadata.get('successes', [])
  return {
      'env': dataset.env_name,
      'tier': dataset.metadata.get('tier', ''),
      'episodes': len(dataset),
      'dropped': dataset.metadata.get('dropped', 0),
      'steps': dataset.total_steps,
      'goal_fraction': float(np.mean(successes)) if successes else 0.0,
  }
