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

"""Noisy scripted data collectors for the dataset tiers.

Episodes are cut into blocks of 5-20 steps. An expert block follows the
environment's scripted controller plus Gaussian action noise; a random block
is a random walk: it starts from a uniformly drawn action and adds Gaussian
steps of walk_step_std, clipped to the action bounds. The tier decides how
often random blocks occur.
"""
from typing import NamedTuple, Optional, Tuple

import numpy as np

from envs import env_interface
from utils import errors

TIERS = ('expert', 'mixed', 'replay')


class NoiseProfile(NamedTuple):
  kind: str
  action_std: float = 0.05
  segment_probability: float = 0.0
  segment_length_range: Tuple[int, int] = (5, 20)
  walk_step_std: float = 0.2

  def validate(self) -> None:
    if self.kind not in TIERS:
      raise errors.ConfigurationError(
          'unknown tier {}, expected one of {}'.format(self.kind, TIERS)
      )
    if self.action_std < 0:
      raise errors.ConfigurationError('action_std must be >= 0')
    if self.walk_step_std < 0:
      raise errors.ConfigurationError('walk_step_std must be >= 0')
    if not 0.0 <= self.segment_probability <= 1.0:
      raise errors.ConfigurationError('segment_probability must be in [0, 1]')
    low, high = self.segment_length_range
    if low < 1 or high < low:
      raise errors.ConfigurationError('invalid segment_length_range')

  def for_episode(self, episode_index: int) -> 'NoiseProfile':
    """Mixed tier: even episodes are expert, odd episodes replay."""
    if self.kind != 'mixed':
      return self
    if episode_index % 2 == 0:
      return self._replace(segment_probability=0.0)
    return self


def noise_profile(tier: str) -> NoiseProfile:
  if tier == 'expert':
    profile = NoiseProfile('expert')
  else:
    profile = NoiseProfile(tier, segment_probability=0.3)
  profile.validate()
  return profile


class ScriptedPolicy:
  """Stateful per-episode actor; call reset() before each episode."""

  def __init__(self, env: env_interface.EnvInterface, noise: NoiseProfile):
    noise.validate()
    self.env = env
    self.noise = noise
    self._episode_noise = noise
    self._rng: Optional[np.random.Generator] = None
    self._expert = None
    self._block_left = 0
    self._random_action: Optional[np.ndarray] = None

  def reset(self, rng: np.random.Generator, episode_index: int = 0) -> None:
    self._rng = rng
    self._episode_noise = self.noise.for_episode(episode_index)
    self._expert = self.env.make_expert(rng)
    self._block_left = 0
    self._random_action = None

  def _start_block(self) -> None:
    low, high = self._episode_noise.segment_length_range
    self._block_left = int(self._rng.integers(low, high + 1))
    if self._rng.random() < self._episode_noise.segment_probability:
      self._random_action = self._rng.uniform(
          -1.0, 1.0, size=self.env.spec.action_dim
      )
    else:
      self._random_action = None

  def act(self, observation: np.ndarray) -> np.ndarray:
    if self._rng is None:
      raise errors.PreconditionError('ScriptedPolicy.act called before reset')
    if self._block_left == 0:
      self._start_block()
    self._block_left -= 1
    if self._random_action is not None:
      action = self._random_action
      self._random_action = np.clip(
          action + self._rng.normal(
              0.0, self._episode_noise.walk_step_std, size=action.shape
          ),
          -1.0, 1.0,
      )
      return action.copy()
    action = self._expert(observation)
    if self._episode_noise.action_std > 0:
      action = action + self._rng.normal(
          0.0, self._episode_noise.action_std, size=action.shape
      )
    return np.clip(action, -1.0, 1.0)
