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

"""Environment abstract class for.

1.Point maze (medium, large)
2.Gripper pick-and-place
3.Kitchen stations, forcing them to uniformly implement value-semantic
reset/step.
"""
import abc
from typing import Any, Callable, Mapping, NamedTuple, Tuple

import numpy as np

from utils import errors

ExpertFn = Callable[[np.ndarray], np.ndarray]


class EnvSpec(NamedTuple):
  """Static description of an environment.

  Attributes:
    name: registry name, e.g. 'pointmaze-medium'.
    state_dim: observation size.
    action_dim: action size; every component is bounded by [-1, 1].
    termination_features: observation indices compared against the predicted
      skill target.
    distance_threshold: L2 radius on those features that counts as reached.
    max_episode_steps: step cap.
    skill_dim: default latent skill size for this environment.
    batch_size: default skill-training batch size.
    family: 'maze' or 'manipulation'.
  """

  name: str
  state_dim: int
  action_dim: int
  termination_features: Tuple[int, ...]
  distance_threshold: float
  max_episode_steps: int
  skill_dim: int
  batch_size: int
  family: str

  def validate(self) -> None:
    if self.state_dim <= 0 or self.action_dim <= 0:
      raise errors.ConfigurationError('{}: dims must be > 0'.format(self.name))
    if self.distance_threshold <= 0:
      raise errors.ConfigurationError(
          '{}: threshold must be > 0'.format(self.name)
      )
    if not self.termination_features or any(
        i < 0 or i >= self.state_dim for i in self.termination_features
    ):
      raise errors.ConfigurationError(
          '{}: invalid termination features {}'.format(
              self.name, self.termination_features
          )
      )


class EnvState(NamedTuple):
  """Everything a transition depends on besides the action."""

  observation: np.ndarray
  step_count: int


class StepResult(NamedTuple):
  state: EnvState
  reward: float
  done: bool
  info: Mapping[str, Any]


class EnvInterface(abc.ABC):
  """Environment abstract class."""

  @property
  @abc.abstractmethod
  def spec(self) -> EnvSpec:
    """Returns the static description of this environment."""

  @abc.abstractmethod
  def reset(self, seed: int) -> EnvState:
    """Returns the initial state; deterministic in the seed."""

  @abc.abstractmethod
  def step(self, state: EnvState, action: np.ndarray) -> StepResult:
    """Applies a clipped action; a pure function of (state, action)."""

  @abc.abstractmethod
  def is_success(self, observation: np.ndarray) -> bool:
    """Returns whether the task is complete in this observation."""

  @abc.abstractmethod
  def make_expert(self, rng: np.random.Generator) -> ExpertFn:
    """Returns a noise-free scripted controller for one episode."""

  def termination_features(self, observation: np.ndarray) -> np.ndarray:
    return np.asarray(observation)[..., list(self.spec.termination_features)]

  def clip_action(self, action: np.ndarray) -> Tuple[np.ndarray, bool]:
    action = np.asarray(action, dtype=np.float64)
    clipped = np.clip(action, -1.0, 1.0)
    return clipped, bool(np.any(clipped != action))
