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

"""Runs one skill in the environment until its predicted target is reached."""
import abc
import dataclasses
from typing import NamedTuple, Optional

import numpy as np

from downstream import replay_buffer
from envs import env_interface
from skillmodel import skill_model
from utils import errors


@dataclasses.dataclass
class ExecutionConfig:
  """Low-level execution of a skill.

  max_steps 0 means the relabel max_length. fixed_skill_length > 0 ignores
  the predicted target and runs every skill for exactly that many steps.
  """

  max_steps: int = 0
  gamma: float = 0.99
  fixed_skill_length: int = 0

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if self.max_steps < 0 or self.fixed_skill_length < 0:
      raise errors.ConfigurationError(
          'execution.max_steps and execution.fixed_skill_length must be >= 0'
      )
    if not 0.0 < self.gamma <= 1.0:
      raise errors.ConfigurationError('execution.gamma must be in (0, 1]')

  def step_cap(self, default: int) -> int:
    if self.fixed_skill_length:
      return self.fixed_skill_length
    return self.max_steps or default


class SkillPolicy(abc.ABC):
  """Low-level behaviour of a skill and where it is expected to end."""

  @abc.abstractmethod
  def act(
      self,
      observation: np.ndarray,
      skill: np.ndarray,
      rng: np.random.Generator,
      deterministic: bool,
  ) -> np.ndarray:
    """Returns an action in [-1, 1]^A."""

  @abc.abstractmethod
  def target_observation(
      self, observation: np.ndarray, skill: np.ndarray
  ) -> Optional[np.ndarray]:
    """Predicted end state of the skill, or None for no target test."""


class ModelSkillPolicy(SkillPolicy):
  """Decoder actions and O(T(E(s), z)) as the termination target."""

  def __init__(self, model: skill_model.SkillModel):
    self.model = model

  def act(self, observation, skill, rng, deterministic):
    policy = self.model.decode_action(observation, skill)
    if deterministic:
      return policy.deterministic_action().value
    noise = rng.standard_normal(policy.dim)
    return policy.sample_and_log_prob(noise)[0].value

  def target_observation(self, observation, skill):
    return self.model.predicted_target_observation(observation, skill)


class ExpertSkillPolicy(SkillPolicy):
  """The environment's scripted expert wrapped as a skill; z is ignored."""

  def __init__(self, env: env_interface.EnvInterface):
    self.expert = env.make_expert(np.random.default_rng(0))

  def act(self, observation, skill, rng, deterministic):
    return self.expert(observation)

  def target_observation(self, observation, skill):
    return None


class SkillExecution(NamedTuple):
  transition: replay_buffer.HLTransition
  state: env_interface.EnvState
  episode_over: bool
  undiscounted_reward: float
  success: bool


def execute_skill(
    env: env_interface.EnvInterface,
    policy: SkillPolicy,
    state: env_interface.EnvState,
    skill: np.ndarray,
    config: ExecutionConfig,
    rng: np.random.Generator,
    deterministic: bool = False,
    default_max_steps: int = 30,
) -> SkillExecution:
  """Steps the env with the skill's actions until one of:

  the termination features are within the env threshold of the predicted
  target, the step cap is hit, or the episode ends.
  """
  spec = env.spec
  cap = config.step_cap(default_max_steps)
  start = state.observation
  target = None if config.fixed_skill_length else policy.target_observation(
      start, skill
  )
  total, raw, steps, success, episode_over = 0.0, 0.0, 0, False, False
  while True:
    action = policy.act(state.observation, skill, rng, deterministic)
    result = env.step(state, action)
    total += config.gamma**steps * result.reward
    raw += result.reward
    steps += 1
    state = result.state
    success = success or bool(result.info.get('success', False))
    if result.done:
      episode_over = True
      break
    if steps >= cap:
      break
    if target is not None:
      distance = np.linalg.norm(
          env.termination_features(state.observation)
          - env.termination_features(target)
      )
      if distance <= spec.distance_threshold:
        break
  transition = replay_buffer.HLTransition(
      state=np.asarray(start, dtype=np.float64),
      skill=np.asarray(skill, dtype=np.float64),
      reward=float(total),
      steps=steps,
      next_state=np.asarray(state.observation, dtype=np.float64),
      done=success,
  )
  return SkillExecution(transition, state, episode_over, raw, success)
