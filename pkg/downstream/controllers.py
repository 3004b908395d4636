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

"""High-level controllers: pick the next skill from the current observation."""
import abc

import numpy as np

from downstream import cem_planner
from downstream import hl_policy
from downstream import skill_dynamics
from downstream import skill_executor
from envs import env_interface
from skillmodel import skill_model


class SkillController(abc.ABC):
  """Skill-space controller abstract class."""

  name = 'controller'

  @property
  @abc.abstractmethod
  def skill_policy(self) -> skill_executor.SkillPolicy:
    """Executes the chosen skills in the environment."""

  @property
  @abc.abstractmethod
  def skill_dim(self) -> int:
    """Size of the skills this controller emits."""

  @abc.abstractmethod
  def select_skill(
      self,
      observation: np.ndarray,
      rng: np.random.Generator,
      deterministic: bool,
  ) -> np.ndarray:
    """Returns z in (-1, 1)^Z."""


class _ModelController(SkillController):

  def __init__(self, model: skill_model.SkillModel):
    self.model = model
    self._skill_policy = skill_executor.ModelSkillPolicy(model)

  @property
  def skill_policy(self) -> skill_executor.SkillPolicy:
    return self._skill_policy

  @property
  def skill_dim(self) -> int:
    return self.model.config.skill_dim


class RandomSkillController(_ModelController):
  """Uniform random skills; the flat baseline."""

  name = 'random'

  def select_skill(self, observation, rng, deterministic):
    return rng.uniform(-1.0, 1.0, self.skill_dim)


class SacController(_ModelController):

  name = 'sac'

  def __init__(self, policy: hl_policy.HLPolicy):
    super().__init__(policy.model)
    self.policy = policy

  def select_skill(self, observation, rng, deterministic):
    return self.policy.select_skill(observation, rng, deterministic)


class CemController(_ModelController):
  """Replans every skill; planning noise is the exploration."""

  name = 'cem'

  def __init__(
      self,
      heads: skill_dynamics.SkillDynamicsHeads,
      config: cem_planner.CEMConfig,
  ):
    super().__init__(heads.model)
    self.heads = heads
    self.config = config

  def select_skill(self, observation, rng, deterministic):
    return cem_planner.cem_plan(self.heads, observation, self.config, rng)


class ScriptedSkillController(SkillController):
  """The env's scripted expert executed as a single opaque skill."""

  name = 'scripted'

  def __init__(self, env: env_interface.EnvInterface, skill_dim: int = 1):
    self._skill_policy = skill_executor.ExpertSkillPolicy(env)
    self._skill_dim = skill_dim

  @property
  def skill_policy(self) -> skill_executor.SkillPolicy:
    return self._skill_policy

  @property
  def skill_dim(self) -> int:
    return self._skill_dim

  def select_skill(self, observation, rng, deterministic):
    return np.zeros(self._skill_dim)
