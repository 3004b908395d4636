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

"""Cross-entropy planning over sequences of skills in latent space."""
import dataclasses
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from downstream import skill_dynamics
from utils import errors

# Proposals stay strictly inside (-1, 1).
_SKILL_BOUND = 1.0 - 1e-6

ScoreFn = Callable[[np.ndarray], np.ndarray]


@dataclasses.dataclass
class CEMConfig:
  horizon: int = 3
  population: int = 128
  elites: int = 12
  iterations: int = 5
  initial_std: float = 0.5
  discount: float = 1.0

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if self.horizon < 1 or self.iterations < 1:
      raise errors.ConfigurationError('cem.horizon and cem.iterations >= 1')
    if not 0 < self.elites <= self.population:
      raise errors.ConfigurationError('cem needs 0 < elites <= population')
    if self.initial_std <= 0:
      raise errors.ConfigurationError('cem.initial_std must be > 0')
    if not 0.0 < self.discount <= 1.0:
      raise errors.ConfigurationError('cem.discount must be in (0, 1]')


class CEMResult(NamedTuple):
  mean: np.ndarray
  std: np.ndarray
  elite_scores: List[float]


def cem_optimize(
    score_fn: ScoreFn,
    skill_dim: int,
    config: CEMConfig,
    rng: np.random.Generator,
    initial_mean: Optional[np.ndarray] = None,
) -> CEMResult:
  """Maximizes score_fn over (horizon, skill_dim) sequences.

  score_fn maps (population, horizon, skill_dim) proposals to (population,)
  scores. elite_scores holds the mean elite score of every iteration.
  """
  shape = (config.horizon, skill_dim)
  mean = np.zeros(shape) if initial_mean is None else np.array(initial_mean)
  std = np.full(shape, config.initial_std)
  elite_scores = []
  for _ in range(config.iterations):
    noise = rng.standard_normal((config.population,) + shape)
    proposals = np.clip(mean + std * noise, -_SKILL_BOUND, _SKILL_BOUND)
    scores = np.asarray(score_fn(proposals), dtype=np.float64)
    order = np.argsort(-scores, kind='stable')[:config.elites]
    elites = proposals[order]
    elite_scores.append(float(np.mean(scores[order])))
    mean = elites.mean(axis=0)
    std = elites.std(axis=0)
  return CEMResult(mean, std, elite_scores)


def plan_scores(
    heads: skill_dynamics.SkillDynamicsHeads,
    latent: np.ndarray,
    proposals: np.ndarray,
    discount: float = 1.0,
) -> np.ndarray:
  """Predicted rewards along T plus the terminal value of the prior's skill."""
  population, horizon, _ = proposals.shape
  h = np.tile(latent, (population, 1))
  total = np.zeros(population)
  for k in range(horizon):
    z = proposals[:, k]
    total += discount**k * heads.reward(h, z).value
    h = heads.next_latent(h, z).value
  terminal_state = heads.model.decode_observation(h).value
  terminal_skill = heads.prior_skill(terminal_state)
  return total + discount**horizon * heads.value(h, terminal_skill).value


def cem_plan(
    heads: skill_dynamics.SkillDynamicsHeads,
    observation: np.ndarray,
    config: CEMConfig,
    rng: np.random.Generator,
) -> np.ndarray:
  """First skill of the best plan found from `observation`."""
  latent = heads.encode(np.asarray(observation, dtype=np.float64)[None])[0]
  result = cem_optimize(
      lambda proposals: plan_scores(heads, latent, proposals, config.discount),
      heads.model.config.skill_dim,
      config,
      rng,
  )
  return result.mean[0]
