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

"""Episode rollouts of a skill controller and success / timestep metrics."""
from multiprocessing import pool
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

from downstream import controllers
from downstream import replay_buffer
from downstream import skill_executor
from envs import env_interface
from utils import errors
from utils import logger


class EpisodeResult(NamedTuple):
  """One rollout.

  timesteps counts low-level steps; a failed episode counts the env step cap.
  """

  seed: int
  success: bool
  timesteps: int
  episode_return: float
  skills: List[List[float]]
  skill_lengths: List[int]

  def as_row(self) -> Dict[str, Any]:
    return {
        'seed': self.seed,
        'success': self.success,
        'timesteps': self.timesteps,
        'return': self.episode_return,
        'skill_lengths': list(self.skill_lengths),
        'skills': [list(z) for z in self.skills],
    }


class EvaluationResult(NamedTuple):
  success_rate: float
  mean_timesteps: float
  episodes: List[EpisodeResult]

  def as_json(self) -> Dict[str, Any]:
    return {
        'success_rate': self.success_rate,
        'mean_timesteps': self.mean_timesteps,
        'episodes': [episode.as_row() for episode in self.episodes],
    }


def run_episode(
    controller: controllers.SkillController,
    env: env_interface.EnvInterface,
    rng: np.random.Generator,
    execution: skill_executor.ExecutionConfig,
    deterministic: bool = True,
    default_max_steps: int = 30,
):
  """Returns (EpisodeResult, high-level transitions) for one episode."""
  env_seed = int(rng.integers(2**31 - 1))
  state = env.reset(env_seed)
  transitions: List[replay_buffer.HLTransition] = []
  skills, total, success = [], 0.0, False
  while True:
    skill = controller.select_skill(state.observation, rng, deterministic)
    result = skill_executor.execute_skill(
        env, controller.skill_policy, state, skill, execution, rng,
        deterministic=deterministic, default_max_steps=default_max_steps,
    )
    transitions.append(result.transition)
    skills.append([float(v) for v in skill])
    total += result.undiscounted_reward
    success = success or result.success
    state = result.state
    if result.episode_over:
      break
  timesteps = state.step_count if success else env.spec.max_episode_steps
  episode = EpisodeResult(
      seed=env_seed,
      success=success,
      timesteps=timesteps,
      episode_return=total,
      skills=skills,
      skill_lengths=[t.steps for t in transitions],
  )
  return episode, transitions


def evaluate(
    controller: controllers.SkillController,
    env: env_interface.EnvInterface,
    episodes: int,
    seed: int,
    execution: Optional[skill_executor.ExecutionConfig] = None,
    default_max_steps: int = 30,
    workers: int = 1,
) -> EvaluationResult:
  """Deterministic-action rollouts; episode i uses child i of SeedSequence(seed).

  With workers > 1 the episodes run on a thread pool over the same read-only
  parameters; results do not depend on the worker count.

  Raises:
    PreconditionError: episodes < 1.
  """
  if episodes < 1:
    raise errors.PreconditionError('evaluate needs episodes >= 1')
  execution = execution or skill_executor.ExecutionConfig()
  children = np.random.SeedSequence(seed).spawn(episodes)

  def one(child):
    return run_episode(
        controller, env, np.random.default_rng(child), execution,
        deterministic=True, default_max_steps=default_max_steps,
    )[0]

  if workers > 1:
    with pool.ThreadPool(workers) as threads:
      results = threads.map(one, children)
  else:
    results = [one(child) for child in children]
  success_rate = float(np.mean([r.success for r in results]))
  mean_timesteps = float(np.mean([r.timesteps for r in results]))
  logger.Logger.get_instance().log_table(
      ['controller', 'env', 'episodes', 'success_rate', 'mean_timesteps'],
      [[controller.name, env.spec.name, episodes, success_rate,
        mean_timesteps]],
  )
  return EvaluationResult(success_rate, mean_timesteps, list(results))
