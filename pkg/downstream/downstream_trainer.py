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

"""Downstream learning loop: roll out one episode, then update.

The SkillModel stays frozen; `sac` mode trains an HLPolicy over skills,
`cem` mode trains the latent dynamics, reward and value heads and plans with
them.
"""
import dataclasses
import math
import time
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np

from diffcore import checkpoint
from downstream import cem_planner
from downstream import controllers
from downstream import evaluation
from downstream import hl_policy
from downstream import replay_buffer
from downstream import skill_dynamics
from downstream import skill_executor
from envs import env_interface
from skillmodel import skill_model
from utils import csv_table
from utils import errors
from utils import logger

MODES = ('sac', 'cem')
CURVE_FIELDS = ('episode', 'return', 'success', 'steps', 'critic_loss',
                'actor_loss', 'kl', 'model_loss')


@dataclasses.dataclass
class DownstreamConfig:
  """Episode budget and bookkeeping of a downstream run.

  warmup_episodes roll out uniformly random skills before the learner's own
  controller takes over; their transitions still fill the buffer.
  """

  mode: str = 'sac'
  episodes: int = 2000
  warmup_episodes: int = 0
  log_interval: int = 50
  checkpoint_interval: int = 0
  eval_episodes: int = 20

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if self.mode not in MODES:
      raise errors.ConfigurationError(
          'downstream.mode must be one of {}, got {}'.format(MODES, self.mode)
      )
    if self.episodes < 1 or self.eval_episodes < 1:
      raise errors.ConfigurationError(
          'downstream.episodes and eval_episodes must be >= 1'
      )
    if self.warmup_episodes < 0 or self.checkpoint_interval < 0:
      raise errors.ConfigurationError(
          'downstream.warmup_episodes and checkpoint_interval must be >= 0'
      )
    if self.log_interval < 1:
      raise errors.ConfigurationError('downstream.log_interval must be >= 1')


class DownstreamResult(NamedTuple):
  rows: List[List[float]]


def build_learner(
    model: skill_model.SkillModel,
    mode: str,
    sac_config: hl_policy.SacConfig,
    model_based_config: skill_dynamics.ModelBasedConfig,
    cem_config: cem_planner.CEMConfig,
    seed: int = 0,
):
  """Returns (learner, controller) for `mode`.

  The learner is the HLPolicy for `sac` and the SkillDynamicsHeads for `cem`.
  """
  if mode == 'sac':
    policy = hl_policy.HLPolicy(model, sac_config, seed)
    return policy, controllers.SacController(policy)
  if mode == 'cem':
    heads = skill_dynamics.SkillDynamicsHeads(model, model_based_config, seed)
    return heads, controllers.CemController(heads, cem_config)
  raise errors.ConfigurationError('unknown downstream mode {}'.format(mode))


def learner_tree(mode: str, learner):
  if mode == 'sac':
    return learner.state_tree()
  return skill_dynamics.heads_tree(learner)


def save_learner(
    mode: str, learner, prefix: str, metadata: Optional[Dict[str, Any]] = None
) -> None:
  payload = dict(metadata or {})
  payload['mode'] = mode
  checkpoint.save_checkpoint(prefix, learner_tree(mode, learner), payload)


def load_controller(
    model: skill_model.SkillModel,
    prefix: str,
    sac_config: hl_policy.SacConfig,
    model_based_config: skill_dynamics.ModelBasedConfig,
    cem_config: cem_planner.CEMConfig,
) -> controllers.SkillController:
  """Rebuilds the controller of a save_learner checkpoint on `model`.

  Raises:
    MissingArtifactError: the checkpoint is absent.
    FormatError: unknown mode, or leaves that do not fit the configs.
  """
  tree, metadata = checkpoint.load_checkpoint(prefix)
  mode = metadata.get('mode')
  if mode not in MODES:
    raise errors.FormatError(
        'checkpoint {} has no downstream mode'.format(prefix),
        field='metadata.mode',
    )
  learner, controller = build_learner(
      model, mode, sac_config, model_based_config, cem_config
  )
  try:
    if mode == 'sac':
      learner.load_state_tree(tree)
    else:
      skill_dynamics.load_heads_tree(learner, tree)
  except errors.PreconditionError as e:
    raise errors.FormatError(
        'checkpoint {} does not fit the configured networks: {}'.format(
            prefix, e
        ),
        field='leaves',
    ) from e
  return controller


class DownstreamTrainer:
  """Owns the learner, its replay buffer and the training rng."""

  def __init__(
      self,
      model: skill_model.SkillModel,
      env: env_interface.EnvInterface,
      config: DownstreamConfig,
      sac_config: hl_policy.SacConfig,
      model_based_config: skill_dynamics.ModelBasedConfig,
      cem_config: cem_planner.CEMConfig,
      execution: skill_executor.ExecutionConfig,
      seed: int = 0,
      default_max_steps: int = 30,
  ):
    if env.spec.state_dim != model.config.state_dim:
      raise errors.PreconditionError(
          'env {} has state_dim {}, the skill model {}'.format(
              env.spec.name, env.spec.state_dim, model.config.state_dim
          )
      )
    self.model = model
    self.env = env
    self.config = config
    self.execution = execution
    self.default_max_steps = default_max_steps
    self.learner, self.controller = build_learner(
        model, config.mode, sac_config, model_based_config, cem_config, seed
    )
    self.random_controller = controllers.RandomSkillController(model)
    if config.mode == 'sac':
      self.batch_size = sac_config.batch_size
      self.updates_per_episode = sac_config.updates_per_episode
    else:
      self.batch_size = model_based_config.batch_size
      self.updates_per_episode = model_based_config.updates_per_episode
    self.buffer = replay_buffer.SkillReplayBuffer(
        sac_config.buffer_capacity, model.config.state_dim,
        model.config.skill_dim,
    )
    self.rng = np.random.default_rng(seed)

  def update(self) -> Dict[str, float]:
    """updates_per_episode learner updates once the buffer holds a batch."""
    losses = {'critic_loss': math.nan, 'actor_loss': math.nan,
              'kl': math.nan, 'model_loss': math.nan}
    if len(self.buffer) < self.batch_size:
      return losses
    for _ in range(self.updates_per_episode):
      batch = self.buffer.sample(self.batch_size, self.rng)
      if self.config.mode == 'sac':
        parts = hl_policy.sac_update(self.learner, batch, self.rng)
        losses.update(critic_loss=parts.critic, actor_loss=parts.actor,
                      kl=parts.kl)
      else:
        parts = skill_dynamics.model_based_update(self.learner, batch)
        losses.update(model_loss=parts.total)
    return losses

  def train_episode(self, episode_index: int) -> List[float]:
    """Rolls out one stochastic episode, stores it, updates; returns a row."""
    controller = (self.random_controller
                  if episode_index <= self.config.warmup_episodes
                  else self.controller)
    episode, transitions = evaluation.run_episode(
        controller, self.env, self.rng, self.execution,
        deterministic=False, default_max_steps=self.default_max_steps,
    )
    for transition in transitions:
      self.buffer.add(transition)
    losses = self.update()
    return [episode_index, episode.episode_return, float(episode.success),
            episode.timesteps] + [losses[name] for name in CURVE_FIELDS[4:]]

  def train(
      self,
      curve_csv_path: Optional[str] = None,
      checkpoint_prefix: Optional[str] = None,
  ) -> DownstreamResult:
    """Episodes 1..episodes; the curve CSV is written even when aborted."""
    log = logger.Logger.get_instance()
    rows: List[List[float]] = []
    started = time.time()
    try:
      for episode in range(1, self.config.episodes + 1):
        rows.append(self.train_episode(episode))
        if episode % self.config.log_interval == 0:
          recent = np.array(rows[-self.config.log_interval:], dtype=np.float64)
          log.log_indented(
              'episode {}: return {:.3f} success {:.2f} steps {:.1f} '
              '{:.1f}s'.format(
                  episode, recent[:, 1].mean(), recent[:, 2].mean(),
                  recent[:, 3].mean(), time.time() - started,
              )
          )
        if (checkpoint_prefix and self.config.checkpoint_interval
            and episode % self.config.checkpoint_interval == 0):
          save_learner(
              self.config.mode, self.learner,
              '{}_episode{}'.format(checkpoint_prefix, episode),
              {'episode': episode, 'env': self.env.spec.name},
          )
    finally:
      if curve_csv_path:
        csv_table.write_csv(curve_csv_path, CURVE_FIELDS, rows)
    if checkpoint_prefix:
      save_learner(
          self.config.mode, self.learner, checkpoint_prefix,
          {'episode': self.config.episodes, 'env': self.env.spec.name},
      )
    return DownstreamResult(rows)
