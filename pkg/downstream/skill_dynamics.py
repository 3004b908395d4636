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

"""Latent skill dynamics, reward and value heads for the planner.

  loss = l_L |T(h, z) - h'|^2 + l_R (R - R(h, z))^2 + l_V (Q(h, z) - y)^2

with h = E(s), h' = E(s') from the frozen state encoder and
y = R + gamma^k (1 - done) Q'(h', z'(s')), z' the prior's mean skill.
"""
import dataclasses
from typing import NamedTuple, Optional

import numpy as np

from diffcore import nn
from diffcore import optim
from diffcore import param_tree
from diffcore import tensor
from downstream import replay_buffer
from skillmodel import skill_model
from utils import errors


@dataclasses.dataclass
class ModelBasedConfig:
  lambda_latent: float = 1.0
  lambda_reward: float = 1.0
  lambda_value: float = 1.0
  learning_rate: float = 3e-4
  gamma: float = 0.99
  tau: float = 0.005
  hidden_size: int = 128
  batch_size: int = 64
  updates_per_episode: int = 1

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    for name in ('lambda_latent', 'lambda_reward', 'lambda_value'):
      if getattr(self, name) < 0:
        raise errors.ConfigurationError(
            'model_based.{} must be >= 0'.format(name)
        )
    if self.learning_rate <= 0:
      raise errors.ConfigurationError('model_based.learning_rate must be > 0')
    if not 0.0 < self.gamma <= 1.0 or not 0.0 <= self.tau <= 1.0:
      raise errors.ConfigurationError(
          'model_based.gamma must be in (0, 1], tau in [0, 1]'
      )
    if min(self.hidden_size, self.batch_size) < 1:
      raise errors.ConfigurationError(
          'model_based.hidden_size and batch_size must be >= 1'
      )


class ModelBasedLosses(NamedTuple):
  latent: float
  reward: float
  value: float
  total: float


class LatentBatch(NamedTuple):
  """Encoded transitions; value_targets are fixed regression targets."""

  latents: np.ndarray
  skills: np.ndarray
  rewards: np.ndarray
  next_latents: np.ndarray
  value_targets: np.ndarray


class SkillDynamicsHeads:
  """Fine-tuned copy of T plus reward and value heads on the latent state."""

  def __init__(
      self,
      model: skill_model.SkillModel,
      config: ModelBasedConfig,
      seed: int = 0,
  ):
    self.model = model
    self.config = config
    latent, z = model.config.latent_dim, model.config.skill_dim
    predictor = model.target_predictor
    self.dynamics_spec = nn.MlpSpec(
        'dynamics', predictor.sizes, predictor.activation,
        predictor.output_activation,
    )
    self.reward_spec = nn.MlpSpec(
        'reward', (latent + z, config.hidden_size, 1), 'elu'
    )
    self.value_spec = nn.MlpSpec(
        'value', (latent + z, config.hidden_size, config.hidden_size, 1),
        'relu',
    )
    rng = np.random.default_rng(seed)
    dynamics = model.params.subtree('target_predictor').rename_prefix(
        'target_predictor', 'dynamics'
    )
    self.params = dynamics.merge(nn.init_mlp(self.reward_spec, rng)).merge(
        nn.init_mlp(self.value_spec, rng)
    )
    self.target_value = self.params.subtree('value')
    self.optimizer = optim.adam_init(self.params)

  def _leaves(self, leaves):
    return tensor.constants(self.params.as_dict()) if leaves is None else leaves

  def _inputs(self, latents, skills):
    return tensor.concat([latents, skills], axis=-1)

  def next_latent(self, latents, skills, leaves=None) -> tensor.Tensor:
    return nn.mlp_apply(
        self._leaves(leaves), self._inputs(latents, skills), self.dynamics_spec
    )

  def reward(self, latents, skills, leaves=None) -> tensor.Tensor:
    return nn.mlp_apply(
        self._leaves(leaves), self._inputs(latents, skills), self.reward_spec
    )[..., 0]

  def value(self, latents, skills, leaves=None) -> tensor.Tensor:
    return nn.mlp_apply(
        self._leaves(leaves), self._inputs(latents, skills), self.value_spec
    )[..., 0]

  def target_q(self, latents, skills) -> np.ndarray:
    return self.value(
        latents, skills, tensor.constants(self.target_value.as_dict())
    ).value

  def encode(self, states: np.ndarray) -> np.ndarray:
    return self.model.encode_state(states).value

  def prior_skill(self, states: np.ndarray) -> np.ndarray:
    """tanh of the skill prior's mean at `states`."""
    return np.tanh(self.model.skill_prior(states).mean.value)

  def latent_batch(self, batch: replay_buffer.TransitionBatch) -> LatentBatch:
    latents = self.encode(batch.states)
    next_latents = self.encode(batch.next_states)
    bootstrap = self.target_q(next_latents, self.prior_skill(batch.next_states))
    discount = self.config.gamma ** batch.steps.astype(np.float64)
    targets = batch.rewards + discount * (1.0 - batch.dones) * bootstrap
    return LatentBatch(latents, batch.skills, batch.rewards, next_latents,
                       targets)


def model_based_loss(
    heads: SkillDynamicsHeads,
    leaves,
    batch: LatentBatch,
    config: Optional[ModelBasedConfig] = None,
):
  """Returns (loss tensor, ModelBasedLosses) on fixed latent targets."""
  config = config or heads.config
  latent = tensor.square(
      heads.next_latent(batch.latents, batch.skills, leaves)
      - batch.next_latents
  ).sum(axis=-1).mean()
  reward = tensor.square(
      heads.reward(batch.latents, batch.skills, leaves) - batch.rewards
  ).mean()
  value = tensor.square(
      heads.value(batch.latents, batch.skills, leaves) - batch.value_targets
  ).mean()
  loss = (config.lambda_latent * latent + config.lambda_reward * reward
          + config.lambda_value * value)
  return loss, ModelBasedLosses(latent.item(), reward.item(), value.item(),
                                loss.item())


def model_based_update(
    heads: SkillDynamicsHeads, batch: replay_buffer.TransitionBatch
) -> ModelBasedLosses:
  """One Adam step on the three heads, then a soft update of the value target.

  Raises:
    TrainingError: non-finite loss or gradient.
  """
  latent_batch = heads.latent_batch(batch)
  tape = tensor.Tape(heads.params)
  loss, parts = model_based_loss(heads, tape.leaves, latent_batch)
  if not np.isfinite(parts.total):
    raise errors.TrainingError('non-finite model-based loss: {}'.format(parts))
  heads.params, heads.optimizer = optim.adam_step(
      heads.optimizer, heads.params, tensor.backprop(tape, loss),
      heads.config.learning_rate,
  )
  tau = heads.config.tau
  heads.target_value = heads.target_value.zip_map(
      heads.params.subtree('value'), lambda t, p: (1.0 - tau) * t + tau * p
  )
  return parts


def heads_tree(heads: SkillDynamicsHeads) -> param_tree.ParamTree:
  """Online heads plus the value target (as target_value/...) for checkpoints."""
  return heads.params.merge(
      heads.target_value.rename_prefix('value', 'target_value')
  )


def load_heads_tree(
    heads: SkillDynamicsHeads, tree: param_tree.ParamTree
) -> None:
  heads_tree(heads).assert_same_structure(tree)
  heads.params = param_tree.ParamTree(
      {name: tree[name] for name in heads.params.names()}
  )
  heads.target_value = tree.subtree('target_value').rename_prefix(
      'target_value', 'value'
  )
