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

"""High-level SAC over skills, regularized toward the learned skill prior.

  critic target  y = R + gamma^k (1 - done) [min_j Q'_j(s', z') - a KL(pi||p)(s')]
  actor loss     a KL(pi(.|s) || p(.|s)) - min_j Q_j(s, z ~ pi)

The KL is taken between the pre-tanh Gaussians of actor and prior; the prior
comes from the frozen SkillModel.
"""
import collections
import dataclasses
from typing import List, NamedTuple

import numpy as np

from diffcore import distributions
from diffcore import nn
from diffcore import optim
from diffcore import param_tree
from diffcore import tensor
from downstream import replay_buffer
from skillmodel import skill_model
from utils import errors

TARGET_PREFIX = 'target/'


@dataclasses.dataclass
class SacConfig:
  gamma: float = 0.99
  tau: float = 0.005
  alpha_kl: float = 0.1
  actor_learning_rate: float = 3e-4
  critic_learning_rate: float = 3e-4
  hidden_size: int = 128
  batch_size: int = 64
  buffer_capacity: int = 100000
  updates_per_episode: int = 1
  init_actor_from_prior: bool = True

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if not 0.0 < self.gamma <= 1.0:
      raise errors.ConfigurationError('sac.gamma must be in (0, 1]')
    if not 0.0 <= self.tau <= 1.0:
      raise errors.ConfigurationError('sac.tau must be in [0, 1]')
    if self.alpha_kl < 0:
      raise errors.ConfigurationError('sac.alpha_kl must be >= 0')
    if self.actor_learning_rate <= 0 or self.critic_learning_rate <= 0:
      raise errors.ConfigurationError('sac learning rates must be > 0')
    if min(self.hidden_size, self.batch_size, self.buffer_capacity) < 1:
      raise errors.ConfigurationError(
          'sac.hidden_size, batch_size and buffer_capacity must be >= 1'
      )
    if self.updates_per_episode < 0:
      raise errors.ConfigurationError('sac.updates_per_episode must be >= 0')


class SacLosses(NamedTuple):
  critic: float
  actor: float
  kl: float
  q_mean: float


class HLPolicy:
  """Actor s -> TanhGaussian over z, twin critics Q(s, z) and their targets."""

  def __init__(
      self, model: skill_model.SkillModel, config: SacConfig, seed: int = 0
  ):
    self.model = model
    self.config = config
    s, z = model.config.state_dim, model.config.skill_dim
    rng = np.random.default_rng(seed)
    self.actor_spec = nn.MlpSpec(
        'actor', model.prior.sizes, model.prior.activation,
        model.prior.output_activation,
    )
    if config.init_actor_from_prior:
      self.actor = model.params.subtree('skill_prior').rename_prefix(
          'skill_prior', 'actor'
      )
    else:
      self.actor = nn.init_mlp(self.actor_spec, rng)
    hidden = config.hidden_size
    self.critic_specs = [
        nn.MlpSpec('critic{}'.format(i), (s + z, hidden, hidden, 1), 'relu')
        for i in (1, 2)
    ]
    critics = param_tree.ParamTree({})
    for spec in self.critic_specs:
      critics = critics.merge(nn.init_mlp(spec, rng))
    self.critics = critics
    self.target_critics = critics
    self.actor_optimizer = optim.adam_init(self.actor)
    self.critic_optimizer = optim.adam_init(self.critics)

  def actor_dist(self, states, leaves=None) -> distributions.DiagGaussian:
    leaves = tensor.constants(self.actor.as_dict()) if leaves is None else leaves
    return distributions.DiagGaussian.from_params(
        nn.mlp_apply(leaves, states, self.actor_spec)
    )

  def prior_dist(self, states) -> distributions.DiagGaussian:
    return self.model.skill_prior(states).detach()

  def q_values(self, leaves, states, skills) -> List[tensor.Tensor]:
    inputs = tensor.concat([states, skills], axis=-1)
    return [nn.mlp_apply(leaves, inputs, spec)[..., 0]
            for spec in self.critic_specs]

  def select_skill(
      self, observation: np.ndarray, rng: np.random.Generator,
      deterministic: bool = False,
  ) -> np.ndarray:
    dist = self.actor_dist(np.asarray(observation, dtype=np.float64)[None])
    if deterministic:
      return np.tanh(dist.mean.value[0])
    noise = rng.standard_normal(dist.mean.shape)
    return np.tanh(dist.sample(noise).value[0])

  def prior_kl(self, states) -> np.ndarray:
    return distributions.diag_gaussian_kl(
        self.actor_dist(states), self.prior_dist(states)
    ).value

  def state_tree(self) -> param_tree.ParamTree:
    """Actor, critics and target critics as one tree for checkpoints."""
    targets = param_tree.ParamTree(collections.OrderedDict(
        (TARGET_PREFIX + name, value)
        for name, value in self.target_critics.items()
    ))
    return self.actor.merge(self.critics).merge(targets)

  def load_state_tree(self, tree: param_tree.ParamTree) -> None:
    self.state_tree().assert_same_structure(tree)
    self.actor = tree.subtree('actor')
    self.critics = tree.subtree('critic1').merge(tree.subtree('critic2'))
    self.target_critics = param_tree.ParamTree(collections.OrderedDict(
        (name[len(TARGET_PREFIX):], value)
        for name, value in tree.subtree(TARGET_PREFIX).items()
    ))


def critic_targets(
    policy: HLPolicy,
    batch: replay_buffer.TransitionBatch,
    noise: np.ndarray,
) -> np.ndarray:
  """y = R + gamma^k (1 - done) (min_j Q'_j(s', z') - alpha KL(s'))."""
  config = policy.config
  next_dist = policy.actor_dist(batch.next_states)
  next_skills = np.tanh(next_dist.sample(noise).value)
  target_leaves = tensor.constants(policy.target_critics.as_dict())
  q1, q2 = policy.q_values(target_leaves, batch.next_states, next_skills)
  kl = distributions.diag_gaussian_kl(
      next_dist, policy.prior_dist(batch.next_states)
  ).value
  soft_value = np.minimum(q1.value, q2.value) - config.alpha_kl * kl
  discount = config.gamma ** batch.steps.astype(np.float64)
  return batch.rewards + discount * (1.0 - batch.dones) * soft_value


def soft_update(
    target: param_tree.ParamTree, online: param_tree.ParamTree, tau: float
) -> param_tree.ParamTree:
  return target.zip_map(online, lambda t, p: (1.0 - tau) * t + tau * p)


def sac_update(
    policy: HLPolicy,
    batch: replay_buffer.TransitionBatch,
    rng: np.random.Generator,
) -> SacLosses:
  """One critic step, one actor step and a soft target update.

  Raises:
    PreconditionError: empty batch.
    TrainingError: a loss or gradient is not finite.
  """
  if batch.size < 1:
    raise errors.PreconditionError('sac_update needs a non-empty batch')
  config = policy.config
  skill_dim = policy.model.config.skill_dim
  targets = critic_targets(
      policy, batch, rng.standard_normal((batch.size, skill_dim))
  )

  critic_tape = tensor.Tape(policy.critics)
  q1, q2 = policy.q_values(critic_tape.leaves, batch.states, batch.skills)
  critic_loss = (tensor.square(q1 - targets).mean()
                 + tensor.square(q2 - targets).mean())
  if not np.isfinite(critic_loss.item()):
    raise errors.TrainingError('non-finite critic loss')
  policy.critics, policy.critic_optimizer = optim.adam_step(
      policy.critic_optimizer, policy.critics,
      tensor.backprop(critic_tape, critic_loss), config.critic_learning_rate,
  )

  actor_tape = tensor.Tape(policy.actor)
  dist = policy.actor_dist(batch.states, actor_tape.leaves)
  skills = tensor.tanh(
      dist.sample(rng.standard_normal((batch.size, skill_dim)))
  )
  critic_leaves = tensor.constants(policy.critics.as_dict())
  q1_pi, q2_pi = policy.q_values(critic_leaves, batch.states, skills)
  q_min = tensor.minimum(q1_pi, q2_pi)
  kl = distributions.diag_gaussian_kl(
      dist, policy.prior_dist(batch.states)
  ).mean()
  actor_loss = config.alpha_kl * kl - q_min.mean()
  if not np.isfinite(actor_loss.item()):
    raise errors.TrainingError('non-finite actor loss')
  policy.actor, policy.actor_optimizer = optim.adam_step(
      policy.actor_optimizer, policy.actor,
      tensor.backprop(actor_tape, actor_loss), config.actor_learning_rate,
  )

  policy.target_critics = soft_update(
      policy.target_critics, policy.critics, config.tau
  )
  return SacLosses(
      critic=critic_loss.item(),
      actor=actor_loss.item(),
      kl=kl.item(),
      q_mean=float(np.mean(q_min.value)),
  )
