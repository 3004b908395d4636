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

"""Skill-learning losses, all in minimization form.

  embedding    = -l_bc E[log pi(a|s,z)] + beta KL(q || N(0,I))
                 + l_sp KL(sg(q) || p(z|s_t))
  contrastive  = l_cl mean[-log sig(f(s_t,z,s+)) - log(1 - sig(f(s_t,z,s-)))]
  target       = l_re |s_t - O(E(s_t))|^2 + l_st |T(E(s_t), z) - E(s_target)|^2
  total        = embedding + contrastive + target

KL terms are evaluated between the pre-tanh Gaussians.
"""
import dataclasses
from typing import Tuple

import numpy as np

from dataset import sampling
from diffcore import distributions
from diffcore import tensor
from skillmodel import skill_model
from utils import errors


@dataclasses.dataclass
class TrainConfig:
  """Skill-extraction hyperparameters.

  batch_size 0 means the environment default. Steps are numbered from 1, so
  a relabel pass runs after every `relabel_interval` optimizer steps.
  """

  lambda_bc: float = 2.0
  lambda_sp: float = 1.0
  lambda_cl: float = 1.0
  lambda_re: float = 1.0
  lambda_st: float = 2.0
  beta: float = 0.001
  batch_size: int = 0
  max_steps: int = 20000
  learning_rate: float = 3e-4
  relabel_interval: int = 4000
  relabel_enabled: bool = True
  freeze_target_encoder: bool = False
  truncate_windows: bool = True
  checkpoint_interval: int = 0
  log_interval: int = 500

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    for name in ('lambda_bc', 'lambda_sp', 'lambda_cl', 'lambda_re',
                 'lambda_st', 'beta'):
      if getattr(self, name) < 0:
        raise errors.ConfigurationError('train.{} must be >= 0'.format(name))
    if self.batch_size < 0:
      raise errors.ConfigurationError('train.batch_size must be >= 0')
    if self.max_steps < 0:
      raise errors.ConfigurationError('train.max_steps must be >= 0')
    if self.learning_rate <= 0:
      raise errors.ConfigurationError('train.learning_rate must be > 0')
    if self.relabel_interval < 1:
      raise errors.ConfigurationError('train.relabel_interval must be >= 1')
    if self.checkpoint_interval < 0 or self.log_interval < 1:
      raise errors.ConfigurationError(
          'train.checkpoint_interval must be >= 0, log_interval >= 1'
      )


@dataclasses.dataclass
class LossBreakdown:
  """Scalar loss values of one step; total is the sum of the three parts."""

  embedding: float
  contrastive: float
  target: float
  total: float
  bc: float
  kl_to_unit_prior: float
  skill_prior_kl: float
  reconstruction: float
  target_prediction: float

  CSV_FIELDS = (
      'embedding', 'contrastive', 'target', 'total', 'bc',
      'kl_to_unit_prior', 'skill_prior_kl', 'reconstruction',
      'target_prediction',
  )

  def is_finite(self) -> bool:
    return all(np.isfinite(getattr(self, f)) for f in self.CSV_FIELDS)

  def as_row(self):
    return [getattr(self, f) for f in self.CSV_FIELDS]


class EmbeddingTerms:
  """Tensors produced by embedding_loss; z is shared with the other losses."""

  def __init__(self, loss, z, bc, kl_unit, kl_prior):
    self.loss = loss
    self.z = z
    self.bc = bc
    self.kl_unit = kl_unit
    self.kl_prior = kl_prior


def window_average_matrix(step_window: np.ndarray, num_windows: int) -> np.ndarray:
  """(B, N) matrix averaging per-step values within each window."""
  matrix = np.zeros((num_windows, len(step_window)))
  matrix[step_window, np.arange(len(step_window))] = 1.0
  counts = matrix.sum(axis=1, keepdims=True)
  return matrix / np.maximum(counts, 1.0)


def embedding_loss(
    model: skill_model.SkillModel,
    leaves,
    batch: sampling.SkillBatch,
    config: TrainConfig,
    noise: np.ndarray,
) -> EmbeddingTerms:
  """Behaviour cloning, KL to N(0, I) and the stop-gradient skill-prior KL.

  The BC term averages log-likelihoods within each window first, then over
  windows. `noise` is standard normal of shape (B, Z).
  """
  posterior = model.encode_skill(batch.key_states, leaves)
  z = tensor.tanh(posterior.sample(noise))

  z_steps = tensor.take_rows(z, batch.step_window)
  policy = model.decode_action(batch.step_states, z_steps, leaves)
  log_likelihood = policy.log_prob(batch.step_actions)
  per_window = tensor.matmul(
      window_average_matrix(batch.step_window, batch.size), log_likelihood
  )
  bc = -per_window.mean()

  unit = distributions.standard_normal(posterior.mean.shape)
  kl_unit = distributions.diag_gaussian_kl(posterior, unit).mean()
  prior = model.skill_prior(batch.start_states, leaves)
  kl_prior = distributions.diag_gaussian_kl(posterior.detach(), prior).mean()

  loss = (
      config.lambda_bc * bc
      + config.beta * kl_unit
      + config.lambda_sp * kl_prior
  )
  return EmbeddingTerms(loss, z, bc, kl_unit, kl_prior)


def contrastive_loss(
    model: skill_model.SkillModel,
    leaves,
    states: np.ndarray,
    z: tensor.Tensor,
    positives: np.ndarray,
    negatives: np.ndarray,
    lambda_cl: float,
) -> tensor.Tensor:
  """Binary NCE with one negative per positive pair."""
  f_positive = model.similarity(states, z, positives, leaves)
  f_negative = model.similarity(states, z, negatives, leaves)
  per_pair = tensor.softplus(-f_positive) + tensor.softplus(f_negative)
  return lambda_cl * per_pair.mean()


def target_loss(
    model: skill_model.SkillModel,
    leaves,
    states: np.ndarray,
    z: tensor.Tensor,
    targets: np.ndarray,
    config: TrainConfig,
) -> Tuple[tensor.Tensor, tensor.Tensor, tensor.Tensor]:
  """Returns (loss, reconstruction, target_prediction), batch-averaged."""
  latent = model.encode_state(states, leaves)
  reconstruction = tensor.square(
      model.decode_observation(latent, leaves) - states
  ).sum(axis=-1).mean()
  target_latent = model.encode_state(targets, leaves)
  if config.freeze_target_encoder:
    target_latent = tensor.stop_gradient(target_latent)
  prediction = tensor.square(
      model.predict_target(latent, z, leaves) - target_latent
  ).sum(axis=-1).mean()
  loss = config.lambda_re * reconstruction + config.lambda_st * prediction
  return loss, reconstruction, prediction


def total_loss(
    model: skill_model.SkillModel,
    leaves,
    batch: sampling.SkillBatch,
    config: TrainConfig,
    noise: np.ndarray,
) -> Tuple[tensor.Tensor, LossBreakdown]:
  embedding = embedding_loss(model, leaves, batch, config, noise)
  contrastive = contrastive_loss(
      model, leaves, batch.start_states, embedding.z, batch.positive,
      batch.negative, config.lambda_cl,
  )
  target, reconstruction, prediction = target_loss(
      model, leaves, batch.start_states, embedding.z, batch.target, config
  )
  total = embedding.loss + contrastive + target
  parts = (embedding.loss.item(), contrastive.item(), target.item())
  breakdown = LossBreakdown(
      embedding=parts[0],
      contrastive=parts[1],
      target=parts[2],
      total=parts[0] + parts[1] + parts[2],
      bc=embedding.bc.item(),
      kl_to_unit_prior=embedding.kl_unit.item(),
      skill_prior_kl=embedding.kl_prior.item(),
      reconstruction=reconstruction.item(),
      target_prediction=prediction.item(),
  )
  return total, breakdown
