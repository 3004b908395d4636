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

"""Skill extraction loop: sample, compute the total loss, Adam, relabel."""
import time
from typing import List, NamedTuple, Optional

import numpy as np

from dataset import sampling
from dataset import trajectory_dataset
from diffcore import optim
from diffcore import tensor
from relabel import skill_length_relabeler
from skillmodel import losses
from skillmodel import skill_model
from utils import csv_table
from utils import errors
from utils import logger

LOSS_CSV_FIELDS = ('step',) + losses.LossBreakdown.CSV_FIELDS


class TrainingResult(NamedTuple):
  loss_rows: List[List[float]]
  reports: List[skill_length_relabeler.RelabelReport]


class SkillTrainer:
  """Owns the model parameters and the dataset labels during training.

  Attributes:
    model: the SkillModel being trained; its params are replaced every step.
    dataset: the dataset whose skill lengths relabel passes rewrite.
    reports: one RelabelReport per completed pass.
    last_breakdown: LossBreakdown of the last finite step.
  """

  def __init__(
      self,
      model: skill_model.SkillModel,
      dataset: trajectory_dataset.TrajectoryDataset,
      config: losses.TrainConfig,
      relabel_config: skill_length_relabeler.RelabelConfig,
      seed: int = 0,
      default_batch_size: int = 256,
  ):
    if relabel_config.min_length < model.config.num_key_states:
      raise errors.ConfigurationError(
          'relabel.min_length must be >= model.num_key_states'
      )
    if (dataset.state_dim != model.config.state_dim
        or dataset.action_dim != model.config.action_dim):
      raise errors.PreconditionError(
          'dataset dims ({}, {}) do not match the model ({}, {})'.format(
              dataset.state_dim, dataset.action_dim,
              model.config.state_dim, model.config.action_dim,
          )
      )
    self.model = model
    self.dataset = dataset
    self.config = config
    self.relabel_config = relabel_config
    self.batch_size = config.batch_size or default_batch_size
    self.rng = np.random.default_rng(seed)
    self.optimizer = optim.adam_init(model.params)
    self.reports: List[skill_length_relabeler.RelabelReport] = []
    self.last_breakdown: Optional[losses.LossBreakdown] = None

  def sample_batch(self) -> sampling.SkillBatch:
    return sampling.sample_batch(
        self.dataset,
        self.batch_size,
        self.rng,
        min_length=self.relabel_config.min_length,
        num_key_states=self.model.config.num_key_states,
        decoder_training=self.model.config.decoder_training,
        truncate=self.config.truncate_windows,
    )

  def evaluate(
      self, batch: sampling.SkillBatch, noise: np.ndarray
  ) -> losses.LossBreakdown:
    """Loss values on a batch with the current parameters, no update."""
    _, breakdown = losses.total_loss(
        self.model, self.model.constants(), batch, self.config, noise
    )
    return breakdown

  def should_relabel(self, step_index: int) -> bool:
    return (
        self.config.relabel_enabled
        and step_index > 0
        and step_index % self.config.relabel_interval == 0
    )

  def train_step(self, step_index: int) -> losses.LossBreakdown:
    """One Adam step on all networks, then a relabel pass when due.

    Raises:
      TrainingError: the loss or a gradient is not finite. The error carries
        the previous step's breakdown.
    """
    batch = self.sample_batch()
    noise = self.rng.standard_normal((batch.size, self.model.config.skill_dim))
    tape = tensor.Tape(self.model.params)
    loss, breakdown = losses.total_loss(
        self.model, tape.leaves, batch, self.config, noise
    )
    if not breakdown.is_finite():
      raise errors.TrainingError(
          'non-finite loss at step {}: {}'.format(step_index, breakdown),
          last_breakdown=self.last_breakdown,
      )
    grads = tensor.backprop(tape, loss)
    try:
      params, self.optimizer = optim.adam_step(
          self.optimizer, self.model.params, grads, self.config.learning_rate
      )
    except errors.TrainingError as e:
      raise errors.TrainingError(
          'step {}: {}'.format(step_index, e),
          last_breakdown=self.last_breakdown,
      ) from e
    self.model.set_params(params)
    self.last_breakdown = breakdown

    if self.should_relabel(step_index):
      logger.Logger.get_instance().log(
          'Relabeling skill lengths after step {}'.format(step_index)
      )
      self.reports.append(
          skill_length_relabeler.relabel_dataset(
              self.model,
              self.dataset,
              self.relabel_config,
              pass_index=len(self.reports),
              step=step_index,
          )
      )
    return breakdown

  def train(
      self,
      loss_csv_path: Optional[str] = None,
      checkpoint_prefix: Optional[str] = None,
  ) -> TrainingResult:
    """Runs steps 1..max_steps; writes the loss CSV even when aborted."""
    log = logger.Logger.get_instance()
    rows: List[List[float]] = []
    started = time.time()
    try:
      for step in range(1, self.config.max_steps + 1):
        breakdown = self.train_step(step)
        rows.append([step] + breakdown.as_row())
        if step % self.config.log_interval == 0:
          log.log_indented(
              'step {}: total {:.4f} (embedding {:.4f}, contrastive {:.4f}, '
              'target {:.4f}) {:.1f}s'.format(
                  step, breakdown.total, breakdown.embedding,
                  breakdown.contrastive, breakdown.target,
                  time.time() - started,
              )
          )
        if (checkpoint_prefix and self.config.checkpoint_interval
            and step % self.config.checkpoint_interval == 0):
          skill_model.save_model(
              self.model, '{}_step{}'.format(checkpoint_prefix, step),
              {'step': step},
          )
    finally:
      if loss_csv_path:
        csv_table.write_csv(loss_csv_path, LOSS_CSV_FIELDS, rows)
    return TrainingResult(rows, list(self.reports))
