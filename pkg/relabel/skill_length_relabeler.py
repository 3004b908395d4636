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

"""Rewrites per-step skill lengths H_t from the learned similarity function.

For a start t with skill z_t (encoded from its current window), the scan walks
alpha = 1, 2, ... and compares f(s_t, z_t, s_{t+alpha}) with epsilon. Under
the `first_break` rule the new length is the first alpha whose similarity is
<= epsilon (1 + the episode remainder when it never drops); under `set_max`
it is 1 + the largest alpha above epsilon. Either way the result is clamped
to [min_length, min(max_length, T - t)].
"""
import dataclasses
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from dataset import sampling
from dataset import trajectory_dataset
from skillmodel import skill_model
from utils import csv_table
from utils import errors
from utils import logger

RULES = ('first_break', 'set_max')

REPORT_FIELDS = (
    'pass', 'step', 'count', 'mean', 'median', 'min', 'max',
    'fraction_at_min', 'fraction_at_max', 'mean_abs_change',
)


@dataclasses.dataclass
class RelabelConfig:
  """Threshold, length bounds and scan rule; num_samples 0 relabels all."""

  epsilon: float = 0.0
  min_length: int = 4
  max_length: int = 30
  rule: str = 'first_break'
  num_samples: int = 0
  seed: int = 0

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if self.min_length < 4:
      raise errors.ConfigurationError('relabel.min_length must be >= 4')
    if self.max_length < self.min_length:
      raise errors.ConfigurationError(
          'relabel.max_length must be >= relabel.min_length'
      )
    if self.rule not in RULES:
      raise errors.ConfigurationError(
          'relabel.rule must be one of {}'.format(RULES)
      )
    if self.num_samples < 0:
      raise errors.ConfigurationError('relabel.num_samples must be >= 0')


class RelabelReport(NamedTuple):
  """Lengths before and after one pass, aligned start by start."""

  pass_index: int
  step: int
  old_lengths: np.ndarray
  new_lengths: np.ndarray
  min_length: int
  max_length: int

  @property
  def count(self) -> int:
    return len(self.new_lengths)

  def _stat(self, fn, values) -> float:
    return float(fn(values)) if len(values) else 0.0

  @property
  def mean_abs_change(self) -> float:
    return self._stat(np.mean, np.abs(self.new_lengths - self.old_lengths))

  def summary_row(self) -> List[float]:
    lengths = self.new_lengths
    return [
        self.pass_index,
        self.step,
        self.count,
        self._stat(np.mean, lengths),
        self._stat(np.median, lengths),
        self._stat(np.min, lengths),
        self._stat(np.max, lengths),
        self._stat(np.mean, lengths == self.min_length),
        self._stat(np.mean, lengths == self.max_length),
        self.mean_abs_change,
    ]


def scan_length(
    similarities: Sequence[float], epsilon: float, rule: str = 'first_break'
) -> int:
  """Unclamped new length; similarities[i] belongs to alpha = i + 1.

  first_break returns 1 + the last alpha of the leading run above epsilon,
  which is the alpha of the first break itself (not break + 1). set_max
  returns 1 + the largest alpha above epsilon anywhere in the scan.
  """
  above = np.asarray(similarities, dtype=np.float64) > epsilon
  if rule == 'first_break':
    below = np.flatnonzero(~above)
    return int(below[0]) + 1 if len(below) else len(above) + 1
  if rule == 'set_max':
    hits = np.flatnonzero(above)
    return int(hits[-1]) + 2 if len(hits) else 1
  raise errors.ConfigurationError('unknown relabel rule {}'.format(rule))


def clamp_length(raw: int, remaining: int, config: RelabelConfig) -> int:
  return int(np.clip(raw, config.min_length, min(config.max_length, remaining)))


def window_skills(
    model: skill_model.SkillModel,
    trajectory: trajectory_dataset.Trajectory,
    starts: np.ndarray,
    min_length: int,
    rng: np.random.Generator,
) -> np.ndarray:
  """tanh of the posterior mean for each start's current window, (n, Z)."""
  indices = []
  for t in starts:
    length = min(
        max(int(trajectory.skill_length[t]), min_length), len(trajectory) - t
    )
    indices.append(
        sampling.select_key_states(
            int(t), length, rng, model.config.num_key_states
        )
    )
  key_states = trajectory.states[np.asarray(indices).T].astype(np.float64)
  return np.tanh(model.encode_skill(key_states).mean.value)


def similarity_matrix(
    model: skill_model.SkillModel,
    states: np.ndarray,
    starts: np.ndarray,
    z: np.ndarray,
) -> np.ndarray:
  """f[i, j] = f(s_{starts[i]}, z[i], s_j) for every state j of the episode."""
  states = states.astype(np.float64)
  phi = model.phi_features(states[starts], z).value
  psi = model.psi_features(states).value
  return phi @ psi.T


def relabel_starts(
    model: skill_model.SkillModel,
    trajectory: trajectory_dataset.Trajectory,
    starts: np.ndarray,
    config: RelabelConfig,
    rng: np.random.Generator,
) -> np.ndarray:
  """New lengths for `starts` of one episode, computed from current labels."""
  starts = np.asarray(starts, dtype=np.int64)
  z = window_skills(model, trajectory, starts, config.min_length, rng)
  scores = similarity_matrix(model, trajectory.states, starts, z)
  lengths = np.empty(len(starts), dtype=np.int32)
  for i, t in enumerate(starts):
    raw = scan_length(scores[i, t + 1:], config.epsilon, config.rule)
    lengths[i] = clamp_length(raw, len(trajectory) - int(t), config)
  return lengths


def relabel_one(
    model: skill_model.SkillModel,
    trajectory: trajectory_dataset.Trajectory,
    t: int,
    config: RelabelConfig,
    rng: Optional[sampling.RngLike] = None,
) -> int:
  """H_t' for a single start; the trajectory is left untouched.

  Raises:
    PreconditionError: fewer than min_length steps remain after t, or the
      current H_t is below min_length.
  """
  if not 0 <= t <= len(trajectory) - config.min_length:
    raise errors.PreconditionError(
        'start {} leaves fewer than {} steps in an episode of {}'.format(
            t, config.min_length, len(trajectory)
        )
    )
  if trajectory.skill_length[t] < config.min_length:
    raise errors.PreconditionError(
        'H_{} = {} is below min_length {}'.format(
            t, trajectory.skill_length[t], config.min_length
        )
    )
  rng = sampling.as_rng(config.seed if rng is None else rng)
  return int(relabel_starts(model, trajectory, np.array([t]), config, rng)[0])


def eligible_starts(
    dataset: trajectory_dataset.TrajectoryDataset, min_length: int
):
  """(episodes, starts) with at least min_length steps left in the episode."""
  episodes, starts = [], []
  for e, trajectory in enumerate(dataset.trajectories):
    t = np.arange(max(0, len(trajectory) - min_length + 1), dtype=np.int64)
    episodes.append(np.full(len(t), e, dtype=np.int64))
    starts.append(t)
  return np.concatenate(episodes), np.concatenate(starts)


def clamp_to_episode_end(lengths: np.ndarray) -> np.ndarray:
  """Copy of lengths with H_t cut to the T - t steps left after t."""
  lengths = np.asarray(lengths)
  remaining = len(lengths) - np.arange(len(lengths))
  return np.minimum(lengths, remaining).astype(lengths.dtype)


def relabel_dataset(
    model: skill_model.SkillModel,
    dataset: trajectory_dataset.TrajectoryDataset,
    config: RelabelConfig,
    pass_index: int = 0,
    step: int = 0,
) -> RelabelReport:
  """Relabels every eligible start (or num_samples of them) in place.

  Labels of starts too close to the episode end to be relabeled are cut to
  the steps left, so H_t <= T - t holds for every t after the pass.

  All skills of an episode are encoded from the labels the episode had before
  the pass. Randomness (key-state draws, start subsampling) comes from
  (config.seed, pass_index) only.

  Raises:
    ConfigurationError: min_length is smaller than the model's key-state count.
  """
  if config.min_length < model.config.num_key_states:
    raise errors.ConfigurationError(
        'relabel.min_length {} cannot hold {} key states'.format(
            config.min_length, model.config.num_key_states
        )
    )
  rng = np.random.default_rng([config.seed, pass_index])
  episodes, starts = eligible_starts(dataset, config.min_length)
  if 0 < config.num_samples < len(starts):
    pick = np.sort(rng.choice(len(starts), config.num_samples, replace=False))
    episodes, starts = episodes[pick], starts[pick]

  old, new = [], []
  for e, trajectory in enumerate(dataset.trajectories):
    episode_starts = starts[episodes == e]
    lengths = clamp_to_episode_end(trajectory.skill_length)
    if len(episode_starts):
      relabeled = relabel_starts(model, trajectory, episode_starts, config, rng)
      old.append(trajectory.skill_length[episode_starts].astype(np.int64))
      new.append(relabeled.astype(np.int64))
      lengths[episode_starts] = relabeled
    if not np.array_equal(lengths, trajectory.skill_length):
      dataset.set_skill_lengths(e, lengths)

  report = RelabelReport(
      pass_index=pass_index,
      step=step,
      old_lengths=np.concatenate(old) if old else np.zeros(0, np.int64),
      new_lengths=np.concatenate(new) if new else np.zeros(0, np.int64),
      min_length=config.min_length,
      max_length=config.max_length,
  )
  logger.Logger.get_instance().log_table(REPORT_FIELDS, [report.summary_row()])
  return report


def length_histogram(
    lengths: np.ndarray, min_length: int, max_length: int
) -> List[List[int]]:
  """[length, count] rows for every length in [min_length, max_length]."""
  values = np.asarray(lengths, dtype=np.int64)
  return [
      [length, int(np.sum(values == length))]
      for length in range(min_length, max_length + 1)
  ]


def write_reports_csv(path: str, reports: Sequence[RelabelReport]) -> None:
  csv_table.write_csv(path, REPORT_FIELDS, [r.summary_row() for r in reports])


def write_histogram_csv(
    path: str, lengths: np.ndarray, min_length: int, max_length: int
) -> None:
  csv_table.write_csv(
      path, ('length', 'count'), length_histogram(lengths, min_length, max_length)
  )
