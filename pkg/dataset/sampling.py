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

"""Skill-window, key-state and negative sampling."""
from typing import List, NamedTuple, Tuple, Union

import numpy as np

from dataset import trajectory_dataset
from utils import errors

RngLike = Union[np.random.Generator, int]
DECODER_TRAINING_MODES = ('closed_loop', 'key_states')


def as_rng(rng: RngLike) -> np.random.Generator:
  if isinstance(rng, np.random.Generator):
    return rng
  return np.random.default_rng(rng)


class SkillWindow(NamedTuple):
  """A skill instance: steps [start, start + length) of one episode."""

  episode: int
  start: int
  length: int
  key_indices: Tuple[int, ...]


class StateRef(NamedTuple):
  episode: int
  index: int
  state: np.ndarray


class SkillBatch(NamedTuple):
  """Arrays for one training step; float64, batch axis B.

  Attributes:
    windows: the sampled windows.
    key_states: (k, B, S) encoder input, ordered by time.
    positive: (B, S) last interior key state.
    negative: (B, S) one state outside each window.
    target: (B, S) state at start + length, or the final state.
    step_states: (N, S) decoder inputs.
    step_actions: (N, A) decoder targets.
    step_window: (N,) window index of each decoder step.
  """

  windows: List[SkillWindow]
  key_states: np.ndarray
  positive: np.ndarray
  negative: np.ndarray
  target: np.ndarray
  step_states: np.ndarray
  step_actions: np.ndarray
  step_window: np.ndarray

  @property
  def start_states(self) -> np.ndarray:
    return self.key_states[0]

  @property
  def size(self) -> int:
    return len(self.windows)


def select_key_states(
    t: int, length: int, rng: RngLike, num_key_states: int = 4
) -> Tuple[int, ...]:
  """First and last step of the window plus sorted interior samples.

  Interior offsets are drawn uniformly without replacement from
  {1, ..., length - 2}.

  Raises:
    PreconditionError: length < num_key_states.
  """
  if num_key_states < 2:
    raise errors.PreconditionError('need at least two key states')
  if length < num_key_states:
    raise errors.PreconditionError(
        'window of length {} cannot hold {} key states'.format(
            length, num_key_states
        )
    )
  interior = np.sort(
      as_rng(rng).choice(
          np.arange(1, length - 1), size=num_key_states - 2, replace=False
      )
  )
  return (t, *(t + int(a) for a in interior), t + length - 1)


def sample_skill_window(
    dataset: trajectory_dataset.TrajectoryDataset,
    rng: RngLike,
    min_length: int = 4,
    num_key_states: int = 4,
    truncate: bool = True,
) -> SkillWindow:
  """Uniform over valid (episode, start) pairs (see valid_starts).

  Raises:
    DatasetError: no start has a truncated window of at least min_length.
  """
  rng = as_rng(rng)
  episodes, starts = dataset.valid_starts(
      max(min_length, num_key_states), truncate
  )
  if not len(episodes):
    raise errors.DatasetError(
        'no skill window of length >= {} in dataset'.format(min_length)
    )
  pick = int(rng.integers(len(episodes)))
  episode, start = int(episodes[pick]), int(starts[pick])
  length = dataset[episode].effective_length(start)
  return SkillWindow(
      episode,
      start,
      length,
      select_key_states(start, length, rng, num_key_states),
  )


def sample_negative(
    dataset: trajectory_dataset.TrajectoryDataset,
    window: SkillWindow,
    rng: RngLike,
) -> StateRef:
  """Uniform over every state outside the window's index range.

  Raises:
    SamplingError: the window covers the whole dataset.
  """
  excluded_start = int(dataset.offsets[window.episode]) + window.start
  eligible = dataset.total_steps - window.length
  if eligible <= 0:
    raise errors.SamplingError('no state lies outside the anchor window')
  index = int(as_rng(rng).integers(eligible))
  if index >= excluded_start:
    index += window.length
  episode, t = dataset.locate(index)
  return StateRef(episode, t, dataset[episode].states[t])


def sample_batch(
    dataset: trajectory_dataset.TrajectoryDataset,
    batch_size: int,
    rng: RngLike,
    min_length: int = 4,
    num_key_states: int = 4,
    decoder_training: str = 'closed_loop',
    truncate: bool = True,
) -> SkillBatch:
  """Windows, key states, contrastive pairs and decoder steps for one step."""
  if batch_size < 1:
    raise errors.PreconditionError('batch_size must be >= 1')
  if decoder_training not in DECODER_TRAINING_MODES:
    raise errors.ConfigurationError(
        'unknown decoder_training {}'.format(decoder_training)
    )
  rng = as_rng(rng)
  windows, negatives, targets = [], [], []
  step_states, step_actions, step_window = [], [], []
  for b in range(batch_size):
    window = sample_skill_window(
        dataset, rng, min_length, num_key_states, truncate
    )
    trajectory = dataset[window.episode]
    windows.append(window)
    negatives.append(sample_negative(dataset, window, rng).state)
    targets.append(
        trajectory.states[min(window.start + window.length, len(trajectory) - 1)]
    )
    if decoder_training == 'closed_loop':
      steps = np.arange(window.start, window.start + window.length)
    else:
      steps = np.asarray(window.key_indices)
    step_states.append(trajectory.states[steps])
    step_actions.append(trajectory.actions[steps])
    step_window.append(np.full(len(steps), b, dtype=np.int64))

  key_states = np.stack([
      np.stack([dataset[w.episode].states[w.key_indices[k]] for w in windows])
      for k in range(num_key_states)
  ]).astype(np.float64)
  return SkillBatch(
      windows=windows,
      key_states=key_states,
      positive=key_states[-2],
      negative=np.stack(negatives).astype(np.float64),
      target=np.stack(targets).astype(np.float64),
      step_states=np.concatenate(step_states).astype(np.float64),
      step_actions=np.concatenate(step_actions).astype(np.float64),
      step_window=np.concatenate(step_window),
  )
