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

"""Offline trajectories with per-timestep skill-length labels."""
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils import errors


class Trajectory:
  """One episode: aligned (s_t, a_t) pairs and the skill length H_t per step.

  States and actions are float32, the on-disk precision. skill_length is
  int32 and is the only field a relabel pass rewrites.
  """

  def __init__(
      self,
      states: np.ndarray,
      actions: np.ndarray,
      skill_length: Optional[np.ndarray] = None,
      initial_skill_length: int = 10,
  ):
    self.states = np.ascontiguousarray(states, dtype=np.float32)
    self.actions = np.ascontiguousarray(actions, dtype=np.float32)
    if self.states.ndim != 2 or self.actions.ndim != 2:
      raise errors.PreconditionError('states and actions must be 2-D arrays')
    if len(self.states) != len(self.actions):
      raise errors.PreconditionError(
          'states ({}) and actions ({}) are not aligned'.format(
              len(self.states), len(self.actions)
          )
      )
    if skill_length is None:
      skill_length = np.full(len(self.states), initial_skill_length)
    self.skill_length = np.ascontiguousarray(skill_length, dtype=np.int32)
    if self.skill_length.shape != (len(self.states),):
      raise errors.PreconditionError('skill_length must have one entry per step')

  def __len__(self) -> int:
    return len(self.states)

  @property
  def state_dim(self) -> int:
    return self.states.shape[1]

  @property
  def action_dim(self) -> int:
    return self.actions.shape[1]

  def effective_length(self, t: int) -> int:
    """H_t truncated at the episode end."""
    return int(min(self.skill_length[t], len(self) - t))


class TrajectoryDataset:
  """A non-empty list of trajectories with uniform dimensions.

  Attributes:
    trajectories: the episodes.
    env_name: registry name of the environment that produced them.
    metadata: provenance (seed, tier, generator version, returns, ...).
    labels_version: incremented whenever skill lengths change; samplers key
      their caches on it.
  """

  def __init__(
      self,
      trajectories: Sequence[Trajectory],
      env_name: str,
      metadata: Optional[Dict[str, Any]] = None,
  ):
    self.trajectories: List[Trajectory] = list(trajectories)
    self.env_name = env_name
    self.metadata = dict(metadata or {})
    self.labels_version = 0
    if not self.trajectories:
      raise errors.DatasetError('dataset has no trajectories')
    dims = {(t.state_dim, t.action_dim) for t in self.trajectories}
    if len(dims) != 1:
      raise errors.DatasetError('trajectories disagree on dims: {}'.format(dims))
    lengths = np.array([len(t) for t in self.trajectories], dtype=np.int64)
    self.offsets = np.concatenate([[0], np.cumsum(lengths)])
    self._start_cache = {}

  def __len__(self) -> int:
    return len(self.trajectories)

  def __getitem__(self, episode: int) -> Trajectory:
    return self.trajectories[episode]

  @property
  def state_dim(self) -> int:
    return self.trajectories[0].state_dim

  @property
  def action_dim(self) -> int:
    return self.trajectories[0].action_dim

  @property
  def total_steps(self) -> int:
    return int(self.offsets[-1])

  def episode_lengths(self) -> np.ndarray:
    return np.diff(self.offsets)

  def all_states(self) -> np.ndarray:
    return np.concatenate([t.states for t in self.trajectories])

  def all_skill_lengths(self) -> np.ndarray:
    return np.concatenate([t.skill_length for t in self.trajectories])

  def locate(self, global_index: int):
    """(episode, t) of a flat state index."""
    episode = int(np.searchsorted(self.offsets, global_index, side='right')) - 1
    return episode, int(global_index - self.offsets[episode])

  def valid_starts(
      self, min_length: int, truncate: bool = False
  ) -> Tuple[np.ndarray, np.ndarray]:
    """(episodes, starts) usable as skill windows.

    Without truncation a start is valid when t + H_t <= T. With truncation,
    windows overrunning the episode are cut at T and kept while they still
    span at least min_length steps.
    """
    key = (self.labels_version, min_length, truncate)
    if key not in self._start_cache:
      episodes, starts = [], []
      for e, trajectory in enumerate(self.trajectories):
        t = np.arange(len(trajectory))
        remaining = len(trajectory) - t
        effective = np.minimum(trajectory.skill_length, remaining)
        fits = truncate | (trajectory.skill_length <= remaining)
        valid = np.flatnonzero((effective >= min_length) & fits)
        episodes.append(np.full(len(valid), e, dtype=np.int64))
        starts.append(valid.astype(np.int64))
      self._start_cache = {
          key: (np.concatenate(episodes), np.concatenate(starts))
      }
    return self._start_cache[key]

  def set_skill_lengths(self, episode: int, lengths: np.ndarray) -> None:
    trajectory = self.trajectories[episode]
    lengths = np.asarray(lengths, dtype=np.int32)
    if lengths.shape != trajectory.skill_length.shape:
      raise errors.PreconditionError(
          'episode {} needs {} labels, got {}'.format(
              episode, len(trajectory), lengths.shape
          )
      )
    trajectory.skill_length = lengths.copy()
    self.labels_version += 1
