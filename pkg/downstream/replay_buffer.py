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

"""Bounded ring buffer of skill-level transitions."""
from typing import NamedTuple

import numpy as np

from utils import errors


class HLTransition(NamedTuple):
  """One executed skill.

  Attributes:
    state: observation where the skill started.
    skill: z in (-1, 1)^Z.
    reward: discounted low-level reward accumulated over the skill.
    steps: executed low-level steps k.
    next_state: observation where the skill stopped.
    done: the task reached a terminal (success) state during the skill.
  """

  state: np.ndarray
  skill: np.ndarray
  reward: float
  steps: int
  next_state: np.ndarray
  done: bool


class TransitionBatch(NamedTuple):
  states: np.ndarray
  skills: np.ndarray
  rewards: np.ndarray
  steps: np.ndarray
  next_states: np.ndarray
  dones: np.ndarray

  @property
  def size(self) -> int:
    return len(self.rewards)


def stack(transitions) -> TransitionBatch:
  """Batch of explicit transitions, in order."""
  if not transitions:
    raise errors.PreconditionError('cannot batch zero transitions')
  return TransitionBatch(
      states=np.stack([t.state for t in transitions]).astype(np.float64),
      skills=np.stack([t.skill for t in transitions]).astype(np.float64),
      rewards=np.array([t.reward for t in transitions], dtype=np.float64),
      steps=np.array([t.steps for t in transitions], dtype=np.int64),
      next_states=np.stack([t.next_state for t in transitions]).astype(
          np.float64
      ),
      dones=np.array([t.done for t in transitions], dtype=np.float64),
  )


class SkillReplayBuffer:
  """Keeps the most recent `capacity` transitions."""

  def __init__(self, capacity: int, state_dim: int, skill_dim: int):
    if capacity < 1:
      raise errors.ConfigurationError('replay capacity must be >= 1')
    self.capacity = capacity
    self.states = np.zeros((capacity, state_dim))
    self.skills = np.zeros((capacity, skill_dim))
    self.rewards = np.zeros(capacity)
    self.steps = np.zeros(capacity, dtype=np.int64)
    self.next_states = np.zeros((capacity, state_dim))
    self.dones = np.zeros(capacity)
    self.cursor = 0
    self.count = 0

  def __len__(self) -> int:
    return self.count

  def add(self, transition: HLTransition) -> None:
    """Raises PreconditionError on k < 1 or a non-finite reward."""
    if transition.steps < 1:
      raise errors.PreconditionError('a skill executes at least one step')
    if not np.isfinite(transition.reward):
      raise errors.PreconditionError('non-finite skill reward')
    i = self.cursor
    self.states[i] = transition.state
    self.skills[i] = transition.skill
    self.rewards[i] = transition.reward
    self.steps[i] = transition.steps
    self.next_states[i] = transition.next_state
    self.dones[i] = float(transition.done)
    self.cursor = (self.cursor + 1) % self.capacity
    self.count = min(self.count + 1, self.capacity)

  def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
    if not self.count:
      raise errors.PreconditionError('cannot sample an empty replay buffer')
    idx = rng.integers(self.count, size=batch_size)
    return TransitionBatch(
        self.states[idx], self.skills[idx], self.rewards[idx],
        self.steps[idx], self.next_states[idx], self.dones[idx],
    )
