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

"""Point-mass navigation in a walled grid maze.

State is (x, y, vx, vy) in cell units: the cell in row r, column c spans
[c, c+1] x [r, r+1]. The sparse reward is 1 on reaching the goal cell center.
"""
import collections
from typing import Dict, Sequence, Tuple

import numpy as np

from envs import env_interface
from utils import errors

DT = 0.1
DRAG = 0.9
ACCEL = 0.5
MAX_SPEED = 2.0
GOAL_RADIUS = 0.5
_WALL_GAP = 1e-6

NAV_SPEED = 1.5
NAV_CENTERING_GAIN = 2.0

MEDIUM_LAYOUT = (
    '########',
    '#S.##..#',
    '#..#...#',
    '##...###',
    '#..#...#',
    '#.#..#.#',
    '#...#.G#',
    '########',
)

LARGE_LAYOUT = (
    '############',
    '#S...#.....#',
    '#.##.#.#.#.#',
    '#......#...#',
    '#.####.###.#',
    '#..#.#.....#',
    '##.#.#.#.###',
    '#..#...#..G#',
    '############',
)

_NEIGHBOURS = ((0, 1), (1, 0), (0, -1), (-1, 0))


class PointMazeEnv(env_interface.EnvInterface):
  """Point mass with drag in a maze; fixed start, fixed goal."""

  def __init__(self, name: str, layout: Sequence[str], max_episode_steps: int):
    self.layout = tuple(layout)
    self.walls = np.array(
        [[ch == '#' for ch in row] for row in self.layout], dtype=bool
    )
    if len({len(row) for row in self.layout}) != 1:
      raise errors.ConfigurationError('maze {} is not rectangular'.format(name))
    self.start_cell = self._find('S')
    self.goal_cell = self._find('G')
    self.goal = np.array(
        [self.goal_cell[1] + 0.5, self.goal_cell[0] + 0.5], dtype=np.float64
    )
    self.distance_to_goal = self._bfs_distances()
    if self.start_cell not in self.distance_to_goal:
      raise errors.ConfigurationError(
          'maze {} has no path from start to goal'.format(name)
      )
    self._spec = env_interface.EnvSpec(
        name=name,
        state_dim=4,
        action_dim=2,
        termination_features=(0, 1),
        distance_threshold=0.5,
        max_episode_steps=max_episode_steps,
        skill_dim=5,
        batch_size=256,
        family='maze',
    )
    self._spec.validate()

  @property
  def spec(self) -> env_interface.EnvSpec:
    return self._spec

  def _find(self, marker: str) -> Tuple[int, int]:
    for r, row in enumerate(self.layout):
      c = row.find(marker)
      if c >= 0:
        return (r, c)
    raise errors.ConfigurationError('maze has no {} cell'.format(marker))

  def _bfs_distances(self) -> Dict[Tuple[int, int], int]:
    distances = {self.goal_cell: 0}
    queue = collections.deque([self.goal_cell])
    while queue:
      r, c = queue.popleft()
      for dr, dc in _NEIGHBOURS:
        cell = (r + dr, c + dc)
        if cell not in distances and self.is_free(cell):
          distances[cell] = distances[(r, c)] + 1
          queue.append(cell)
    return distances

  def is_free(self, cell: Tuple[int, int]) -> bool:
    r, c = cell
    rows, cols = self.walls.shape
    return 0 <= r < rows and 0 <= c < cols and not self.walls[r, c]

  @staticmethod
  def cell_of(position: np.ndarray) -> Tuple[int, int]:
    return (int(np.floor(position[1])), int(np.floor(position[0])))

  def reset(self, seed: int) -> env_interface.EnvState:
    del seed  # The start is fixed.
    r, c = self.start_cell
    return env_interface.EnvState(
        np.array([c + 0.5, r + 0.5, 0.0, 0.0], dtype=np.float64), 0
    )

  def _move_axis(
      self, position: np.ndarray, velocity: np.ndarray, axis: int
  ) -> None:
    """Advances one coordinate; stops at the face of a wall cell."""
    old = position[axis]
    new = old + DT * velocity[axis]
    probe = position.copy()
    probe[axis] = new
    if self.is_free(self.cell_of(probe)):
      position[axis] = new
      return
    if new > old:
      position[axis] = np.floor(new) - _WALL_GAP
    else:
      position[axis] = np.floor(old) + _WALL_GAP
    velocity[axis] = 0.0

  def step(
      self, state: env_interface.EnvState, action: np.ndarray
  ) -> env_interface.StepResult:
    action, clipped = self.clip_action(action)
    position = state.observation[:2].copy()
    velocity = np.clip(
        DRAG * state.observation[2:] + ACCEL * action, -MAX_SPEED, MAX_SPEED
    )
    self._move_axis(position, velocity, 0)
    self._move_axis(position, velocity, 1)
    observation = np.concatenate([position, velocity])
    success = self.is_success(observation)
    step_count = state.step_count + 1
    done = success or step_count >= self.spec.max_episode_steps
    return env_interface.StepResult(
        env_interface.EnvState(observation, step_count),
        1.0 if success else 0.0,
        done,
        {'clipped': clipped, 'success': success},
    )

  def is_success(self, observation: np.ndarray) -> bool:
    return bool(np.linalg.norm(observation[:2] - self.goal) <= GOAL_RADIUS)

  def next_cell(self, cell: Tuple[int, int]) -> Tuple[int, int]:
    """Free neighbour one step closer to the goal (first in fixed order)."""
    here = self.distance_to_goal.get(cell)
    if here is None or here == 0:
      return cell
    for dr, dc in _NEIGHBOURS:
      neighbour = (cell[0] + dr, cell[1] + dc)
      if self.distance_to_goal.get(neighbour, here) < here:
        return neighbour
    return cell

  def navigator_action(self, observation: np.ndarray) -> np.ndarray:
    """Waypoint navigator: follow the BFS gradient along cell center lines."""
    position, velocity = observation[:2], observation[2:]
    cell = self.cell_of(position)
    target = self.next_cell(cell)
    if target == cell:
      desired = np.clip(
          NAV_CENTERING_GAIN * (self.goal - position), -NAV_SPEED, NAV_SPEED
      )
    else:
      center = np.array([cell[1] + 0.5, cell[0] + 0.5])
      direction = np.array(
          [target[1] - cell[1], target[0] - cell[0]], dtype=np.float64
      )
      correction = NAV_CENTERING_GAIN * (center - position)
      desired = NAV_SPEED * direction + correction * (direction == 0)
    return np.clip((desired - DRAG * velocity) / ACCEL, -1.0, 1.0)

  def make_expert(self, rng: np.random.Generator) -> env_interface.ExpertFn:
    del rng  # The navigator is deterministic.
    return self.navigator_action


def medium() -> PointMazeEnv:
  return PointMazeEnv('pointmaze-medium', MEDIUM_LAYOUT, max_episode_steps=300)


def large() -> PointMazeEnv:
  return PointMazeEnv('pointmaze-large', LARGE_LAYOUT, max_episode_steps=500)
