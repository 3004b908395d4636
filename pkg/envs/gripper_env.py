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

"""Planar gripper tasks on the unit square.

GripperEnv: pick an object up and drop it at a fixed target.
KitchenEnv: close the gripper once at each of four stations, in any order.

Actions are (dx, dy, dgrip). Closing means grip crossing 0.5 from below.
"""
import numpy as np

from envs import env_interface

MOVE_SCALE = 0.04
GRIP_SCALE = 0.6
GRIP_CLOSED = 0.5
GRASP_RADIUS = 0.05
ARRIVAL_RADIUS = 0.01

GRIPPER_START = np.array([0.5, 0.5])
OBJECT_SPAWN_LOW = np.array([0.1, 0.1])
OBJECT_SPAWN_HIGH = np.array([0.4, 0.9])
TARGET = np.array([0.8, 0.5])

STATIONS = np.array([[0.2, 0.2], [0.2, 0.8], [0.8, 0.8], [0.8, 0.2]])
KITCHEN_START_LOW = np.array([0.4, 0.4])
KITCHEN_START_HIGH = np.array([0.6, 0.6])


def _move_gripper(observation: np.ndarray, action: np.ndarray):
  position = np.clip(observation[:2] + MOVE_SCALE * action[:2], 0.0, 1.0)
  grip = float(np.clip(observation[2] + GRIP_SCALE * action[2], 0.0, 1.0))
  closing = observation[2] <= GRIP_CLOSED < grip
  return position, grip, closing


def _approach(position: np.ndarray, target: np.ndarray) -> np.ndarray:
  return np.clip((target - position) / MOVE_SCALE, -1.0, 1.0)


class GripperEnv(env_interface.EnvInterface):
  """Pick-and-place: state (gx, gy, grip, ox, oy, holding)."""

  def __init__(self, max_episode_steps: int = 200):
    self._spec = env_interface.EnvSpec(
        name='gripper',
        state_dim=6,
        action_dim=3,
        termination_features=(0, 1, 2),
        distance_threshold=0.02,
        max_episode_steps=max_episode_steps,
        skill_dim=2,
        batch_size=128,
        family='manipulation',
    )
    self._spec.validate()

  @property
  def spec(self) -> env_interface.EnvSpec:
    return self._spec

  def reset(self, seed: int) -> env_interface.EnvState:
    rng = np.random.default_rng(seed)
    obj = rng.uniform(OBJECT_SPAWN_LOW, OBJECT_SPAWN_HIGH)
    return env_interface.EnvState(
        np.array([*GRIPPER_START, 0.0, *obj, 0.0], dtype=np.float64), 0
    )

  def step(
      self, state: env_interface.EnvState, action: np.ndarray
  ) -> env_interface.StepResult:
    action, clipped = self.clip_action(action)
    obs = state.observation
    position, grip, closing = _move_gripper(obs, action)
    obj, holding = obs[3:5].copy(), obs[5] > 0.5
    if holding:
      if grip <= GRIP_CLOSED:
        holding = False
      obj = position.copy()
    elif closing and np.linalg.norm(position - obj) <= GRASP_RADIUS:
      holding = True
      obj = position.copy()
    observation = np.array(
        [*position, grip, *obj, 1.0 if holding else 0.0], dtype=np.float64
    )
    success = self.is_success(observation)
    step_count = state.step_count + 1
    return env_interface.StepResult(
        env_interface.EnvState(observation, step_count),
        1.0 if success else 0.0,
        success or step_count >= self.spec.max_episode_steps,
        {'clipped': clipped, 'success': success},
    )

  def is_success(self, observation: np.ndarray) -> bool:
    return bool(
        observation[5] < 0.5
        and np.linalg.norm(observation[3:5] - TARGET) <= GRASP_RADIUS
    )

  def pick_and_place_action(self, observation: np.ndarray) -> np.ndarray:
    """Move to the object open, close, carry to the target, open."""
    position, grip = observation[:2], observation[2]
    if observation[5] > 0.5:
      move = _approach(position, TARGET)
      arrived = np.linalg.norm(TARGET - position) <= ARRIVAL_RADIUS
      return np.array([*move, -1.0 if arrived else 1.0])
    obj = observation[3:5]
    move = _approach(position, obj)
    arrived = np.linalg.norm(obj - position) <= ARRIVAL_RADIUS
    close = arrived and grip <= GRIP_CLOSED
    return np.array([*move, 1.0 if close else -1.0])

  def make_expert(self, rng: np.random.Generator) -> env_interface.ExpertFn:
    del rng
    return self.pick_and_place_action


class KitchenEnv(env_interface.EnvInterface):
  """Four stations; state (gx, gy, grip, done_1..done_4).

  Each station completes the first time the gripper closes within 0.05 of it.
  Every newly completed station is worth 0.25; the episode succeeds when all
  four are complete.
  """

  def __init__(self, max_episode_steps: int = 280):
    self._spec = env_interface.EnvSpec(
        name='kitchen',
        state_dim=3 + len(STATIONS),
        action_dim=3,
        termination_features=(0, 1, 2),
        distance_threshold=0.1,
        max_episode_steps=max_episode_steps,
        skill_dim=5,
        batch_size=128,
        family='manipulation',
    )
    self._spec.validate()

  @property
  def spec(self) -> env_interface.EnvSpec:
    return self._spec

  def reset(self, seed: int) -> env_interface.EnvState:
    rng = np.random.default_rng(seed)
    start = rng.uniform(KITCHEN_START_LOW, KITCHEN_START_HIGH)
    return env_interface.EnvState(
        np.concatenate([start, [0.0], np.zeros(len(STATIONS))]), 0
    )

  def step(
      self, state: env_interface.EnvState, action: np.ndarray
  ) -> env_interface.StepResult:
    action, clipped = self.clip_action(action)
    obs = state.observation
    position, grip, closing = _move_gripper(obs, action)
    flags = obs[3:].copy()
    reward = 0.0
    if closing:
      distances = np.linalg.norm(STATIONS - position, axis=1)
      for i in np.flatnonzero((distances <= GRASP_RADIUS) & (flags < 0.5)):
        flags[i] = 1.0
        reward += 1.0 / len(STATIONS)
    observation = np.concatenate([position, [grip], flags])
    success = self.is_success(observation)
    step_count = state.step_count + 1
    return env_interface.StepResult(
        env_interface.EnvState(observation, step_count),
        reward,
        success or step_count >= self.spec.max_episode_steps,
        {'clipped': clipped, 'success': success, 'completed': int(flags.sum())},
    )

  def is_success(self, observation: np.ndarray) -> bool:
    return bool(np.all(observation[3:] > 0.5))

  def make_expert(self, rng: np.random.Generator) -> env_interface.ExpertFn:
    """Visits the stations in an episode-specific random order."""
    order = rng.permutation(len(STATIONS))

    def act(observation: np.ndarray) -> np.ndarray:
      position, grip = observation[:2], observation[2]
      pending = [i for i in order if observation[3 + i] < 0.5]
      if not pending:
        return np.zeros(3)
      station = STATIONS[pending[0]]
      move = _approach(position, station)
      arrived = np.linalg.norm(station - position) <= ARRIVAL_RADIUS
      close = arrived and grip <= GRIP_CLOSED
      return np.array([*move, 1.0 if close else -1.0])

    return act
