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

"""Environment lookup by name."""
from envs import env_interface
from envs import gripper_env
from envs import point_maze_env
from utils import errors

_FACTORIES = {
    'pointmaze-medium': point_maze_env.medium,
    'pointmaze-large': point_maze_env.large,
    'gripper': gripper_env.GripperEnv,
    'kitchen': gripper_env.KitchenEnv,
}

ENV_NAMES = tuple(_FACTORIES)


def make_env(name: str) -> env_interface.EnvInterface:
  if name not in _FACTORIES:
    raise errors.ConfigurationError(
        'unknown env {}, expected one of {}'.format(name, ENV_NAMES)
    )
  return _FACTORIES[name]()
