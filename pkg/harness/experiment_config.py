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

"""Experiment configuration as JSON with flat dotted keys.

  {"data.env": "gripper", "train.max_steps": 20000, "run.seeds": [0, 1, 2]}

Keys missing from a file keep their defaults; unknown keys and values of the
wrong type are rejected. Zero-valued sizes (model dims, batch sizes, the
execution step cap) are derived from the environment when a stage runs.
"""
import collections
import dataclasses
import hashlib
import json
import os
import typing
from typing import Any, Dict, List, Mapping, Sequence

from diffcore import checkpoint
from downstream import cem_planner
from downstream import downstream_trainer
from downstream import hl_policy
from downstream import skill_dynamics
from downstream import skill_executor
from envs import registry
from envs import scripted_policy
from relabel import skill_length_relabeler
from skillmodel import losses
from skillmodel import skill_model
from utils import errors


@dataclasses.dataclass
class DataConfig:
  env: str = 'pointmaze-medium'
  tier: str = 'expert'
  episodes: int = 200
  seed: int = 0
  initial_skill_length: int = 10

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if self.env not in registry.ENV_NAMES:
      raise errors.ConfigurationError(
          'data.env must be one of {}'.format(registry.ENV_NAMES)
      )
    if self.tier not in scripted_policy.TIERS:
      raise errors.ConfigurationError(
          'data.tier must be one of {}'.format(scripted_policy.TIERS)
      )
    if self.episodes < 1 or self.initial_skill_length < 1:
      raise errors.ConfigurationError(
          'data.episodes and data.initial_skill_length must be >= 1'
      )


@dataclasses.dataclass
class RunConfig:
  seeds: List[int] = dataclasses.field(default_factory=lambda: [0, 1, 2, 3, 4])
  output_dir: str = 'runs/default'
  eval_workers: int = 1

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    if not self.seeds or len(set(self.seeds)) != len(self.seeds):
      raise errors.ConfigurationError('run.seeds must be non-empty and unique')
    if not self.output_dir:
      raise errors.ConfigurationError('run.output_dir must be set')
    if self.eval_workers < 1:
      raise errors.ConfigurationError('run.eval_workers must be >= 1')


SECTIONS = collections.OrderedDict([
    ('data', DataConfig),
    ('model', skill_model.ModelConfig),
    ('train', losses.TrainConfig),
    ('relabel', skill_length_relabeler.RelabelConfig),
    ('execution', skill_executor.ExecutionConfig),
    ('sac', hl_policy.SacConfig),
    ('model_based', skill_dynamics.ModelBasedConfig),
    ('cem', cem_planner.CEMConfig),
    ('downstream', downstream_trainer.DownstreamConfig),
    ('run', RunConfig),
])


@dataclasses.dataclass
class ExperimentConfig:
  data: DataConfig = dataclasses.field(default_factory=DataConfig)
  model: skill_model.ModelConfig = dataclasses.field(
      default_factory=skill_model.ModelConfig
  )
  train: losses.TrainConfig = dataclasses.field(
      default_factory=losses.TrainConfig
  )
  relabel: skill_length_relabeler.RelabelConfig = dataclasses.field(
      default_factory=skill_length_relabeler.RelabelConfig
  )
  execution: skill_executor.ExecutionConfig = dataclasses.field(
      default_factory=skill_executor.ExecutionConfig
  )
  sac: hl_policy.SacConfig = dataclasses.field(
      default_factory=hl_policy.SacConfig
  )
  model_based: skill_dynamics.ModelBasedConfig = dataclasses.field(
      default_factory=skill_dynamics.ModelBasedConfig
  )
  cem: cem_planner.CEMConfig = dataclasses.field(
      default_factory=cem_planner.CEMConfig
  )
  downstream: downstream_trainer.DownstreamConfig = dataclasses.field(
      default_factory=downstream_trainer.DownstreamConfig
  )
  run: RunConfig = dataclasses.field(default_factory=RunConfig)

  def __post_init__(self):
    if self.relabel.min_length < self.model.num_key_states:
      raise errors.ConfigurationError(
          'relabel.min_length must be >= model.num_key_states'
      )


def _coerce(key: str, value: Any, annotation: Any) -> Any:
  """Checks a JSON value against a dataclass field annotation."""
  if annotation is bool:
    if not isinstance(value, bool):
      raise errors.ConfigurationError('{} must be a boolean'.format(key))
    return value
  if annotation is int:
    if isinstance(value, bool) or not isinstance(value, int):
      raise errors.ConfigurationError('{} must be an integer'.format(key))
    return value
  if annotation is float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
      raise errors.ConfigurationError('{} must be a number'.format(key))
    return float(value)
  if annotation is str:
    if not isinstance(value, str):
      raise errors.ConfigurationError('{} must be a string'.format(key))
    return value
  if typing.get_origin(annotation) in (list, List):
    if not isinstance(value, list):
      raise errors.ConfigurationError('{} must be a list'.format(key))
    (item,) = typing.get_args(annotation)
    return [_coerce(key, v, item) for v in value]
  raise errors.ConfigurationError('{} has an unsupported type'.format(key))


def _field_types(cls) -> Dict[str, Any]:
  return typing.get_type_hints(cls)


def to_flat(config: ExperimentConfig) -> 'collections.OrderedDict[str, Any]':
  flat = collections.OrderedDict()
  for section in SECTIONS:
    for name, value in dataclasses.asdict(getattr(config, section)).items():
      flat['{}.{}'.format(section, name)] = value
  return flat


def from_flat(mapping: Mapping[str, Any]) -> ExperimentConfig:
  """Builds a config from dotted keys over the defaults.

  Raises:
    ConfigurationError: unknown key, wrongly typed or invalid value.
  """
  grouped: Dict[str, Dict[str, Any]] = {s: {} for s in SECTIONS}
  for key, value in mapping.items():
    section, _, name = key.partition('.')
    if section not in SECTIONS or not name:
      raise errors.ConfigurationError('unknown config key {}'.format(key))
    types = _field_types(SECTIONS[section])
    if name not in types:
      raise errors.ConfigurationError('unknown config key {}'.format(key))
    grouped[section][name] = _coerce(key, value, types[name])
  try:
    sections = {s: cls(**grouped[s]) for s, cls in SECTIONS.items()}
  except TypeError as e:
    raise errors.ConfigurationError(str(e)) from e
  return ExperimentConfig(**sections)


def parse(text: str) -> ExperimentConfig:
  try:
    mapping = json.loads(text)
  except json.JSONDecodeError as e:
    raise errors.ConfigurationError('config is not valid JSON: {}'.format(e))
  if not isinstance(mapping, dict):
    raise errors.ConfigurationError('config must be a JSON object')
  return from_flat(mapping)


def serialize(config: ExperimentConfig) -> str:
  return json.dumps(to_flat(config), sort_keys=True, indent=2)


def config_hash(config: ExperimentConfig) -> str:
  return hashlib.sha256(serialize(config).encode('utf-8')).hexdigest()


def load(path: str) -> ExperimentConfig:
  if not os.path.exists(path):
    raise errors.MissingArtifactError('missing config {}'.format(path))
  with open(path, 'r') as f:
    return parse(f.read())


def dump(config: ExperimentConfig, path: str) -> None:
  directory = os.path.dirname(path)
  if directory:
    os.makedirs(directory, exist_ok=True)
  checkpoint.write_atomically(path, serialize(config).encode('utf-8'))


def apply_overrides(
    config: ExperimentConfig, overrides: Sequence[str]
) -> ExperimentConfig:
  """Applies `key=value` overrides; values are read as JSON, else as strings.

  Raises:
    ConfigurationError: malformed override or invalid resulting config.
  """
  flat = to_flat(config)
  for override in overrides:
    key, sep, raw = override.partition('=')
    if not sep:
      raise errors.ConfigurationError(
          'override {} is not key=value'.format(override)
      )
    try:
      value = json.loads(raw)
    except json.JSONDecodeError:
      value = raw
    flat[key.strip()] = value
  return from_flat(flat)
