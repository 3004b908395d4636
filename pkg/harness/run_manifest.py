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

"""run_manifest.json: which stages of a run finished, and what they wrote."""
import dataclasses
import json
import os
from typing import Any, Dict, List, Mapping, Sequence

from diffcore import checkpoint
from utils import errors
from utils import logger

CODE_VERSION = '1.0.0'
MANIFEST_NAME = 'run_manifest.json'


@dataclasses.dataclass
class RunManifest:
  """Stage name -> {'artifacts': {label: path}, 'seconds': wall clock}."""

  config_hash: str
  code_version: str = CODE_VERSION
  stages: Dict[str, Dict[str, Any]] = dataclasses.field(default_factory=dict)

  def artifact(self, stage: str, label: str) -> str:
    try:
      return self.stages[stage]['artifacts'][label]
    except KeyError as e:
      raise errors.MissingArtifactError(
          'stage {} recorded no {}'.format(stage, label)
      ) from e

  def missing(self, expected: Sequence[str]) -> List[str]:
    return [stage for stage in expected if stage not in self.stages]


def manifest_path(run_dir: str) -> str:
  return os.path.join(run_dir, MANIFEST_NAME)


def load_manifest(run_dir: str) -> RunManifest:
  """Raises MissingArtifactError or FormatError."""
  path = manifest_path(run_dir)
  if not os.path.exists(path):
    raise errors.MissingArtifactError('missing run manifest {}'.format(path))
  try:
    with open(path, 'r') as f:
      payload = json.load(f)
    return RunManifest(
        config_hash=payload['config_hash'],
        code_version=payload['code_version'],
        stages=payload['stages'],
    )
  except (json.JSONDecodeError, KeyError, TypeError) as e:
    raise errors.FormatError('malformed run manifest {}: {}'.format(path, e))


def save_manifest(run_dir: str, manifest: RunManifest) -> None:
  os.makedirs(run_dir, exist_ok=True)
  checkpoint.write_atomically(
      manifest_path(run_dir),
      json.dumps(dataclasses.asdict(manifest), sort_keys=True,
                 indent=2).encode('utf-8'),
  )


def record_stage(
    run_dir: str,
    config_hash: str,
    stage: str,
    artifacts: Mapping[str, str],
    seconds: float,
) -> RunManifest:
  """Adds (or replaces) one completed stage and rewrites the manifest.

  A manifest written for another config is started over.
  """
  try:
    manifest = load_manifest(run_dir)
  except errors.MissingArtifactError:
    manifest = RunManifest(config_hash)
  if manifest.config_hash != config_hash:
    logger.Logger.get_instance().warning(
        'Config of {} changed; earlier stages are discarded'.format(run_dir)
    )
    manifest = RunManifest(config_hash)
  manifest.stages[stage] = {
      'artifacts': dict(artifacts),
      'seconds': round(float(seconds), 3),
  }
  save_manifest(run_dir, manifest)
  return manifest
