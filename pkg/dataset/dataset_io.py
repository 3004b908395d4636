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

"""Dataset files: `<prefix>.manifest.json` plus `<prefix>.blob`.

The blob holds three little-endian sections back to back: all states as
float32, all actions as float32, all skill lengths as int32, each in episode
order. The manifest records dims, per-episode lengths and every section's
byte offset and size.
"""
import json
import os
from typing import Any, Dict

import numpy as np

from dataset import trajectory_dataset
from diffcore import checkpoint
from utils import errors

FORMAT_VERSION = 1
KIND = 'varskill-dataset'
_SECTIONS = (
    ('states', np.dtype('<f4')),
    ('actions', np.dtype('<f4')),
    ('skill_length', np.dtype('<i4')),
)


def save_dataset(
    dataset: trajectory_dataset.TrajectoryDataset, prefix: str
) -> None:
  directory = os.path.dirname(prefix)
  if directory:
    os.makedirs(directory, exist_ok=True)
  arrays = {
      'states': np.concatenate([t.states for t in dataset.trajectories]),
      'actions': np.concatenate([t.actions for t in dataset.trajectories]),
      'skill_length': dataset.all_skill_lengths(),
  }
  sections, chunks, offset = {}, [], 0
  for name, dtype in _SECTIONS:
    data = np.ascontiguousarray(arrays[name], dtype=dtype).tobytes()
    sections[name] = {'dtype': dtype.str, 'offset': offset, 'nbytes': len(data)}
    chunks.append(data)
    offset += len(data)
  manifest = {
      'format_version': FORMAT_VERSION,
      'kind': KIND,
      'env_name': dataset.env_name,
      'state_dim': dataset.state_dim,
      'action_dim': dataset.action_dim,
      'episode_lengths': [int(n) for n in dataset.episode_lengths()],
      'sections': sections,
      'blob_size': offset,
      'metadata': dataset.metadata,
  }
  checkpoint.write_atomically(checkpoint.blob_path(prefix), b''.join(chunks))
  checkpoint.write_atomically(
      checkpoint.manifest_path(prefix),
      json.dumps(manifest, sort_keys=True, indent=2).encode('utf-8'),
  )


def _require(manifest: Dict[str, Any], field: str) -> Any:
  if field not in manifest:
    raise errors.FormatError('manifest is missing a field', field=field)
  return manifest[field]


def load_dataset(prefix: str) -> trajectory_dataset.TrajectoryDataset:
  """Reads a dataset written by save_dataset.

  Raises:
    MissingArtifactError: manifest or blob absent.
    FormatError: malformed manifest, size or offset mismatch, truncated blob.
  """
  manifest = checkpoint.read_manifest(checkpoint.manifest_path(prefix))
  if _require(manifest, 'kind') != KIND:
    raise errors.FormatError('not a dataset manifest', field='kind')
  if _require(manifest, 'format_version') != FORMAT_VERSION:
    raise errors.FormatError(
        'unsupported dataset version', field='format_version'
    )
  state_dim = int(_require(manifest, 'state_dim'))
  action_dim = int(_require(manifest, 'action_dim'))
  lengths = [int(n) for n in _require(manifest, 'episode_lengths')]
  if not lengths or any(n <= 0 for n in lengths):
    raise errors.FormatError(
        'episode lengths must be positive', field='episode_lengths'
    )
  total = sum(lengths)
  expected_counts = {
      'states': total * state_dim,
      'actions': total * action_dim,
      'skill_length': total,
  }

  blob_file = checkpoint.blob_path(prefix)
  if not os.path.exists(blob_file):
    raise errors.MissingArtifactError('missing dataset blob {}'.format(blob_file))
  with open(blob_file, 'rb') as f:
    blob = f.read()
  if len(blob) != _require(manifest, 'blob_size'):
    raise errors.FormatError(
        'blob holds {} bytes, manifest says {}'.format(
            len(blob), manifest['blob_size']
        ),
        field='blob_size',
    )

  sections = _require(manifest, 'sections')
  arrays, expected_offset = {}, 0
  for name, dtype in _SECTIONS:
    field = 'sections.' + name
    section = sections.get(name)
    if section is None or section.get('dtype') != dtype.str:
      raise errors.FormatError('missing or mistyped section', field=field)
    nbytes = expected_counts[name] * dtype.itemsize
    if section.get('nbytes') != nbytes:
      raise errors.FormatError(
          'section size disagrees with episode lengths', field=field
      )
    if section.get('offset') != expected_offset:
      raise errors.FormatError('section offset out of order', field=field)
    chunk = blob[expected_offset:expected_offset + nbytes]
    arrays[name] = np.frombuffer(chunk, dtype=dtype).copy()
    expected_offset += nbytes
  if expected_offset != len(blob):
    raise errors.FormatError('blob has trailing bytes', field='blob_size')

  states = arrays['states'].reshape(total, state_dim)
  actions = arrays['actions'].reshape(total, action_dim)
  bounds = np.concatenate([[0], np.cumsum(lengths)])
  trajectories = [
      trajectory_dataset.Trajectory(
          states[lo:hi], actions[lo:hi], arrays['skill_length'][lo:hi]
      )
      for lo, hi in zip(bounds[:-1], bounds[1:])
  ]
  return trajectory_dataset.TrajectoryDataset(
      trajectories,
      _require(manifest, 'env_name'),
      manifest.get('metadata', {}),
  )
