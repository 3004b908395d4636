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

"""Checkpoint files: `<prefix>.manifest.json` plus `<prefix>.blob`.

The manifest lists every leaf with its shape and byte offset into the blob,
which holds the leaves back to back as little-endian float32. Nothing
time-dependent is written, so equal parameters give equal bytes.
"""
import collections
import json
import os
from typing import Any, Dict, Optional, Tuple

import numpy as np

from diffcore import param_tree
from utils import errors

FORMAT_VERSION = 1
KIND = 'varskill-checkpoint'
_DTYPE = np.dtype('<f4')


def manifest_path(prefix: str) -> str:
  return prefix + '.manifest.json'


def blob_path(prefix: str) -> str:
  return prefix + '.blob'


def write_atomically(path: str, payload: bytes) -> None:
  tmp_path = path + '.tmp'
  with open(tmp_path, 'wb') as f:
    f.write(payload)
  os.replace(tmp_path, path)


def save_checkpoint(
    prefix: str,
    params: param_tree.ParamTree,
    metadata: Optional[Dict[str, Any]] = None,
) -> None:
  """Writes `params` (as float32) and JSON-serializable `metadata`."""
  directory = os.path.dirname(prefix)
  if directory:
    os.makedirs(directory, exist_ok=True)
  leaves, chunks, offset = [], [], 0
  for name, value in params.items():
    data = np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
    leaves.append({
        'name': name,
        'shape': list(value.shape),
        'offset': offset,
        'nbytes': len(data),
    })
    chunks.append(data)
    offset += len(data)
  manifest = {
      'format_version': FORMAT_VERSION,
      'kind': KIND,
      'dtype': 'float32',
      'leaves': leaves,
      'blob_size': offset,
      'metadata': metadata or {},
  }
  write_atomically(blob_path(prefix), b''.join(chunks))
  write_atomically(
      manifest_path(prefix),
      json.dumps(manifest, sort_keys=True, indent=2).encode('utf-8'),
  )


def read_manifest(path: str) -> Dict[str, Any]:
  if not os.path.exists(path):
    raise errors.MissingArtifactError('missing manifest {}'.format(path))
  try:
    with open(path, 'r') as f:
      return json.load(f)
  except json.JSONDecodeError as e:
    raise errors.FormatError(
        'manifest {} is not valid JSON: {}'.format(path, e)
    ) from e


def _leaf_field(leaf: Any, index: int, field: str) -> Any:
  if not isinstance(leaf, dict) or field not in leaf:
    raise errors.FormatError(
        'leaf {} is missing a field'.format(index),
        field='leaves[{}].{}'.format(index, field),
    )
  return leaf[field]


def load_checkpoint(
    prefix: str,
) -> Tuple[param_tree.ParamTree, Dict[str, Any]]:
  """Reads a checkpoint back as float64 leaves.

  Raises:
    MissingArtifactError: either file is absent.
    FormatError: version, dtype, offsets or blob size do not match.
  """
  manifest = read_manifest(manifest_path(prefix))
  if manifest.get('kind') != KIND:
    raise errors.FormatError('not a checkpoint manifest', field='kind')
  if manifest.get('format_version') != FORMAT_VERSION:
    raise errors.FormatError(
        'unsupported checkpoint version {}'.format(
            manifest.get('format_version')
        ),
        field='format_version',
    )
  if manifest.get('dtype') != 'float32':
    raise errors.FormatError('unsupported dtype', field='dtype')
  if not os.path.exists(blob_path(prefix)):
    raise errors.MissingArtifactError(
        'missing checkpoint blob {}'.format(blob_path(prefix))
    )
  with open(blob_path(prefix), 'rb') as f:
    blob = f.read()
  if len(blob) != manifest.get('blob_size'):
    raise errors.FormatError(
        'blob holds {} bytes, manifest says {}'.format(
            len(blob), manifest.get('blob_size')
        ),
        field='blob_size',
    )
  leaves = collections.OrderedDict()
  expected_offset = 0
  for index, leaf in enumerate(manifest.get('leaves', [])):
    name = _leaf_field(leaf, index, 'name')
    shape = tuple(_leaf_field(leaf, index, 'shape'))
    offset = _leaf_field(leaf, index, 'offset')
    stored_nbytes = _leaf_field(leaf, index, 'nbytes')
    nbytes = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
    if offset != expected_offset or stored_nbytes != nbytes:
      raise errors.FormatError(
          'leaf {} has inconsistent offset or size'.format(name),
          field='leaves.' + name,
      )
    chunk = blob[offset:offset + nbytes]
    leaves[name] = np.frombuffer(chunk, dtype=_DTYPE).reshape(shape)
    expected_offset += nbytes
  if expected_offset != len(blob):
    raise errors.FormatError('blob has trailing bytes', field='blob_size')
  return param_tree.ParamTree(leaves), manifest.get('metadata', {})
