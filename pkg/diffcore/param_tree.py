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

"""Ordered collection of named float64 parameter arrays."""
import collections
from typing import Callable, Dict, Iterator, Mapping, Sequence, Tuple

import numpy as np

from utils import errors


class ParamTree:
  """Named leaves with fixed shapes.

  Leaves are stored as read-only float64 arrays; every transformation returns
  a new tree. Leaf names are slash-separated paths such as
  `decoder/layer0/w`.
  """

  def __init__(self, leaves: Mapping[str, np.ndarray]):
    self._leaves = collections.OrderedDict()
    for name, value in leaves.items():
      if name in self._leaves:
        raise errors.ConfigurationError('duplicate leaf name {}'.format(name))
      array = np.array(value, dtype=np.float64, copy=True)
      array.setflags(write=False)
      self._leaves[name] = array

  def __getitem__(self, name: str) -> np.ndarray:
    return self._leaves[name]

  def __contains__(self, name: str) -> bool:
    return name in self._leaves

  def __iter__(self) -> Iterator[str]:
    return iter(self._leaves)

  def __len__(self) -> int:
    return len(self._leaves)

  def __repr__(self) -> str:
    return 'ParamTree({} leaves, {} parameters)'.format(
        len(self), self.num_parameters()
    )

  def names(self) -> Sequence[str]:
    return list(self._leaves)

  def items(self) -> Sequence[Tuple[str, np.ndarray]]:
    return list(self._leaves.items())

  def shapes(self) -> Dict[str, Tuple[int, ...]]:
    return {name: value.shape for name, value in self._leaves.items()}

  def as_dict(self) -> 'collections.OrderedDict[str, np.ndarray]':
    return collections.OrderedDict(self._leaves)

  def num_parameters(self) -> int:
    return int(sum(value.size for value in self._leaves.values()))

  def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> 'ParamTree':
    return ParamTree(
        collections.OrderedDict(
            (name, fn(value)) for name, value in self._leaves.items()
        )
    )

  def zip_map(
      self,
      other: 'ParamTree',
      fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
  ) -> 'ParamTree':
    self.assert_same_structure(other)
    return ParamTree(
        collections.OrderedDict(
            (name, fn(value, other[name]))
            for name, value in self._leaves.items()
        )
    )

  def zeros_like(self) -> 'ParamTree':
    return self.map(np.zeros_like)

  def subtree(self, prefix: str) -> 'ParamTree':
    """Leaves whose name starts with `prefix/`, names kept unchanged."""
    head = prefix.rstrip('/') + '/'
    return ParamTree(
        collections.OrderedDict(
            (name, value)
            for name, value in self._leaves.items()
            if name.startswith(head)
        )
    )

  def rename_prefix(self, old: str, new: str) -> 'ParamTree':
    old_head, new_head = old.rstrip('/') + '/', new.rstrip('/') + '/'
    renamed = collections.OrderedDict()
    for name, value in self._leaves.items():
      if name.startswith(old_head):
        name = new_head + name[len(old_head):]
      renamed[name] = value
    return ParamTree(renamed)

  def replace(self, updates: Mapping[str, np.ndarray]) -> 'ParamTree':
    """Same structure with the given leaves swapped; shapes must match."""
    leaves = collections.OrderedDict(self._leaves)
    for name, value in updates.items():
      if name not in leaves:
        raise errors.ConfigurationError('unknown leaf {}'.format(name))
      value = np.asarray(value, dtype=np.float64)
      if value.shape != leaves[name].shape:
        raise errors.ConfigurationError(
            'leaf {} has shape {}, got {}'.format(
                name, leaves[name].shape, value.shape
            )
        )
      leaves[name] = value
    return ParamTree(leaves)

  def merge(self, other: 'ParamTree') -> 'ParamTree':
    leaves = collections.OrderedDict(self._leaves)
    for name, value in other.items():
      if name in leaves:
        raise errors.ConfigurationError('duplicate leaf name {}'.format(name))
      leaves[name] = value
    return ParamTree(leaves)

  def assert_same_structure(self, other: 'ParamTree') -> None:
    if self.shapes() != other.shapes() or self.names() != other.names():
      raise errors.PreconditionError(
          'parameter trees differ in names or shapes'
      )

  def first_non_finite(self) -> str:
    """Name of the first leaf holding NaN or inf, or '' when all are finite."""
    for name, value in self._leaves.items():
      if not np.all(np.isfinite(value)):
        return name
    return ''

  def allclose(self, other: 'ParamTree', atol: float = 0.0) -> bool:
    if self.shapes() != other.shapes():
      return False
    return all(
        np.allclose(value, other[name], rtol=0.0, atol=atol)
        for name, value in self._leaves.items()
    )
