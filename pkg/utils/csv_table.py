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

"""CSV files for loss curves, relabel reports and exported figure data."""
import csv
import io
import os
from typing import Any, Dict, List, Sequence

import numpy as np

from diffcore import checkpoint
from utils import errors


def _format(value: Any) -> Any:
  if isinstance(value, (float, np.floating)):
    return repr(float(value))
  if isinstance(value, np.integer):
    return int(value)
  return value


def write_csv(
    path: str, headers: Sequence[str], rows: Sequence[Sequence[Any]]
) -> None:
  """Writes header + rows in one atomic replace."""
  directory = os.path.dirname(path)
  if directory:
    os.makedirs(directory, exist_ok=True)
  buffer = io.StringIO()
  writer = csv.writer(buffer, lineterminator='\n')
  writer.writerow(headers)
  for row in rows:
    if len(row) != len(headers):
      raise errors.PreconditionError(
          'row has {} values for {} columns'.format(len(row), len(headers))
      )
    writer.writerow([_format(v) for v in row])
  checkpoint.write_atomically(path, buffer.getvalue().encode('utf-8'))


def read_csv(path: str) -> List[Dict[str, str]]:
  if not os.path.exists(path):
    raise errors.MissingArtifactError('missing CSV {}'.format(path))
  with open(path, 'r', newline='') as f:
    return list(csv.DictReader(f))


def column(rows: Sequence[Dict[str, str]], name: str) -> List[float]:
  """Float values of one column.

  Raises:
    FormatError: the column is absent.
  """
  if rows and name not in rows[0]:
    raise errors.FormatError('CSV has no column', field=name)
  return [float(row[name]) for row in rows]
