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

"""Exception hierarchy shared by every stage.

Each class carries the process exit code run_me.py maps it to:
0 success, 2 usage/configuration, 3 file/format, 4 numeric failure.
"""
from typing import Any, Optional


class VarskillError(Exception):
  """Base class for all errors raised by this package."""

  exit_code = 1


class ConfigurationError(VarskillError, ValueError):
  """Invalid layer spec, unknown config key or out-of-range hyperparameter."""

  exit_code = 2


class PreconditionError(VarskillError, ValueError):
  """An operation was called with arguments violating its precondition."""


class DatasetError(VarskillError):
  """The dataset cannot serve the request (e.g. no valid skill window)."""

  exit_code = 3


class SamplingError(DatasetError):
  """Negative or window sampling is impossible on this dataset."""


class GenerationError(VarskillError):
  """Data generation produced no usable episode."""

  exit_code = 3


class FormatError(VarskillError):
  """Malformed, truncated or version-mismatched file on disk."""

  exit_code = 3

  def __init__(self, message: str, field: Optional[str] = None):
    if field is not None:
      message = '{} (field: {})'.format(message, field)
    super().__init__(message)
    self.field = field


class MissingArtifactError(VarskillError, FileNotFoundError):
  """A dataset, checkpoint or run manifest the stage depends on is missing."""

  exit_code = 3


class TrainingError(VarskillError):
  """Non-finite loss or gradient; training was aborted."""

  exit_code = 4

  def __init__(self, message: str, last_breakdown: Any = None):
    super().__init__(message)
    self.last_breakdown = last_breakdown
