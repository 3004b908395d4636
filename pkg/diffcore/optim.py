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

"""Adam as a pure function of (state, params, grads)."""
from typing import NamedTuple, Tuple

import numpy as np

from diffcore import param_tree
from utils import errors

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class AdamState(NamedTuple):
  first_moment: param_tree.ParamTree
  second_moment: param_tree.ParamTree
  step: int


def adam_init(params: param_tree.ParamTree) -> AdamState:
  return AdamState(params.zeros_like(), params.zeros_like(), 0)


def adam_step(
    state: AdamState,
    params: param_tree.ParamTree,
    grads: param_tree.ParamTree,
    lr: float,
) -> Tuple[param_tree.ParamTree, AdamState]:
  """One bias-corrected Adam update.

  Args:
    state: moments and step counter from the previous call.
    params: current parameters.
    grads: gradients with the same structure.
    lr: learning rate, > 0.

  Returns:
    (new params, new state).

  Raises:
    PreconditionError: structures differ or lr <= 0.
    TrainingError: a gradient leaf holds NaN or inf.
  """
  if lr <= 0:
    raise errors.PreconditionError('learning rate must be > 0, got {}'.format(lr))
  params.assert_same_structure(grads)
  params.assert_same_structure(state.first_moment)
  bad_leaf = grads.first_non_finite()
  if bad_leaf:
    raise errors.TrainingError('non-finite gradient in leaf ' + bad_leaf)

  step = state.step + 1
  first = state.first_moment.zip_map(
      grads, lambda m, g: BETA1 * m + (1.0 - BETA1) * g
  )
  second = state.second_moment.zip_map(
      grads, lambda v, g: BETA2 * v + (1.0 - BETA2) * g * g
  )
  first_correction = 1.0 - BETA1**step
  second_correction = 1.0 - BETA2**step

  updated = {}
  for name, value in params.items():
    m_hat = first[name] / first_correction
    v_hat = second[name] / second_correction
    updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + EPSILON)
  return params.replace(updated), AdamState(first, second, step)
