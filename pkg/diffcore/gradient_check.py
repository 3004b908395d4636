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

"""Central finite-difference gradients for checking backprop."""
from typing import Callable, NamedTuple

import numpy as np

from diffcore import param_tree
from diffcore import tensor

LossFn = Callable[[tensor.Tape], tensor.Tensor]


class GradientReport(NamedTuple):
  max_abs_error: float
  worst_leaf: str
  passed: bool


def analytic_gradient(
    loss_fn: LossFn, params: param_tree.ParamTree
) -> param_tree.ParamTree:
  tape = tensor.Tape(params)
  return tensor.backprop(tape, loss_fn(tape))


def numeric_gradient(
    loss_fn: LossFn, params: param_tree.ParamTree, h: float = 1e-5
) -> param_tree.ParamTree:
  """d loss / d leaf by central differences, one element at a time."""

  def evaluate(tree):
    return loss_fn(tensor.Tape(tree)).item()

  grads = {}
  for name, value in params.items():
    grad = np.zeros_like(value)
    flat = grad.reshape(-1)
    for i in range(value.size):
      bumped = value.copy().reshape(-1)
      bumped[i] += h
      plus = evaluate(params.replace({name: bumped.reshape(value.shape)}))
      bumped[i] -= 2.0 * h
      minus = evaluate(params.replace({name: bumped.reshape(value.shape)}))
      flat[i] = (plus - minus) / (2.0 * h)
    grads[name] = grad
  return params.replace(grads)


def check_gradients(
    loss_fn: LossFn,
    params: param_tree.ParamTree,
    rtol: float = 1e-4,
    atol: float = 1e-6,
    h: float = 1e-5,
) -> GradientReport:
  """Compares backprop against central differences leaf by leaf."""
  analytic = analytic_gradient(loss_fn, params)
  numeric = numeric_gradient(loss_fn, params, h)
  worst_leaf, worst_error, passed = '', 0.0, True
  for name, value in analytic.items():
    error = np.abs(value - numeric[name])
    if error.size and float(error.max()) > worst_error:
      worst_error, worst_leaf = float(error.max()), name
    if not np.allclose(value, numeric[name], rtol=rtol, atol=atol):
      passed = False
  return GradientReport(worst_error, worst_leaf, passed)
