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

"""Feed-forward and recurrent networks over diffcore tensors.

Parameters live in a ParamTree; forward passes take any mapping from leaf
name to Tensor (a Tape or `tensor.constants(tree)`), so the same code serves
training and inference.
"""
import collections
from typing import Mapping, NamedTuple, Sequence, Tuple, Union

import numpy as np

from diffcore import param_tree
from diffcore import tensor
from utils import errors

ACTIVATIONS = {
    'elu': tensor.elu,
    'relu': tensor.relu,
    'tanh': tensor.tanh,
    'linear': tensor.identity,
}

Leaves = Mapping[str, tensor.Tensor]
Input = Union[tensor.Tensor, np.ndarray]


class MlpSpec(NamedTuple):
  """Layer sizes [in, hidden..., out] and activations of an MLP."""

  name: str
  sizes: Tuple[int, ...]
  activation: str = 'relu'
  output_activation: str = 'linear'

  def leaf_names(self) -> Sequence[str]:
    names = []
    for i in range(len(self.sizes) - 1):
      names.extend(
          ['{}/layer{}/w'.format(self.name, i), '{}/layer{}/b'.format(self.name, i)]
      )
    return names


class RnnSpec(NamedTuple):
  """Single-layer LSTM."""

  name: str
  input_size: int
  hidden_size: int


def _validate_mlp_spec(spec: MlpSpec) -> None:
  if len(spec.sizes) < 2 or any(int(s) <= 0 for s in spec.sizes):
    raise errors.ConfigurationError(
        'MLP {} needs at least two positive sizes, got {}'.format(
            spec.name, spec.sizes
        )
    )
  for activation in (spec.activation, spec.output_activation):
    if activation not in ACTIVATIONS:
      raise errors.ConfigurationError(
          'MLP {} has unknown activation {}'.format(spec.name, activation)
      )


def init_mlp(spec: MlpSpec, rng: np.random.Generator) -> param_tree.ParamTree:
  """Fan-in scaled uniform weights, zero biases."""
  _validate_mlp_spec(spec)
  leaves = collections.OrderedDict()
  for i, (fan_in, fan_out) in enumerate(zip(spec.sizes[:-1], spec.sizes[1:])):
    bound = 1.0 / np.sqrt(fan_in)
    leaves['{}/layer{}/w'.format(spec.name, i)] = rng.uniform(
        -bound, bound, size=(fan_in, fan_out)
    )
    leaves['{}/layer{}/b'.format(spec.name, i)] = np.zeros(fan_out)
  return param_tree.ParamTree(leaves)


def mlp_apply(params: Leaves, inputs: Input, spec: MlpSpec) -> tensor.Tensor:
  """Runs the MLP on a vector or a batch of row vectors.

  Raises:
    ConfigurationError: naming the first layer whose weight shape does not
      match its input.
  """
  _validate_mlp_spec(spec)
  hidden = tensor.as_tensor(inputs)
  num_layers = len(spec.sizes) - 1
  for i in range(num_layers):
    layer = '{}/layer{}'.format(spec.name, i)
    if layer + '/w' not in params:
      raise errors.ConfigurationError('missing parameters for ' + layer)
    weight, bias = params[layer + '/w'], params[layer + '/b']
    if hidden.shape[-1] != weight.shape[0]:
      raise errors.ConfigurationError(
          '{} expects input size {}, got {}'.format(
              layer, weight.shape[0], hidden.shape[-1]
          )
      )
    hidden = hidden @ weight + bias
    activation = (
        spec.output_activation if i == num_layers - 1 else spec.activation
    )
    hidden = ACTIVATIONS[activation](hidden)
  return hidden


def _orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
  q, r = np.linalg.qr(rng.standard_normal((size, size)))
  return q * np.sign(np.diag(r))


def init_rnn(spec: RnnSpec, rng: np.random.Generator) -> param_tree.ParamTree:
  """Input weights fan-in uniform, recurrent weights orthogonal per gate."""
  if spec.input_size <= 0 or spec.hidden_size <= 0:
    raise errors.ConfigurationError(
        'RNN {} needs positive sizes'.format(spec.name)
    )
  bound = 1.0 / np.sqrt(spec.input_size)
  hidden = spec.hidden_size
  return param_tree.ParamTree(
      collections.OrderedDict([
          (
              spec.name + '/w_x',
              rng.uniform(-bound, bound, size=(spec.input_size, 4 * hidden)),
          ),
          (
              spec.name + '/w_h',
              np.concatenate(
                  [_orthogonal(rng, hidden) for _ in range(4)], axis=1
              ),
          ),
          (spec.name + '/b', np.zeros(4 * hidden)),
      ])
  )


def lstm_cell(
    params: Leaves,
    x: tensor.Tensor,
    h: tensor.Tensor,
    c: tensor.Tensor,
    spec: RnnSpec,
) -> Tuple[tensor.Tensor, tensor.Tensor]:
  """One LSTM step; gate order is input, forget, cell, output."""
  size = spec.hidden_size
  gates = (
      x @ params[spec.name + '/w_x']
      + h @ params[spec.name + '/w_h']
      + params[spec.name + '/b']
  )
  i = tensor.sigmoid(gates[..., 0:size])
  f = tensor.sigmoid(gates[..., size:2 * size])
  g = tensor.tanh(gates[..., 2 * size:3 * size])
  o = tensor.sigmoid(gates[..., 3 * size:4 * size])
  c = f * c + i * g
  h = o * tensor.tanh(c)
  return h, c


def rnn_apply(
    params: Leaves, sequence: Sequence[Input], spec: RnnSpec
) -> tensor.Tensor:
  """Final hidden state after reading `sequence` from a zero state.

  Each element is a vector or a batch of row vectors; all must agree in
  trailing size.

  Raises:
    PreconditionError: empty sequence or non-uniform element sizes.
  """
  if not sequence:
    raise errors.PreconditionError('rnn_apply needs a non-empty sequence')
  steps = [tensor.as_tensor(x) for x in sequence]
  if any(step.shape != steps[0].shape for step in steps):
    raise errors.PreconditionError(
        'rnn_apply needs uniform element shapes, got {}'.format(
            [step.shape for step in steps]
        )
    )
  if steps[0].shape[-1] != spec.input_size:
    raise errors.ConfigurationError(
        '{} expects input size {}, got {}'.format(
            spec.name, spec.input_size, steps[0].shape[-1]
        )
    )
  state_shape = steps[0].shape[:-1] + (spec.hidden_size,)
  h = tensor.Tensor(np.zeros(state_shape))
  c = tensor.Tensor(np.zeros(state_shape))
  for x in steps:
    h, c = lstm_cell(params, x, h, c, spec)
  return h
