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

"""Reverse-mode differentiation over numpy arrays.

Every operation returns a Tensor that remembers its parents and a closure
mapping the output gradient to one gradient per parent. A Tape watches the
leaves of a ParamTree; backprop walks the recorded graph from a scalar loss
in reverse topological order and returns the gradients of the watched leaves
as a new ParamTree.

All values are 64-bit floats.
"""
import collections
from typing import Callable, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from diffcore import param_tree
from utils import errors

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]
_BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
  """A value in the computation graph."""

  # Makes `ndarray <op> Tensor` dispatch to the Tensor's reflected operator.
  __array_priority__ = 100

  def __init__(
      self,
      value: ArrayLike,
      parents: Tuple['Tensor', ...] = (),
      backward: Optional[_BackwardFn] = None,
      name: Optional[str] = None,
  ):
    self.value = np.asarray(value, dtype=np.float64)
    self._parents = parents
    self._backward = backward
    self.name = name

  @property
  def shape(self) -> Tuple[int, ...]:
    return self.value.shape

  @property
  def ndim(self) -> int:
    return self.value.ndim

  @property
  def T(self) -> 'Tensor':  # pylint: disable=invalid-name
    return transpose(self)

  def numpy(self) -> np.ndarray:
    return self.value

  def item(self) -> float:
    return float(self.value)

  def __repr__(self) -> str:
    label = ' name={}'.format(self.name) if self.name else ''
    return 'Tensor(shape={}{})'.format(self.shape, label)

  def __add__(self, other):
    return add(self, other)

  def __radd__(self, other):
    return add(other, self)

  def __sub__(self, other):
    return sub(self, other)

  def __rsub__(self, other):
    return sub(other, self)

  def __mul__(self, other):
    return mul(self, other)

  def __rmul__(self, other):
    return mul(other, self)

  def __truediv__(self, other):
    return div(self, other)

  def __rtruediv__(self, other):
    return div(other, self)

  def __neg__(self):
    return neg(self)

  def __pow__(self, exponent: float):
    return power(self, exponent)

  def __matmul__(self, other):
    return matmul(self, other)

  def __rmatmul__(self, other):
    return matmul(other, self)

  def __getitem__(self, index):
    return index_select(self, index)

  def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
    return reduce_sum(self, axis=axis, keepdims=keepdims)

  def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
    return reduce_mean(self, axis=axis, keepdims=keepdims)


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
  return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
  """Sums `grad` down to `shape`, undoing numpy broadcasting."""
  while grad.ndim > len(shape):
    grad = grad.sum(axis=0)
  for axis, dim in enumerate(shape):
    if dim == 1 and grad.shape[axis] != 1:
      grad = grad.sum(axis=axis, keepdims=True)
  return grad


def add(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)

  def backward(g):
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

  return Tensor(a.value + b.value, (a, b), backward)


def sub(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)

  def backward(g):
    return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

  return Tensor(a.value - b.value, (a, b), backward)


def mul(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)

  def backward(g):
    return (
        _unbroadcast(g * b.value, a.shape),
        _unbroadcast(g * a.value, b.shape),
    )

  return Tensor(a.value * b.value, (a, b), backward)


def div(a, b) -> Tensor:
  a, b = as_tensor(a), as_tensor(b)

  def backward(g):
    return (
        _unbroadcast(g / b.value, a.shape),
        _unbroadcast(-g * a.value / (b.value * b.value), b.shape),
    )

  return Tensor(a.value / b.value, (a, b), backward)


def neg(a) -> Tensor:
  a = as_tensor(a)
  return Tensor(-a.value, (a,), lambda g: (-g,))


def power(a, exponent: float) -> Tensor:
  a = as_tensor(a)

  def backward(g):
    return (g * exponent * np.power(a.value, exponent - 1),)

  return Tensor(np.power(a.value, exponent), (a,), backward)


def square(a) -> Tensor:
  a = as_tensor(a)
  return Tensor(a.value * a.value, (a,), lambda g: (2.0 * g * a.value,))


def matmul(a, b) -> Tensor:
  """Matrix product for 1-D and 2-D operands."""
  a, b = as_tensor(a), as_tensor(b)
  if a.ndim > 2 or b.ndim > 2:
    raise errors.PreconditionError(
        'matmul supports 1-D and 2-D operands, got {} and {}'.format(
            a.shape, b.shape
        )
    )

  def backward(g):
    av, bv = a.value, b.value
    if av.ndim == 1 and bv.ndim == 1:
      return g * bv, g * av
    if av.ndim == 1:
      return g @ bv.T, np.outer(av, g)
    if bv.ndim == 1:
      return np.outer(g, bv), av.T @ g
    return g @ bv.T, av.T @ g

  return Tensor(a.value @ b.value, (a, b), backward)


def exp(a) -> Tensor:
  a = as_tensor(a)
  out = np.exp(a.value)
  return Tensor(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
  a = as_tensor(a)
  return Tensor(np.log(a.value), (a,), lambda g: (g / a.value,))


def tanh(a) -> Tensor:
  a = as_tensor(a)
  out = np.tanh(a.value)
  return Tensor(out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
  return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a) -> Tensor:
  a = as_tensor(a)
  out = _sigmoid(a.value)
  return Tensor(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a) -> Tensor:
  """log(1 + exp(a)), evaluated without overflow."""
  a = as_tensor(a)
  return Tensor(
      np.logaddexp(0.0, a.value), (a,), lambda g: (g * _sigmoid(a.value),)
  )


def relu(a) -> Tensor:
  a = as_tensor(a)
  mask = a.value > 0.0
  return Tensor(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def elu(a) -> Tensor:
  a = as_tensor(a)
  positive = a.value > 0.0
  negative_part = np.expm1(np.minimum(a.value, 0.0))
  out = np.where(positive, a.value, negative_part)

  def backward(g):
    return (g * np.where(positive, 1.0, negative_part + 1.0),)

  return Tensor(out, (a,), backward)


def identity(a) -> Tensor:
  return as_tensor(a)


def clip(a, low: float, high: float) -> Tensor:
  """Clamps values; the gradient is zero where the clamp is active."""
  a = as_tensor(a)
  inside = (a.value >= low) & (a.value <= high)
  return Tensor(np.clip(a.value, low, high), (a,), lambda g: (g * inside,))


def minimum(a, b) -> Tensor:
  """Elementwise minimum; ties route the gradient to `a`."""
  a, b = as_tensor(a), as_tensor(b)
  take_a = a.value <= b.value

  def backward(g):
    return (
        _unbroadcast(np.where(take_a, g, 0.0), a.shape),
        _unbroadcast(np.where(take_a, 0.0, g), b.shape),
    )

  return Tensor(np.minimum(a.value, b.value), (a, b), backward)


def reduce_sum(a, axis=None, keepdims: bool = False) -> Tensor:
  a = as_tensor(a)

  def backward(g):
    if axis is not None and not keepdims:
      g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, a.shape).copy(),)

  return Tensor(np.sum(a.value, axis=axis, keepdims=keepdims), (a,), backward)


def reduce_mean(a, axis=None, keepdims: bool = False) -> Tensor:
  a = as_tensor(a)
  if axis is None:
    count = a.value.size
  else:
    axes = axis if isinstance(axis, tuple) else (axis,)
    count = int(np.prod([a.shape[ax] for ax in axes]))
  return reduce_sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
  tensors = [as_tensor(t) for t in tensors]
  sizes = [t.shape[axis] for t in tensors]
  split_points = np.cumsum(sizes)[:-1]

  def backward(g):
    return tuple(np.split(g, split_points, axis=axis))

  return Tensor(
      np.concatenate([t.value for t in tensors], axis=axis),
      tuple(tensors),
      backward,
  )


def index_select(a, index) -> Tensor:
  """Basic indexing (ints, slices, Ellipsis); no repeated positions."""
  a = as_tensor(a)

  def backward(g):
    grad = np.zeros_like(a.value)
    grad[index] = g
    return (grad,)

  return Tensor(a.value[index], (a,), backward)


def take_rows(a, rows: np.ndarray) -> Tensor:
  """Gathers rows along axis 0; rows may repeat."""
  a = as_tensor(a)
  rows = np.asarray(rows, dtype=np.int64)

  def backward(g):
    grad = np.zeros_like(a.value)
    np.add.at(grad, rows, g)
    return (grad,)

  return Tensor(a.value[rows], (a,), backward)


def reshape(a, shape: Tuple[int, ...]) -> Tensor:
  a = as_tensor(a)
  return Tensor(
      a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),)
  )


def transpose(a) -> Tensor:
  a = as_tensor(a)
  return Tensor(a.value.T, (a,), lambda g: (g.T,))


def stop_gradient(a) -> Tensor:
  """Same value, cut from the graph."""
  return Tensor(as_tensor(a).value)


def constants(leaves: Mapping[str, np.ndarray]) -> 'collections.OrderedDict[str, Tensor]':
  """Wraps arrays as graph leaves nobody watches (forward-only use)."""
  return collections.OrderedDict(
      (name, Tensor(value, name=name)) for name, value in leaves.items()
  )


class Tape:
  """Watches the leaves of a ParamTree so backprop can report their gradients.

  Attributes:
    params: the watched tree.
    leaves: name -> Tensor, the graph leaves to feed into forward passes.
  """

  def __init__(self, params: param_tree.ParamTree):
    self.params = params
    self.leaves = constants(params.as_dict())

  def __getitem__(self, name: str) -> Tensor:
    return self.leaves[name]

  def __contains__(self, name: str) -> bool:
    return name in self.leaves

  def keys(self) -> Iterable[str]:
    return self.leaves.keys()

  def items(self):
    return self.leaves.items()


def _topological_order(root: Tensor) -> Sequence[Tensor]:
  order = []
  visited = set()
  stack = [(root, False)]
  while stack:
    node, expanded = stack.pop()
    if expanded:
      order.append(node)
      continue
    if id(node) in visited:
      continue
    visited.add(id(node))
    stack.append((node, True))
    for parent in node._parents:  # pylint: disable=protected-access
      if id(parent) not in visited:
        stack.append((parent, False))
  return order


def backprop(tape: Tape, loss: Tensor) -> param_tree.ParamTree:
  """Gradients of a scalar loss w.r.t. every leaf the tape watches.

  Leaves the loss does not depend on receive zero gradients.

  Args:
    tape: the Tape whose leaves were used to build `loss`.
    loss: a 0-d Tensor.

  Returns:
    A ParamTree with the same names and shapes as `tape.params`.

  Raises:
    PreconditionError: if `loss` is not a scalar.
  """
  if not isinstance(loss, Tensor) or loss.ndim != 0:
    raise errors.PreconditionError(
        'backprop needs a scalar loss, got shape {}'.format(
            getattr(loss, 'shape', None)
        )
    )
  order = _topological_order(loss)
  grads = {id(loss): np.ones((), dtype=np.float64)}
  for node in reversed(order):
    grad = grads.get(id(node))
    if grad is None or node._backward is None:  # pylint: disable=protected-access
      continue
    parent_grads = node._backward(grad)  # pylint: disable=protected-access
    for parent, parent_grad in zip(node._parents, parent_grads):  # pylint: disable=protected-access
      if parent_grad is None:
        continue
      key = id(parent)
      if key in grads:
        grads[key] = grads[key] + parent_grad
      else:
        grads[key] = np.asarray(parent_grad, dtype=np.float64)
  result = collections.OrderedDict()
  for name, leaf in tape.items():
    grad = grads.get(id(leaf))
    result[name] = (
        np.zeros_like(leaf.value) if grad is None else grad.reshape(leaf.shape)
    )
  return param_tree.ParamTree(result)
