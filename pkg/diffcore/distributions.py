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

"""Diagonal Gaussian and tanh-squashed Gaussian distributions.

Both operate on the last axis; leading axes are batch axes. Sampling is
reparameterized: the caller supplies standard-normal noise (or a Generator)
and gradients flow into mean and log_std.
"""
from typing import Tuple, Union

import numpy as np

from diffcore import tensor
from utils import errors

LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0
_HALF_LOG_TWO_PI = 0.5 * np.log(2.0 * np.pi)
_SAMPLE_BOUND = 1.0 - 1e-7
_LOG_PROB_BOUND = 1.0 - 1e-6

TensorLike = Union[tensor.Tensor, np.ndarray]


class DiagGaussian:
  """N(mean, diag(exp(log_std)^2)) with log_std clamped to [-10, 2]."""

  def __init__(self, mean: TensorLike, log_std: TensorLike):
    self.mean = tensor.as_tensor(mean)
    self.log_std = tensor.clip(
        tensor.as_tensor(log_std), LOG_STD_MIN, LOG_STD_MAX
    )
    if self.mean.shape != self.log_std.shape:
      raise errors.PreconditionError(
          'mean {} and log_std {} differ in shape'.format(
              self.mean.shape, self.log_std.shape
          )
      )

  @classmethod
  def from_params(cls, params: tensor.Tensor) -> 'DiagGaussian':
    """Splits a network output [..., 2d] into mean and log_std halves."""
    size = params.shape[-1]
    if size % 2:
      raise errors.PreconditionError(
          'distribution head needs an even width, got {}'.format(size)
      )
    half = size // 2
    return cls(params[..., :half], params[..., half:])

  @property
  def dim(self) -> int:
    return self.mean.shape[-1]

  def std(self) -> tensor.Tensor:
    return tensor.exp(self.log_std)

  def sample(self, noise: np.ndarray) -> tensor.Tensor:
    return self.mean + self.std() * noise

  def log_prob(self, x: TensorLike) -> tensor.Tensor:
    normalized = (tensor.as_tensor(x) - self.mean) / self.std()
    per_dim = -0.5 * tensor.square(normalized) - self.log_std - _HALF_LOG_TWO_PI
    return per_dim.sum(axis=-1)

  def detach(self) -> 'DiagGaussian':
    return DiagGaussian(
        tensor.stop_gradient(self.mean), tensor.stop_gradient(self.log_std)
    )


def standard_normal(shape: Tuple[int, ...]) -> DiagGaussian:
  return DiagGaussian(np.zeros(shape), np.zeros(shape))


def diag_gaussian_kl(a: DiagGaussian, b: DiagGaussian) -> tensor.Tensor:
  """KL(a || b) in closed form, summed over the last axis.

  Raises:
    PreconditionError: the two distributions differ in dimension.
  """
  if a.dim != b.dim:
    raise errors.PreconditionError(
        'KL needs equal dimensions, got {} and {}'.format(a.dim, b.dim)
    )
  var_a = tensor.exp(2.0 * a.log_std)
  var_b = tensor.exp(2.0 * b.log_std)
  per_dim = (
      (b.log_std - a.log_std)
      + (var_a + tensor.square(a.mean - b.mean)) / (2.0 * var_b)
      - 0.5
  )
  return per_dim.sum(axis=-1)


class TanhGaussian:
  """y = tanh(u) with u ~ base; samples lie strictly inside (-1, 1)."""

  def __init__(self, base: DiagGaussian):
    self.base = base

  @property
  def dim(self) -> int:
    return self.base.dim

  def sample_and_log_prob(
      self, noise: np.ndarray
  ) -> Tuple[tensor.Tensor, tensor.Tensor]:
    pre_tanh = self.base.sample(noise)
    # log|d tanh(u)/du| = 2 (log 2 - u - softplus(-2u))
    log_det = 2.0 * (np.log(2.0) - pre_tanh - tensor.softplus(-2.0 * pre_tanh))
    log_prob = self.base.log_prob(pre_tanh) - log_det.sum(axis=-1)
    sample = tensor.clip(tensor.tanh(pre_tanh), -_SAMPLE_BOUND, _SAMPLE_BOUND)
    return sample, log_prob

  def log_prob(self, y: TensorLike) -> tensor.Tensor:
    """Density of fixed values y; gradients flow into the base parameters."""
    y = np.clip(
        tensor.as_tensor(y).value, -_LOG_PROB_BOUND, _LOG_PROB_BOUND
    )
    pre_tanh = np.arctanh(y)
    return self.base.log_prob(pre_tanh) - np.sum(np.log1p(-y * y), axis=-1)

  def deterministic_action(self) -> tensor.Tensor:
    return tensor.tanh(self.base.mean)

  def mode(self) -> np.ndarray:
    """argmax_y of the density, per dimension.

    Every stationary point in pre-tanh space satisfies u = mu + 2 var tanh(u),
    so it lies in [mu - 2 var, mu + 2 var]. With var < 0.5 there is exactly one
    and bisection finds it; otherwise a dense grid over that interval is used.
    """
    mu = self.base.mean.value
    var = np.exp(2.0 * self.base.log_std.value)
    low, high = mu - 2.0 * var, mu + 2.0 * var
    if np.all(var < 0.5):
      for _ in range(200):
        mid = 0.5 * (low + high)
        slope = -(mid - mu) / var + 2.0 * np.tanh(mid)
        low = np.where(slope > 0, mid, low)
        high = np.where(slope > 0, high, mid)
      return np.tanh(0.5 * (low + high))
    grid = np.linspace(0.0, 1.0, 4001)
    candidates = low[..., None] + (high - low)[..., None] * grid
    score = (
        -0.5 * (candidates - mu[..., None]) ** 2 / var[..., None]
        + 2.0 * np.log(np.cosh(candidates))
    )
    best = np.take_along_axis(
        candidates, np.argmax(score, axis=-1)[..., None], axis=-1
    )
    return np.tanh(best[..., 0])

  def detach(self) -> 'TanhGaussian':
    return TanhGaussian(self.base.detach())


def tanh_gaussian_sample_logprob(
    dist: TanhGaussian, rng: Union[np.random.Generator, int]
) -> Tuple[tensor.Tensor, tensor.Tensor]:
  """Reparameterized sample and its log density from a seed or Generator."""
  if not isinstance(rng, np.random.Generator):
    rng = np.random.default_rng(rng)
  noise = rng.standard_normal(dist.base.mean.shape)
  return dist.sample_and_log_prob(noise)
