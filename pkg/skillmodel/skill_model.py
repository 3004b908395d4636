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

"""The skill model: encoder, decoder, prior, similarity and target networks.

  encoder         q(z | key states)  recurrent (or MLP) -> DiagGaussian
  decoder         pi(a | s, z)       -> TanhGaussian over actions
  skill_prior     p(z | s)           -> DiagGaussian (pre-tanh)
  phi, psi        f(s, z, s') = <phi(s, z), psi(s')>
  state_encoder   E(s) -> h
  obs_decoder     O(h) -> s
  target_predictor T(h, z) -> h' (latent state after the skill)

Every forward method takes an optional `leaves` mapping (a Tape while
training); without it the current parameters are used as constants.
"""
import dataclasses
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from diffcore import checkpoint
from diffcore import distributions
from diffcore import nn
from diffcore import param_tree
from diffcore import tensor
from utils import errors

Leaves = Optional[Mapping[str, tensor.Tensor]]
Input = Union[tensor.Tensor, np.ndarray]

ENCODER_KINDS = ('rnn', 'mlp')
DECODER_TRAINING_MODES = ('closed_loop', 'key_states')


@dataclasses.dataclass
class ModelConfig:
  """Network sizes; state/action/skill dims come from the environment."""

  state_dim: int = 0
  action_dim: int = 0
  skill_dim: int = 0
  hidden_size: int = 256
  rnn_hidden_size: int = 128
  similarity_hidden_size: int = 128
  representation_dim: int = 16
  latent_dim: int = 128
  encoder_kind: str = 'rnn'
  num_key_states: int = 4
  decoder_training: str = 'closed_loop'

  def __post_init__(self):
    self.validate()

  def validate(self) -> None:
    sizes = dataclasses.asdict(self)
    for name in ('hidden_size', 'rnn_hidden_size',
                 'similarity_hidden_size', 'representation_dim', 'latent_dim'):
      if sizes[name] <= 0:
        raise errors.ConfigurationError('model.{} must be > 0'.format(name))
    if min(self.state_dim, self.action_dim, self.skill_dim) < 0:
      raise errors.ConfigurationError('model dims must be >= 0')
    if self.encoder_kind not in ENCODER_KINDS:
      raise errors.ConfigurationError(
          'model.encoder_kind must be one of {}'.format(ENCODER_KINDS)
      )
    if self.decoder_training not in DECODER_TRAINING_MODES:
      raise errors.ConfigurationError(
          'model.decoder_training must be one of {}'.format(
              DECODER_TRAINING_MODES
          )
      )
    if self.num_key_states < 3:
      raise errors.ConfigurationError('model.num_key_states must be >= 3')


def _four_layer(name: str, n_in: int, hidden: int, n_out: int) -> nn.MlpSpec:
  return nn.MlpSpec(name, (n_in, hidden, hidden, hidden, n_out), 'elu')


class SkillModel:
  """Parameters plus forward passes of the eight skill networks."""

  def __init__(
      self,
      config: ModelConfig,
      params: Optional[param_tree.ParamTree] = None,
      seed: int = 0,
  ):
    if min(config.state_dim, config.action_dim, config.skill_dim) <= 0:
      raise errors.ConfigurationError(
          'SkillModel needs positive state, action and skill dims'
      )
    self.config = config
    s, a, z = config.state_dim, config.action_dim, config.skill_dim
    hidden, sim = config.hidden_size, config.similarity_hidden_size
    latent = config.latent_dim
    self.encoder_rnn = nn.RnnSpec('encoder/rnn', s, config.rnn_hidden_size)
    self.encoder_head = nn.MlpSpec(
        'encoder/head', (config.rnn_hidden_size, 2 * z), 'linear'
    )
    self.encoder_mlp = _four_layer(
        'encoder/mlp', config.num_key_states * s, hidden, 2 * z
    )
    self.decoder = _four_layer('decoder', s + z, hidden, 2 * a)
    self.prior = _four_layer('skill_prior', s, hidden, 2 * z)
    self.phi = nn.MlpSpec(
        'phi', (s + z, sim, sim, config.representation_dim), 'relu'
    )
    self.psi = nn.MlpSpec('psi', (s, sim, sim, config.representation_dim),
                          'relu')
    self.state_encoder = nn.MlpSpec('state_encoder', (s, hidden, latent), 'elu')
    self.obs_decoder = nn.MlpSpec('obs_decoder', (latent, hidden, s), 'elu')
    self.target_predictor = nn.MlpSpec(
        'target_predictor', (latent + z, hidden, latent), 'elu'
    )
    self.params = params if params is not None else self.init_params(seed)

  def mlp_specs(self) -> Sequence[nn.MlpSpec]:
    specs = [self.encoder_head] if self.config.encoder_kind == 'rnn' else [
        self.encoder_mlp
    ]
    return specs + [
        self.decoder,
        self.prior,
        self.phi,
        self.psi,
        self.state_encoder,
        self.obs_decoder,
        self.target_predictor,
    ]

  def init_params(self, seed: int) -> param_tree.ParamTree:
    rng = np.random.default_rng(seed)
    tree = param_tree.ParamTree({})
    if self.config.encoder_kind == 'rnn':
      tree = tree.merge(nn.init_rnn(self.encoder_rnn, rng))
    for spec in self.mlp_specs():
      tree = tree.merge(nn.init_mlp(spec, rng))
    return tree

  def set_params(self, params: param_tree.ParamTree) -> None:
    self.params.assert_same_structure(params)
    self.params = params

  def constants(self) -> Mapping[str, tensor.Tensor]:
    return tensor.constants(self.params.as_dict())

  def _leaves(self, leaves: Leaves) -> Mapping[str, tensor.Tensor]:
    return self.constants() if leaves is None else leaves

  def encode_skill(
      self, key_states: Input, leaves: Leaves = None
  ) -> distributions.DiagGaussian:
    """q(z | key states); key_states is (k, S) or (k, B, S) in time order.

    Raises:
      PreconditionError: wrong number of key states or state size.
    """
    leaves = self._leaves(leaves)
    key_states = tensor.as_tensor(key_states)
    k, s = self.config.num_key_states, self.config.state_dim
    if key_states.ndim not in (2, 3) or key_states.shape[0] != k:
      raise errors.PreconditionError(
          'encoder needs {} key states, got shape {}'.format(k, key_states.shape)
      )
    if key_states.shape[-1] != s:
      raise errors.PreconditionError(
          'key states must have size {}, got {}'.format(s, key_states.shape[-1])
      )
    if self.config.encoder_kind == 'rnn':
      hidden = nn.rnn_apply(
          leaves, [key_states[i] for i in range(k)], self.encoder_rnn
      )
      out = nn.mlp_apply(leaves, hidden, self.encoder_head)
    else:
      flat = tensor.concat([key_states[i] for i in range(k)], axis=-1)
      out = nn.mlp_apply(leaves, flat, self.encoder_mlp)
    return distributions.DiagGaussian.from_params(out)

  def decode_action(
      self, state: Input, z: Input, leaves: Leaves = None
  ) -> distributions.TanhGaussian:
    out = nn.mlp_apply(
        self._leaves(leaves), tensor.concat([state, z], axis=-1), self.decoder
    )
    return distributions.TanhGaussian(
        distributions.DiagGaussian.from_params(out)
    )

  def skill_prior(
      self, state: Input, leaves: Leaves = None
  ) -> distributions.DiagGaussian:
    """Pre-tanh Gaussian of p(z | s); skills are tanh of its samples."""
    out = nn.mlp_apply(self._leaves(leaves), state, self.prior)
    return distributions.DiagGaussian.from_params(out)

  def skill_prior_dist(
      self, state: Input, leaves: Leaves = None
  ) -> distributions.TanhGaussian:
    return distributions.TanhGaussian(self.skill_prior(state, leaves))

  def phi_features(
      self, state: Input, z: Input, leaves: Leaves = None
  ) -> tensor.Tensor:
    return nn.mlp_apply(
        self._leaves(leaves), tensor.concat([state, z], axis=-1), self.phi
    )

  def psi_features(self, state: Input, leaves: Leaves = None) -> tensor.Tensor:
    return nn.mlp_apply(self._leaves(leaves), state, self.psi)

  def similarity(
      self, s: Input, z: Input, s_prime: Input, leaves: Leaves = None
  ) -> tensor.Tensor:
    """f(s, z, s') = <phi(s, z), psi(s')> along the last axis."""
    leaves = self._leaves(leaves)
    return (
        self.phi_features(s, z, leaves) * self.psi_features(s_prime, leaves)
    ).sum(axis=-1)

  def encode_state(self, state: Input, leaves: Leaves = None) -> tensor.Tensor:
    return nn.mlp_apply(self._leaves(leaves), state, self.state_encoder)

  def decode_observation(
      self, latent: Input, leaves: Leaves = None
  ) -> tensor.Tensor:
    return nn.mlp_apply(self._leaves(leaves), latent, self.obs_decoder)

  def predict_target(
      self, latent: Input, z: Input, leaves: Leaves = None
  ) -> tensor.Tensor:
    return nn.mlp_apply(
        self._leaves(leaves),
        tensor.concat([latent, z], axis=-1),
        self.target_predictor,
    )

  def predict_target_latent(self, state: np.ndarray, z: np.ndarray) -> np.ndarray:
    """h' = T(E(state), z) with the current parameters."""
    leaves = self.constants()
    return self.predict_target(
        self.encode_state(state, leaves), z, leaves
    ).value

  def predicted_target_observation(
      self, state: np.ndarray, z: np.ndarray
  ) -> np.ndarray:
    """O(T(E(state), z)): the state the skill is expected to end in."""
    leaves = self.constants()
    latent = self.predict_target(self.encode_state(state, leaves), z, leaves)
    return self.decode_observation(latent, leaves).value


def save_model(
    model: SkillModel, prefix: str, metadata: Optional[dict] = None
) -> None:
  """Checkpoints parameters together with the ModelConfig that shapes them."""
  payload = dict(metadata or {})
  payload['model_config'] = dataclasses.asdict(model.config)
  checkpoint.save_checkpoint(prefix, model.params, payload)


def load_model(prefix: str):
  """Returns (SkillModel, metadata) from a save_model checkpoint.

  Raises:
    MissingArtifactError: the checkpoint is absent.
    FormatError: no model config, or leaves that do not fit it.
  """
  params, metadata = checkpoint.load_checkpoint(prefix)
  if 'model_config' not in metadata:
    raise errors.FormatError('checkpoint has no model config',
                             field='metadata.model_config')
  try:
    config = ModelConfig(**metadata['model_config'])
    model = SkillModel(config, seed=0)
    model.set_params(params)
  except (TypeError, errors.ConfigurationError,
          errors.PreconditionError) as e:
    raise errors.FormatError(
        'checkpoint does not match its model config: {}'.format(e),
        field='leaves',
    ) from e
  return model, metadata
