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

"""Entry point for varskill.

  python3 run_me.py <subcommand> [--config=run.json] [--set=key=value ...]

Subcommands: gen-data, train-skills, train-downstream, eval, export, relabel.
Exit codes: 0 success, 2 usage, 3 file/format, 4 numeric failure.
"""
import os
import sys
from typing import Optional, Sequence

from absl import app
from absl import flags

from downstream import downstream_trainer
from harness import experiment_config
import stage_runner
from utils import errors
from utils import logger

SUBCOMMANDS = ('gen-data', 'train-skills', 'train-downstream', 'eval',
               'export', 'relabel')

FLAGS = flags.FLAGS

_CONFIG = flags.DEFINE_string(
    'config',
    default=None,
    help='JSON experiment config with flat dotted keys. Defaults apply when unset.',
)
_SET = flags.DEFINE_multi_string(
    'set',
    default=[],
    help=(
        'Config override as key=value, e.g. "--set=train.relabel_enabled=false".'
        ' Repeat the flag for several overrides.'
    ),
)
_OUTPUT_PATH = flags.DEFINE_string(
    'output_path', default=None, help='Run directory; overrides run.output_dir.'
)
_ENV = flags.DEFINE_string('env', default=None, help='Environment name.')
_TIER = flags.DEFINE_string(
    'tier', default=None, help='Dataset tier: expert, mixed or replay.'
)
_EPISODES = flags.DEFINE_integer(
    'episodes',
    default=None,
    help='gen-data: episodes to collect. eval: episodes to roll out.',
)
_SEED = flags.DEFINE_integer(
    'seed',
    default=None,
    help=(
        'gen-data: dataset seed. Other stages: run only this seed instead of'
        ' run.seeds.'
    ),
)
_MODE = flags.DEFINE_string(
    'mode', default=None, help='Downstream learner: sac or cem.'
)
_CHECKPOINT = flags.DEFINE_string(
    'checkpoint', default=None, help='Skill model checkpoint prefix.'
)
_POLICY = flags.DEFINE_string(
    'policy', default=None, help='Downstream policy checkpoint prefix.'
)
_DATASET = flags.DEFINE_string(
    'dataset', default=None, help='relabel: dataset prefix.'
)
_METRICS_PATH = flags.DEFINE_string(
    'metrics_path',
    default=None,
    help=('eval: where to write the metrics JSON. With several seeds each '
          'seed writes <root>_seed<N><ext>.'),
)
_VARIANT_DIRS = flags.DEFINE_multi_string(
    'variant_dirs',
    default=[],
    help='export: further run directories compared in ablation.csv.',
)

# Hidden only, log-level / verbosity
_DEBUG = flags.DEFINE_boolean('debug', default=False, help=None)


def build_config(subcommand: str) -> experiment_config.ExperimentConfig:
  """Config file, then --set overrides, then the dedicated flags.

  Without --config, a config.json left in the run directory by an earlier
  stage is the base, so later stages see the same env, sizes and hash.
  """
  if _CONFIG.value:
    config = experiment_config.load(_CONFIG.value)
  else:
    config = experiment_config.ExperimentConfig()
    run_dir = _OUTPUT_PATH.value or config.run.output_dir
    saved = os.path.join(run_dir, 'config.json')
    if os.path.exists(saved):
      config = experiment_config.load(saved)
  overrides = list(_SET.value)
  if _OUTPUT_PATH.value:
    overrides.append('run.output_dir={}'.format(_OUTPUT_PATH.value))
  if subcommand == 'gen-data':
    if _ENV.value:
      overrides.append('data.env={}'.format(_ENV.value))
    if _TIER.value:
      overrides.append('data.tier={}'.format(_TIER.value))
    if _EPISODES.value is not None:
      overrides.append('data.episodes={}'.format(_EPISODES.value))
    if _SEED.value is not None:
      overrides.append('data.seed={}'.format(_SEED.value))
  return experiment_config.apply_overrides(config, overrides)


def validate_flags(subcommand: str) -> None:
  if _EPISODES.value is not None and _EPISODES.value < 1:
    raise app.UsageError('--episodes must be >= 1', exitcode=2)
  if _MODE.value is not None and _MODE.value not in downstream_trainer.MODES:
    raise app.UsageError(
        '--mode must be one of {}'.format(downstream_trainer.MODES),
        exitcode=2,
    )
  if subcommand == 'eval' and _POLICY.value and _SEED.value is None:
    raise app.UsageError('--policy needs --seed', exitcode=2)


def metrics_path_for_seed(
    path: Optional[str], seed: int, seeds: Sequence[int]
) -> Optional[str]:
  if path is None or len(seeds) < 2:
    return path
  root, ext = os.path.splitext(path)
  return '{}_seed{}{}'.format(root, seed, ext)


def run(subcommand: str) -> None:
  config = build_config(subcommand)
  runner = stage_runner.StageRunner(config, _DEBUG.value)
  seeds = [_SEED.value] if _SEED.value is not None else config.run.seeds
  log = logger.Logger.get_instance()
  log.log('\nLogs written to : {} '.format(log.get_log_path()))
  if subcommand == 'gen-data':
    runner.do_stage_gen_data()
  elif subcommand == 'train-skills':
    for seed in seeds:
      runner.do_stage_train_skills(seed)
  elif subcommand == 'train-downstream':
    for seed in seeds:
      runner.do_stage_train_downstream(seed, _MODE.value)
  elif subcommand == 'eval':
    for seed in seeds:
      runner.do_stage_eval(
          seed,
          mode=_MODE.value,
          episodes=_EPISODES.value,
          env_name=_ENV.value,
          skills_prefix=_CHECKPOINT.value,
          policy_prefix=_POLICY.value,
          output_path=metrics_path_for_seed(_METRICS_PATH.value, seed, seeds),
      )
  elif subcommand == 'export':
    runner.do_stage_export(_VARIANT_DIRS.value)
  elif subcommand == 'relabel':
    for seed in seeds:
      runner.do_stage_relabel(seed, _CHECKPOINT.value, _DATASET.value)
  log.log('Exiting')


def main(argv):
  if len(argv) != 2 or argv[1] not in SUBCOMMANDS:
    raise app.UsageError(
        'Expected exactly one subcommand out of {}'.format(SUBCOMMANDS),
        exitcode=2,
    )
  validate_flags(argv[1])
  try:
    run(argv[1])
  except errors.VarskillError as e:
    logger.Logger.get_instance().log(
        '[ERROR] {}: {}'.format(type(e).__name__, e)
    )
    sys.exit(e.exit_code)


if __name__ == '__main__':
  try:
    app.run(main)
  except Exception as e:
    logger.Logger.get_instance().log(e)
    raise e
