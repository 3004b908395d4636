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

"""Stage wise runner for varskill experiments.

Stages are :
1. Gen-data
2. Train-skills (per seed)
3. Train-downstream (per seed)
4. Eval (per seed)
5. Export.

Every stage is a pure function of the config, its seed and the artifacts of
the stages before it. Artifacts live under run.output_dir:

  config.json, run_manifest.json, dataset.*
  seed<n>/skills.*, loss.csv, relabel_reports.csv, length_histogram.csv,
          relabeled_dataset.*, <mode>_policy.*, <mode>_curve.csv,
          eval_<mode>.json
  export/*.csv
"""
import dataclasses
import json
import os
import time
from typing import Dict, Optional, Sequence

from dataset import dataset_io
from diffcore import checkpoint
from downstream import downstream_trainer
from downstream import evaluation
from envs import data_generator
from envs import registry
from envs import scripted_policy
from harness import experiment_config
from harness import metrics_export
from harness import run_manifest
from relabel import skill_length_relabeler
from skillmodel import skill_model
from skillmodel import trainer
from utils import errors
from utils import logger


class StageRunner:
  """Runs the stages of one experiment config.

  Attributes:
    config: the ExperimentConfig; run.output_dir is the run directory.
    run_dir: where every artifact is written.
    config_hash: SHA-256 of the canonical config, recorded in the manifest.
  """

  def __init__(
      self,
      config: experiment_config.ExperimentConfig,
      debug: bool = False,
  ):
    self.config = config
    self.run_dir = config.run.output_dir
    logger.Logger.initialize(self.run_dir, debug)
    self.config_hash = experiment_config.config_hash(config)
    experiment_config.dump(config, os.path.join(self.run_dir, 'config.json'))

  def path(self, *parts: str) -> str:
    return os.path.join(self.run_dir, *parts)

  def seed_path(self, seed: int, name: str) -> str:
    return self.path('seed{}'.format(seed), name)

  def _record(
      self, stage: str, artifacts: Dict[str, str], start_time: float, number
  ) -> None:
    relative = {
        label: os.path.relpath(path, self.run_dir)
        for label, path in artifacts.items()
    }
    run_manifest.record_stage(
        self.run_dir, self.config_hash, stage, relative,
        time.time() - start_time,
    )
    logger.Logger.get_instance().log(
        '[{}]Stage completed in {} seconds.'.format(
            number, int(time.time() - start_time)
        )
    )

  def env(self, name: Optional[str] = None):
    return registry.make_env(name or self.config.data.env)

  def model_config(self, env) -> skill_model.ModelConfig:
    """ModelConfig with the zero-valued dims taken from the environment."""
    spec = env.spec
    model = self.config.model
    return dataclasses.replace(
        model,
        state_dim=model.state_dim or spec.state_dim,
        action_dim=model.action_dim or spec.action_dim,
        skill_dim=model.skill_dim or spec.skill_dim,
    )

  def do_stage_gen_data(self):
    """Gen-data stage; returns the generated TrajectoryDataset."""
    start_time = time.time()
    data = self.config.data
    log = logger.Logger.get_instance()
    log.header(
        '[1]Executing GEN-DATA stage: env={} tier={} episodes={} seed={}'
        .format(data.env, data.tier, data.episodes, data.seed)
    )
    dataset = data_generator.generate_dataset(
        self.env(),
        data.episodes,
        scripted_policy.noise_profile(data.tier),
        data.seed,
        initial_skill_length=data.initial_skill_length,
        min_skill_length=self.config.relabel.min_length,
    )
    prefix = self.path('dataset')
    dataset_io.save_dataset(dataset, prefix)
    summary = data_generator.summarize(dataset)
    log.log_table(list(summary), [list(summary.values())])
    self._record('gen-data', {'dataset': prefix}, start_time, 1)
    return dataset

  def load_dataset(self, prefix: Optional[str] = None):
    prefix = prefix or self.path('dataset')
    if not os.path.exists(checkpoint.manifest_path(prefix)):
      raise errors.MissingArtifactError(
          'missing dataset {}; run gen-data first'.format(prefix)
      )
    return dataset_io.load_dataset(prefix)

  def do_stage_train_skills(self, seed: int) -> trainer.TrainingResult:
    """Train-skills stage for one seed."""
    start_time = time.time()
    log = logger.Logger.get_instance()
    log.header('[2]Executing TRAIN-SKILLS stage: seed={}'.format(seed))
    dataset = self.load_dataset()
    env = self.env(dataset.env_name)
    relabel_config = dataclasses.replace(self.config.relabel, seed=seed)
    model = skill_model.SkillModel(self.model_config(env), seed=seed)
    skill_trainer = trainer.SkillTrainer(
        model,
        dataset,
        self.config.train,
        relabel_config,
        seed=seed,
        default_batch_size=env.spec.batch_size,
    )
    artifacts = {
        'checkpoint': self.seed_path(seed, 'skills'),
        'loss': self.seed_path(seed, 'loss.csv'),
        'reports': self.seed_path(seed, 'relabel_reports.csv'),
        'histogram': self.seed_path(seed, 'length_histogram.csv'),
        'dataset': self.seed_path(seed, 'relabeled_dataset'),
    }
    result = skill_trainer.train(
        loss_csv_path=artifacts['loss'],
        checkpoint_prefix=artifacts['checkpoint'],
    )
    skill_model.save_model(
        model,
        artifacts['checkpoint'],
        {'seed': seed, 'env': env.spec.name, 'config_hash': self.config_hash,
         'step': self.config.train.max_steps},
    )
    skill_length_relabeler.write_reports_csv(artifacts['reports'],
                                             result.reports)
    skill_length_relabeler.write_histogram_csv(
        artifacts['histogram'], dataset.all_skill_lengths(),
        relabel_config.min_length, relabel_config.max_length,
    )
    dataset_io.save_dataset(dataset, artifacts['dataset'])
    self._record(metrics_export.skills_stage(seed), artifacts, start_time, 2)
    return result

  def load_model(self, seed: int, prefix: Optional[str] = None):
    return self.load_skills(seed, prefix)[0]

  def load_skills(self, seed: int, prefix: Optional[str] = None):
    """(SkillModel, env name) of a skill checkpoint.

    The env name is the one the checkpoint was trained on, falling back to
    data.env for checkpoints without it.
    """
    model, metadata = skill_model.load_model(
        prefix or self.seed_path(seed, 'skills')
    )
    return model, metadata.get('env', self.config.data.env)

  def do_stage_train_downstream(
      self, seed: int, mode: Optional[str] = None
  ) -> downstream_trainer.DownstreamResult:
    """Train-downstream stage for one seed; `mode` overrides downstream.mode."""
    start_time = time.time()
    mode = mode or self.config.downstream.mode
    logger.Logger.get_instance().header(
        '[3]Executing TRAIN-DOWNSTREAM stage: mode={} seed={}'.format(mode, seed)
    )
    model, env_name = self.load_skills(seed)
    env = self.env(env_name)
    config = self.config
    learner = downstream_trainer.DownstreamTrainer(
        model,
        env,
        dataclasses.replace(config.downstream, mode=mode),
        config.sac,
        config.model_based,
        config.cem,
        config.execution,
        seed=seed,
        default_max_steps=config.relabel.max_length,
    )
    artifacts = {
        'policy': self.seed_path(seed, '{}_policy'.format(mode)),
        'curve': self.seed_path(seed, '{}_curve.csv'.format(mode)),
    }
    result = learner.train(artifacts['curve'], artifacts['policy'])
    self._record(metrics_export.downstream_stage(mode, seed), artifacts,
                 start_time, 3)
    return result

  def do_stage_eval(
      self,
      seed: int,
      mode: Optional[str] = None,
      episodes: Optional[int] = None,
      eval_seed: Optional[int] = None,
      env_name: Optional[str] = None,
      skills_prefix: Optional[str] = None,
      policy_prefix: Optional[str] = None,
      output_path: Optional[str] = None,
  ) -> evaluation.EvaluationResult:
    """Eval stage; the prefixes default to this run's seed directory."""
    start_time = time.time()
    config = self.config
    mode = mode or config.downstream.mode
    episodes = episodes or config.downstream.eval_episodes
    eval_seed = seed if eval_seed is None else eval_seed
    logger.Logger.get_instance().header(
        '[4]Executing EVAL stage: mode={} seed={} episodes={}'.format(
            mode, eval_seed, episodes
        )
    )
    model, trained_env = self.load_skills(seed, skills_prefix)
    env = self.env(env_name or trained_env)
    controller = downstream_trainer.load_controller(
        model,
        policy_prefix or self.seed_path(seed, '{}_policy'.format(mode)),
        config.sac,
        config.model_based,
        config.cem,
    )
    result = evaluation.evaluate(
        controller, env, episodes, eval_seed, config.execution,
        default_max_steps=config.relabel.max_length,
        workers=config.run.eval_workers,
    )
    output_path = output_path or self.seed_path(
        seed, 'eval_{}.json'.format(mode)
    )
    directory = os.path.dirname(output_path)
    if directory:
      os.makedirs(directory, exist_ok=True)
    checkpoint.write_atomically(
        output_path,
        json.dumps(result.as_json(), sort_keys=True, indent=2).encode('utf-8'),
    )
    self._record(metrics_export.eval_stage(mode, seed),
                 {'metrics': output_path}, start_time, 4)
    return result

  def do_stage_relabel(
      self,
      seed: int,
      skills_prefix: Optional[str] = None,
      dataset_prefix: Optional[str] = None,
  ) -> skill_length_relabeler.RelabelReport:
    """One standalone relabel pass of a dataset with a trained skill model."""
    start_time = time.time()
    logger.Logger.get_instance().header(
        '[R]Executing RELABEL stage: seed={}'.format(seed)
    )
    model = self.load_model(seed, skills_prefix)
    dataset = self.load_dataset(dataset_prefix)
    relabel_config = dataclasses.replace(self.config.relabel, seed=seed)
    report = skill_length_relabeler.relabel_dataset(model, dataset,
                                                    relabel_config)
    artifacts = {
        'dataset': self.seed_path(seed, 'standalone_relabeled_dataset'),
        'reports': self.seed_path(seed, 'standalone_relabel_report.csv'),
        'histogram': self.seed_path(seed, 'standalone_length_histogram.csv'),
    }
    dataset_io.save_dataset(dataset, artifacts['dataset'])
    skill_length_relabeler.write_reports_csv(artifacts['reports'], [report])
    skill_length_relabeler.write_histogram_csv(
        artifacts['histogram'], dataset.all_skill_lengths(),
        relabel_config.min_length, relabel_config.max_length,
    )
    self._record('relabel/seed{}'.format(seed), artifacts, start_time, 'R')
    return report

  def do_stage_export(
      self, variant_dirs: Sequence[str] = ()
  ) -> metrics_export.ExportResult:
    start_time = time.time()
    logger.Logger.get_instance().header('[5]Executing EXPORT stage')
    result = metrics_export.export_run(self.run_dir, variant_dirs)
    logger.Logger.get_instance().log(
        '[5]Stage completed in {} seconds.'.format(int(time.time() - start_time))
    )
    return result

  def run_all(self) -> metrics_export.ExportResult:
    """Every stage for every seed, then export."""
    self.do_stage_gen_data()
    for seed in self.config.run.seeds:
      self.do_stage_train_skills(seed)
      self.do_stage_train_downstream(seed)
      self.do_stage_eval(seed)
    return self.do_stage_export()
