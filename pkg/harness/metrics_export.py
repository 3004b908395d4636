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

"""Plot-ready CSVs from the per-seed artifacts of one or more runs.

  learning_curve_<mode>.csv  episode, <column>_mean, <column>_std, seeds
  length_histogram.csv       length, count_mean, count_std, fraction
  ablation.csv               variant, mode, seeds, success/timesteps stats

One downstream update follows every rolled-out episode, so the episode index
is also the update count. Standard deviations are population (ddof=0)
deviations across seeds.
"""
import json
import os
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from downstream import downstream_trainer
from harness import experiment_config
from harness import run_manifest
from utils import csv_table
from utils import errors
from utils import logger

CURVE_COLUMNS = ('return', 'success', 'steps')
HISTOGRAM_FIELDS = ('length', 'count_mean', 'count_std', 'fraction')
ABLATION_FIELDS = ('variant', 'mode', 'seeds', 'success_mean',
                   'success_std', 'timesteps_mean', 'timesteps_std')

Table = Sequence[Mapping[str, str]]


class ExportResult(NamedTuple):
  paths: List[str]
  missing: List[str]


def skills_stage(seed: int) -> str:
  return 'train-skills/seed{}'.format(seed)


def downstream_stage(mode: str, seed: int) -> str:
  return 'train-downstream/{}/seed{}'.format(mode, seed)


def eval_stage(mode: str, seed: int) -> str:
  return 'eval/{}/seed{}'.format(mode, seed)


def expected_stages(config: experiment_config.ExperimentConfig) -> List[str]:
  mode = config.downstream.mode
  stages = ['gen-data']
  for seed in config.run.seeds:
    stages += [skills_stage(seed), downstream_stage(mode, seed),
               eval_stage(mode, seed)]
  return stages


def curve_statistics(
    curves: Sequence[Table], columns: Sequence[str] = CURVE_COLUMNS
) -> Tuple[List[str], List[List[float]]]:
  """Mean and std per episode over the seeds; truncated to the shortest curve."""
  headers = ['episode']
  for name in columns:
    headers += [name + '_mean', name + '_std']
  headers.append('seeds')
  if not curves:
    return headers, []
  length = min(len(curve) for curve in curves)
  stacked = {
      name: np.array([csv_table.column(curve[:length], name)
                      for curve in curves])
      for name in columns
  }
  rows = []
  for i in range(length):
    row = [i + 1]
    for name in columns:
      values = stacked[name][:, i]
      row += [float(np.mean(values)), float(np.std(values))]
    row.append(len(curves))
    rows.append(row)
  return headers, rows


def histogram_statistics(histograms: Sequence[Table]) -> List[List[float]]:
  if not histograms:
    return []
  per_seed: List[Dict[int, float]] = [
      {int(row['length']): float(row['count']) for row in table}
      for table in histograms
  ]
  lengths = sorted(set().union(*per_seed))
  counts = np.array([[seed.get(n, 0.0) for n in lengths] for seed in per_seed])
  means = counts.mean(axis=0)
  total = means.sum()
  return [
      [n, float(means[i]), float(counts[:, i].std()),
       float(means[i] / total) if total else 0.0]
      for i, n in enumerate(lengths)
  ]


def ablation_row(
    variant: str, mode: str, metrics: Sequence[Mapping[str, float]]
):
  success = np.array([m['success_rate'] for m in metrics], dtype=np.float64)
  timesteps = np.array([m['mean_timesteps'] for m in metrics],
                       dtype=np.float64)
  return [variant, mode, len(metrics), float(success.mean()),
          float(success.std()), float(timesteps.mean()),
          float(timesteps.std())]


def _load_config(run_dir: str) -> Optional[experiment_config.ExperimentConfig]:
  try:
    return experiment_config.load(os.path.join(run_dir, 'config.json'))
  except errors.VarskillError:
    return None


def _artifacts(
    run_dir: str, manifest: run_manifest.RunManifest, prefix: str, label: str
) -> List[str]:
  """Paths of `label` for every recorded stage starting with `prefix`."""
  return [
      os.path.join(run_dir, record['artifacts'][label])
      for stage, record in sorted(manifest.stages.items())
      if stage.startswith(prefix) and label in record['artifacts']
  ]


def _eval_metrics(run_dir: str) -> Dict[str, List[Dict[str, float]]]:
  """Eval metrics of every seed, grouped by downstream mode."""
  try:
    manifest = run_manifest.load_manifest(run_dir)
  except errors.VarskillError as e:
    logger.Logger.get_instance().warning(str(e))
    return {}
  by_mode = {}
  for mode in downstream_trainer.MODES:
    metrics = []
    prefix = 'eval/{}/'.format(mode)
    for path in _artifacts(run_dir, manifest, prefix, 'metrics'):
      with open(path, 'r') as f:
        metrics.append(json.load(f))
    if metrics:
      by_mode[mode] = metrics
  return by_mode


def export_run(
    run_dir: str,
    variant_dirs: Sequence[str] = (),
    output_dir: Optional[str] = None,
) -> ExportResult:
  """Writes the figure CSVs of `run_dir` (plus ablation variants).

  Stages that have not completed are listed in a warning and left out; the
  CSVs are still written, possibly with headers only.
  """
  log = logger.Logger.get_instance()
  output_dir = output_dir or os.path.join(run_dir, 'export')
  config = _load_config(run_dir)
  try:
    manifest = run_manifest.load_manifest(run_dir)
  except errors.MissingArtifactError:
    manifest = run_manifest.RunManifest(config_hash='')
  missing = (manifest.missing(expected_stages(config)) if config
             else ['config', 'run manifest'])
  if missing:
    log.warning('Partial export, missing stages: {}'.format(', '.join(missing)))

  paths = []
  configured_mode = config.downstream.mode if config else 'sac'
  for mode in downstream_trainer.MODES:
    curve_paths = _artifacts(run_dir, manifest,
                             'train-downstream/{}/'.format(mode), 'curve')
    if not curve_paths and mode != configured_mode:
      continue
    headers, rows = curve_statistics(
        [csv_table.read_csv(path) for path in curve_paths]
    )
    path = os.path.join(output_dir, 'learning_curve_{}.csv'.format(mode))
    csv_table.write_csv(path, headers, rows)
    paths.append(path)

  histograms = [
      csv_table.read_csv(path)
      for path in _artifacts(run_dir, manifest, 'train-skills/', 'histogram')
  ]
  path = os.path.join(output_dir, 'length_histogram.csv')
  csv_table.write_csv(path, HISTOGRAM_FIELDS, histogram_statistics(histograms))
  paths.append(path)

  rows = []
  for directory in [run_dir] + list(variant_dirs):
    variant = os.path.basename(os.path.normpath(directory))
    for mode, metrics in _eval_metrics(directory).items():
      rows.append(ablation_row(variant, mode, metrics))
  path = os.path.join(output_dir, 'ablation.csv')
  csv_table.write_csv(path, ABLATION_FIELDS, rows)
  paths.append(path)

  log.log_table(['export', 'rows'], [
      [os.path.basename(p), len(csv_table.read_csv(p))] for p in paths
  ])
  return ExportResult(paths, missing)
