import os
import tempfile
import unittest

import numpy as np
import pytest

from dataset.trajectory_dataset import Trajectory, TrajectoryDataset
from relabel import skill_length_relabeler as relabeler
from skillmodel import skill_model
from utils import csv_table
from utils import errors


def _model(seed=0, **overrides):
  fields = dict(state_dim=2, action_dim=1, skill_dim=2, hidden_size=4,
                rnn_hidden_size=3, similarity_hidden_size=3,
                representation_dim=2, latent_dim=3)
  fields.update(overrides)
  return skill_model.SkillModel(skill_model.ModelConfig(**fields), seed=seed)


def _constant_similarity(model, value):
  """f(s, z, s') = value everywhere."""
  model.set_params(model.params.replace({
      "phi/layer2/w": np.zeros((3, 2)),
      "phi/layer2/b": np.array([1.0, 0.0]),
      "psi/layer2/w": np.zeros((3, 2)),
      "psi/layer2/b": np.array([value, 0.0]),
  }))
  return model


def _time_indexed_similarity(model, offset):
  """f(s, z, s') = offset - s'[0] for s'[0] >= 0."""
  model.set_params(model.params.replace({
      "psi/layer0/w": np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
      "psi/layer0/b": np.zeros(3),
      "psi/layer1/w": np.eye(3),
      "psi/layer1/b": np.zeros(3),
      "psi/layer2/w": np.array([[-1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]),
      "psi/layer2/b": np.array([offset, 0.0]),
      "phi/layer2/w": np.zeros((3, 2)),
      "phi/layer2/b": np.array([1.0, 0.0]),
  }))
  return model


def _ramp(length):
  states = np.stack([np.arange(length), np.zeros(length)], axis=1)
  return Trajectory(states, np.zeros((length, 1)))


def _random_dataset(lengths=(40, 25, 33), seed=0):
  rng = np.random.default_rng(seed)
  return TrajectoryDataset(
      [Trajectory(rng.standard_normal((n, 2)), rng.uniform(-1, 1, (n, 1)))
       for n in lengths],
      "toy",
  )


class TestScanLength(unittest.TestCase):

  def test_immediate_break(self):
    self.assertEqual(relabeler.scan_length(-np.ones(40), 0.0), 1)

  def test_never_breaks(self):
    self.assertEqual(relabeler.scan_length(np.ones(40), 0.0), 41)

  def test_break_after_seven_positives(self):
    similarities = np.array([1.0] * 7 + [-1.0] + [1.0] * 10)
    self.assertEqual(relabeler.scan_length(similarities, 0.0), 8)

  def test_first_break_returns_the_break_alpha(self):
    for alpha in range(1, 12):
      similarities = [1.0] * (alpha - 1) + [-1.0] + [1.0] * 5
      self.assertEqual(relabeler.scan_length(similarities, 0.0), alpha)

  def test_threshold_is_strict(self):
    self.assertEqual(relabeler.scan_length([0.5, 0.5, 0.0, 1.0], 0.0), 3)

  def test_values_after_break_are_ignored(self):
    head = [2.0, 1.0, -3.0]
    for tail in ([5.0] * 20, [-5.0] * 20, list(np.linspace(-1, 1, 20))):
      self.assertEqual(relabeler.scan_length(head + tail, 0.0), 3)

  def test_set_max_rule_sees_recovery(self):
    similarities = [1.0, -1.0, 1.0, 1.0, -1.0]
    self.assertEqual(relabeler.scan_length(similarities, 0.0, "first_break"), 2)
    self.assertEqual(relabeler.scan_length(similarities, 0.0, "set_max"), 5)
    self.assertEqual(relabeler.scan_length([-1.0, -1.0], 0.0, "set_max"), 1)

  def test_clamped_lengths_stay_in_bounds(self):
    config = relabeler.RelabelConfig()
    rng = np.random.default_rng(0)
    for _ in range(100_000):
      remaining = int(rng.integers(config.min_length, 60))
      raw = relabeler.scan_length(
          rng.standard_normal(remaining - 1) + 1.0, config.epsilon
      )
      length = relabeler.clamp_length(raw, remaining, config)
      self.assertTrue(
          config.min_length <= length <= min(config.max_length, remaining)
      )


class TestRelabelOne(unittest.TestCase):

  def setUp(self):
    self.config = relabeler.RelabelConfig()

  def test_negative_similarity_gives_minimum_length(self):
    model = _constant_similarity(_model(), -1.0)
    self.assertEqual(relabeler.relabel_one(model, _ramp(50), 0, self.config), 4)

  def test_positive_similarity_gives_maximum_length(self):
    model = _constant_similarity(_model(), 1.0)
    self.assertEqual(relabeler.relabel_one(model, _ramp(50), 0, self.config),
                     30)

  def test_growth_is_cut_at_episode_end(self):
    model = _constant_similarity(_model(), 1.0)
    self.assertEqual(relabeler.relabel_one(model, _ramp(50), 40, self.config),
                     10)

  def test_scripted_similarity_table(self):
    model = _time_indexed_similarity(_model(), 7.5)
    self.assertEqual(relabeler.relabel_one(model, _ramp(40), 0, self.config), 8)

  def test_start_too_close_to_end(self):
    with pytest.raises(errors.PreconditionError):
      relabeler.relabel_one(_model(), _ramp(20), 17, self.config)

  def test_current_length_below_minimum(self):
    trajectory = _ramp(20)
    trajectory.skill_length[:] = 3
    with pytest.raises(errors.PreconditionError):
      relabeler.relabel_one(_model(), trajectory, 0, self.config)


class TestRelabelDataset(unittest.TestCase):

  def test_bounds_hold_for_every_start(self):
    dataset = _random_dataset()
    config = relabeler.RelabelConfig(epsilon=-0.01)

    report = relabeler.relabel_dataset(_model(1), dataset, config)

    self.assertEqual(report.count, sum(n - 3 for n in (40, 25, 33)))
    for trajectory in dataset.trajectories:
      for t in range(len(trajectory) - 3):
        self.assertGreaterEqual(trajectory.skill_length[t], 4)
        self.assertLessEqual(trajectory.skill_length[t],
                             min(30, len(trajectory) - t))
    self.assertTrue(np.all(np.abs(report.new_lengths - report.old_lengths)
                           <= 30 - 4))

  def test_fixed_bounds_are_a_fixpoint(self):
    dataset = _random_dataset()
    config = relabeler.RelabelConfig(min_length=10, max_length=10)
    model = _model(2)
    for pass_index in range(2):
      report = relabeler.relabel_dataset(model, dataset, config, pass_index)
      np.testing.assert_array_equal(report.new_lengths, 10)

  def test_infinite_threshold_gives_minimum(self):
    dataset = _random_dataset()
    relabeler.relabel_dataset(
        _model(), dataset, relabeler.RelabelConfig(epsilon=float("inf"))
    )
    for trajectory in dataset.trajectories:
      np.testing.assert_array_equal(trajectory.skill_length[:-3], 4)

  def test_higher_threshold_never_lengthens(self):
    model = _model(5)
    lengths = {}
    for epsilon in (-0.05, 0.0, 0.05):
      dataset = _random_dataset(seed=7)
      lengths[epsilon] = relabeler.relabel_dataset(
          model, dataset, relabeler.RelabelConfig(epsilon=epsilon, seed=3)
      ).new_lengths
    self.assertTrue(np.all(lengths[0.0] <= lengths[-0.05]))
    self.assertTrue(np.all(lengths[0.05] <= lengths[0.0]))

  def test_same_seed_is_deterministic(self):
    model = _model(4)
    first = relabeler.relabel_dataset(model, _random_dataset(),
                                      relabeler.RelabelConfig(seed=9))
    second = relabeler.relabel_dataset(model, _random_dataset(),
                                       relabeler.RelabelConfig(seed=9))
    np.testing.assert_array_equal(first.new_lengths, second.new_lengths)

  def test_sample_budget(self):
    dataset = _random_dataset()
    report = relabeler.relabel_dataset(
        _model(), dataset, relabeler.RelabelConfig(num_samples=12)
    )
    self.assertEqual(report.count, 12)

  def test_every_label_fits_in_its_episode(self):
    for num_samples in (0, 12):
      dataset = _random_dataset()
      relabeler.relabel_dataset(
          _model(), dataset, relabeler.RelabelConfig(num_samples=num_samples)
      )
      for trajectory in dataset.trajectories:
        remaining = len(trajectory) - np.arange(len(trajectory))
        self.assertTrue(np.all(trajectory.skill_length <= remaining))
        self.assertEqual(trajectory.skill_length[-1], 1)

  def test_clamp_to_episode_end(self):
    np.testing.assert_array_equal(
        relabeler.clamp_to_episode_end(np.array([10, 10, 10, 2])),
        [4, 3, 2, 1],
    )

  def test_relabel_bumps_label_version(self):
    dataset = _random_dataset()
    before = dataset.labels_version
    relabeler.relabel_dataset(_model(), dataset, relabeler.RelabelConfig())
    self.assertGreater(dataset.labels_version, before)

  def test_min_length_must_hold_key_states(self):
    with pytest.raises(errors.ConfigurationError):
      relabeler.relabel_dataset(
          _model(num_key_states=5), _random_dataset(),
          relabeler.RelabelConfig(min_length=4),
      )

  def test_report_and_histogram_csv(self):
    dataset = _random_dataset()
    config = relabeler.RelabelConfig()
    report = relabeler.relabel_dataset(_model(), dataset, config, 0, 4000)
    with tempfile.TemporaryDirectory() as tmp:
      report_path = os.path.join(tmp, "relabel.csv")
      histogram_path = os.path.join(tmp, "lengths.csv")
      relabeler.write_reports_csv(report_path, [report])
      relabeler.write_histogram_csv(histogram_path, report.new_lengths, 4, 30)
      rows = csv_table.read_csv(report_path)
      histogram = csv_table.read_csv(histogram_path)

    self.assertEqual(len(rows), 1)
    self.assertEqual(int(rows[0]["step"]), 4000)
    self.assertEqual(int(rows[0]["count"]), report.count)
    self.assertEqual(len(histogram), 27)
    self.assertEqual(sum(int(r["count"]) for r in histogram), report.count)


class TestRelabelConfig(unittest.TestCase):

  def test_minimum_below_four(self):
    with pytest.raises(errors.ConfigurationError):
      relabeler.RelabelConfig(min_length=3)

  def test_maximum_below_minimum(self):
    with pytest.raises(errors.ConfigurationError):
      relabeler.RelabelConfig(min_length=8, max_length=6)

  def test_unknown_rule(self):
    with pytest.raises(errors.ConfigurationError):
      relabeler.RelabelConfig(rule="longest")


if __name__ == "__main__":
  unittest.main()
