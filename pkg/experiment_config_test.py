import json
import os
import tempfile
import unittest

import pytest

from harness import experiment_config
from harness import run_manifest
from utils import errors


class TestExperimentConfig(unittest.TestCase):

  def test_defaults(self):
    config = experiment_config.ExperimentConfig()
    self.assertEqual(config.relabel.epsilon, 0.0)
    self.assertEqual(config.relabel.min_length, 4)
    self.assertEqual(config.relabel.max_length, 30)
    self.assertEqual(config.data.initial_skill_length, 10)
    self.assertEqual(config.train.max_steps, 20000)
    self.assertEqual(config.train.relabel_interval, 4000)
    self.assertEqual(config.train.learning_rate, 3e-4)
    self.assertEqual(config.run.seeds, [0, 1, 2, 3, 4])

  def test_round_trip_is_identity(self):
    config = experiment_config.parse(json.dumps({
        "data.env": "gripper",
        "train.lambda_bc": 3,
        "relabel.rule": "set_max",
        "run.seeds": [7, 8],
    }))
    text = experiment_config.serialize(config)
    again = experiment_config.parse(text)
    self.assertEqual(again, config)
    self.assertEqual(experiment_config.serialize(again), text)

  def test_integer_accepted_for_float_field(self):
    config = experiment_config.from_flat({"train.lambda_bc": 3})
    self.assertIsInstance(config.train.lambda_bc, float)

  def test_unknown_key_is_rejected(self):
    with pytest.raises(errors.ConfigurationError):
      experiment_config.from_flat({"train.lamda_bc": 2.0})
    with pytest.raises(errors.ConfigurationError):
      experiment_config.from_flat({"optimizer.lr": 1.0})
    with pytest.raises(errors.ConfigurationError):
      experiment_config.from_flat({"seeds": [1]})

  def test_wrong_types_are_rejected(self):
    for key, value in (("train.max_steps", 1.5), ("train.max_steps", True),
                       ("train.relabel_enabled", 1), ("data.env", 3),
                       ("run.seeds", 3), ("run.seeds", ["a"])):
      with pytest.raises(errors.ConfigurationError):
        experiment_config.from_flat({key: value})

  def test_invalid_values_are_rejected(self):
    with pytest.raises(errors.ConfigurationError):
      experiment_config.from_flat({"data.env": "antmaze"})
    with pytest.raises(errors.ConfigurationError):
      experiment_config.from_flat({"relabel.min_length": 3})
    with pytest.raises(errors.ConfigurationError):
      experiment_config.from_flat({"model.num_key_states": 10})

  def test_malformed_json(self):
    with pytest.raises(errors.ConfigurationError):
      experiment_config.parse("{not json")
    with pytest.raises(errors.ConfigurationError):
      experiment_config.parse("[1, 2]")

  def test_hash_changes_with_content(self):
    a = experiment_config.ExperimentConfig()
    b = experiment_config.from_flat({"relabel.epsilon": 5.0})
    self.assertEqual(len(experiment_config.config_hash(a)), 64)
    self.assertEqual(experiment_config.config_hash(a),
                     experiment_config.config_hash(
                         experiment_config.ExperimentConfig()))
    self.assertNotEqual(experiment_config.config_hash(a),
                        experiment_config.config_hash(b))

  def test_overrides(self):
    config = experiment_config.apply_overrides(
        experiment_config.ExperimentConfig(),
        ["train.relabel_enabled=false", "data.env=kitchen",
         "relabel.epsilon=-5", "run.seeds=[1, 2]"],
    )
    self.assertFalse(config.train.relabel_enabled)
    self.assertEqual(config.data.env, "kitchen")
    self.assertEqual(config.relabel.epsilon, -5.0)
    self.assertEqual(config.run.seeds, [1, 2])
    with pytest.raises(errors.ConfigurationError):
      experiment_config.apply_overrides(config, ["train.max_steps"])

  def test_dump_and_load(self):
    config = experiment_config.from_flat({"cem.population": 64})
    with tempfile.TemporaryDirectory() as tmp:
      path = os.path.join(tmp, "nested", "config.json")
      experiment_config.dump(config, path)
      self.assertEqual(experiment_config.load(path), config)

  def test_missing_file(self):
    with pytest.raises(errors.MissingArtifactError):
      experiment_config.load("/nonexistent/config.json")


class TestRunManifest(unittest.TestCase):

  def test_records_accumulate(self):
    with tempfile.TemporaryDirectory() as tmp:
      run_manifest.record_stage(tmp, "abc", "gen-data", {"dataset": "d"}, 1.0)
      run_manifest.record_stage(tmp, "abc", "train-skills/seed0",
                                {"checkpoint": "seed0/skills"}, 2.0)
      manifest = run_manifest.load_manifest(tmp)
    self.assertEqual(manifest.config_hash, "abc")
    self.assertEqual(manifest.code_version, run_manifest.CODE_VERSION)
    self.assertEqual(manifest.artifact("gen-data", "dataset"), "d")
    self.assertEqual(manifest.missing(["gen-data", "eval/sac/seed0"]),
                     ["eval/sac/seed0"])

  def test_new_config_starts_over(self):
    with tempfile.TemporaryDirectory() as tmp:
      run_manifest.record_stage(tmp, "abc", "gen-data", {}, 1.0)
      manifest = run_manifest.record_stage(tmp, "def", "train-skills/seed0",
                                           {}, 1.0)
    self.assertEqual(list(manifest.stages), ["train-skills/seed0"])

  def test_missing_and_malformed(self):
    with tempfile.TemporaryDirectory() as tmp:
      with pytest.raises(errors.MissingArtifactError):
        run_manifest.load_manifest(tmp)
      with open(run_manifest.manifest_path(tmp), "w") as f:
        f.write("{}")
      with pytest.raises(errors.FormatError):
        run_manifest.load_manifest(tmp)

  def test_unknown_artifact(self):
    manifest = run_manifest.RunManifest("abc")
    with pytest.raises(errors.MissingArtifactError):
      manifest.artifact("gen-data", "dataset")


if __name__ == "__main__":
  unittest.main()
