import unittest

import numpy as np
import pytest

from envs import data_generator
from envs import gripper_env
from envs import point_maze_env
from envs import registry
from envs import scripted_policy
from utils import errors


def _run_expert(env, seed, noise=None):
  noise = noise or scripted_policy.NoiseProfile("expert", action_std=0.0)
  policy = scripted_policy.ScriptedPolicy(env, noise)
  rng = np.random.default_rng(seed)
  state = env.reset(seed)
  policy.reset(rng)
  total, done, success = 0.0, False, False
  while not done:
    result = env.step(state, policy.act(state.observation))
    total += result.reward
    success = success or result.info["success"]
    state, done = result.state, result.done
  return total, success, state


class TestPointMaze(unittest.TestCase):

  def setUp(self):
    self.env = point_maze_env.medium()

  def test_reset_places_agent_at_start_center(self):
    state = self.env.reset(0)
    np.testing.assert_array_equal(state.observation, [1.5, 1.5, 0.0, 0.0])
    self.assertEqual(state.step_count, 0)

  def test_zero_action_from_rest_keeps_position(self):
    result = self.env.step(self.env.reset(0), np.zeros(2))

    np.testing.assert_array_equal(result.state.observation[:2], [1.5, 1.5])
    self.assertEqual(result.reward, 0.0)
    self.assertFalse(result.done)

  def test_wall_clamps_position_and_zeroes_velocity(self):
    state = self.env.reset(0)
    for _ in range(10):
      state = self.env.step(state, np.array([-1.0, 0.0])).state

    self.assertAlmostEqual(state.observation[0], 1.0 + 1e-6, places=12)
    self.assertEqual(state.observation[2], 0.0)

  def test_out_of_bound_action_is_clipped_and_reported(self):
    result = self.env.step(self.env.reset(0), np.array([3.0, 0.0]))

    self.assertTrue(result.info["clipped"])
    self.assertAlmostEqual(result.state.observation[2], 0.5)

  def test_step_is_pure(self):
    state = self.env.reset(0)
    first = self.env.step(state, np.array([0.3, 0.7]))
    second = self.env.step(state, np.array([0.3, 0.7]))
    np.testing.assert_array_equal(first.state.observation,
                                  second.state.observation)

  def test_termination_features_are_position(self):
    obs = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(self.env.termination_features(obs), [1, 2])

  def test_expert_navigator_reaches_goal(self):
    noise = scripted_policy.noise_profile("expert")
    reached = sum(_run_expert(self.env, seed, noise)[1] for seed in range(100))
    self.assertGreaterEqual(reached, 95)

  def test_expert_navigator_solves_large_maze(self):
    total, success, _ = _run_expert(point_maze_env.large(), 0)
    self.assertTrue(success)
    self.assertEqual(total, 1.0)


class TestGripper(unittest.TestCase):

  def setUp(self):
    self.env = gripper_env.GripperEnv()

  def test_reset_is_deterministic_in_seed(self):
    np.testing.assert_array_equal(self.env.reset(7).observation,
                                  self.env.reset(7).observation)

  def test_object_spawn_covers_box_uniformly(self):
    objects = np.array([self.env.reset(s).observation[3:5]
                        for s in range(1000)])
    counts, _, _ = np.histogram2d(
        objects[:, 0], objects[:, 1], bins=4, range=[[0.1, 0.4], [0.1, 0.9]]
    )

    expected = 1000 / 16
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    # 15 degrees of freedom, 0.999 quantile
    self.assertLess(chi2, 37.7)

  def test_expert_closes_grip_above_object(self):
    obs = np.array([0.3, 0.3, 0.0, 0.3, 0.3, 0.0])

    action = self.env.make_expert(np.random.default_rng(0))(obs)

    self.assertGreater(action[2], 0.5)

  def test_grasp_requires_proximity(self):
    state = self.env.reset(0)
    result = self.env.step(state, np.array([0.0, 0.0, 1.0]))
    self.assertEqual(result.state.observation[5], 0.0)

  def test_scripted_expert_collects_reward_once(self):
    total, success, state = _run_expert(self.env, 3)

    self.assertTrue(success)
    self.assertEqual(total, 1.0)
    self.assertLess(state.step_count, self.env.spec.max_episode_steps)

  def test_termination_features_include_grip(self):
    self.assertEqual(self.env.spec.termination_features, (0, 1, 2))


class TestKitchen(unittest.TestCase):

  def test_expert_completes_all_stations(self):
    env = gripper_env.KitchenEnv()
    total, success, state = _run_expert(env, 5)

    self.assertTrue(success)
    self.assertAlmostEqual(total, 1.0)
    np.testing.assert_array_equal(state.observation[3:], np.ones(4))


class TestScriptedPolicy(unittest.TestCase):

  def test_full_segment_probability_is_uniform_random(self):
    env = gripper_env.GripperEnv()
    noise = scripted_policy.NoiseProfile("replay", segment_probability=1.0)
    policy = scripted_policy.ScriptedPolicy(env, noise)
    policy.reset(np.random.default_rng(0))
    obs = env.reset(0).observation

    actions = np.array([policy.act(obs) for _ in range(2000)])

    self.assertTrue(np.all(np.abs(actions) <= 1.0))
    self.assertLess(actions.min(), -0.8)
    self.assertGreater(actions.max(), 0.8)
    self.assertAlmostEqual(float(actions.mean()), 0.0, delta=0.15)

  def test_random_blocks_are_random_walks(self):
    env = gripper_env.GripperEnv()
    obs = env.reset(0).observation
    blocks = {}
    for step_std in (0.0, 0.1):
      noise = scripted_policy.NoiseProfile(
          "replay", segment_probability=1.0, segment_length_range=(10, 10),
          walk_step_std=step_std,
      )
      policy = scripted_policy.ScriptedPolicy(env, noise)
      policy.reset(np.random.default_rng(0))
      actions = np.array([policy.act(obs) for _ in range(40)])
      blocks[step_std] = np.diff(actions.reshape(4, 10, -1), axis=1)

    np.testing.assert_array_equal(blocks[0.0], 0.0)
    self.assertTrue(np.all(np.abs(blocks[0.1]) <= 0.6))
    for block in blocks[0.1]:
      self.assertTrue(np.any(block != 0.0))

  def test_negative_walk_step_std(self):
    with pytest.raises(errors.ConfigurationError):
      scripted_policy.NoiseProfile("replay", walk_step_std=-1.0).validate()

  def test_mixed_tier_alternates_episodes(self):
    noise = scripted_policy.noise_profile("mixed")
    self.assertEqual(noise.for_episode(0).segment_probability, 0.0)
    self.assertEqual(noise.for_episode(1).segment_probability, 0.3)

  def test_unknown_tier(self):
    with pytest.raises(errors.ConfigurationError):
      scripted_policy.noise_profile("medium")

  def test_act_before_reset(self):
    policy = scripted_policy.ScriptedPolicy(
        gripper_env.GripperEnv(), scripted_policy.noise_profile("expert")
    )
    with pytest.raises(errors.PreconditionError):
      policy.act(np.zeros(6))


class TestDataGenerator(unittest.TestCase):

  def test_single_expert_episode_has_initial_lengths(self):
    dataset = data_generator.generate_dataset(
        gripper_env.GripperEnv(), 1, scripted_policy.noise_profile("expert"), 0
    )

    self.assertEqual(len(dataset), 1)
    np.testing.assert_array_equal(dataset[0].skill_length, 10)
    self.assertEqual(len(dataset[0].states), len(dataset[0].actions))

  def test_equal_seeds_give_identical_datasets(self):
    env = registry.make_env("pointmaze-medium")
    noise = scripted_policy.noise_profile("replay")
    first = data_generator.generate_dataset(env, 3, noise, 11)
    second = data_generator.generate_dataset(env, 3, noise, 11)

    for a, b in zip(first.trajectories, second.trajectories):
      self.assertEqual(a.states.tobytes(), b.states.tobytes())
      self.assertEqual(a.actions.tobytes(), b.actions.tobytes())

  def test_replay_tier_reaches_goal_no_more_often(self):
    env = registry.make_env("pointmaze-medium")
    summaries = {
        tier: data_generator.summarize(
            data_generator.generate_dataset(
                env, 20, scripted_policy.noise_profile(tier), 0
            )
        )
        for tier in ("expert", "replay")
    }
    self.assertLessEqual(summaries["replay"]["goal_fraction"],
                         summaries["expert"]["goal_fraction"])
    self.assertEqual(summaries["expert"]["goal_fraction"], 1.0)

  def test_zero_episodes(self):
    with pytest.raises(errors.PreconditionError):
      data_generator.generate_dataset(
          gripper_env.GripperEnv(), 0, scripted_policy.noise_profile("expert"),
          0
      )

  def test_only_short_episodes_is_generation_error(self):
    with pytest.raises(errors.GenerationError):
      data_generator.generate_dataset(
          gripper_env.GripperEnv(max_episode_steps=3), 4,
          scripted_policy.noise_profile("expert"), 0
      )

  def test_unknown_env(self):
    with pytest.raises(errors.ConfigurationError):
      registry.make_env("antmaze")


if __name__ == "__main__":
  unittest.main()
