import os
import tempfile
import unittest

import numpy as np
import pytest

from diffcore import gradient_check
from diffcore import tensor
from downstream import cem_planner
from downstream import controllers
from downstream import downstream_trainer
from downstream import evaluation
from downstream import hl_policy
from downstream import replay_buffer
from downstream import skill_dynamics
from downstream import skill_executor
from envs import env_interface
from envs import registry
from skillmodel import skill_model
from utils import csv_table
from utils import errors


class _LineEnv(env_interface.EnvInterface):
  """x moves 0.1 * action per step; success once x >= goal."""

  def __init__(self, goal=10.0, threshold=0.5, max_episode_steps=40):
    self.goal = goal
    self._spec = env_interface.EnvSpec(
        name="line", state_dim=1, action_dim=1, termination_features=(0,),
        distance_threshold=threshold, max_episode_steps=max_episode_steps,
        skill_dim=1, batch_size=4, family="maze",
    )

  @property
  def spec(self):
    return self._spec

  def reset(self, seed):
    return env_interface.EnvState(np.zeros(1), 0)

  def step(self, state, action):
    action, clipped = self.clip_action(action)
    observation = state.observation + 0.1 * action
    success = self.is_success(observation)
    step_count = state.step_count + 1
    return env_interface.StepResult(
        env_interface.EnvState(observation, step_count),
        1.0 if success else 0.0,
        success or step_count >= self._spec.max_episode_steps,
        {"clipped": clipped, "success": success},
    )

  def is_success(self, observation):
    return bool(observation[0] >= self.goal)

  def make_expert(self, rng):
    return lambda observation: np.ones(1)


class _ConstantPolicy(skill_executor.SkillPolicy):

  def __init__(self, action, target):
    self.action = np.array([action])
    self.target = None if target is None else np.array([target])

  def act(self, observation, skill, rng, deterministic):
    return self.action

  def target_observation(self, observation, skill):
    return self.target


def _model(state_dim=1, action_dim=1, skill_dim=1, seed=0):
  return skill_model.SkillModel(
      skill_model.ModelConfig(
          state_dim=state_dim, action_dim=action_dim, skill_dim=skill_dim,
          hidden_size=4, rnn_hidden_size=3, similarity_hidden_size=3,
          representation_dim=2, latent_dim=3,
      ),
      seed=seed,
  )


def _batch(size=5, seed=0, rewards=None, dones=0.0):
  rng = np.random.default_rng(seed)
  return replay_buffer.TransitionBatch(
      states=rng.standard_normal((size, 1)),
      skills=rng.uniform(-0.9, 0.9, (size, 1)),
      rewards=np.zeros(size) if rewards is None else np.asarray(rewards),
      steps=rng.integers(1, 31, size),
      next_states=rng.standard_normal((size, 1)),
      dones=np.full(size, dones),
  )


def _execute(policy, env=None, config=None):
  env = env or _LineEnv()
  return skill_executor.execute_skill(
      env, policy, env.reset(0), np.zeros(1),
      config or skill_executor.ExecutionConfig(), np.random.default_rng(0),
  )


class TestSkillExecutor(unittest.TestCase):

  def test_target_at_start_state_terminates_after_one_step(self):
    model = _model()
    model.set_params(model.params.replace({
        "obs_decoder/layer1/w": np.zeros((4, 1)),
        "obs_decoder/layer1/b": np.zeros(1),
    }))
    result = _execute(skill_executor.ModelSkillPolicy(model))
    self.assertEqual(result.transition.steps, 1)
    self.assertFalse(result.episode_over)

  def test_unreachable_target_hits_step_cap(self):
    result = _execute(_ConstantPolicy(1.0, 100.0))
    self.assertEqual(result.transition.steps, 30)
    np.testing.assert_allclose(result.transition.next_state, [3.0])

  def test_explicit_step_cap(self):
    result = _execute(_ConstantPolicy(1.0, 100.0),
                      config=skill_executor.ExecutionConfig(max_steps=7))
    self.assertEqual(result.transition.steps, 7)

  def test_first_crossing_of_threshold(self):
    # |0.1 k - 0.45| <= 0.06 first holds at k = 4.
    result = _execute(_ConstantPolicy(1.0, 0.45), env=_LineEnv(threshold=0.06))
    self.assertEqual(result.transition.steps, 4)

  def test_episode_end_stops_skill_and_discounts_reward(self):
    env = _LineEnv(goal=0.25)
    result = _execute(_ConstantPolicy(1.0, 100.0), env=env)
    self.assertEqual(result.transition.steps, 3)
    self.assertTrue(result.episode_over)
    self.assertTrue(result.success)
    self.assertTrue(result.transition.done)
    self.assertAlmostEqual(result.transition.reward, 0.99**2)
    self.assertEqual(result.undiscounted_reward, 1.0)

  def test_fixed_skill_length_ignores_target(self):
    result = _execute(
        _ConstantPolicy(1.0, 0.0),
        config=skill_executor.ExecutionConfig(fixed_skill_length=5),
    )
    self.assertEqual(result.transition.steps, 5)

  def test_env_step_cap_is_not_terminal(self):
    env = _LineEnv(max_episode_steps=12)
    result = _execute(_ConstantPolicy(1.0, 100.0), env=env)
    self.assertEqual(result.transition.steps, 12)
    self.assertTrue(result.episode_over)
    self.assertFalse(result.transition.done)

  def test_invalid_config(self):
    with pytest.raises(errors.ConfigurationError):
      skill_executor.ExecutionConfig(gamma=0.0)


class TestReplayBuffer(unittest.TestCase):

  def _transition(self, reward=0.0, steps=1):
    return replay_buffer.HLTransition(
        np.zeros(1), np.zeros(1), reward, steps, np.ones(1), False
    )

  def test_ring_keeps_latest(self):
    buffer = replay_buffer.SkillReplayBuffer(3, 1, 1)
    for i in range(5):
      buffer.add(self._transition(reward=float(i)))
    self.assertEqual(len(buffer), 3)
    self.assertEqual(sorted(buffer.rewards), [2.0, 3.0, 4.0])

  def test_rejects_zero_steps_and_nan_reward(self):
    buffer = replay_buffer.SkillReplayBuffer(3, 1, 1)
    with pytest.raises(errors.PreconditionError):
      buffer.add(self._transition(steps=0))
    with pytest.raises(errors.PreconditionError):
      buffer.add(self._transition(reward=float("nan")))

  def test_sample_from_empty_buffer(self):
    buffer = replay_buffer.SkillReplayBuffer(3, 1, 1)
    with pytest.raises(errors.PreconditionError):
      buffer.sample(2, np.random.default_rng(0))


class TestSac(unittest.TestCase):

  def setUp(self):
    self.model = _model()

  def _policy(self, **overrides):
    fields = dict(hidden_size=4, batch_size=4, alpha_kl=0.0)
    fields.update(overrides)
    return hl_policy.HLPolicy(self.model, hl_policy.SacConfig(**fields), seed=1)

  def _zero_critic_heads(self, policy):
    updates = {}
    for name in ("critic1", "critic2"):
      updates[name + "/layer2/w"] = np.zeros((4, 1))
      updates[name + "/layer2/b"] = np.zeros(1)
    policy.critics = policy.critics.replace(updates)
    policy.target_critics = policy.target_critics.replace(updates)

  def test_critic_loss_is_zero_at_fixpoint(self):
    policy = self._policy()
    self._zero_critic_heads(policy)
    losses = hl_policy.sac_update(policy, _batch(), np.random.default_rng(0))
    self.assertEqual(losses.critic, 0.0)

  def test_actor_initialised_from_prior_has_zero_kl(self):
    policy = self._policy(alpha_kl=0.1)
    states = np.random.default_rng(0).standard_normal((6, 1))
    np.testing.assert_array_equal(policy.prior_kl(states), np.zeros(6))
    losses = hl_policy.sac_update(policy, _batch(), np.random.default_rng(0))
    self.assertEqual(losses.kl, 0.0)

  def test_fresh_actor_differs_from_prior(self):
    policy = self._policy(init_actor_from_prior=False)
    states = np.random.default_rng(0).standard_normal((6, 1))
    self.assertTrue(np.all(policy.prior_kl(states) > 0.0))

  def test_target_critics_are_exact_interpolation(self):
    policy = self._policy(tau=0.25)
    old_targets = policy.target_critics
    hl_policy.sac_update(policy, _batch(), np.random.default_rng(0))
    for name, value in policy.target_critics.items():
      expected = (1.0 - 0.25) * old_targets[name] + 0.25 * policy.critics[name]
      np.testing.assert_array_equal(value, expected)

  def test_critic_target_uses_executed_length(self):
    policy = self._policy()
    self._zero_critic_heads(policy)
    policy.target_critics = policy.target_critics.replace({
        "critic1/layer2/b": np.array([1.0]),
        "critic2/layer2/b": np.array([2.0]),
    })
    batch = _batch(rewards=np.full(5, 0.5))
    targets = hl_policy.critic_targets(policy, batch, np.zeros((5, 1)))
    np.testing.assert_allclose(targets, 0.5 + 0.99**batch.steps)

  def test_terminal_q_converges_to_reward(self):
    policy = self._policy(hidden_size=16, critic_learning_rate=1e-2)
    batch = replay_buffer.TransitionBatch(
        states=np.full((8, 1), 0.2), skills=np.full((8, 1), 0.3),
        rewards=np.full(8, 0.7), steps=np.full(8, 5),
        next_states=np.full((8, 1), 0.6), dones=np.ones(8),
    )
    rng = np.random.default_rng(0)
    for _ in range(500):
      hl_policy.sac_update(policy, batch, rng)
    q1, q2 = policy.q_values(
        tensor.constants(policy.critics.as_dict()), batch.states, batch.skills
    )
    np.testing.assert_allclose(q1.value, 0.7, atol=0.05)
    np.testing.assert_allclose(q2.value, 0.7, atol=0.05)

  def test_selected_skill_inside_unit_box(self):
    policy = self._policy()
    rng = np.random.default_rng(0)
    for _ in range(20):
      z = policy.select_skill(rng.standard_normal(1) * 5, rng)
      self.assertTrue(np.all(np.abs(z) < 1.0))
    obs = np.array([0.3])
    np.testing.assert_array_equal(
        policy.select_skill(obs, np.random.default_rng(1), True),
        policy.select_skill(obs, np.random.default_rng(2), True),
    )

  def test_empty_batch(self):
    policy = self._policy()
    empty = replay_buffer.TransitionBatch(
        np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0),
        np.zeros(0, dtype=np.int64), np.zeros((0, 1)), np.zeros(0),
    )
    with pytest.raises(errors.PreconditionError):
      hl_policy.sac_update(policy, empty, np.random.default_rng(0))

  def test_state_tree_round_trip(self):
    policy = self._policy()
    hl_policy.sac_update(policy, _batch(), np.random.default_rng(0))
    other = hl_policy.HLPolicy(self.model, policy.config, seed=9)
    other.load_state_tree(policy.state_tree())
    self.assertTrue(other.state_tree().allclose(policy.state_tree()))


class TestCem(unittest.TestCase):

  def test_single_sample_is_returned(self):
    config = cem_planner.CEMConfig(horizon=2, population=1, elites=1,
                                   iterations=3)
    expected = np.clip(
        0.5 * np.random.default_rng(4).standard_normal((1, 2, 3)),
        -1 + 1e-6, 1 - 1e-6,
    )[0]
    result = cem_planner.cem_optimize(
        lambda x: np.zeros(len(x)), 3, config, np.random.default_rng(4)
    )
    np.testing.assert_array_equal(result.mean, expected)

  def test_constant_score_keeps_initial_mean(self):
    config = cem_planner.CEMConfig()
    means = [
        cem_planner.cem_optimize(
            lambda x: np.ones(len(x)), 2, config, np.random.default_rng(seed)
        ).mean
        for seed in range(50)
    ]
    self.assertLess(np.max(np.abs(np.mean(means, axis=0))), 0.2)

  def test_quadratic_optimum(self):
    optimum = np.array([[0.3, -0.2]])
    config = cem_planner.CEMConfig(horizon=1)

    def score(x):
      return -np.sum((x - optimum) ** 2, axis=(1, 2))

    result = cem_planner.cem_optimize(score, 2, config,
                                      np.random.default_rng(0))
    np.testing.assert_allclose(result.mean, optimum, atol=0.05)
    self.assertEqual(len(result.elite_scores), config.iterations)
    self.assertGreater(result.elite_scores[-1], result.elite_scores[0])

  def test_invalid_config(self):
    with pytest.raises(errors.ConfigurationError):
      cem_planner.CEMConfig(population=4, elites=5)
    with pytest.raises(errors.ConfigurationError):
      cem_planner.CEMConfig(horizon=0)

  def _heads(self, reward_bias, value_bias):
    heads = skill_dynamics.SkillDynamicsHeads(
        _model(), skill_dynamics.ModelBasedConfig(hidden_size=4), seed=0
    )
    heads.params = heads.params.replace({
        "reward/layer1/w": np.zeros((4, 1)),
        "reward/layer1/b": np.array([reward_bias]),
        "value/layer2/w": np.zeros((4, 1)),
        "value/layer2/b": np.array([value_bias]),
    })
    return heads

  def test_plan_scores_sum_rewards_and_terminal_value(self):
    heads = self._heads(1.0, 2.0)
    proposals = np.random.default_rng(0).uniform(-0.9, 0.9, (6, 3, 1))
    latent = heads.encode(np.zeros((1, 1)))[0]
    np.testing.assert_allclose(
        cem_planner.plan_scores(heads, latent, proposals), np.full(6, 5.0)
    )
    np.testing.assert_allclose(
        cem_planner.plan_scores(heads, latent, proposals, discount=0.5),
        np.full(6, 2.0),
    )

  def test_cem_plan_is_deterministic_and_bounded(self):
    heads = skill_dynamics.SkillDynamicsHeads(
        _model(), skill_dynamics.ModelBasedConfig(hidden_size=4), seed=0
    )
    config = cem_planner.CEMConfig(population=16, elites=4, iterations=2)
    first = cem_planner.cem_plan(heads, np.array([0.1]), config,
                                 np.random.default_rng(3))
    second = cem_planner.cem_plan(heads, np.array([0.1]), config,
                                  np.random.default_rng(3))
    self.assertEqual(first.shape, (1,))
    self.assertTrue(np.all(np.abs(first) < 1.0))
    np.testing.assert_array_equal(first, second)


class TestModelBasedLoss(unittest.TestCase):

  def setUp(self):
    self.heads = skill_dynamics.SkillDynamicsHeads(
        _model(), skill_dynamics.ModelBasedConfig(hidden_size=4), seed=2
    )
    rng = np.random.default_rng(5)
    self.latents = rng.standard_normal((6, 3))
    self.skills = rng.uniform(-0.9, 0.9, (6, 1))

  def _batch(self, next_latents, rewards, value_targets):
    return skill_dynamics.LatentBatch(self.latents, self.skills, rewards,
                                      next_latents, value_targets)

  def test_perfect_heads_have_zero_loss(self):
    heads = self.heads
    batch = self._batch(
        heads.next_latent(self.latents, self.skills).value,
        heads.reward(self.latents, self.skills).value,
        heads.value(self.latents, self.skills).value,
    )
    _, parts = skill_dynamics.model_based_loss(heads, None, batch)
    self.assertEqual(parts.total, 0.0)

  def test_latent_term_only(self):
    rng = np.random.default_rng(6)
    batch = self._batch(rng.standard_normal((6, 3)), rng.standard_normal(6),
                        rng.standard_normal(6))
    config = skill_dynamics.ModelBasedConfig(
        lambda_reward=0.0, lambda_value=0.0, hidden_size=4
    )
    _, parts = skill_dynamics.model_based_loss(self.heads, None, batch, config)
    predicted = self.heads.next_latent(self.latents, self.skills).value
    expected = np.mean(np.sum((predicted - batch.next_latents) ** 2, axis=-1))
    self.assertAlmostEqual(parts.total, expected, places=12)

  def test_gradients_match_finite_differences(self):
    rng = np.random.default_rng(7)
    batch = self._batch(rng.standard_normal((6, 3)), rng.standard_normal(6),
                        rng.standard_normal(6))

    def loss_fn(tape):
      return skill_dynamics.model_based_loss(self.heads, tape.leaves, batch)[0]

    report = gradient_check.check_gradients(loss_fn, self.heads.params)
    self.assertTrue(report.passed, report)

  def test_terminal_value_target_is_reward(self):
    batch = _batch(rewards=np.array([0.1, 0.2, 0.3, 0.4, 0.5]), dones=1.0)
    latent_batch = self.heads.latent_batch(batch)
    np.testing.assert_array_equal(latent_batch.value_targets, batch.rewards)

  def test_update_moves_value_target_by_tau(self):
    old_target = self.heads.target_value
    parts = skill_dynamics.model_based_update(self.heads, _batch())
    self.assertTrue(np.isfinite(parts.total))
    tau = self.heads.config.tau
    for name, value in self.heads.target_value.items():
      expected = (1.0 - tau) * old_target[name] + tau * self.heads.params[name]
      np.testing.assert_array_equal(value, expected)

  def test_dynamics_head_starts_as_target_predictor(self):
    for name, value in self.heads.params.subtree("dynamics").items():
      source = name.replace("dynamics", "target_predictor", 1)
      np.testing.assert_array_equal(value, self.heads.model.params[source])


class TestEvaluate(unittest.TestCase):

  def test_same_seed_gives_identical_metrics(self):
    controller = controllers.RandomSkillController(_model())
    env = _LineEnv()
    first = evaluation.evaluate(controller, env, 3, seed=11)
    second = evaluation.evaluate(controller, env, 3, seed=11)
    self.assertEqual(first.as_json(), second.as_json())

  def test_worker_count_does_not_change_results(self):
    controller = controllers.RandomSkillController(_model())
    env = _LineEnv()
    serial = evaluation.evaluate(controller, env, 4, seed=2)
    threaded = evaluation.evaluate(controller, env, 4, seed=2, workers=2)
    self.assertEqual(serial.as_json(), threaded.as_json())

  def test_scripted_controller_is_the_ceiling(self):
    env = _LineEnv(goal=0.45)
    result = evaluation.evaluate(
        controllers.ScriptedSkillController(env), env, 5, seed=0
    )
    self.assertEqual(result.success_rate, 1.0)
    self.assertEqual(result.mean_timesteps, 5.0)
    for episode in result.episodes:
      self.assertEqual(sum(episode.skill_lengths), episode.timesteps)

  def test_failures_count_the_step_cap(self):
    env = _LineEnv(max_episode_steps=25)
    result = evaluation.evaluate(
        controllers.RandomSkillController(_model()), env, 2, seed=0
    )
    self.assertEqual(result.success_rate, 0.0)
    self.assertEqual(result.mean_timesteps, 25.0)
    self.assertEqual(len(result.as_json()["episodes"]), 2)

  def test_random_skills_rarely_solve_large_maze(self):
    env = registry.make_env("pointmaze-large")
    controller = controllers.RandomSkillController(
        _model(state_dim=4, action_dim=2, skill_dim=2)
    )
    result = evaluation.evaluate(controller, env, 20, seed=0)
    self.assertLessEqual(result.success_rate, 0.1)

  def test_episode_rows_record_skills(self):
    result = evaluation.evaluate(
        controllers.RandomSkillController(_model()), _LineEnv(), 1, seed=0
    )
    row = result.as_json()["episodes"][0]
    self.assertEqual(len(row["skills"]), len(row["skill_lengths"]))
    self.assertTrue(all(len(z) == 1 for z in row["skills"]))

  def test_zero_episodes(self):
    with pytest.raises(errors.PreconditionError):
      evaluation.evaluate(
          controllers.RandomSkillController(_model()), _LineEnv(), 0, seed=0
      )


class TestDownstreamTrainer(unittest.TestCase):

  def _trainer(self, mode, seed=0):
    return downstream_trainer.DownstreamTrainer(
        _model(),
        _LineEnv(),
        downstream_trainer.DownstreamConfig(mode=mode, episodes=3,
                                            log_interval=1),
        hl_policy.SacConfig(hidden_size=4, batch_size=4),
        skill_dynamics.ModelBasedConfig(hidden_size=4, batch_size=4),
        cem_planner.CEMConfig(population=8, elites=2, iterations=2),
        skill_executor.ExecutionConfig(),
        seed=seed,
    )

  def test_sac_curve_and_checkpoint(self):
    trainer = self._trainer("sac")
    with tempfile.TemporaryDirectory() as tmp:
      csv_path = os.path.join(tmp, "curve.csv")
      prefix = os.path.join(tmp, "policy")
      result = trainer.train(csv_path, prefix)
      rows = csv_table.read_csv(csv_path)
      self.assertEqual(csv_table.column(rows, "episode"), [1.0, 2.0, 3.0])
      self.assertTrue(np.isfinite(result.rows[-1][4]))
      controller = downstream_trainer.load_controller(
          trainer.model, prefix, hl_policy.SacConfig(hidden_size=4),
          skill_dynamics.ModelBasedConfig(hidden_size=4),
          cem_planner.CEMConfig(),
      )
    self.assertIsInstance(controller, controllers.SacController)
    self.assertTrue(
        controller.policy.state_tree().allclose(
            trainer.learner.state_tree(), atol=1e-6
        )
    )

  def test_cem_mode_trains_model_heads(self):
    trainer = self._trainer("cem")
    result = trainer.train()
    self.assertEqual(len(result.rows), 3)
    self.assertTrue(np.isfinite(result.rows[-1][7]))
    self.assertIsInstance(trainer.controller, controllers.CemController)

  def test_same_seed_gives_identical_curves(self):
    first = self._trainer("sac", seed=4).train().rows
    second = self._trainer("sac", seed=4).train().rows
    np.testing.assert_array_equal(np.array(first), np.array(second))

  def test_unknown_mode(self):
    with pytest.raises(errors.ConfigurationError):
      downstream_trainer.DownstreamConfig(mode="ppo")

  def test_checkpoint_without_mode_is_format_error(self):
    trainer = self._trainer("sac")
    with tempfile.TemporaryDirectory() as tmp:
      prefix = os.path.join(tmp, "model")
      skill_model.save_model(trainer.model, prefix)
      with pytest.raises(errors.FormatError):
        downstream_trainer.load_controller(
            trainer.model, prefix, hl_policy.SacConfig(),
            skill_dynamics.ModelBasedConfig(), cem_planner.CEMConfig(),
        )


if __name__ == "__main__":
  unittest.main()
