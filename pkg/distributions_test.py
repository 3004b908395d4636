import unittest

import numpy as np
import pytest

from diffcore import distributions
from diffcore import gradient_check
from diffcore.param_tree import ParamTree
from utils import errors


class TestDiagGaussianKl(unittest.TestCase):

  def test_identical_distributions_have_zero_kl(self):
    rng = np.random.default_rng(0)
    mean, log_std = rng.standard_normal(4), rng.standard_normal(4) * 0.5
    a = distributions.DiagGaussian(mean, log_std)
    b = distributions.DiagGaussian(mean.copy(), log_std.copy())

    self.assertEqual(distributions.diag_gaussian_kl(a, b).item(), 0.0)

  def test_unit_shift_is_half_per_dimension(self):
    a = distributions.DiagGaussian(np.ones(3), np.zeros(3))
    b = distributions.standard_normal((3,))

    self.assertAlmostEqual(distributions.diag_gaussian_kl(a, b).item(), 1.5)

  def test_dimension_mismatch(self):
    with pytest.raises(errors.PreconditionError):
      distributions.diag_gaussian_kl(
          distributions.standard_normal((2,)),
          distributions.standard_normal((3,)),
      )

  def test_matches_monte_carlo_estimate(self):
    rng = np.random.default_rng(1)
    a = distributions.DiagGaussian(np.array([0.3, -0.4]), np.array([-0.2, 0.1]))
    b = distributions.DiagGaussian(np.array([-0.1, 0.2]), np.array([0.3, -0.3]))
    samples = a.sample(rng.standard_normal((1_000_000, 2))).value

    log_ratio = a.log_prob(samples).value - b.log_prob(samples).value

    estimate = log_ratio.mean()
    stderr = log_ratio.std() / np.sqrt(log_ratio.size)
    exact = distributions.diag_gaussian_kl(a, b).item()
    self.assertLessEqual(abs(estimate - exact), 3.0 * stderr)

  def test_kl_is_non_negative(self):
    rng = np.random.default_rng(2)
    for _ in range(100):
      a = distributions.DiagGaussian(rng.normal(size=3), rng.normal(size=3))
      b = distributions.DiagGaussian(rng.normal(size=3), rng.normal(size=3))
      self.assertGreaterEqual(distributions.diag_gaussian_kl(a, b).item(), 0.0)

  def test_log_std_is_clamped(self):
    dist = distributions.DiagGaussian(np.zeros(2), np.array([-50.0, 9.0]))
    np.testing.assert_array_equal(dist.log_std.value, [-10.0, 2.0])

  def test_kl_gradients_match_finite_differences(self):
    params = ParamTree({
        "mean": np.array([0.2, -0.3]),
        "log_std": np.array([0.1, -0.4]),
    })

    def loss_fn(tape):
      a = distributions.DiagGaussian(tape["mean"], tape["log_std"])
      b = distributions.DiagGaussian(np.array([0.5, 0.0]), np.array([0.2, 0.3]))
      return distributions.diag_gaussian_kl(a, b)

    self.assertTrue(gradient_check.check_gradients(loss_fn, params).passed)


class TestTanhGaussian(unittest.TestCase):

  def test_degenerate_std_samples_tanh_of_mean(self):
    dist = distributions.TanhGaussian(
        distributions.DiagGaussian(np.zeros(2), np.full(2, -np.inf))
    )

    sample, _ = distributions.tanh_gaussian_sample_logprob(dist, 0)

    np.testing.assert_allclose(sample.value, np.zeros(2), atol=1e-3)

  def test_fixed_seed_is_deterministic(self):
    dist = distributions.TanhGaussian(
        distributions.DiagGaussian(np.array([0.3, -1.0]), np.array([0.0, -1.0]))
    )

    first = distributions.tanh_gaussian_sample_logprob(dist, 11)
    second = distributions.tanh_gaussian_sample_logprob(dist, 11)

    np.testing.assert_array_equal(first[0].value, second[0].value)
    np.testing.assert_array_equal(first[1].value, second[1].value)

  def test_samples_stay_inside_open_interval(self):
    dist = distributions.TanhGaussian(
        distributions.DiagGaussian(np.full(1, 3.0), np.full(1, 2.0))
    )
    noise = np.random.default_rng(3).standard_normal((1_000_000, 1))

    sample, log_prob = dist.sample_and_log_prob(noise)

    self.assertTrue(np.all(np.abs(sample.value) < 1.0))
    self.assertTrue(np.all(np.isfinite(log_prob.value)))

  def test_density_integrates_to_one(self):
    dist = distributions.TanhGaussian(
        distributions.DiagGaussian(np.array([0.4]), np.array([-0.5]))
    )
    edges = np.linspace(-1.0, 1.0, 200_001)
    centers = 0.5 * (edges[1:] + edges[:-1])

    density = np.exp(dist.log_prob(centers[:, None]).value)

    self.assertAlmostEqual(float(np.sum(density * np.diff(edges))), 1.0,
                           delta=0.01)

  def test_sample_log_prob_agrees_with_density(self):
    dist = distributions.TanhGaussian(
        distributions.DiagGaussian(np.array([0.2, -0.1]), np.array([-0.3, 0.2]))
    )
    noise = np.random.default_rng(4).standard_normal((5, 2))

    sample, log_prob = dist.sample_and_log_prob(noise)

    np.testing.assert_allclose(
        log_prob.value, dist.log_prob(sample.value).value, rtol=1e-6
    )

  def test_mode_maximizes_density(self):
    dist = distributions.TanhGaussian(
        distributions.DiagGaussian(np.array([0.6]), np.array([-1.0]))
    )
    sweep = np.linspace(-0.999, 0.999, 4001)[:, None]

    best = dist.log_prob(dist.mode()[None, :]).value[0]

    self.assertGreaterEqual(best + 1e-9, dist.log_prob(sweep).value.max())

  def test_reparameterized_gradient_reaches_mean(self):
    params = ParamTree({"mean": np.array([0.1, -0.2]),
                        "log_std": np.array([-0.5, 0.0])})
    noise = np.random.default_rng(5).standard_normal((3, 2))

    def loss_fn(tape):
      dist = distributions.TanhGaussian(
          distributions.DiagGaussian(tape["mean"], tape["log_std"])
      )
      sample, log_prob = dist.sample_and_log_prob(noise)
      return sample.sum() + log_prob.mean()

    report = gradient_check.check_gradients(loss_fn, params)
    self.assertTrue(report.passed, report)
    grads = gradient_check.analytic_gradient(loss_fn, params)
    self.assertTrue(np.any(grads["mean"] != 0.0))


if __name__ == "__main__":
  unittest.main()
