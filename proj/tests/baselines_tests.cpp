#include <doctest.h>

#include <cmath>

#include "enki/baselines.hpp"
#include "enki/error.hpp"
#include "test_support.hpp"

using namespace enki;

TEST_CASE("chada_alpha") {
  CHECK(chada_alpha(1, 0.8) == 1.0);
  CHECK(chada_alpha(32, 0.8) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK_THROWS_AS(chada_alpha(0, 0.8), Error);
  double prev = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double value = chada_alpha(k, 0.5);
    CHECK(value > prev);
    prev = value;
  }
}

TEST_CASE("chada policy reproduces the shifted-noise gain identity") {
  RngStream rng(61);
  const Matrix a = rng.gaussian_matrix(4, 6);
  const ForwardOperator op = ForwardOperator::linear(a);
  const NoiseModel noise(0.01, 4);
  const Vector d = rng.gaussian_vector(4);
  const Ensemble e(rng.gaussian_matrix(6, 5));

  ChadaPolicy policy(0.8);
  const ResidualStats stats(e, op, d);
  const Vector alphas = policy.alphas(4, stats, noise);  // iteration 5
  const double alpha = chada_alpha(5, 0.8);
  CHECK(alphas[0] == doctest::Approx(alpha));

  const Ensemble stepped = apply_update(e, stats, noise, alphas);
  const Ensemble scaled_noise =
      enki_step(e, op, NoiseModel(noise.mu / alpha, 4), d, 1.0);
  CHECK(infinity_norm(stepped.particles() - scaled_noise.particles()) <=
        1e-12 * std::max(1.0, infinity_norm(stepped.particles())));
}

TEST_CASE("anderson_alpha") {
  RngStream rng(62);
  SUBCASE("zero output covariance pins the factor at one") {
    const Vector r = rng.gaussian_vector(4);
    CHECK(anderson_alpha(Matrix::Zero(4, 4), r, 0.3) ==
          doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("scalar case matches a fine grid scan") {
    // m = 1, mu = 1, S = 1, r^2 = 10.
    Matrix s(1, 1);
    s << 1.0;
    Vector r(1);
    r[0] = std::sqrt(10.0);
    const double found = anderson_alpha(s, r, 1.0);
    double best = 0.0, best_value = 1e300;
    for (int i = 0; i <= 2000000; ++i) {
      const double a = 1e-6 + i * (5.0 - 1e-6) / 2000000;
      const double value =
          0.5 * 10.0 / (1.0 + a) + 0.5 * std::log(1.0 + a) +
          0.5 * (a - 1.0) * (a - 1.0);
      if (value < best_value) {
        best_value = value;
        best = a;
      }
    }
    CHECK(found == doctest::Approx(best).epsilon(1e-5));
  }
  SUBCASE("random instances agree with a dense grid scan") {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix s = testing::random_spd(5, rng);
      const Vector r = 2.0 * rng.gaussian_vector(5);
      const double mu = 0.1 + rng.uniform();
      const double found = anderson_alpha(s, r, mu);

      auto objective = [&](double a) {
        const Matrix m_a = mu * Matrix::Identity(5, 5) + a * s;
        const Eigen::LLT<Matrix> llt(m_a);
        return 0.5 * r.dot(llt.solve(r)) +
               Matrix(llt.matrixL()).diagonal().array().log().sum() +
               0.5 * (a - 1.0) * (a - 1.0);
      };
      // Log-spaced scan of the default bracket.
      double best = 0.0, best_value = 1e300;
      const int points = 1000000;
      for (int i = 0; i <= points; ++i) {
        const double a =
            std::exp(std::log(1e-6) +
                     (std::log(1e4) - std::log(1e-6)) * i / points);
        const double value = objective(a);
        if (value < best_value) {
          best_value = value;
          best = a;
        }
      }
      CHECK(std::abs(found - best) <= 1e-5 * std::max(1.0, best));
      CHECK(objective(found) <= objective(1.0) + 1e-12);
      CHECK(objective(found) <= objective(1e-6) + 1e-12);
      CHECK(objective(found) <= objective(1e4) + 1e-12);
    }
  }
}

TEST_CASE("nesterov momentum run") {
  RngStream rng(63);
  const Matrix a = rng.gaussian_matrix(5, 7);
  const ForwardOperator op = ForwardOperator::linear(a);
  const NoiseModel noise(0.01, 5);
  const Vector d = rng.gaussian_vector(5);
  const Ensemble initial(rng.gaussian_matrix(7, 6));

  SUBCASE("first two steps match the hand-unrolled recursion") {
    const auto result = run_nesterov(initial, op, noise, d, Termination{1e-30, 2});
    // k = 0: plain step. k = 1: coefficient (1-1)/(1+2) = 0, also plain.
    const Ensemble u1 = enki_step(initial, op, noise, d);
    const Ensemble u2 = enki_step(u1, op, noise, d);
    CHECK(infinity_norm(result.final_ensemble.particles() - u2.particles()) <=
          1e-11 * std::max(1.0, infinity_norm(u2.particles())));
  }
  SUBCASE("third step uses the extrapolated ensemble") {
    const auto result = run_nesterov(initial, op, noise, d, Termination{1e-30, 3});
    const Ensemble u1 = enki_step(initial, op, noise, d);
    const Ensemble u2 = enki_step(u1, op, noise, d);
    const double coef = (2.0 - 1.0) / (2.0 + 2.0);
    const Ensemble extrapolated(u2.particles() +
                                coef * (u2.particles() - u1.particles()));
    const Ensemble u3 = enki_step(extrapolated, op, noise, d);
    CHECK(infinity_norm(result.final_ensemble.particles() - u3.particles()) <=
          1e-10 * std::max(1.0, infinity_norm(u3.particles())));
  }
  SUBCASE("momentum coefficient increases toward one") {
    double prev = -1.0;
    for (int k = 1; k < 200; ++k) {
      const double coef = static_cast<double>(k - 1) / (k + 2);
      CHECK(coef >= prev);
      CHECK(coef < 1.0);
      prev = coef;
    }
  }
}
