#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "enki/error.hpp"
#include "enki/types.hpp"
#include "test_support.hpp"

using namespace enki;

namespace {

// Direct loop-sum oracles, independent of the library implementation.
Vector loop_mean(const Matrix& particles) {
  Vector m = Vector::Zero(particles.rows());
  for (Eigen::Index i = 0; i < particles.cols(); ++i) m += particles.col(i);
  return m / static_cast<double>(particles.cols());
}

Matrix loop_covariance(const Matrix& particles) {
  const Vector m = loop_mean(particles);
  Matrix c = Matrix::Zero(particles.rows(), particles.rows());
  for (Eigen::Index k = 0; k < particles.cols(); ++k) {
    const Vector dev = particles.col(k) - m;
    for (Eigen::Index i = 0; i < particles.rows(); ++i)
      for (Eigen::Index j = 0; j < particles.rows(); ++j)
        c(i, j) += dev[i] * dev[j];
  }
  return c / static_cast<double>(particles.cols());
}

}  // namespace

TEST_CASE("sample_mean basics") {
  RngStream rng(1);
  SUBCASE("single particle is its own mean") {
    const Vector u = rng.gaussian_vector(6);
    const Ensemble e(u);
    CHECK((sample_mean(e) - u).norm() == doctest::Approx(0.0));
  }
  SUBCASE("two opposite particles have zero mean") {
    const Vector v = rng.gaussian_vector(5);
    Matrix p(5, 2);
    p.col(0) = v;
    p.col(1) = -v;
    CHECK(sample_mean(Ensemble(p)).cwiseAbs().maxCoeff() <= 1e-16);
  }
  SUBCASE("matches the summation oracle") {
    const Matrix p = rng.gaussian_matrix(4, 7);
    const Ensemble e(p);
    CHECK((sample_mean(e) - loop_mean(p)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("ensemble construction rejects bad input") {
  CHECK_THROWS_WITH_AS(Ensemble{Matrix(0, 0)}, "empty ensemble", Error);
  CHECK_THROWS_AS(Ensemble{Matrix(3, 0)}, Error);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Ensemble{bad}, Error);
}

TEST_CASE("sample_covariance") {
  RngStream rng(2);
  SUBCASE("collapsed ensemble gives the zero matrix") {
    const Vector u = rng.gaussian_vector(4);
    Matrix p(4, 5);
    for (int i = 0; i < 5; ++i) p.col(i) = u;
    CHECK(infinity_norm(sample_covariance(Ensemble(p))) <= 1e-30);
  }
  SUBCASE("scalar two-point case") {
    Matrix p(1, 2);
    p << 1.0, -1.0;
    CHECK(sample_covariance(Ensemble(p))(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("matches the double-loop oracle") {
    const Matrix p = rng.gaussian_matrix(5, 8);
    const Matrix c = sample_covariance(Ensemble(p));
    CHECK(infinity_norm(c - loop_covariance(p)) <= 1e-13);
  }
}

TEST_CASE("sample covariance invariants over random ensembles") {
  RngStream rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform_index(8));
    const Eigen::Index n_particles =
        1 + static_cast<Eigen::Index>(rng.uniform_index(10));
    const Ensemble e(rng.gaussian_matrix(n, n_particles));
    const Matrix c = sample_covariance(e);

    CHECK(infinity_norm(c - c.transpose()) <= 1e-14 * std::max(1.0, infinity_norm(c)));
    const auto [lo, hi] = eigenvalue_extremes(c);
    (void)hi;
    CHECK(lo >= -1e-10 * std::max(c.trace(), 1e-30));

    // rank <= N - 1: singular values beyond that index are negligible.
    Eigen::BDCSVD<Matrix> svd(c);
    const auto sv = svd.singularValues();
    for (Eigen::Index i = std::min(n_particles - 1, n); i < sv.size(); ++i)
      CHECK(sv[i] <= 1e-10 * std::max(sv[0], 1e-30));
  }
}

TEST_CASE("ensemble_forward_stats") {
  RngStream rng(4);
  SUBCASE("linear operator reproduces the covariance identities") {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix a = rng.gaussian_matrix(6, 4);
      const Ensemble e(rng.gaussian_matrix(4, 9));
      const auto stats = ensemble_forward_stats(e, ForwardOperator::linear(a));
      const Matrix c = sample_covariance(e);
      const double scale = std::max(1.0, infinity_norm(stats.output_cov));
      CHECK(infinity_norm(stats.cross_cov - c * a.transpose()) <= 1e-12 * scale);
      CHECK(infinity_norm(stats.output_cov - a * c * a.transpose()) <=
            1e-12 * scale);
    }
  }
  SUBCASE("collapsed ensemble gives zero covariances") {
    const Vector u = rng.gaussian_vector(4);
    Matrix p(4, 6);
    for (int i = 0; i < 6; ++i) p.col(i) = u;
    const Matrix a = rng.gaussian_matrix(3, 4);
    const auto stats =
        ensemble_forward_stats(Ensemble(p), ForwardOperator::linear(a));
    CHECK(infinity_norm(stats.cross_cov) <= 1e-14);
    CHECK(infinity_norm(stats.output_cov) <= 1e-14);
  }
  SUBCASE("quadratic map matches the loop oracle") {
    const Eigen::Index n = 3, m = 2, N = 4;
    const Matrix q1 = rng.gaussian_matrix(n, n);
    const Matrix q2 = rng.gaussian_matrix(n, n);
    auto g = [&](const Vector& u) {
      Vector out(m);
      out[0] = u.dot(q1 * u);
      out[1] = u.dot(q2 * u) + u.sum();
      return out;
    };
    const Matrix p = rng.gaussian_matrix(n, N);
    const Ensemble e(p);
    const auto stats =
        ensemble_forward_stats(e, ForwardOperator::nonlinear(m, n, g));

    Matrix images(m, N);
    for (Eigen::Index i = 0; i < N; ++i) images.col(i) = g(p.col(i));
    const Vector g_mean = loop_mean(images);
    Matrix c_up = Matrix::Zero(n, m);
    Matrix c_pp = Matrix::Zero(m, m);
    const Vector u_mean = loop_mean(p);
    for (Eigen::Index i = 0; i < N; ++i) {
      c_up += (p.col(i) - u_mean) * (images.col(i) - g_mean).transpose();
      c_pp += (images.col(i) - g_mean) * (images.col(i) - g_mean).transpose();
    }
    c_up /= static_cast<double>(N);
    c_pp /= static_cast<double>(N);

    CHECK((stats.mean_output - g_mean).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(infinity_norm(stats.cross_cov - c_up) <= 1e-12);
    CHECK(infinity_norm(stats.output_cov - c_pp) <= 1e-12);
  }
  SUBCASE("failures carry the particle index") {
    auto g = [](const Vector& u) -> Vector {
      if (u[0] > 1e300) throw Error("boom");
      return u;
    };
    Matrix p = Matrix::Zero(2, 3);
    p(0, 2) = 2e300;
    p(0, 0) = 0.0;
    const ForwardOperator op = ForwardOperator::nonlinear(2, 2, g);
    try {
      ensemble_forward_stats(Ensemble(p), op);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("particle 2") != std::string::npos);
    }
  }
}

TEST_CASE("GaussianMeasure validation and sampling") {
  RngStream rng(5);
  const Matrix c = testing::random_spd(5, rng);
  const GaussianMeasure g = GaussianMeasure::from_cov(Vector::Zero(5), c);
  CHECK(infinity_norm(g.factor() * g.factor().transpose() - c) <=
        1e-12 * infinity_norm(c));

  Matrix asym = c;
  asym(0, 1) += 1.0;
  CHECK_THROWS_AS(GaussianMeasure::from_cov(Vector::Zero(5), asym), Error);

  Matrix indefinite = c;
  indefinite(0, 0) = -1.0;
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(GaussianMeasure::from_cov(Vector::Zero(5), indefinite), Error);
}

TEST_CASE("NoiseModel rejects nonpositive mu") {
  CHECK_THROWS_AS(NoiseModel(0.0, 3), Error);
  CHECK_THROWS_AS(NoiseModel(-1.0, 3), Error);
  CHECK(NoiseModel(0.01, 3).dense().isApprox(0.01 * Matrix::Identity(3, 3)));
}
