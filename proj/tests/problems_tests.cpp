#include <doctest.h>

#include <cmath>

#include "enki/error.hpp"
#include "enki/problems/setup.hpp"
#include "test_support.hpp"

using namespace enki;

TEST_CASE("deconvolution kernel and operator") {
  const double a = 0.235;
  SUBCASE("normalization constant matches quadrature") {
    // 3-point Gauss-Legendre is exact for the quartic integrand.
    const double nodes[3] = {-std::sqrt(3.0 / 5.0), 0.0, std::sqrt(3.0 / 5.0)};
    const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double integral = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double x = a * nodes[i];
      integral += a * weights[i] * (x + a) * (x + a) * (x - a) * (x - a);
    }
    const double oracle = 1.0 / integral;
    CHECK(deconv_normalization(a) ==
          doctest::Approx(oracle).epsilon(1e-12));
    CHECK(deconv_normalization(a) == doctest::Approx(1.30805e3).epsilon(1e-4));
  }
  SUBCASE("kernel vanishes at the support edge") {
    CHECK(deconv_kernel(a, a) == 0.0);
    CHECK(deconv_kernel(-a, a) == 0.0);
    CHECK(deconv_kernel(a * 1.01, a) == 0.0);
  }
  SUBCASE("even kernel gives a symmetric banded operator") {
    const Grid1D grid{60};
    const Matrix op = deconv_operator(grid, a);
    CHECK(infinity_norm(op - op.transpose()) <= 1e-14 * infinity_norm(op));
    const auto band = static_cast<Eigen::Index>(std::floor(a / grid.spacing()));
    for (Eigen::Index i = 0; i < 60; ++i)
      for (Eigen::Index j = 0; j < 60; ++j)
        if (std::abs(i - j) > band) CHECK(op(i, j) == 0.0);
  }
  SUBCASE("interior rows integrate the kernel to about one") {
    const Grid1D grid{100};
    const Matrix op = deconv_operator(grid, a);
    for (Eigen::Index i = 20; i < 80; ++i)
      CHECK(std::abs(op.row(i).sum() - 1.0) <= 2.0 * grid.spacing());
  }
}

TEST_CASE("exp_sine_squared_cov") {
  const Vector points = Vector::LinSpaced(50, -10.0, 10.0);
  const double variance = 1e-4;
  const Matrix k = exp_sine_squared_cov(points, 0.5, 20.0, variance);
  SUBCASE("diagonal equals the variance") {
    for (Eigen::Index i = 0; i < 50; ++i)
      CHECK(k(i, i) == doctest::Approx(variance));
  }
  SUBCASE("periodic separation restores the variance") {
    Vector two(2);
    two << 0.0, 20.0;
    const Matrix kk = exp_sine_squared_cov(two, 0.5, 20.0, variance);
    CHECK(kk(0, 1) == doctest::Approx(variance).epsilon(1e-12));
  }
  SUBCASE("numerically PSD") {
    const auto [lo, hi] = eigenvalue_extremes(k);
    (void)hi;
    CHECK(lo >= -1e-10 * variance);
  }
}

TEST_CASE("lorenz96") {
  SUBCASE("equilibrium state is exactly stationary") {
    L96Config cfg;
    cfg.n = 40;
    for (Eigen::Index i = 0; i < 40; ++i) cfg.obs_indices.push_back(i);
    const Vector v0 = Vector::Constant(40, cfg.forcing);
    const Vector out = lorenz96_forward(v0, cfg);
    CHECK((out - v0).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("cyclic wrap matches direct substitution at n = 5") {
    RngStream rng(71);
    const Vector v = rng.gaussian_vector(5);
    const Vector dv = lorenz96_rhs(v, 8.0);
    // Component k = 1 in one-based terms: v5 (v2 - v4) - v1 + F.
    CHECK(dv[0] == doctest::Approx(v[4] * (v[1] - v[3]) - v[0] + 8.0));
    // Component k = 2: v1 (v3 - v5) - v2 + F.
    CHECK(dv[1] == doctest::Approx(v[0] * (v[2] - v[4]) - v[1] + 8.0));
    // Last component k = 5: v4 (v1 - v3) - v5 + F.
    CHECK(dv[4] == doctest::Approx(v[3] * (v[0] - v[2]) - v[4] + 8.0));
  }
  SUBCASE("fourth-order convergence under step halving") {
    RngStream rng(72);
    L96Config fine;
    fine.n = 20;
    fine.t_final = 0.3;
    fine.step = 0.01 / 20.0;
    for (Eigen::Index i = 0; i < 20; ++i) fine.obs_indices.push_back(i);
    const Vector v0 =
        Vector::Constant(20, 8.0) + 0.5 * rng.gaussian_vector(20);
    const Vector reference = lorenz96_integrate(v0, fine);

    L96Config coarse = fine;
    coarse.step = 0.01;
    L96Config half = fine;
    half.step = 0.005;
    const double e_coarse = (lorenz96_integrate(v0, coarse) - reference).norm();
    const double e_half = (lorenz96_integrate(v0, half) - reference).norm();
    const double ratio = e_coarse / e_half;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }
  SUBCASE("step must divide the final time") {
    L96Config cfg;
    cfg.n = 10;
    cfg.step = 0.007;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}

TEST_CASE("heat2d") {
  SUBCASE("uniform shift of the field scales the solution exactly") {
    RngStream rng(73);
    const Grid2D grid{10};
    const Vector u = rng.gaussian_vector(grid.size());
    const double shift = 0.7;
    const Vector base = heat2d_solve(grid, u);
    const Vector shifted = heat2d_solve(grid, Vector(u.array() + shift));
    CHECK((shifted * std::exp(shift) - base).cwiseAbs().maxCoeff() <=
          1e-10 * base.cwiseAbs().maxCoeff());
  }
  SUBCASE("system matrix is SPD and diagonally dominant") {
    RngStream rng(74);
    const Grid2D grid{8};
    const Vector u = rng.gaussian_vector(grid.size());
    const Matrix a = Matrix(heat2d_system(grid, u));
    CHECK(infinity_norm(a - a.transpose()) <= 1e-12 * infinity_norm(a));
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      double off = 0.0;
      for (Eigen::Index j = 0; j < grid.size(); ++j)
        if (i != j) off += std::abs(a(i, j));
      // Interior rows are weakly dominant (equality); rows touching the
      // boundary are strictly dominant.
      CHECK(a(i, i) >= off - 1e-12 * a(i, i));
    }
    // Strict dominance on a boundary-adjacent row.
    double off0 = 0.0;
    for (Eigen::Index j = 1; j < grid.size(); ++j) off0 += std::abs(a(0, j));
    CHECK(a(0, 0) > off0 * (1.0 + 1e-12));
    const auto [lo, hi] = eigenvalue_extremes(a);
    (void)hi;
    CHECK(lo > 0.0);
  }
  SUBCASE("harmonic face average also yields an SPD system") {
    RngStream rng(75);
    const Grid2D grid{6};
    const Vector u = rng.gaussian_vector(grid.size());
    const Matrix a = Matrix(heat2d_system(grid, u, FaceAverage::harmonic));
    const auto [lo, hi] = eigenvalue_extremes(a);
    (void)hi;
    CHECK(lo > 0.0);
  }
  SUBCASE("coarse center value approaches a fine-grid reference") {
    const Grid2D coarse{47};
    const Grid2D fine{191};
    const Vector zero_coarse = Vector::Zero(coarse.size());
    const Vector zero_fine = Vector::Zero(fine.size());
    const double center_coarse =
        heat2d_solve(coarse, zero_coarse)[coarse.index(23, 23)];
    const double center_fine =
        heat2d_solve(fine, zero_fine)[fine.index(95, 95)];
    CHECK(std::abs(center_coarse - center_fine) <=
          1e-3 * std::abs(center_fine));
  }
}

TEST_CASE("laplacian squared prior") {
  SUBCASE("dense covariance is symmetric") {
    const LaplaceSquaredPrior prior(Grid2D{10});
    const Matrix cov = prior.dense_covariance();
    CHECK(infinity_norm(cov - cov.transpose()) <= 1e-12 * infinity_norm(cov));
  }
  SUBCASE("sample variance matches the dense covariance diagonal") {
    const Grid2D grid{8};
    const LaplaceSquaredPrior prior(grid);
    const Matrix cov = prior.dense_covariance();
    RngStream rng(76);
    const int draws = 20000;
    Vector second_moment = Vector::Zero(grid.size());
    for (int i = 0; i < draws; ++i) {
      const Vector v = prior.sample(rng);
      second_moment += v.cwiseProduct(v);
    }
    second_moment /= static_cast<double>(draws);
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      CHECK(second_moment[i] ==
            doctest::Approx(cov(i, i)).epsilon(0.08));
  }
  SUBCASE("samples are much smoother than white noise") {
    const Grid2D grid{30};
    const LaplaceSquaredPrior prior(grid);
    const Eigen::SparseMatrix<double> laplace = heat2d_system(grid, Vector::Zero(grid.size()));
    RngStream rng(77);
    auto roughness = [&](const Vector& v) {
      return (laplace * v).norm() / v.norm();
    };
    double smooth = 0.0, rough = 0.0;
    for (int i = 0; i < 100; ++i) {
      smooth += roughness(prior.sample(rng));
      rough += roughness(rng.gaussian_vector(grid.size()));
    }
    // The normalized curvature ratio sits near 0.12 at this grid size (it
    // scales like 1/s); white noise is roughly eight times rougher.
    CHECK(smooth / rough < 0.2);
  }
}

TEST_CASE("add_noise") {
  RngStream rng(78);
  const Vector d = 3.0 * rng.gaussian_vector(200);
  SUBCASE("zero percent is the identity") {
    CHECK((add_noise(d, 0.0, 9) - d).norm() == 0.0);
  }
  SUBCASE("empirical sigma matches the target within two percent") {
    const double percent = 0.02;
    const double target = percent * rms(d);
    double sq = 0.0;
    long count = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const Vector noisy = add_noise(d, percent, seed);
      sq += (noisy - d).squaredNorm();
      count += d.size();
    }
    const double sigma_hat = std::sqrt(sq / static_cast<double>(count));
    CHECK(std::abs(sigma_hat - target) <= 0.02 * target);
  }
  SUBCASE("same seed reproduces identical bytes") {
    const Vector a = add_noise(d, 0.02, 123);
    const Vector b = add_noise(d, 0.02, 123);
    CHECK((a - b).norm() == 0.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("problem builders produce consistent instances") {
  SUBCASE("deconv") {
    const InverseProblem p = make_deconv_problem(DeconvParams{}, 5);
    CHECK(p.is_linear);
    CHECK(p.data.size() == 100);
    CHECK(p.truth.size() == 100);
    CHECK(p.noise_sigma > 0.0);
    const InverseProblem q = make_deconv_problem(DeconvParams{}, 5);
    CHECK((p.data - q.data).norm() == 0.0);  // deterministic per seed
  }
  SUBCASE("lorenz96") {
    Lorenz96Params params;
    params.n = 40;
    params.m = 30;
    const InverseProblem p = make_lorenz96_problem(params, 5);
    CHECK(!p.is_linear);
    CHECK(p.data.size() == 30);
    CHECK(p.op.output_dimension() == 30);
  }
  SUBCASE("heat2d") {
    Heat2dParams params;
    params.s = 8;
    params.m = 20;
    const InverseProblem p = make_heat2d_problem(params, 5);
    CHECK(!p.is_linear);
    CHECK(p.data.size() == 20);
    CHECK(p.op.input_dimension() == 64);
  }
}
