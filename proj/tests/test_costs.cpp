#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dato/example_costs.hpp"
#include "dato/fade.hpp"
#include "dato/validate.hpp"

using namespace dato;

namespace {
double rand_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}
}  // namespace

TEST_CASE("quadratic cost evaluation") {
  auto c = QuadraticCost::constant(2.0 * Matrix::Identity(1, 1), Vector::Zero(1));
  const Vector x = Vector::Constant(1, 3.0);
  REQUIRE(c->value(x, 17.0) == Catch::Approx(9.0));
  REQUIRE(c->grad(x, 17.0)(0) == Catch::Approx(6.0));
  REQUIRE(c->hessian(x, 17.0)(0, 0) == Catch::Approx(2.0));

  auto zero = QuadraticCost::constant(Matrix::Zero(2, 2), Vector::Zero(2));
  REQUIRE(zero->grad(Vector::Constant(2, 4.0), 1.0).norm() == 0.0);
  REQUIRE(zero->hessian(Vector::Zero(2), 1.0).norm() == 0.0);
  REQUIRE(fd_check(*zero, Vector::Zero(2), 1.0, 1e-5).max_error() == 0.0);
}

TEST_CASE("quadratic cost rejects an asymmetric Hessian sample") {
  Matrix bad(2, 2);
  bad << 1.0, 0.5, -0.5, 1.0;
  auto h = [bad](double) { return bad; };
  auto z = [](double) { return Matrix(Matrix::Zero(2, 2)); };
  auto r = [](double) { return Vector(Vector::Zero(2)); };
  REQUIRE_THROWS_AS(QuadraticCost(2, h, z, r, r), config_error);
}

TEST_CASE("benchmark set one matches the published forms") {
  auto set = example1_costs();
  REQUIRE(set.models.size() == 20);
  REQUIRE(set.dim == 3);

  SECTION("agent 1 time partial is 0.1 cos(t) 1") {
    const Vector x = Vector::Constant(3, 0.7);
    for (double t : {0.0, 0.4, 2.0}) {
      const Vector gt = set.models[0]->grad_time_partial(x, t);
      for (int d = 0; d < 3; ++d)
        REQUIRE(gt(d) == Catch::Approx(0.1 * std::cos(t)).margin(1e-14));
    }
  }
  SECTION("agent 15 is concave with Hessian -2I") {
    const Matrix h = set.models[14]->hessian(Vector::Constant(3, 1.3), 5.0);
    REQUIRE((h + 2.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("agent 16 gradient at the origin") {
    const Vector g = set.models[15]->grad(Vector::Zero(3), 2.0);
    REQUIRE((g - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("the strongly convex block sums to 24 I") {
    Matrix sum = Matrix::Zero(3, 3);
    for (int i = 0; i < 6; ++i)
      sum += set.models[i]->hessian(Vector::Zero(3), 1.0);
    REQUIRE((sum - 24.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("global Hessian of benchmark one stays above the h1 floor") {
  auto set = example1_costs();
  const double h1 = set.assumptions.h1;

  // The rank-one quadratics are positive semidefinite and the rest are
  // diagonal, so lambda_min >= 24 + min over (y, t) of the scalar diagonal
  // contribution of agents 13..20. Scan that scalar profile densely.
  double scalar_min = 0.0;
  for (double t = 0.0; t <= 60.0; t += 0.05) {
    for (double y = -8.0; y <= 8.0; y += 0.02) {
      double s = 0.0;
      const Vector yv = Vector::Constant(3, y);
      for (int i = 12; i < 20; ++i)
        s += set.models[i]->hessian(yv, t)(0, 0);
      scalar_min = std::min(scalar_min, s);
    }
  }
  INFO("diagonal floor = " << 24.0 + scalar_min);
  REQUIRE(24.0 + scalar_min >= h1);

  // Direct spectral spot check on random full states.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = rand_in(rng, 0.0, 60.0);
    Matrix sum = Matrix::Zero(3, 3);
    for (const auto& c : set.models) {
      Vector y(3);
      for (int d = 0; d < 3; ++d) y(d) = rand_in(rng, -6.0, 6.0);
      sum += c->hessian(y, t);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum, Eigen::EigenvaluesOnly);
    REQUIRE(es.eigenvalues()(0) >= h1);
  }
}

TEST_CASE("quadratic Hessians are state independent") {
  auto set = example1_costs();
  std::mt19937_64 rng(9);
  for (int i = 0; i < 12; ++i) {
    Vector a(3), b(3);
    for (int d = 0; d < 3; ++d) {
      a(d) = rand_in(rng, -5, 5);
      b(d) = rand_in(rng, -5, 5);
    }
    const double t = rand_in(rng, 0, 10);
    REQUIRE((set.models[i]->hessian(a, t) - set.models[i]->hessian(b, t))
                .cwiseAbs()
                .maxCoeff() == 0.0);
  }
}

TEST_CASE("finite-difference consistency of both benchmark sets") {
  const auto r1 = validate_cost_derivatives("example1",
                                            example1_costs().models, 60.0, 5.0);
  INFO(r1.detail);
  REQUIRE(r1.pass);

  auto ex2 = example2_costs();
  std::vector<double> cutoffs;
  for (double c : ex2.fade_cutoffs)
    if (std::isfinite(c)) cutoffs.push_back(c);
  const auto r2 = validate_cost_derivatives("example2", ex2.costs.models,
                                            140.0, 50.0, 100, cutoffs);
  INFO(r2.detail);
  REQUIRE(r2.pass);
}

TEST_CASE("named finite-difference spot checks") {
  auto set = example1_costs();
  Vector y(3);
  y << 1.0, 0.0, -1.0;
  REQUIRE(fd_check(*set.models[18], y, 2.0, 1e-5).max_error() < 1e-5);

  auto exact = QuadraticCost::constant(2.0 * Matrix::Identity(2, 2),
                                       Vector::Constant(2, -1.0));
  REQUIRE(fd_check(*exact, Vector::Constant(2, 0.3), 1.0, 1e-5).max_error() <
          1e-6);
}

TEST_CASE("relay benchmark fade behaviour") {
  auto setup = example2_costs();
  REQUIRE(setup.costs.models.size() == 6);
  REQUIRE(setup.costs.dim == 2);

  SECTION("agent 3 power crosses the threshold just past t = 32") {
    REQUIRE(10.0 * std::exp(-0.05 * 32.0) == Catch::Approx(2.019).margin(1e-3));
    REQUIRE(setup.fade_cutoffs[2] > 32.1);
    REQUIRE(setup.fade_cutoffs[2] < 32.3);
    REQUIRE(setup.fade_cutoffs[4] == 67.0);
    REQUIRE(std::isinf(setup.fade_cutoffs[0]));
  }
  SECTION("agent 1 Hessian before any fade is (2/10) I") {
    for (double t : {0.0, 10.0, 31.0, 100.0}) {
      const Matrix h = setup.costs.models[0]->hessian(Vector::Zero(2), t);
      REQUIRE((h - 0.2 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SECTION("agent 5's coefficient decays to zero after the attack") {
    const Matrix h90 = setup.costs.models[4]->hessian(Vector::Zero(2), 90.0);
    REQUIRE(h90.cwiseAbs().maxCoeff() < 1e-4);
    const Matrix h140 = setup.costs.models[4]->hessian(Vector::Zero(2), 140.0);
    REQUIRE(h140.cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("faded coefficients are nonincreasing after their cutoffs") {
    for (int agent : {2, 4}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double t = setup.fade_cutoffs[agent]; t < 140.0; t += 0.5) {
        const double c =
            setup.costs.models[agent]->hessian(Vector::Zero(2), t)(0, 0);
        REQUIRE(c >= 0.0);
        REQUIRE(c <= prev + 1e-15);
        prev = c;
      }
    }
  }
}

TEST_CASE("fade filter is an exact first-order lag") {
  SECTION("constant input is a fixed point") {
    FadeCoefficient c([](double) { return 0.1; }, 0.1, 2.0);
    for (double t : {0.0, 1.0, 10.0, 100.0})
      REQUIRE(c.value(t) == Catch::Approx(0.1).margin(1e-14));
  }
  SECTION("rate matches a central difference of value") {
    FadeCoefficient c([](double t) { return 0.1 * std::exp(0.05 * t); }, 0.1,
                      2.0, 40.0);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 50; ++k) {
      double t = rand_in(rng, 0.5, 100.0);
      if (std::abs(t - 40.0) < 0.01) t += 0.05;
      const double h = 1e-6;
      const double fd = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
      REQUIRE(c.rate(t) == Catch::Approx(fd).margin(1e-7));
    }
  }
  SECTION("values are independent of query order") {
    auto input = [](double t) { return 1.0 / (6.0 + std::sin(0.3 * t)); };
    FadeCoefficient fwd(input, input(0.0), 2.0, 50.0);
    FadeCoefficient bwd(input, input(0.0), 2.0, 50.0);
    std::vector<double> ts = {80.0, 3.2, 49.9, 50.1, 0.7, 13.6};
    std::vector<double> a, b;
    for (double t : ts) a.push_back(fwd.value(t));
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) b.push_back(bwd.value(*it));
    for (std::size_t i = 0; i < ts.size(); ++i)
      REQUIRE(a[i] == b[ts.size() - 1 - i]);
  }
  SECTION("pure decay after the cutoff") {
    FadeCoefficient c([](double) { return 0.5; }, 0.5, 2.0, 10.0);
    REQUIRE(c.value(10.0) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(c.value(12.0) == Catch::Approx(0.5 * std::exp(-1.0)).margin(1e-12));
    REQUIRE(c.value(30.0) == Catch::Approx(0.5 * std::exp(-10.0)).margin(1e-15));
  }
}
