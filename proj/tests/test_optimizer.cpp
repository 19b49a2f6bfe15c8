#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dato/graph.hpp"
#include "dato/optimizer.hpp"

using namespace dato;

namespace {
CostPtr zero_cost(int m) {
  return QuadraticCost::constant(Matrix::Zero(m, m), Vector::Zero(m));
}
}  // namespace

TEST_CASE("boundary-layer schedule") {
  REQUIRE(eta(0.0, 2.0) == 1.0);
  REQUIRE(eta(std::log(2.0), 1.0) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(eta(1e3, 1.0) < 1e-300);
}

TEST_CASE("smoothed signum") {
  SECTION("zero maps to zero") {
    REQUIRE(smoothed_sign(Vector::Zero(3), 1.0, 0.5).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(smoothed_sign(Vector::Zero(2), 1.0, 0.0).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("component equal to the layer gives one half") {
    const Vector v = Vector::Constant(1, 0.25);
    REQUIRE(smoothed_sign(v, 0.5, 0.5)(0) == Catch::Approx(0.5).margin(1e-15));
  }
  SECTION("vanishing layer recovers the signum") {
    const Vector v = Vector::Constant(1, -3.0);
    REQUIRE(smoothed_sign(v, 1.0, 0.0)(0) == -1.0);
  }
  SECTION("components stay inside (-1, 1) while the layer is positive") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 500; ++trial) {
      Vector v(3);
      for (int d = 0; d < 3; ++d)
        v(d) = 20.0 * (2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
      const double layer_eta = 1e-6 + (rng() >> 11) * 0x1.0p-53;
      const Vector s = smoothed_sign(v, 1.0, layer_eta);
      REQUIRE(s.cwiseAbs().maxCoeff() < 1.0);
      // v'S(v) >= |v|_1 - m eps1 eta, the inequality behind the beta law
      const double lhs = v.dot(s);
      const double rhs = v.lpNorm<1>() - 3 * 1.0 * layer_eta;
      REQUIRE(lhs >= rhs - 1e-12);
    }
  }
}

TEST_CASE("gradient feedback with inverse-Hessian feedforward") {
  SECTION("time-invariant cost leaves pure gradient feedback") {
    Vector r(2);
    r << 1.0, -1.0;
    auto c = QuadraticCost::constant(Matrix::Zero(2, 2), r);
    const Vector f = phi(*c, Matrix::Identity(2, 2), Vector::Zero(2), 0.0, 2.0);
    REQUIRE(f(0) == Catch::Approx(-2.0));
    REQUIRE(f(1) == Catch::Approx(2.0));
  }
  SECTION("scalar feedforward solves against zhat") {
    auto c = std::make_shared<QuadraticCost>(
        1, [](double) { return Matrix(Matrix::Zero(1, 1)); },
        [](double) { return Matrix(Matrix::Zero(1, 1)); },
        [](double t) { return Vector(Vector::Constant(1, 3.0 * t)); },
        [](double) { return Vector(Vector::Constant(1, 3.0)); });
    const Vector f =
        phi(*c, 0.5 * Matrix::Identity(1, 1), Vector::Zero(1), 0.0, 5.0);
    REQUIRE(f(0) == Catch::Approx(-6.0));
  }
  SECTION("sinusoidal drive at the origin") {
    auto c = std::make_shared<QuadraticCost>(
        2, [](double) { return Matrix(Matrix::Identity(2, 2)); },
        [](double) { return Matrix(Matrix::Zero(2, 2)); },
        [](double t) { return Vector(Vector::Constant(2, std::sin(t))); },
        [](double t) { return Vector(Vector::Constant(2, std::cos(t))); });
    const Vector f = phi(*c, Matrix::Identity(2, 2), Vector::Zero(2), 0.0, 1.0);
    REQUIRE((f + Vector::Ones(2)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("adaptive gain initialisation") {
  const Graph g = Graph::ring(4);
  SECTION("beta starts at the minimal admissible value") {
    const auto gains = init_adaptive_gains(g, 2, 1.0, 2.0);
    for (double b : gains.beta) REQUIRE(b == 1.0);
    for (double a : gains.alpha) REQUIRE(a == 0.0);
  }
  SECTION("invalid parameters are rejected") {
    REQUIRE_THROWS_AS(init_adaptive_gains(g, 2, 1.0, 0.0), config_error);
    REQUIRE_THROWS_AS(init_adaptive_gains(g, 2, 0.0, 1.0), config_error);
    REQUIRE_THROWS_AS(init_adaptive_gains(g, 2, 1.0, 1.0, -1.0), config_error);
  }
}

TEST_CASE("optimizer right-hand side") {
  SECTION("consensus at a stationary point") {
    const Graph g = Graph::ring(3);
    std::vector<CostPtr> costs = {zero_cost(2), zero_cost(2), zero_cost(2)};
    OptimizerState s{std::vector<Vector>(3, Vector::Constant(2, 1.5)),
                     init_adaptive_gains(g, 2, 1.0, 1.0, 0.7)};
    std::vector<Matrix> zhat(3, Matrix::Identity(2, 2));
    const double t = 0.9;
    const auto d = optimizer_rhs(s, zhat, costs, g, t, 2.0, 1.0, 1.0);
    for (const auto& xd : d.x_dot) REQUIRE(xd.cwiseAbs().maxCoeff() == 0.0);
    for (double ad : d.alpha_dot) REQUIRE(ad == 0.0);
    for (double bd : d.beta_dot)
      REQUIRE(bd == Catch::Approx(-2.0 * eta(t, 1.0)).margin(1e-15));
  }
  SECTION("two agents with unit alpha") {
    const Graph g(2, {{0, 1}});
    std::vector<CostPtr> costs = {zero_cost(1), zero_cost(1)};
    OptimizerState s;
    s.x = {Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
    s.gains.alpha = {1.0};
    s.gains.beta = {0.0};
    std::vector<Matrix> zhat(2, Matrix::Identity(1, 1));
    const auto d = optimizer_rhs(s, zhat, costs, g, 0.0, 1.0, 1.0, 1.0);
    REQUIRE(d.x_dot[0](0) == Catch::Approx(-1.0));
    REQUIRE(d.x_dot[1](0) == Catch::Approx(1.0));
    REQUIRE(d.alpha_dot[0] == Catch::Approx(1.0));
  }
  SECTION("consensus forces cancel over the network") {
    std::mt19937_64 rng(17);
    const Graph g = Graph::ring(5);
    std::vector<CostPtr> costs(5, zero_cost(3));
    OptimizerState s;
    for (int i = 0; i < 5; ++i) {
      Vector v(3);
      for (int d = 0; d < 3; ++d)
        v(d) = 4.0 * (2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
      s.x.push_back(v);
    }
    s.gains = init_adaptive_gains(g, 3, 1.0, 1.0, 0.3);
    for (auto& b : s.gains.beta) b = 2.0;
    std::vector<Matrix> zhat(5, Matrix::Identity(3, 3));
    const auto d = optimizer_rhs(s, zhat, costs, g, 0.4, 1.0, 1.0, 1.0);
    Vector sum = Vector::Zero(3);
    for (const auto& xd : d.x_dot) sum += xd;
    REQUIRE(sum.cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("dimension mismatch is rejected") {
    const Graph g = Graph::ring(3);
    std::vector<CostPtr> costs = {zero_cost(2), zero_cost(2)};
    OptimizerState s{std::vector<Vector>(2, Vector::Zero(2)),
                     AdaptiveGains{{0.0}, {1.0}}};
    std::vector<Matrix> zhat(2, Matrix::Identity(2, 2));
    REQUIRE_THROWS_AS(optimizer_rhs(s, zhat, costs, g, 0.0, 1.0, 1.0, 1.0),
                      config_error);
  }
}

TEST_CASE("feedback gain selection") {
  CostAssumptions a;
  a.h1 = 3.0;
  a.h2 = 0.0;
  REQUIRE(select_k(a, 7, 3, 1.0, false) == Catch::Approx(1.0));

  a.h1 = 1.0;
  a.h2 = 1.0;
  REQUIRE(select_k(a, 6, 2, 0.5, false) ==
          Catch::Approx(6.0 * std::sqrt(2.0) + 0.5).margin(1e-12));

  REQUIRE_THROWS_AS(select_k(a, 6, 2, 0.5, true), config_error);
  a.mu4 = 2.0;
  REQUIRE(select_k(a, 6, 2, 0.5, true) ==
          Catch::Approx(3.0 * 6.0 * std::sqrt(2.0) + 0.5).margin(1e-12));
}
