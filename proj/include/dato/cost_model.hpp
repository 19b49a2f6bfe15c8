#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dato/common.hpp"

namespace dato {

/// A time-varying local cost f_i(x, t). Implementations expose the analytic
/// derivatives the algorithm consumes: the x-gradient, its time partial, the
/// Hessian, and the Hessian's total time derivative along a trajectory with
/// velocity xdot (needed by the state-based estimator gains).
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual int dim() const = 0;
  virtual double value(const Vector& x, double t) const = 0;
  virtual Vector grad(const Vector& x, double t) const = 0;
  virtual Vector grad_time_partial(const Vector& x, double t) const = 0;
  virtual Matrix hessian(const Vector& x, double t) const = 0;
  virtual Matrix hessian_time_derivative(const Vector& x, const Vector& xdot,
                                         double t) const = 0;
};

using CostPtr = std::shared_ptr<CostModel>;

/// Bounds the algorithm needs about a cost set. h1 is the strong-convexity
/// floor of the *global* cost (mu1 for the non-quadratic family), h2 bounds
/// |dH_i/dt|_inf, and mu4 bounds |g_i(t)| in the decomposition
/// grad_t fhat = g(t) x + s(x,t) of the non-quadratic part. mu2/mu3/mu5 are
/// retained as metadata only.
struct CostAssumptions {
  double h1 = 0.0;
  double h2 = 0.0;
  std::optional<double> mu4;
  std::optional<double> mu2;
  std::optional<double> mu3;
  std::optional<double> mu5;

  void validate() const {
    if (!(h1 > 0.0)) throw config_error("cost assumptions: h1 must be > 0");
    if (!(h2 >= 0.0)) throw config_error("cost assumptions: h2 must be >= 0");
    if (mu4 && !(*mu4 >= 0.0))
      throw config_error("cost assumptions: mu4 must be >= 0");
  }
};

/// f(x,t) = x'H(t)x/2 + R(t)'x + d(t). The Hessian is x-independent and the
/// derivatives are exact given the supplied rate handles.
class QuadraticCost : public CostModel {
 public:
  using MatrixFn = std::function<Matrix(double)>;
  using VectorFn = std::function<Vector(double)>;
  using ScalarFn = std::function<double(double)>;

  QuadraticCost(int m, MatrixFn h, MatrixFn h_dot, VectorFn r, VectorFn r_dot,
                ScalarFn offset = nullptr)
      : m_(m),
        h_(std::move(h)),
        h_dot_(std::move(h_dot)),
        r_(std::move(r)),
        r_dot_(std::move(r_dot)),
        offset_(std::move(offset)) {
    const Matrix h0 = h_(0.0);
    if (h0.rows() != m_ || h0.cols() != m_)
      throw config_error("quadratic cost: H(0) has wrong dimensions");
    if ((h0 - h0.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw config_error("quadratic cost: H(0) is not symmetric");
  }

  /// Time-invariant convenience form.
  static std::shared_ptr<QuadraticCost> constant(const Matrix& h,
                                                 const Vector& r,
                                                 double offset = 0.0) {
    const int m = static_cast<int>(h.rows());
    const Matrix zm = Matrix::Zero(m, m);
    const Vector zv = Vector::Zero(m);
    return std::make_shared<QuadraticCost>(
        m, [h](double) { return h; }, [zm](double) { return zm; },
        [r](double) { return r; }, [zv](double) { return zv; },
        [offset](double) { return offset; });
  }

  int dim() const override { return m_; }

  double value(const Vector& x, double t) const override {
    double v = 0.5 * x.dot(h_(t) * x) + r_(t).dot(x);
    if (offset_) v += offset_(t);
    return v;
  }

  Vector grad(const Vector& x, double t) const override {
    return h_(t) * x + r_(t);
  }

  Vector grad_time_partial(const Vector& x, double t) const override {
    return h_dot_(t) * x + r_dot_(t);
  }

  Matrix hessian(const Vector&, double t) const override { return h_(t); }

  Matrix hessian_time_derivative(const Vector&, const Vector&,
                                 double t) const override {
    return h_dot_(t);
  }

 private:
  int m_;
  MatrixFn h_, h_dot_;
  VectorFn r_, r_dot_;
  ScalarFn offset_;
};

/// Scalar building block for coordinate-separable costs: s(y, t) together
/// with the partial derivatives the simulation consumes.
struct ScalarCost {
  std::function<double(double, double)> value;  // s(y,t)
  std::function<double(double, double)> dy;     // ds/dy
  std::function<double(double, double)> dydt;   // d2s/(dy dt)
  std::function<double(double, double)> dyy;    // d2s/dy2
  std::function<double(double, double)> dyyt;   // d3s/(dy2 dt)
  std::function<double(double, double)> dyyy;   // d3s/dy3
};

/// f(x,t) = sum_j s(x_j, t). Hessians are diagonal; their trajectory
/// derivative picks up the chain-rule term dyyy * xdot_j per coordinate.
class SeparableCost : public CostModel {
 public:
  SeparableCost(int m, ScalarCost s) : m_(m), s_(std::move(s)) {}

  int dim() const override { return m_; }

  double value(const Vector& x, double t) const override {
    double v = 0.0;
    for (int j = 0; j < m_; ++j) v += s_.value(x(j), t);
    return v;
  }

  Vector grad(const Vector& x, double t) const override {
    Vector g(m_);
    for (int j = 0; j < m_; ++j) g(j) = s_.dy(x(j), t);
    return g;
  }

  Vector grad_time_partial(const Vector& x, double t) const override {
    Vector g(m_);
    for (int j = 0; j < m_; ++j) g(j) = s_.dydt(x(j), t);
    return g;
  }

  Matrix hessian(const Vector& x, double t) const override {
    Matrix h = Matrix::Zero(m_, m_);
    for (int j = 0; j < m_; ++j) h(j, j) = s_.dyy(x(j), t);
    return h;
  }

  Matrix hessian_time_derivative(const Vector& x, const Vector& xdot,
                                 double t) const override {
    Matrix h = Matrix::Zero(m_, m_);
    for (int j = 0; j < m_; ++j)
      h(j, j) = s_.dyyt(x(j), t) + s_.dyyy(x(j), t) * xdot(j);
    return h;
  }

 private:
  int m_;
  ScalarCost s_;
};

/// Central-difference consistency report for a cost's analytic derivatives.
/// Errors are entrywise |analytic - numeric| / max(1, |analytic|, |numeric|).
struct FdReport {
  double grad_error = 0.0;
  double grad_time_error = 0.0;
  double hessian_error = 0.0;

  double max_error() const {
    return std::max({grad_error, grad_time_error, hessian_error});
  }
};

namespace detail {
inline double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

/// Checks grad against differences of value, grad_time_partial against
/// differences of grad in t, and hessian against differences of grad in x.
inline FdReport fd_check(const CostModel& cost, const Vector& x, double t,
                         double step) {
  if (!(step > 0.0)) throw config_error("fd_check: step must be positive");
  const int m = cost.dim();
  FdReport rep;

  const Vector g = cost.grad(x, t);
  for (int p = 0; p < m; ++p) {
    Vector xp = x, xm = x;
    xp(p) += step;
    xm(p) -= step;
    const double fd = (cost.value(xp, t) - cost.value(xm, t)) / (2.0 * step);
    rep.grad_error = std::max(rep.grad_error, detail::rel_gap(g(p), fd));
  }

  const Vector gt = cost.grad_time_partial(x, t);
  const Vector fd_t =
      (cost.grad(x, t + step) - cost.grad(x, t - step)) / (2.0 * step);
  for (int p = 0; p < m; ++p)
    rep.grad_time_error =
        std::max(rep.grad_time_error, detail::rel_gap(gt(p), fd_t(p)));

  const Matrix h = cost.hessian(x, t);
  for (int p = 0; p < m; ++p) {
    Vector xp = x, xm = x;
    xp(p) += step;
    xm(p) -= step;
    const Vector col = (cost.grad(xp, t) - cost.grad(xm, t)) / (2.0 * step);
    for (int q = 0; q < m; ++q)
      rep.hessian_error =
          std::max(rep.hessian_error, detail::rel_gap(h(q, p), col(q)));
  }
  return rep;
}

}  // namespace dato
