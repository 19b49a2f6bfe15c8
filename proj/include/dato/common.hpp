#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dato {

/// Per-agent decision dimensions are small (the benchmarks use m <= 3), so
/// agent-level matrices carry fixed stack storage up to kMaxDim and never
/// touch the heap in the integration loop. Network-level matrices (Laplacian,
/// incidence) use plain dynamic storage.
inline constexpr int kMaxDim = 8;

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using DenseMatrix = Eigen::MatrixXd;

/// Invalid configuration: bad topology, inadmissible gains, malformed input.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural invariant broke mid-run (symmetry loss, singular solve, ...).
class invariant_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The reference-trajectory solver failed to converge.
class oracle_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrator produced a non-finite state.
class numerical_divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system failure in the experiment layer.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dato
