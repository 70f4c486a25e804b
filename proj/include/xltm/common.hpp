#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace xltm {

/// Dense float64 matrix, one row per document.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Every error raised by the library. `what()` is prefixed with the module
/// name, e.g. "refine: r=0 out of range [1, 10]".
class Error : public std::runtime_error {
 public:
  Error(std::string_view module, const std::string& message)
      : std::runtime_error(std::string(module) + ": " + message), module_(module) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Mixes a stream index into a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Portable seeded generator. Uses std::mt19937_64 for the raw stream and
/// fixed conversions, so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace xltm
