#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "hotkit/numerics.hpp"

namespace hotkit {

/// Order-sensitive hash of every relu on/off decision made during a forward
/// pass. Two evaluations with the same signature lie on the same linear piece
/// of every relu, so central differences between them are kink-free.
class ReluSignature {
 public:
  void add(const MlpCache& cache) noexcept;
  void add(const ReluSignature& other) noexcept;
  [[nodiscard]] std::uint64_t value() const noexcept { return hash_; }
  /// Smallest |pre-activation| seen; distance of this point to the nearest kink.
  [[nodiscard]] double margin() const noexcept { return margin_; }

 private:
  void mix(std::uint64_t bits) noexcept;

  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  double margin_ = 1e300;
};

struct Probe {
  double loss = 0.0;
  std::uint64_t relu_signature = 0;
};

using ProbeFunction = std::function<Probe(std::span<const double>)>;

/// Gradients smaller than this are compared absolutely. Central differences
/// at step 1e-5 carry roundoff up to ~1e-9 on O(10) losses (seen on exactly
/// zero coordinates such as a key bias under softmax shift invariance), so a
/// pure ratio there would measure that noise rather than the backward pass.
inline constexpr double kGradientFloor = 1e-4;

/// |a − b| / max(|a|, |b|, floor).
double relative_error(double analytic, double numeric, double floor = kGradientFloor);

struct GradCheckReport {
  std::size_t checked = 0;
  std::size_t excluded = 0;  // probes crossed a relu kink
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  [[nodiscard]] bool passed(double tolerance) const noexcept {
    return checked > 0 && max_relative_error <= tolerance;
  }
};

/// Compares `analytic` against central differences of `f` at `at`. A
/// coordinate is excluded when either probe changes the relu signature.
GradCheckReport check_gradient(const ProbeFunction& f, std::span<const double> at,
                               std::span<const double> analytic, double step = 1e-5,
                               double floor = kGradientFloor);

}  // namespace hotkit
