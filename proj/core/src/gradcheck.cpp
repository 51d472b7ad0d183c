#include "hotkit/gradcheck.hpp"

#include <cmath>

namespace hotkit {

void ReluSignature::mix(std::uint64_t bits) noexcept {
  hash_ ^= bits;
  hash_ *= 0x100000001b3ULL;
}

void ReluSignature::add(const MlpCache& cache) noexcept {
  std::uint64_t word = 0;
  unsigned used = 0;
  for (double v : cache.hidden_pre.values()) {
    word = (word << 1) | (v > 0.0 ? 1U : 0U);
    if (++used == 64) {
      mix(word);
      word = 0;
      used = 0;
    }
    margin_ = std::min(margin_, std::abs(v));
  }
  mix(word ^ (static_cast<std::uint64_t>(used) << 56));
}

void ReluSignature::add(const ReluSignature& other) noexcept {
  mix(other.hash_);
  margin_ = std::min(margin_, other.margin_);
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradient(const ProbeFunction& f, std::span<const double> at,
                               std::span<const double> analytic, double step, double floor) {
  if (at.size() != analytic.size()) throw ShapeError("check_gradient: length mismatch");
  GradCheckReport report;
  Vector x(at.begin(), at.end());
  const std::uint64_t base = f(x).relu_signature;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const Probe plus = f(x);
    x[i] = orig - step;
    const Probe minus = f(x);
    x[i] = orig;
    if (!std::isfinite(plus.loss) || !std::isfinite(minus.loss)) {
      throw NumericError("check_gradient: non-finite loss at coordinate " + std::to_string(i));
    }
    if (plus.relu_signature != base || minus.relu_signature != base) {
      ++report.excluded;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric, floor);
    ++report.checked;
    if (report.checked == 1 || err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_index = i;
      report.worst_analytic = analytic[i];
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace hotkit
