#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hotkit/gradcheck.hpp"
#include "hotkit/pipeline.hpp"

namespace hotkit {

struct SelfCheckOptions {
  std::uint64_t seed = 0;
  /// Negative control: analytic gradients are computed against weights that
  /// were nudged after the forward pass, so the gradient checks must fail.
  bool inject_fault = false;
};

struct SelfCheckEntry {
  CheckResult result;
  double seconds = 0.0;
};

/// Fixed sizes of the full-stack gradient check.
struct StackCheckSizes {
  std::size_t d = 6;
  std::size_t d_c = 4;
  std::size_t d_m = 4;
  std::size_t heads = 2;
  std::size_t vertices = 5;
  std::size_t text_edges = 3;
  std::size_t image_edges = 2;
  std::size_t sequence = 4;
};

/// Random instance at `sizes`, loss = Σ R ∘ fused with a fixed random R.
/// Analytic gradient vs central differences over every parameter coordinate.
GradCheckReport check_stack_gradient(std::uint64_t seed, bool inject_fault = false,
                                     const StackCheckSizes& sizes = {}, double step = 1e-5);

/// Same for encode alone, loss = Σ R ∘ X_L + Σ S ∘ E_L.
GradCheckReport check_encoder_gradient(std::uint64_t seed, bool inject_fault = false,
                                       double step = 1e-5);

/// Runs every check in order, calling `on_result` after each.
std::vector<SelfCheckEntry> run_selfcheck(
    const SelfCheckOptions& options,
    const std::function<void(const SelfCheckEntry&)>& on_result = {});

}  // namespace hotkit
