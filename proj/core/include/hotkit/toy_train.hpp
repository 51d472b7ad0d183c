#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hotkit/model.hpp"

namespace hotkit {

/// Synthetic two-class task: each sample is a random thought graph with
/// node features and a patch set, both drawn around a class-specific mean.
/// The text sequence H is class-independent noise, so the label reaches the
/// head only through the encoders, co-attention and the gate. A linear head
/// on the row-mean of the fused output is trained jointly with the whole
/// stack by Adam.
struct ToyTrainConfig {
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  double learning_rate = 1e-2;
  std::size_t train_samples = 32;
  std::size_t test_samples = 64;
  std::size_t thoughts = 6;
  std::size_t patches = 12;
  std::size_t k = 2;
  ModelDims dims{.d = 8, .d_c = 8, .d_m = 4, .heads = 2, .layers = 1, .n_text = 4, .n_img = 4};

  void validate() const;
};

struct ToyTrainResult {
  std::vector<double> losses;  // mean training loss before each update
  double final_loss = 0.0;     // after the last update
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;

  /// 1 − final_loss / losses.front().
  [[nodiscard]] double loss_reduction() const noexcept;
};

/// Throws NumericError if the loss becomes non-finite.
ToyTrainResult toy_train(const ToyTrainConfig& cfg);

}  // namespace hotkit
