#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hotkit/model.hpp"
#include "hotkit/textual_hot.hpp"
#include "hotkit/visual_hot.hpp"

namespace hotkit {

/// Seed used when a command gets none: $HOTKIT_SEED if set, else 0.
/// Throws InputError when the variable is not an unsigned integer.
std::uint64_t default_seed();
std::uint64_t parse_seed(std::string_view text);

struct PipelineSeeds {
  std::uint64_t walk = 0;
  std::uint64_t kmeans = 0;
  std::uint64_t init = 0;
  std::uint64_t embed = 0;
};

struct PipelineConfig {
  ModelDims dims;
  std::size_t k = 2;
  PipelineSeeds seeds;
  std::size_t kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;
  std::filesystem::path graph;    // ThoughtGraph file
  std::filesystem::path patches;  // p × d patch matrix
  /// Optional |thoughts| × d node features. Without it the node rows are read
  /// off the stub sequence encoder at each <s> marker.
  std::optional<std::filesystem::path> text_nodes;

  void validate() const;
};

/// Missing keys take defaults; seeds default to default_seed(). Relative
/// paths are resolved against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir,
                                     const std::string& source = "<memory>");
PipelineConfig read_pipeline_config(const std::filesystem::path& path);
std::string dump_pipeline_config(const PipelineConfig& cfg);

/// Raised by run_pipeline; what() starts with "stage '<name>': ".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message, bool input_error)
      : std::runtime_error("stage '" + stage + "': " + message),
        stage_(std::move(stage)),
        input_error_(input_error) {}
  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
  /// True when the cause was bad input rather than an internal failure.
  [[nodiscard]] bool input_error() const noexcept { return input_error_; }

 private:
  std::string stage_;
  bool input_error_;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineRun {
  TextualHot text_hot;
  Hypergraph visual_hot;
  Matrix text_nodes;     // X_text input
  Matrix text_sequence;  // H_text
  Matrix patches;
  KMeansResult kmeans;
  StackOutputs outputs;
  std::vector<CheckResult> checks;
  std::vector<StageTiming> timings;  // kept out of the report file

  [[nodiscard]] bool all_checks_passed() const noexcept;
};

/// Embed, build both hypergraphs, encode, co-attend, fuse, gate.
PipelineRun run_pipeline(const PipelineConfig& cfg);

/// Report document; contains no timing, so equal runs give equal bytes.
std::string run_report_json(const PipelineConfig& cfg, const PipelineRun& run);

/// Writes every matrix, both hypergraphs and run_report.json into `dir`.
void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineConfig& cfg,
                            const PipelineRun& run);

/// The bundled example: six thoughts around the Messi chain, five triples,
/// and 16 patches in four well separated groups.
struct ToyFixture {
  ThoughtGraph graph;
  Matrix patches;  // 16 × d
};
ToyFixture make_toy_fixture(std::size_t d = 32, std::uint64_t seed = 7);

/// Writes graph.json, patches.csv and config.json (n_text = m = 4) into `dir`
/// and returns the config path.
std::filesystem::path write_toy_fixture(const std::filesystem::path& dir, std::size_t d = 32);

}  // namespace hotkit
