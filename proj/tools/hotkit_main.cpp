// hotkit: build hypergraphs-of-thought, run the fusion pipeline, self-check.
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error.

#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hotkit/io.hpp"
#include "hotkit/pipeline.hpp"
#include "hotkit/selfcheck.hpp"
#include "hotkit/textual_hot.hpp"
#include "hotkit/toy_train.hpp"
#include "hotkit/visual_hot.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

std::uint64_t seed_or_default(const std::optional<std::uint64_t>& seed) {
  return seed ? *seed : hotkit::default_seed();
}

struct BuildTextArgs {
  std::string graph;
  std::size_t k = 2;
  std::size_t n = 8;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool keep_duplicates = false;
  bool fill = false;
};

int build_text(const BuildTextArgs& a) {
  const hotkit::ThoughtGraph g = hotkit::read_thought_graph(a.graph);
  g.validate();
  hotkit::WalkConfig cfg;
  cfg.k = a.k;
  cfg.n = a.n;
  cfg.seed = seed_or_default(a.seed);
  cfg.dedupe = !a.keep_duplicates;
  cfg.fill_to_n = a.fill;
  const hotkit::TextualHot hot = hotkit::build_textual_hot(g, cfg);
  hotkit::write_hypergraph(a.out, hot.hypergraph);

  std::size_t hops = 0;
  for (const auto& p : hot.paths) hops += p.hops();
  const double mean = hot.paths.empty() ? 0.0 : static_cast<double>(hops) / hot.paths.size();
  std::printf("edges: %zu\nmean path length: %.3f hops\n", hot.hypergraph.num_edges(), mean);
  std::printf("walks drawn: %zu, duplicates dropped: %zu, padded: %zu\n", hot.walks_drawn,
              hot.duplicates_dropped, hot.padded);
  if (hot.hypergraph.num_edges() < a.n) {
    std::fprintf(stderr,
                 "warning: %zu distinct hyperedges after dedupe, %zu requested (--fill tops up)\n",
                 hot.hypergraph.num_edges(), a.n);
  }
  return kOk;
}

struct BuildVisualArgs {
  std::string patches;
  std::size_t m = 8;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t max_iters = 100;
  double tol = 1e-6;
};

int build_visual(const BuildVisualArgs& a) {
  const hotkit::Matrix p = hotkit::read_matrix(a.patches);
  hotkit::KMeansResult km;
  const hotkit::Hypergraph h = hotkit::build_visual_hot(
      p, hotkit::KMeansConfig{a.m, a.max_iters, a.tol, seed_or_default(a.seed)}, &km);
  hotkit::write_hypergraph(a.out, h);
  std::printf("objective: %.17g\niterations: %zu\ncluster sizes:", km.objective, km.iterations);
  for (const auto& e : h.edges) std::printf(" %zu", e.members.size());
  std::printf("\n");
  return kOk;
}

int pipeline(const std::string& config, const std::string& out_dir) {
  const hotkit::PipelineConfig cfg = hotkit::read_pipeline_config(config);
  const hotkit::PipelineRun run = hotkit::run_pipeline(cfg);
  hotkit::write_pipeline_outputs(out_dir, cfg, run);
  for (const auto& t : run.timings) std::printf("stage %-13s %8.3f ms\n", t.stage.c_str(), 1e3 * t.seconds);
  for (const auto& c : run.checks) {
    std::printf("%s %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.empty() ? "" : ": ", c.detail.c_str());
  }
  std::printf("fused: %zux%zu, written to %s\n", run.outputs.fused.rows(), run.outputs.fused.cols(),
              out_dir.c_str());
  return run.all_checks_passed() ? kOk : kCheckFailed;
}

int selfcheck(const std::optional<std::uint64_t>& seed, bool inject_fault) {
  hotkit::SelfCheckOptions opts;
  opts.seed = seed_or_default(seed);
  opts.inject_fault = inject_fault;
  if (inject_fault) std::printf("fault injection on: gradient checks are expected to FAIL\n");
  bool all = true;
  double total = 0.0;
  hotkit::run_selfcheck(opts, [&](const hotkit::SelfCheckEntry& e) {
    all = all && e.result.passed;
    total += e.seconds;
    std::printf("%s %s: %s (%.2f s)\n", e.result.passed ? "PASS" : "FAIL", e.result.name.c_str(),
                e.result.detail.c_str(), e.seconds);
    std::fflush(stdout);
  });
  std::printf("%s in %.2f s\n", all ? "all checks passed" : "SOME CHECKS FAILED", total);
  return all ? kOk : kCheckFailed;
}

int toy_train(std::size_t steps, const std::optional<std::uint64_t>& seed, double lr,
              std::size_t every) {
  hotkit::ToyTrainConfig cfg;
  cfg.steps = steps;
  cfg.seed = seed_or_default(seed);
  cfg.learning_rate = lr;
  const hotkit::ToyTrainResult r = hotkit::toy_train(cfg);
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    if (i % every == 0 || i + 1 == r.losses.size()) {
      std::printf("step %4zu  loss %.6f\n", i + 1, r.losses[i]);
    }
  }
  std::printf("final loss %.6f (%.1f%% below step 1)\n", r.final_loss, 100.0 * r.loss_reduction());
  std::printf("train accuracy %.3f\nheld-out accuracy %.3f\n", r.train_accuracy, r.test_accuracy);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypergraph-of-thought toolkit"};
  app.require_subcommand(1);

  BuildTextArgs bt;
  auto* text_cmd = app.add_subcommand("build-text", "random-walk hyperedges over a thought graph");
  text_cmd->add_option("--graph", bt.graph, "thought graph JSON")->required();
  text_cmd->add_option("--k", bt.k, "hops per walk")->capture_default_str()->check(CLI::PositiveNumber);
  text_cmd->add_option("--n", bt.n, "walks to draw")->capture_default_str()->check(CLI::PositiveNumber);
  text_cmd->add_option("--seed", bt.seed, "RNG seed (default $HOTKIT_SEED or 0)");
  text_cmd->add_option("--out", bt.out, "hypergraph JSON to write")->required();
  text_cmd->add_flag("--keep-duplicates", bt.keep_duplicates, "keep walks with repeated member sets");
  text_cmd->add_flag("--fill", bt.fill, "keep walking until exactly n hyperedges exist");

  BuildVisualArgs bv;
  auto* visual_cmd = app.add_subcommand("build-visual", "k-means hyperedges over patch features");
  visual_cmd->add_option("--patches", bv.patches, "patch matrix (.hotm or .csv)")->required();
  visual_cmd->add_option("--m", bv.m, "clusters")->capture_default_str()->check(CLI::PositiveNumber);
  visual_cmd->add_option("--seed", bv.seed, "RNG seed (default $HOTKIT_SEED or 0)");
  visual_cmd->add_option("--out", bv.out, "hypergraph JSON to write")->required();
  visual_cmd->add_option("--max-iters", bv.max_iters, "Lloyd iterations")->capture_default_str();
  visual_cmd->add_option("--tol", bv.tol, "relative objective tolerance")->capture_default_str();

  std::string config;
  std::string out_dir;
  auto* pipe_cmd = app.add_subcommand("pipeline", "embed, build, encode and fuse from a config");
  pipe_cmd->add_option("--config", config, "pipeline config JSON")->required();
  pipe_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  std::optional<std::uint64_t> check_seed;
  bool inject_fault = false;
  auto* check_cmd = app.add_subcommand("selfcheck", "run the invariant suite");
  check_cmd->add_option("--seed", check_seed, "RNG seed (default $HOTKIT_SEED or 0)");
  check_cmd->add_flag("--inject-fault", inject_fault, "perturb weights before backward (negative control)");

  std::size_t steps = 200;
  std::optional<std::uint64_t> train_seed;
  double lr = 1e-2;
  std::size_t every = 20;
  auto* train_cmd = app.add_subcommand("toy-train", "train the full stack on a synthetic task");
  train_cmd->add_option("--steps", steps, "optimizer steps")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_seed, "RNG seed (default $HOTKIT_SEED or 0)");
  train_cmd->add_option("--lr", lr, "learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--every", every, "print every N steps")->capture_default_str()->check(CLI::PositiveNumber);

  std::string fixture_dir;
  auto* fixture_cmd = app.add_subcommand("make-fixture", "write the bundled toy fixture");
  fixture_cmd->add_option("--out-dir", fixture_dir, "directory to create")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*text_cmd) return build_text(bt);
    if (*visual_cmd) return build_visual(bv);
    if (*pipe_cmd) return pipeline(config, out_dir);
    if (*check_cmd) return selfcheck(check_seed, inject_fault);
    if (*train_cmd) return toy_train(steps, train_seed, lr, every);
    if (*fixture_cmd) {
      std::printf("%s\n", hotkit::write_toy_fixture(fixture_dir).string().c_str());
      return kOk;
    }
  } catch (const hotkit::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.input_error() ? kUsage : kCheckFailed;
  } catch (const hotkit::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailed;
  }
  return kUsage;
}
