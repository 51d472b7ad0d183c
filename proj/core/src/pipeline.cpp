#include "hotkit/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hotkit/io.hpp"
#include "hotkit/visual_hot.hpp"

namespace hotkit {

using nlohmann::json;

std::uint64_t parse_seed(std::string_view text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("seed must be an unsigned 64-bit integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("HOTKIT_SEED");
  if (env == nullptr || *env == '\0') return 0;
  try {
    return parse_seed(env);
  } catch (const InputError& e) {
    throw InputError(std::string("HOTKIT_SEED: ") + e.what());
  }
}

void PipelineConfig::validate() const {
  try {
    dims.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (k < 1) throw InputError("config: k must be >= 1");
  if (kmeans_max_iters < 1) throw InputError("config: kmeans.max_iters must be >= 1");
  if (!(kmeans_tol >= 0.0) || !std::isfinite(kmeans_tol)) {
    throw InputError("config: kmeans.tol must be finite and >= 0");
  }
  if (graph.empty()) throw InputError("config: 'graph' path is required");
  if (patches.empty()) throw InputError("config: 'patches' path is required");
}

namespace {

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& source) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(source + ": field '" + key + "': wrong type");
  }
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback,
                      const std::string& source) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_unsigned()) {
    throw ParseError(source + ": field '" + key + "': expected a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

json shape_of(const Matrix& m) { return json::array({m.rows(), m.cols()}); }

template <class F>
auto stage(const char* name, std::vector<StageTiming>& timings, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      body();
      timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    } else {
      auto result = body();
      timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
      return result;
    }
  } catch (const InputError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::invalid_argument& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

CheckResult check_row_stochastic(const Matrix& a) {
  double worst = 0.0;
  double min_entry = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      sum += a(r, c);
      min_entry = std::min(min_entry, a(r, c));
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |row sum - 1| = %.3g, min entry = %.3g", worst, min_entry);
  return {"attention rows stochastic", worst <= 1e-9 && min_entry >= 0.0, buf};
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir,
                                     const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = text.substr(0, std::min<std::size_t>(e.byte, text.size()));
    const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
    throw ParseError(source + ": line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(source + ": config must be an object");

  PipelineConfig cfg;
  ModelDims& d = cfg.dims;
  d.d = get_count(doc, "d", d.d, source);
  d.d_c = get_count(doc, "d_c", d.d, source);
  d.d_m = get_count(doc, "d_m", d.d, source);
  d.heads = get_count(doc, "h", d.heads, source);
  d.layers = get_count(doc, "L", d.layers, source);
  d.n_text = get_count(doc, "n_text", d.n_text, source);
  d.n_img = get_count(doc, "m", d.n_img, source);
  d.share_encoder_blocks = get_or<bool>(doc, "share_encoder_blocks", false, source);
  cfg.k = get_count(doc, "k", cfg.k, source);

  const std::uint64_t global = default_seed();
  cfg.seeds = {global, global, global, global};
  if (auto it = doc.find("seeds"); it != doc.end()) {
    if (!it->is_object()) throw ParseError(source + ": field 'seeds': expected an object");
    const std::string where = source + " seeds";
    cfg.seeds.walk = get_count(*it, "walk", global, where);
    cfg.seeds.kmeans = get_count(*it, "kmeans", global, where);
    cfg.seeds.init = get_count(*it, "init", global, where);
    cfg.seeds.embed = get_count(*it, "embed", global, where);
  }
  if (auto it = doc.find("kmeans"); it != doc.end()) {
    if (!it->is_object()) throw ParseError(source + ": field 'kmeans': expected an object");
    const std::string where = source + " kmeans";
    cfg.kmeans_max_iters = get_count(*it, "max_iters", cfg.kmeans_max_iters, where);
    cfg.kmeans_tol = get_or<double>(*it, "tol", cfg.kmeans_tol, where);
  }
  if (doc.contains("graph")) cfg.graph = resolve(base_dir, get_or<std::string>(doc, "graph", "", source));
  if (doc.contains("patches")) {
    cfg.patches = resolve(base_dir, get_or<std::string>(doc, "patches", "", source));
  }
  if (doc.contains("text_nodes")) {
    cfg.text_nodes = resolve(base_dir, get_or<std::string>(doc, "text_nodes", "", source));
  }
  cfg.validate();
  return cfg;
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(read_file(path), path.parent_path(), path.string());
}

std::string dump_pipeline_config(const PipelineConfig& cfg) {
  const ModelDims& d = cfg.dims;
  json doc = {
      {"d", d.d},
      {"d_c", d.d_c},
      {"d_m", d.d_m},
      {"h", d.heads},
      {"L", d.layers},
      {"k", cfg.k},
      {"n_text", d.n_text},
      {"m", d.n_img},
      {"share_encoder_blocks", d.share_encoder_blocks},
      {"seeds",
       {{"walk", cfg.seeds.walk},
        {"kmeans", cfg.seeds.kmeans},
        {"init", cfg.seeds.init},
        {"embed", cfg.seeds.embed}}},
      {"kmeans", {{"max_iters", cfg.kmeans_max_iters}, {"tol", cfg.kmeans_tol}}},
      {"graph", cfg.graph.generic_string()},
      {"patches", cfg.patches.generic_string()},
  };
  if (cfg.text_nodes) doc["text_nodes"] = cfg.text_nodes->generic_string();
  return doc.dump(2) + "\n";
}

bool PipelineRun::all_checks_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

PipelineRun run_pipeline(const PipelineConfig& cfg) {
  PipelineRun run;
  stage("config", run.timings, [&] { cfg.validate(); });
  const ModelDims& dims = cfg.dims;

  const ThoughtGraph graph = stage("load", run.timings, [&] {
    ThoughtGraph g = read_thought_graph(cfg.graph);
    g.validate();
    run.patches = read_matrix(cfg.patches);
    if (run.patches.cols() != dims.d) {
      throw ShapeError("patch matrix has " + std::to_string(run.patches.cols()) +
                       " columns, config d = " + std::to_string(dims.d));
    }
    require_finite(run.patches, "patch matrix");
    return g;
  });

  stage("embed", run.timings, [&] {
    const NodeSequence seq = format_node_sequence(graph);
    run.text_sequence = stub_encode_sequence(seq.tokens, dims.d, cfg.seeds.embed);
    if (cfg.text_nodes) {
      run.text_nodes = read_matrix(*cfg.text_nodes);
      if (run.text_nodes.rows() != graph.thoughts.size() || run.text_nodes.cols() != dims.d) {
        throw ShapeError("text node matrix is " + run.text_nodes.shape_string() + ", expected " +
                         std::to_string(graph.thoughts.size()) + "x" + std::to_string(dims.d));
      }
    } else {
      run.text_nodes = extract_marker_embeddings(run.text_sequence, seq.marker_positions);
    }
  });

  stage("build-text", run.timings, [&] {
    WalkConfig wc;
    wc.k = cfg.k;
    wc.n = dims.n_text;
    wc.seed = cfg.seeds.walk;
    wc.fill_to_n = true;
    run.text_hot = build_textual_hot(graph, wc);
  });

  stage("build-visual", run.timings, [&] {
    KMeansConfig kc{dims.n_img, cfg.kmeans_max_iters, cfg.kmeans_tol, cfg.seeds.kmeans};
    run.visual_hot = build_visual_hot(run.patches, kc, &run.kmeans);
  });

  const HotModelParams params = stage("init", run.timings, [&] {
    SplitMix64 rng(cfg.seeds.init);
    return HotModelParams::init(dims, rng);
  });

  stage("forward", run.timings, [&] {
    const StackInputs in{run.text_nodes, run.text_hot.hypergraph, run.patches, run.visual_hot,
                         run.text_sequence};
    run.outputs = forward_stack(in, params, nullptr);
  });

  const StackOutputs& o = run.outputs;
  run.checks.push_back(check_row_stochastic(o.attention));
  const bool finite = o.text.nodes.all_finite() && o.text.edges.all_finite() &&
                      o.image.nodes.all_finite() && o.image.edges.all_finite() &&
                      o.attention.all_finite() && o.z.all_finite() && o.fused.all_finite();
  run.checks.push_back({"outputs finite", finite, finite ? "" : "NaN or Inf in an output"});
  const bool shapes = o.text.edges.rows() == dims.n_text && o.image.edges.rows() == dims.n_img &&
                      o.attention.rows() == dims.n_text && o.attention.cols() == dims.n_img &&
                      o.z.rows() == dims.d_m && o.z.cols() == dims.d_m &&
                      o.fused.rows() == run.text_sequence.rows() && o.fused.cols() == dims.d;
  run.checks.push_back({"shapes match config", shapes, ""});
  const auto& trace = run.kmeans.objective_trace;
  run.checks.push_back({"k-means objective monotone", std::is_sorted(trace.rbegin(), trace.rend()),
                        std::to_string(trace.size()) + " steps"});
  return run;
}

std::string run_report_json(const PipelineConfig& cfg, const PipelineRun& run) {
  const StackOutputs& o = run.outputs;
  const Hypergraph& th = run.text_hot.hypergraph;

  std::size_t member_total = 0;
  std::size_t hop_total = 0;
  for (const auto& e : th.edges) member_total += e.members.size();
  for (const auto& p : run.text_hot.paths) hop_total += p.hops();
  std::vector<std::size_t> cluster_sizes;
  for (const auto& e : run.visual_hot.edges) cluster_sizes.push_back(e.members.size());

  json checks = json::array();
  for (const auto& c : run.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  const double n_edges = static_cast<double>(std::max<std::size_t>(th.num_edges(), 1));
  json doc = {
      {"config", json::parse(dump_pipeline_config(cfg))},
      {"shapes",
       {{"X_text", shape_of(run.text_nodes)},
        {"H_text", shape_of(run.text_sequence)},
        {"patches", shape_of(run.patches)},
        {"X_text_L", shape_of(o.text.nodes)},
        {"X_img_L", shape_of(o.image.nodes)},
        {"E_text", shape_of(o.text.edges)},
        {"E_img", shape_of(o.image.edges)},
        {"A", shape_of(o.attention)},
        {"z_m", shape_of(o.z)},
        {"fused", shape_of(o.fused)}}},
      {"text_hypergraph",
       {{"vertices", th.num_vertices},
        {"edges", th.num_edges()},
        {"mean_members", static_cast<double>(member_total) / n_edges},
        {"mean_hops", static_cast<double>(hop_total) / n_edges},
        {"walks_drawn", run.text_hot.walks_drawn},
        {"duplicates_dropped", run.text_hot.duplicates_dropped},
        {"padded", run.text_hot.padded},
        {"isolated_vertices", o.text.isolated_vertices}}},
      {"visual_hypergraph",
       {{"vertices", run.visual_hot.num_vertices},
        {"edges", run.visual_hot.num_edges()},
        {"cluster_sizes", cluster_sizes},
        {"kmeans_objective", run.kmeans.objective},
        {"kmeans_iterations", run.kmeans.iterations},
        {"kmeans_repairs", run.kmeans.repairs},
        {"isolated_vertices", o.image.isolated_vertices}}},
      {"checks", std::move(checks)},
      {"passed", run.all_checks_passed()},
  };
  return doc.dump(2) + "\n";
}

void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineConfig& cfg,
                            const PipelineRun& run) {
  std::filesystem::create_directories(dir);
  const StackOutputs& o = run.outputs;
  write_matrix(dir / "X_text.hotm", run.text_nodes);
  write_matrix(dir / "X_text_L.hotm", o.text.nodes);
  write_matrix(dir / "X_img_L.hotm", o.image.nodes);
  write_matrix(dir / "E_text.hotm", o.text.edges);
  write_matrix(dir / "E_img.hotm", o.image.edges);
  write_matrix(dir / "A.hotm", o.attention);
  write_matrix(dir / "z_m.hotm", o.z);
  write_matrix(dir / "fused.hotm", o.fused);
  write_hypergraph(dir / "text_hot.json", run.text_hot.hypergraph);
  write_hypergraph(dir / "visual_hot.json", run.visual_hot);
  write_file(dir / "run_report.json", run_report_json(cfg, run));
}

ToyFixture make_toy_fixture(std::size_t d, std::uint64_t seed) {
  ToyFixture f;
  f.graph.thoughts = {"Lionel Messi", "Rosario",      "Republic of Argentina",
                      "South America", "FC Barcelona", "Spain"};
  f.graph.triples = {{0, "place of birth", 1},
                     {1, "is located in", 2},
                     {2, "is located in", 3},
                     {0, "member of sports team", 4},
                     {4, "country", 5}};
  SplitMix64 rng(seed);
  constexpr std::size_t kGroups = 4;
  constexpr std::size_t kPerGroup = 4;
  Matrix centers(kGroups, d);
  for (double& v : centers.values()) v = 3.0 * rng.normal();
  f.patches = Matrix(kGroups * kPerGroup, d);
  for (std::size_t g = 0; g < kGroups; ++g) {
    for (std::size_t i = 0; i < kPerGroup; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        f.patches(g * kPerGroup + i, c) = centers(g, c) + 0.1 * rng.normal();
      }
    }
  }
  return f;
}

std::filesystem::path write_toy_fixture(const std::filesystem::path& dir, std::size_t d) {
  const ToyFixture f = make_toy_fixture(d);
  std::filesystem::create_directories(dir);
  write_thought_graph(dir / "graph.json", f.graph);
  write_matrix(dir / "patches.csv", f.patches);
  const json cfg = {{"d", d},
                    {"d_c", d},
                    {"d_m", d},
                    {"h", 4},
                    {"L", 1},
                    {"k", 2},
                    {"n_text", 4},
                    {"m", 4},
                    {"seeds", {{"walk", 1}, {"kmeans", 2}, {"init", 3}, {"embed", 4}}},
                    {"kmeans", {{"max_iters", 100}, {"tol", 1e-6}}},
                    {"graph", "graph.json"},
                    {"patches", "patches.csv"}};
  write_file(dir / "config.json", cfg.dump(2) + "\n");
  return dir / "config.json";
}

}  // namespace hotkit
