#include "hotkit/toy_train.hpp"

#include <cmath>
#include <stdexcept>

#include "hotkit/textual_hot.hpp"
#include "hotkit/visual_hot.hpp"

namespace hotkit {

void ToyTrainConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("toy-train: steps must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw std::invalid_argument("toy-train: learning rate must be finite and >= 0");
  }
  if (train_samples < 2 || test_samples < 1) throw std::invalid_argument("toy-train: too few samples");
  if (thoughts < 2) throw std::invalid_argument("toy-train: need at least 2 thoughts");
  if (patches < dims.n_img) throw std::invalid_argument("toy-train: fewer patches than image edges");
  dims.validate();
}

double ToyTrainResult::loss_reduction() const noexcept {
  if (losses.empty() || losses.front() == 0.0) return 0.0;
  return 1.0 - final_loss / losses.front();
}

namespace {

constexpr std::size_t kClasses = 2;

struct Sample {
  Matrix text_nodes;
  Matrix text_sequence;  // class-independent, so the label must flow through z_m
  Hypergraph text_graph;
  Matrix patches;
  Hypergraph image_graph;
  std::size_t label = 0;
};

struct ToyParams {
  HotModelParams model;
  Matrix head_w;  // d × 2
  Vector head_b;  // 2
};

template <ParamsOf<ToyParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  for_each_tensor(p.model, f, prefix + "model.");
  f(prefix + "head.w", p.head_w.values());
  f(prefix + "head.b", std::span(p.head_b));
}

Matrix around(const Vector& mean, std::size_t rows, double noise, SplitMix64& rng) {
  Matrix m(rows, mean.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < mean.size(); ++c) m(r, c) = mean[c] + noise * rng.normal();
  }
  return m;
}

Sample make_sample(const ToyTrainConfig& cfg, const std::vector<Vector>& text_means,
                   const std::vector<Vector>& img_means, std::size_t label, SplitMix64& rng) {
  const ModelDims& d = cfg.dims;
  ThoughtGraph g;
  for (std::size_t v = 0; v < cfg.thoughts; ++v) g.thoughts.push_back("t" + std::to_string(v));
  for (std::size_t v = 0; v < cfg.thoughts; ++v) {
    std::size_t to = rng.choice(cfg.thoughts - 1);
    if (to >= v) ++to;
    g.triples.push_back({static_cast<VertexId>(v), "r", static_cast<VertexId>(to)});
  }
  WalkConfig wc;
  wc.k = cfg.k;
  wc.n = d.n_text;
  wc.seed = rng.next();
  wc.fill_to_n = true;

  Sample s;
  s.label = label;
  s.text_graph = build_textual_hot(g, wc).hypergraph;
  s.text_nodes = around(text_means[label], cfg.thoughts, 1.0, rng);
  s.text_sequence = around(Vector(d.d, 0.0), cfg.thoughts, 1.0, rng);
  s.patches = around(img_means[label], cfg.patches, 1.0, rng);
  s.image_graph = build_visual_hot(s.patches, KMeansConfig{d.n_img, 50, 1e-6, rng.next()});
  return s;
}

struct Evaluation {
  double loss = 0.0;
  std::size_t correct = 0;
};

/// Mean cross-entropy over `samples`; accumulates gradients into `grads`
/// when it is non-null.
Evaluation evaluate(const std::vector<Sample>& samples, const ToyParams& p, ToyParams* grads) {
  Evaluation ev;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const Sample& s : samples) {
    const StackInputs in{s.text_nodes, s.text_graph, s.patches, s.image_graph, s.text_sequence};
    StackCache cache;
    const StackOutputs out = forward_stack(in, p.model, grads ? &cache : nullptr);

    const std::size_t rows = out.fused.rows();
    Vector pooled = column_sums(out.fused);
    for (double& v : pooled) v /= static_cast<double>(rows);
    Matrix logits = matmul(Matrix::row_vector(pooled), p.head_w);
    for (std::size_t c = 0; c < kClasses; ++c) logits(0, c) += p.head_b[c];
    const Matrix probs = row_softmax(logits);

    ev.loss -= std::log(std::max(probs(0, s.label), 1e-300)) * inv_n;
    if (probs(0, s.label) > probs(0, 1 - s.label)) ++ev.correct;
    if (!grads) continue;

    Matrix d_logits = probs;
    d_logits(0, s.label) -= 1.0;
    for (double& v : d_logits.values()) v *= inv_n;
    add_inplace(grads->head_w, matmul_tn(Matrix::row_vector(pooled), d_logits));
    for (std::size_t c = 0; c < kClasses; ++c) grads->head_b[c] += d_logits(0, c);
    const Matrix d_pooled = matmul_nt(d_logits, p.head_w);
    Matrix d_fused(rows, out.fused.cols());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < d_fused.cols(); ++c) {
        d_fused(r, c) = d_pooled(0, c) / static_cast<double>(rows);
      }
    }
    const StackGradients g = backward_stack(d_fused, out, p.model, cache);
    add_parameters(grads->model, g.params);
  }
  return ev;
}

}  // namespace

ToyTrainResult toy_train(const ToyTrainConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.dims.d;
  SplitMix64 rng(cfg.seed);

  std::vector<Vector> text_means(kClasses, Vector(d));
  std::vector<Vector> img_means(kClasses, Vector(d));
  for (auto* means : {&text_means, &img_means}) {
    for (Vector& m : *means) {
      for (double& v : m) v = 0.6 * rng.normal();
    }
  }
  std::vector<Sample> train;
  std::vector<Sample> test;
  for (std::size_t i = 0; i < cfg.train_samples; ++i) {
    train.push_back(make_sample(cfg, text_means, img_means, i % kClasses, rng));
  }
  for (std::size_t i = 0; i < cfg.test_samples; ++i) {
    test.push_back(make_sample(cfg, text_means, img_means, i % kClasses, rng));
  }

  ToyParams params;
  params.model = HotModelParams::init(cfg.dims, rng);
  params.head_w = xavier_init(d, kClasses, rng);
  params.head_b = Vector(kClasses, 0.0);

  // Adam, default moments.
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const std::size_t n = parameter_count(params);
  Vector m1(n, 0.0);
  Vector m2(n, 0.0);

  ToyTrainResult result;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    ToyParams grads = params;
    zero_parameters(grads);
    const Evaluation ev = evaluate(train, params, &grads);
    if (!std::isfinite(ev.loss)) {
      throw NumericError("toy-train diverged: loss is " + std::to_string(ev.loss) + " at step " +
                         std::to_string(step));
    }
    result.losses.push_back(ev.loss);

    Vector theta = flatten_parameters(params);
    const Vector g = flatten_parameters(grads);
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < n; ++i) {
      m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g[i];
      m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g[i] * g[i];
      theta[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + kEps);
    }
    assign_parameters(params, theta);
  }

  const Evaluation final_train = evaluate(train, params, nullptr);
  const Evaluation final_test = evaluate(test, params, nullptr);
  if (!std::isfinite(final_train.loss)) throw NumericError("toy-train diverged after the last step");
  result.final_loss = final_train.loss;
  result.train_accuracy = static_cast<double>(final_train.correct) / static_cast<double>(train.size());
  result.test_accuracy = static_cast<double>(final_test.correct) / static_cast<double>(test.size());
  return result;
}

}  // namespace hotkit
