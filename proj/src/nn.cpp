#include "bookrel/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <utility>

#include "bookrel/kernels.hpp"
#include "bookrel/tsv.hpp"

namespace bookrel {

namespace {

using kernels::Shape3;

constexpr char kModelMagic[4] = {'B', 'R', 'C', 'M'};
constexpr std::uint32_t kModelVersion = 1;

Shape3 input_shape(const ModelShape& s) { return {1, s.matrix_size, s.matrix_size}; }
Shape3 conv1_shape(const ModelShape& s) {
  return kernels::conv_output_shape(input_shape(s), s.conv1_filters, s.kernel);
}
Shape3 pool1_shape(const ModelShape& s) { return kernels::pool_output_shape(conv1_shape(s)); }
Shape3 conv2_shape(const ModelShape& s) {
  return kernels::conv_output_shape(pool1_shape(s), s.conv2_filters, s.kernel);
}
Shape3 pool2_shape(const ModelShape& s) { return kernels::pool_output_shape(conv2_shape(s)); }

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data) v = rng.uniform(-limit, limit);
}

// y = W x + b, W is [out x in].
void dense_forward(const Tensor& w, const Tensor& b, std::span<const double> x, std::vector<double>& y) {
  const std::size_t out = w.shape[0];
  const std::size_t in = w.shape[1];
  y.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w.data.data() + o * in;
    double s = b.data[o];
    for (std::size_t i = 0; i < in; ++i) s += row[i] * x[i];
    y[o] = s;
  }
}

// Accumulates dW += gy x^T, db += gy; writes gx = W^T gy when gx is non-null.
void dense_backward(const Tensor& w, std::span<const double> x, std::span<const double> gy,
                    Tensor& gw, Tensor& gb, std::vector<double>* gx) {
  const std::size_t out = w.shape[0];
  const std::size_t in = w.shape[1];
  if (gx) gx->assign(in, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double g = gy[o];
    gb.data[o] += g;
    if (g == 0.0) continue;
    double* grow = gw.data.data() + o * in;
    const double* row = w.data.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) grow[i] += g * x[i];
    if (gx) {
      for (std::size_t i = 0; i < in; ++i) (*gx)[i] += g * row[i];
    }
  }
}

void relu(std::span<const double> x, std::vector<double>& y) {
  y.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

// Inverted dropout multipliers: 0 with probability `rate`, else 1/(1-rate).
void dropout_mask(std::size_t n, double rate, bool train_mode, Rng* rng, std::vector<double>& mask) {
  mask.assign(n, 1.0);
  if (!train_mode || rate <= 0.0) return;
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = rng->uniform01() < rate ? 0.0 : keep;
}

void softmax(std::span<const double> logits, std::vector<double>& probs) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint64_t u(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw ParseError("model file: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError("model file: truncated");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_tensor(std::string& out, const std::vector<std::size_t>& shape, std::span<const double> data) {
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

Tensor get_tensor(Reader& r) {
  Tensor t;
  const auto rank = r.u32();
  if (rank > 8) throw ParseError("model file: implausible tensor rank");
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.shape.push_back(r.u32());
    n *= t.shape.back();
  }
  if (n > (std::size_t{1} << 31)) throw ParseError("model file: implausible tensor size");
  t.data.resize(n);
  for (auto& v : t.data) {
    v = static_cast<double>(std::bit_cast<float>(r.u32()));
    if (!std::isfinite(v)) throw ParseError("model file: non-finite weight");
  }
  return t;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  Tensor t;
  const std::size_t n =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

std::size_t ModelShape::flatten_size() const { return pool2_shape(*this).size(); }

ClassifierModel ClassifierModel::create(const ModelShape& shape, std::vector<RelationshipLabel> classes,
                                        const DropoutRates& dropout, std::uint64_t seed) {
  if (classes.size() < 2) throw ValidationError("classifier needs at least 2 classes");
  if (shape.pair_dim == 0) throw ValidationError("classifier needs pair_dim >= 1");
  if (!(dropout.conv >= 0.0 && dropout.conv < 1.0 && dropout.pair >= 0.0 && dropout.pair < 1.0)) {
    throw ValidationError("dropout rates must be in [0, 1)");
  }
  ClassifierModel m;
  m.shape = shape;
  m.dropout = dropout;
  m.classes = std::move(classes);
  m.seed = seed;
  const std::size_t k = shape.kernel;
  const std::size_t flat = shape.flatten_size();  // validates the geometry
  m.conv1_w = Tensor::zeros({shape.conv1_filters, 1, k, k});
  m.conv1_b = Tensor::zeros({shape.conv1_filters});
  m.conv2_w = Tensor::zeros({shape.conv2_filters, shape.conv1_filters, k, k});
  m.conv2_b = Tensor::zeros({shape.conv2_filters});
  m.pair_w = Tensor::zeros({shape.pair_hidden, shape.pair_dim});
  m.pair_b = Tensor::zeros({shape.pair_hidden});
  m.merge_w = Tensor::zeros({shape.merge_hidden, flat + shape.pair_hidden});
  m.merge_b = Tensor::zeros({shape.merge_hidden});
  m.out_w = Tensor::zeros({m.classes.size(), shape.merge_hidden});
  m.out_b = Tensor::zeros({m.classes.size()});

  Rng rng(derive_seed(seed, 0x1A17));
  glorot(m.conv1_w, k * k, shape.conv1_filters * k * k, rng);
  glorot(m.conv2_w, shape.conv1_filters * k * k, shape.conv2_filters * k * k, rng);
  glorot(m.pair_w, shape.pair_dim, shape.pair_hidden, rng);
  glorot(m.merge_w, flat + shape.pair_hidden, shape.merge_hidden, rng);
  glorot(m.out_w, shape.merge_hidden, m.classes.size(), rng);
  m.pair_shift.assign(shape.pair_dim, 0.0);
  m.pair_scale.assign(shape.pair_dim, 1.0);
  m.round_to_float();
  return m;
}

std::vector<Tensor*> ClassifierModel::parameters() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &pair_w,
          &pair_b,  &merge_w, &merge_b, &out_w,   &out_b};
}

std::vector<const Tensor*> ClassifierModel::parameters() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &pair_w,
          &pair_b,  &merge_w, &merge_b, &out_w,   &out_b};
}

std::vector<std::string> ClassifierModel::parameter_names() {
  return {"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "pair.weight",
          "pair.bias",    "merge.weight", "merge.bias", "out.weight", "out.bias"};
}

std::size_t ClassifierModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : parameters()) n += t->size();
  return n;
}

std::optional<std::size_t> ClassifierModel::class_index(RelationshipLabel label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return i;
  }
  return std::nullopt;
}

void ClassifierModel::round_to_float() {
  auto round = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  for (auto* t : parameters()) {
    for (auto& v : t->data) v = round(v);
  }
  for (auto& v : pair_shift) v = round(v);
  for (auto& v : pair_scale) v = round(v);
}

Gradients Gradients::zeros_like(const ClassifierModel& model) {
  Gradients g;
  for (const auto* t : model.parameters()) g.tensors.push_back(Tensor::zeros(t->shape));
  return g;
}

void Gradients::scale(double factor) {
  for (auto& t : tensors) {
    for (auto& v : t.data) v *= factor;
  }
}

ForwardTrace forward_trace(const ClassifierModel& model, const SimilarityMatrix& matrix,
                           const PairFeatures& pair, bool train_mode, Rng* rng) {
  const auto& s = model.shape;
  if (matrix.size != s.matrix_size || matrix.values.size() != s.matrix_size * s.matrix_size) {
    throw ValidationError("forward: matrix size " + std::to_string(matrix.size) +
                          " does not match model input " + std::to_string(s.matrix_size));
  }
  if (pair.values.size() != s.pair_dim) {
    throw ValidationError("forward: pair feature length " + std::to_string(pair.values.size()) +
                          " does not match model input " + std::to_string(s.pair_dim));
  }
  if (train_mode && rng == nullptr) throw ValidationError("forward: train mode needs an rng");

  ForwardTrace t;
  t.input.assign(matrix.values.begin(), matrix.values.end());

  const auto in0 = input_shape(s);
  const auto c1 = conv1_shape(s);
  const auto p1 = pool1_shape(s);
  const auto c2 = conv2_shape(s);
  const auto p2 = pool2_shape(s);

  t.conv1.resize(c1.size());
  kernels::conv2d_forward(t.input, in0, model.conv1_w.data, model.conv1_b.data, s.conv1_filters,
                          s.kernel, t.conv1);
  relu(t.conv1, t.act1);
  t.pool1.resize(p1.size());
  t.pool1_arg.resize(p1.size());
  kernels::maxpool2x2_forward(t.act1, c1, t.pool1, t.pool1_arg);

  t.conv2.resize(c2.size());
  kernels::conv2d_forward(t.pool1, p1, model.conv2_w.data, model.conv2_b.data, s.conv2_filters,
                          s.kernel, t.conv2);
  relu(t.conv2, t.act2);
  t.pool2.resize(p2.size());
  t.pool2_arg.resize(p2.size());
  kernels::maxpool2x2_forward(t.act2, c2, t.pool2, t.pool2_arg);

  dropout_mask(t.pool2.size(), model.dropout.conv, train_mode, rng, t.flat_mask);
  t.flat.resize(t.pool2.size());
  for (std::size_t i = 0; i < t.flat.size(); ++i) t.flat[i] = t.pool2[i] * t.flat_mask[i];

  t.pair_in.resize(s.pair_dim);
  for (std::size_t i = 0; i < s.pair_dim; ++i) {
    t.pair_in[i] = (pair.values[i] - model.pair_shift[i]) * model.pair_scale[i];
  }
  dense_forward(model.pair_w, model.pair_b, t.pair_in, t.pair_pre);
  dropout_mask(t.pair_pre.size(), model.dropout.pair, train_mode, rng, t.pair_mask);
  t.pair_act.resize(t.pair_pre.size());
  for (std::size_t i = 0; i < t.pair_pre.size(); ++i) {
    t.pair_act[i] = (t.pair_pre[i] > 0.0 ? t.pair_pre[i] : 0.0) * t.pair_mask[i];
  }

  t.merged = t.flat;
  t.merged.insert(t.merged.end(), t.pair_act.begin(), t.pair_act.end());
  dense_forward(model.merge_w, model.merge_b, t.merged, t.merge_pre);
  relu(t.merge_pre, t.merge_act);
  dense_forward(model.out_w, model.out_b, t.merge_act, t.logits);
  softmax(t.logits, t.probs);
  return t;
}

std::vector<double> forward(const ClassifierModel& model, const SimilarityMatrix& matrix,
                            const PairFeatures& pair, bool train_mode, Rng* rng) {
  return forward_trace(model, matrix, pair, train_mode, rng).probs;
}

double cross_entropy(const ForwardTrace& trace, std::size_t target, double weight) {
  // log-softmax from logits keeps tiny probabilities finite.
  const double mx = *std::max_element(trace.logits.begin(), trace.logits.end());
  double sum = 0.0;
  for (double l : trace.logits) sum += std::exp(l - mx);
  return -weight * (trace.logits[target] - mx - std::log(sum));
}

void backward(const ClassifierModel& model, const ForwardTrace& t, std::size_t target,
              double loss_scale, Gradients& grads) {
  const auto& s = model.shape;
  auto& g = grads.tensors;

  std::vector<double> g_logits(t.probs.size());
  for (std::size_t i = 0; i < g_logits.size(); ++i) {
    g_logits[i] = loss_scale * (t.probs[i] - (i == target ? 1.0 : 0.0));
  }

  std::vector<double> g_merge_act;
  dense_backward(model.out_w, t.merge_act, g_logits, g[8], g[9], &g_merge_act);
  for (std::size_t i = 0; i < g_merge_act.size(); ++i) {
    if (t.merge_pre[i] <= 0.0) g_merge_act[i] = 0.0;
  }
  std::vector<double> g_merged;
  dense_backward(model.merge_w, t.merged, g_merge_act, g[6], g[7], &g_merged);

  // Pair branch.
  const std::size_t flat_n = t.flat.size();
  std::vector<double> g_pair_pre(t.pair_pre.size());
  for (std::size_t i = 0; i < g_pair_pre.size(); ++i) {
    g_pair_pre[i] = t.pair_pre[i] > 0.0 ? g_merged[flat_n + i] * t.pair_mask[i] : 0.0;
  }
  dense_backward(model.pair_w, t.pair_in, g_pair_pre, g[4], g[5], nullptr);

  // Conv branch.
  const auto c1 = conv1_shape(s);
  const auto p1 = pool1_shape(s);
  const auto c2 = conv2_shape(s);
  std::vector<double> g_pool2(flat_n);
  for (std::size_t i = 0; i < flat_n; ++i) g_pool2[i] = g_merged[i] * t.flat_mask[i];
  std::vector<double> g_act2(c2.size());
  kernels::maxpool2x2_backward(g_pool2, t.pool2_arg, g_act2);
  for (std::size_t i = 0; i < g_act2.size(); ++i) {
    if (t.conv2[i] <= 0.0) g_act2[i] = 0.0;
  }
  std::vector<double> g_pool1(p1.size());
  kernels::conv2d_backward(t.pool1, p1, model.conv2_w.data, s.conv2_filters, s.kernel, g_act2,
                           g_pool1, g[2].data, g[3].data);
  std::vector<double> g_act1(c1.size());
  kernels::maxpool2x2_backward(g_pool1, t.pool1_arg, g_act1);
  for (std::size_t i = 0; i < g_act1.size(); ++i) {
    if (t.conv1[i] <= 0.0) g_act1[i] = 0.0;
  }
  kernels::conv2d_backward(t.input, input_shape(s), model.conv1_w.data, s.conv1_filters, s.kernel,
                           g_act1, {}, g[0].data, g[1].data);
}

Gradients compute_gradients(const ClassifierModel& model, const PairExample& example, double loss_scale) {
  const auto target = model.class_index(example.label);
  if (!target) throw ValidationError("label " + std::string(to_string(example.label)) + " not in model classes");
  auto trace = forward_trace(model, example.matrix, example.pair, false, nullptr);
  auto grads = Gradients::zeros_like(model);
  backward(model, trace, *target, loss_scale, grads);
  return grads;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be > 0");
  }
}

TrainResult train(std::span<const PairExample> dataset, std::span<const RelationshipLabel> classes,
                  const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  if (!config.class_weights.empty() && config.class_weights.size() != classes.size()) {
    throw ValidationError("train: class_weights must have one entry per class");
  }

  ModelShape shape = config.architecture;
  shape.matrix_size = dataset.front().matrix.size;
  shape.pair_dim = dataset.front().pair.values.size();
  auto model = ClassifierModel::create(shape, {classes.begin(), classes.end()}, config.dropout,
                                       config.seed);

  std::vector<std::size_t> targets(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset[i];
    if (ex.matrix.size != shape.matrix_size || ex.pair.values.size() != shape.pair_dim) {
      throw ValidationError("train: example " + std::to_string(i) +
                            " was featurized with a different matrix size or embedding dimension");
    }
    for (double v : ex.pair.values) {
      if (!std::isfinite(v)) throw ValidationError("train: example " + std::to_string(i) + " has a non-finite pair feature");
    }
    for (float v : ex.matrix.values) {
      if (!std::isfinite(v)) throw ValidationError("train: example " + std::to_string(i) + " has a non-finite similarity");
    }
    const auto idx = model.class_index(ex.label);
    if (!idx) {
      throw ValidationError("train: example label " + std::string(to_string(ex.label)) +
                            " is not in the class list");
    }
    targets[i] = *idx;
  }

  // Pair-input standardization from the training set.
  const double n = static_cast<double>(dataset.size());
  for (std::size_t k = 0; k < shape.pair_dim; ++k) {
    double mean = 0.0;
    for (const auto& ex : dataset) mean += ex.pair.values[k];
    mean /= n;
    double var = 0.0;
    for (const auto& ex : dataset) var += (ex.pair.values[k] - mean) * (ex.pair.values[k] - mean);
    const double sd = std::sqrt(var / n);
    model.pair_shift[k] = mean;
    model.pair_scale[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  model.round_to_float();

  auto params = model.parameters();
  auto grads = Gradients::zeros_like(model);
  auto adam_m = Gradients::zeros_like(model);
  auto adam_v = Gradients::zeros_like(model);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t step = 0;

  Rng order_rng(derive_seed(config.seed, 0x5EED0));
  Rng dropout_rng(derive_seed(config.seed, 0xD209));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (auto& t : grads.tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = dataset[order[b]];
        const auto target = targets[order[b]];
        const double w = config.class_weights.empty() ? 1.0 : config.class_weights[target];
        const auto trace = forward_trace(model, ex.matrix, ex.pair, true, &dropout_rng);
        const double loss = cross_entropy(trace, target, w);
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                              ", example " + std::to_string(order[b]) +
                              "; the learning rate (" + format_double(config.learning_rate) +
                              ") is probably too high");
        }
        loss_sum += loss;
        if (argmax(trace.probs) == target) ++correct;
        backward(model, trace, target, w * inv_batch, grads);
      }
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto& w = params[p]->data;
        const auto& g = grads.tensors[p].data;
        auto& m = adam_m.tensors[p].data;
        auto& v = adam_v.tensors[p].data;
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
          v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
          w[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + adam_eps);
        }
      }
    }
    result.history.push_back({epoch + 1, loss_sum / n, static_cast<double>(correct) / n});
  }
  model.round_to_float();
  for (const auto* t : std::as_const(model).parameters()) {
    for (double v : t->data) {
      if (!std::isfinite(v)) {
        throw TrainingError("weights overflowed during training; the learning rate (" +
                            format_double(config.learning_rate) + ") is probably too high");
      }
    }
  }
  result.model = std::move(model);
  return result;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction predict(const ClassifierModel& model, const PairExample& example) {
  Prediction p;
  p.probabilities = forward(model, example.matrix, example.pair);
  p.index = argmax(p.probabilities);
  p.label = model.classes[p.index];
  return p;
}

GradientCheckResult gradient_check(const ClassifierModel& model, const PairExample& example,
                                   double eps, std::optional<std::uint64_t> dropout_seed) {
  if (!(eps > 0.0)) throw ValidationError("gradient_check: eps must be > 0");
  const auto target = model.class_index(example.label);
  if (!target) throw ValidationError("gradient_check: label not in model classes");

  const bool train_mode = dropout_seed.has_value();
  auto loss_of = [&](const ClassifierModel& m) {
    Rng rng(dropout_seed.value_or(0));
    return cross_entropy(forward_trace(m, example.matrix, example.pair, train_mode, &rng), *target);
  };

  Rng rng(dropout_seed.value_or(0));
  const auto trace = forward_trace(model, example.matrix, example.pair, train_mode, &rng);
  auto analytic = Gradients::zeros_like(model);
  backward(model, trace, *target, 1.0, analytic);

  ClassifierModel probe = model;
  auto params = probe.parameters();
  const auto names = ClassifierModel::parameter_names();
  GradientCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& data = params[p]->data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double up = loss_of(probe);
      data[i] = saved - eps;
      const double down = loss_of(probe);
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.tensors[p].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradientErrorFloor});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(err, result.max_relative_error);
        result.worst_parameter = names[p];
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

std::string encode_model(const ClassifierModel& model) {
  std::string out(kModelMagic, 4);
  put_u32(out, kModelVersion);
  const auto& s = model.shape;
  for (auto v : {s.matrix_size, s.pair_dim, s.conv1_filters, s.conv2_filters, s.kernel,
                 s.pair_hidden, s.merge_hidden}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u64(out, std::bit_cast<std::uint64_t>(model.dropout.conv));
  put_u64(out, std::bit_cast<std::uint64_t>(model.dropout.pair));
  put_u64(out, model.seed);
  put_u32(out, static_cast<std::uint32_t>(model.classes.size()));
  for (auto c : model.classes) out.push_back(static_cast<char>(c));
  const auto params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size() + 2));
  for (const auto* t : params) put_tensor(out, t->shape, t->data);
  put_tensor(out, {model.pair_shift.size()}, model.pair_shift);
  put_tensor(out, {model.pair_scale.size()}, model.pair_scale);
  return out;
}

ClassifierModel decode_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != std::string_view(kModelMagic, 4)) throw ParseError("model file: bad magic");
  const auto version = r.u32();
  if (version != kModelVersion) {
    throw ParseError("model file: unsupported version " + std::to_string(version));
  }
  ClassifierModel m;
  auto& s = m.shape;
  for (auto* v : {&s.matrix_size, &s.pair_dim, &s.conv1_filters, &s.conv2_filters, &s.kernel,
                  &s.pair_hidden, &s.merge_hidden}) {
    *v = r.u32();
  }
  m.dropout.conv = std::bit_cast<double>(r.u64());
  m.dropout.pair = std::bit_cast<double>(r.u64());
  m.seed = r.u64();
  const auto n_classes = r.u32();
  if (n_classes < 2 || n_classes > kLabelCount) throw ParseError("model file: bad class count");
  for (std::uint32_t i = 0; i < n_classes; ++i) {
    const auto code = static_cast<unsigned char>(r.take(1)[0]);
    if (code >= kLabelCount) throw ParseError("model file: bad class code");
    m.classes.push_back(static_cast<RelationshipLabel>(code));
  }
  // Validate the geometry and get reference tensor shapes.
  ClassifierModel expected;
  try {
    expected = ClassifierModel::create(s, m.classes, m.dropout, 0);
  } catch (const std::exception& e) {
    throw ParseError(std::string("model file: inconsistent architecture: ") + e.what());
  }
  auto params = m.parameters();
  const auto ref = expected.parameters();
  if (r.u32() != params.size() + 2) throw ParseError("model file: unexpected tensor count");
  for (std::size_t p = 0; p < params.size(); ++p) {
    *params[p] = get_tensor(r);
    if (params[p]->shape != ref[p]->shape) throw ParseError("model file: tensor shape mismatch");
  }
  auto shift = get_tensor(r);
  auto scale = get_tensor(r);
  if (shift.size() != s.pair_dim || scale.size() != s.pair_dim) {
    throw ParseError("model file: standardization size mismatch");
  }
  m.pair_shift = std::move(shift.data);
  m.pair_scale = std::move(scale.data);
  if (!r.done()) throw ParseError("model file: trailing bytes");
  return m;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_model(model));
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_model(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace bookrel
