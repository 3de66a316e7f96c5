#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bookrel/label.hpp"
#include "bookrel/rng.hpp"
#include "bookrel/simmat.hpp"

namespace bookrel {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t size() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Layer sizes. matrix_size and pair_dim are taken from the data at training time.
///
///   matrix S x S -> conv kxk (conv1_filters) -> ReLU -> maxpool 2x2
///                -> conv kxk (conv2_filters) -> ReLU -> maxpool 2x2 -> flatten -> dropout
///   pair features (pair_dim) -> dense(pair_hidden) -> ReLU -> dropout
///   concat -> dense(merge_hidden) -> ReLU -> dense(|classes|) -> softmax
struct ModelShape {
  std::size_t matrix_size = kDefaultMatrixSize;
  std::size_t pair_dim = 0;
  std::size_t conv1_filters = 8;
  std::size_t conv2_filters = 16;
  std::size_t kernel = 3;
  std::size_t pair_hidden = 32;
  std::size_t merge_hidden = 64;

  /// Length of the flattened conv branch output.
  std::size_t flatten_size() const;
  bool operator==(const ModelShape&) const = default;
};

struct DropoutRates {
  double conv = 0.5;
  double pair = 0.25;
  bool operator==(const DropoutRates&) const = default;
};

class ClassifierModel {
 public:
  ModelShape shape;
  DropoutRates dropout;
  std::vector<RelationshipLabel> classes;
  std::uint64_t seed = 0;

  Tensor conv1_w, conv1_b;
  Tensor conv2_w, conv2_b;
  Tensor pair_w, pair_b;
  Tensor merge_w, merge_b;
  Tensor out_w, out_b;

  // Fixed per-feature standardization of the pair input, fitted on training
  // data: x' = (x - pair_shift) * pair_scale.
  std::vector<double> pair_shift;
  std::vector<double> pair_scale;

  /// Glorot-uniform weights and zero biases drawn from `seed`, stored at
  /// float32 precision so that model files round-trip exactly.
  static ClassifierModel create(const ModelShape& shape, std::vector<RelationshipLabel> classes,
                                const DropoutRates& dropout, std::uint64_t seed);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  static std::vector<std::string> parameter_names();
  std::size_t parameter_count() const;

  std::optional<std::size_t> class_index(RelationshipLabel label) const;

  /// Rounds all weights and standardization constants to float32.
  void round_to_float();

  bool operator==(const ClassifierModel&) const = default;
};

/// Gradient tensors in ClassifierModel::parameters() order.
struct Gradients {
  std::vector<Tensor> tensors;

  static Gradients zeros_like(const ClassifierModel& model);
  void scale(double factor);
};

/// Intermediate activations of one forward pass, needed by backward().
struct ForwardTrace {
  std::vector<double> input;
  std::vector<double> conv1, act1, pool1;
  std::vector<std::uint32_t> pool1_arg;
  std::vector<double> conv2, act2, pool2;
  std::vector<std::uint32_t> pool2_arg;
  std::vector<double> flat_mask, flat;
  std::vector<double> pair_in, pair_pre, pair_mask, pair_act;
  std::vector<double> merged, merge_pre, merge_act;
  std::vector<double> logits, probs;
};

/// Full forward pass. Dropout is applied only when `train_mode` is set, using
/// `rng` (required in train mode). Throws ValidationError on shape mismatch.
ForwardTrace forward_trace(const ClassifierModel& model, const SimilarityMatrix& matrix,
                           const PairFeatures& pair, bool train_mode, Rng* rng);

/// Class probabilities (softmax output).
std::vector<double> forward(const ClassifierModel& model, const SimilarityMatrix& matrix,
                            const PairFeatures& pair, bool train_mode = false, Rng* rng = nullptr);

/// Cross-entropy of the trace's prediction against class `target`, times `weight`.
double cross_entropy(const ForwardTrace& trace, std::size_t target, double weight = 1.0);

/// Accumulates loss_scale * dLoss/dParam into `grads`.
void backward(const ClassifierModel& model, const ForwardTrace& trace, std::size_t target,
              double loss_scale, Gradients& grads);

/// Convenience: eval-mode forward then backward for one example.
Gradients compute_gradients(const ClassifierModel& model, const PairExample& example,
                            double loss_scale = 1.0);

struct TrainConfig {
  std::size_t epochs = 12;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  DropoutRates dropout;
  std::uint64_t seed = 0;
  std::vector<double> class_weights;  // empty: all 1
  ModelShape architecture;            // matrix_size/pair_dim overwritten from data

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochStats> history;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on class-weighted
/// cross-entropy. Examples are visited in a seeded shuffle each epoch; the
/// result is a pure function of (dataset order, classes, config).
TrainResult train(std::span<const PairExample> dataset, std::span<const RelationshipLabel> classes,
                  const TrainConfig& config);

struct Prediction {
  RelationshipLabel label = RelationshipLabel::DIFF;
  std::size_t index = 0;
  std::vector<double> probabilities;
};

/// Index of the largest value; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

Prediction predict(const ClassifierModel& model, const PairExample& example);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Denominator floor for relative gradient error, so near-zero gradients
/// are compared in absolute terms.
inline constexpr double kGradientErrorFloor = 1e-6;

/// Central finite differences of the loss for every parameter element,
/// compared with backward(). When `dropout_seed` is set, the check runs in
/// train mode with the same dropout masks for every evaluation.
GradientCheckResult gradient_check(const ClassifierModel& model, const PairExample& example,
                                   double eps, std::optional<std::uint64_t> dropout_seed = std::nullopt);

/// Model file: "BRCM" magic, u32 version, architecture, dropout, seed,
/// class list, then each tensor as u32 rank, u32 dims, little-endian f32 data.
std::string encode_model(const ClassifierModel& model);
ClassifierModel decode_model(std::string_view bytes);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace bookrel
