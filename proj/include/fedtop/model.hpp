#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedtop {

// Flat parameter vector in canonical layout: layers in forward order, each
// layer's weights (row-major, one row per output unit) followed by its biases.
// Aggregation, masks, the federation wire format, and the file format all
// assume this layout.
using ParamVector = std::vector<double>;

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };

struct ModelSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims;  // empty = softmax regression
  int num_classes = 2;
  Activation activation = Activation::relu;

  void validate() const;
  std::size_t param_count() const;
  // (fan_in, fan_out) per affine layer, forward order.
  std::vector<std::pair<int, int>> layer_shapes() const;

  bool operator==(const ModelSpec&) const = default;
};

struct TrainableMask {
  std::vector<std::uint8_t> flags;  // 1 = trainable, one per parameter

  std::size_t size() const { return flags.size(); }
  bool trainable(std::size_t i) const { return flags[i] != 0; }
  std::size_t trainable_count() const;
  std::size_t frozen_count() const { return size() - trainable_count(); }

  bool operator==(const TrainableMask&) const = default;
};

TrainableMask all_trainable_mask(const ModelSpec& spec);
// Transfer-extension default: freeze every layer except the final affine one.
TrainableMask last_layer_mask(const ModelSpec& spec);

// Fraction of frozen parameters; the payload-only communication saving.
double communication_reduction(const TrainableMask& mask);

struct LossValue {
  double data_loss = 0.0;
  double proximal_loss = 0.0;
  double total = 0.0;
};

// Sample-major views into a feature matrix (n x input_dim) and its labels.
struct Batch {
  std::span<const double> features;
  std::span<const int> labels;
  std::size_t size() const { return labels.size(); }
};

ParamVector init_model(const ModelSpec& spec, std::uint64_t seed);

// Returns n x num_classes log-probabilities, row-major. Each row is a
// normalized log-softmax: exp-row-sum == 1 up to 1e-9.
std::vector<double> forward_logprobs(const ParamVector& params, const ModelSpec& spec,
                                     std::span<const double> features,
                                     std::size_t n_samples);

// Mean over samples of -logprob[row][label].
double nll_loss(std::span<const double> logprobs, int num_classes,
                std::span<const int> labels);

// (mu/2) * ||local - anchor||^2 over the full vector.
double proximal_term(const ParamVector& local, const ParamVector& global_anchor,
                     double mu);

LossValue total_loss(const ParamVector& local, const ModelSpec& spec, const Batch& batch,
                     const ParamVector& global_anchor, double mu);

// Analytic gradient of total_loss w.r.t. local. Frozen coordinates are exactly
// zero; trainable ones carry the data term plus mu * (local - anchor).
ParamVector gradient(const ParamVector& local, const ModelSpec& spec, const Batch& batch,
                     const ParamVector& global_anchor, double mu,
                     const TrainableMask& mask);

std::vector<double> trainable_slice(const ParamVector& params, const TrainableMask& mask);
void scatter_trainable(ParamVector& dst, const TrainableMask& mask,
                       std::span<const double> slice);

}  // namespace fedtop
