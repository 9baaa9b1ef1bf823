#include "fedtop/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedtop/rng.hpp"

namespace fedtop {

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("model spec: input_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("model spec: num_classes must be >= 2");
  for (int h : hidden_dims)
    if (h < 1) throw std::invalid_argument("model spec: hidden layer width must be >= 1");
}

std::vector<std::pair<int, int>> ModelSpec::layer_shapes() const {
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(num_classes);
  std::vector<std::pair<int, int>> shapes;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) shapes.emplace_back(dims[i], dims[i + 1]);
  return shapes;
}

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (auto [fan_in, fan_out] : layer_shapes())
    n += static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(fan_out);
  return n;
}

std::size_t TrainableMask::trainable_count() const {
  return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(),
                                                [](std::uint8_t f) { return f != 0; }));
}

TrainableMask all_trainable_mask(const ModelSpec& spec) {
  return TrainableMask{std::vector<std::uint8_t>(spec.param_count(), 1)};
}

TrainableMask last_layer_mask(const ModelSpec& spec) {
  TrainableMask mask{std::vector<std::uint8_t>(spec.param_count(), 0)};
  const auto shapes = spec.layer_shapes();
  auto [fan_in, fan_out] = shapes.back();
  const std::size_t last = static_cast<std::size_t>(fan_in + 1) * fan_out;
  std::fill(mask.flags.end() - static_cast<std::ptrdiff_t>(last), mask.flags.end(), 1);
  return mask;
}

double communication_reduction(const TrainableMask& mask) {
  if (mask.size() == 0) throw std::invalid_argument("communication_reduction: empty mask");
  return static_cast<double>(mask.frozen_count()) / static_cast<double>(mask.size());
}

ParamVector init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto eng = rng::engine(seed);
  ParamVector params;
  params.reserve(spec.param_count());
  for (auto [fan_in, fan_out] : spec.layer_shapes()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t layer_params =
        static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(fan_out);
    for (std::size_t i = 0; i < layer_params; ++i) params.push_back(dist(eng));
  }
  return params;
}

namespace {

void check_params(const ParamVector& params, const ModelSpec& spec, const char* what) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument(std::string(what) + ": parameter count " +
                                std::to_string(params.size()) + " does not match spec (" +
                                std::to_string(spec.param_count()) + ")");
}

double activate(double z, Activation act) {
  return act == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double activate_grad(double z, Activation act) {
  if (act == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

// z = W x + b for one affine layer stored at `off` in canonical layout.
void affine(const ParamVector& p, std::size_t off, int fan_in, int fan_out,
            const double* x, double* z) {
  const double* w = p.data() + off;
  const double* b = p.data() + off + static_cast<std::size_t>(fan_in) * fan_out;
  for (int o = 0; o < fan_out; ++o) {
    double acc = b[o];
    const double* row = w + static_cast<std::size_t>(o) * fan_in;
    for (int i = 0; i < fan_in; ++i) acc += row[i] * x[i];
    z[o] = acc;
  }
}

void log_softmax_row(double* z, int k) {
  double m = z[0];
  for (int i = 1; i < k; ++i) m = std::max(m, z[i]);
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += std::exp(z[i] - m);
  const double lse = m + std::log(s);
  for (int i = 0; i < k; ++i) z[i] -= lse;
}

}  // namespace

std::vector<double> forward_logprobs(const ParamVector& params, const ModelSpec& spec,
                                     std::span<const double> features,
                                     std::size_t n_samples) {
  spec.validate();
  check_params(params, spec, "forward");
  if (features.size() != n_samples * static_cast<std::size_t>(spec.input_dim))
    throw std::invalid_argument("forward: feature matrix shape mismatch");

  const auto shapes = spec.layer_shapes();
  std::vector<double> out(n_samples * static_cast<std::size_t>(spec.num_classes));
  std::vector<double> buf_a, buf_b;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double* x = features.data() + s * spec.input_dim;
    std::size_t off = 0;
    buf_a.assign(x, x + spec.input_dim);
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      auto [fan_in, fan_out] = shapes[l];
      buf_b.resize(static_cast<std::size_t>(fan_out));
      affine(params, off, fan_in, fan_out, buf_a.data(), buf_b.data());
      off += static_cast<std::size_t>(fan_in + 1) * fan_out;
      if (l + 1 < shapes.size())
        for (double& z : buf_b) z = activate(z, spec.activation);
      buf_a.swap(buf_b);
    }
    log_softmax_row(buf_a.data(), spec.num_classes);
    std::copy(buf_a.begin(), buf_a.end(), out.begin() + static_cast<std::ptrdiff_t>(s * spec.num_classes));
  }
  return out;
}

double nll_loss(std::span<const double> logprobs, int num_classes,
                std::span<const int> labels) {
  if (num_classes < 2) throw std::invalid_argument("nll_loss: num_classes must be >= 2");
  if (logprobs.size() != labels.size() * static_cast<std::size_t>(num_classes))
    throw std::invalid_argument("nll_loss: logprob rows do not match label count");
  if (labels.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const int y = labels[s];
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("nll_loss: label " + std::to_string(y) + " out of range");
    acc -= logprobs[s * num_classes + y];
  }
  return acc / static_cast<double>(labels.size());
}

double proximal_term(const ParamVector& local, const ParamVector& global_anchor, double mu) {
  if (local.size() != global_anchor.size())
    throw std::invalid_argument("proximal_term: vector length mismatch");
  if (mu < 0.0) throw std::invalid_argument("proximal_term: mu must be >= 0");
  double sq = 0.0;
  for (std::size_t i = 0; i < local.size(); ++i) {
    const double d = local[i] - global_anchor[i];
    sq += d * d;
  }
  return 0.5 * mu * sq;
}

LossValue total_loss(const ParamVector& local, const ModelSpec& spec, const Batch& batch,
                     const ParamVector& global_anchor, double mu) {
  LossValue loss;
  if (batch.size() > 0) {
    const auto lp = forward_logprobs(local, spec, batch.features, batch.size());
    loss.data_loss = nll_loss(lp, spec.num_classes, batch.labels);
  }
  loss.proximal_loss = proximal_term(local, global_anchor, mu);
  loss.total = loss.data_loss + loss.proximal_loss;
  return loss;
}

ParamVector gradient(const ParamVector& local, const ModelSpec& spec, const Batch& batch,
                     const ParamVector& global_anchor, double mu,
                     const TrainableMask& mask) {
  spec.validate();
  check_params(local, spec, "gradient");
  if (global_anchor.size() != local.size())
    throw std::invalid_argument("gradient: anchor length mismatch");
  if (mask.size() != local.size())
    throw std::invalid_argument("gradient: mask length mismatch");
  const std::size_t n = batch.size();
  if (batch.features.size() != n * static_cast<std::size_t>(spec.input_dim))
    throw std::invalid_argument("gradient: feature matrix shape mismatch");

  ParamVector grad(local.size(), 0.0);
  const auto shapes = spec.layer_shapes();
  const std::size_t n_layers = shapes.size();

  std::vector<std::size_t> offsets(n_layers);
  {
    std::size_t off = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      offsets[l] = off;
      off += static_cast<std::size_t>(shapes[l].first + 1) * shapes[l].second;
    }
  }

  // Per-sample forward with cached pre-activations, then backward. Batch
  // gradient is the mean, folded in at the logits.
  std::vector<std::vector<double>> acts(n_layers + 1), zs(n_layers);
  std::vector<double> delta, delta_prev;
  for (std::size_t s = 0; s < n; ++s) {
    const double* x = batch.features.data() + s * spec.input_dim;
    acts[0].assign(x, x + spec.input_dim);
    for (std::size_t l = 0; l < n_layers; ++l) {
      auto [fan_in, fan_out] = shapes[l];
      zs[l].resize(static_cast<std::size_t>(fan_out));
      affine(local, offsets[l], fan_in, fan_out, acts[l].data(), zs[l].data());
      acts[l + 1] = zs[l];
      if (l + 1 < n_layers)
        for (double& z : acts[l + 1]) z = activate(z, spec.activation);
    }

    // dL/dlogits = (softmax - onehot) / n
    std::vector<double> logits = acts[n_layers];
    log_softmax_row(logits.data(), spec.num_classes);
    const int y = batch.labels[s];
    if (y < 0 || y >= spec.num_classes)
      throw std::invalid_argument("gradient: label out of range");
    delta.resize(static_cast<std::size_t>(spec.num_classes));
    for (int c = 0; c < spec.num_classes; ++c)
      delta[static_cast<std::size_t>(c)] =
          (std::exp(logits[static_cast<std::size_t>(c)]) - (c == y ? 1.0 : 0.0)) /
          static_cast<double>(n);

    for (std::size_t l = n_layers; l-- > 0;) {
      auto [fan_in, fan_out] = shapes[l];
      double* gw = grad.data() + offsets[l];
      double* gb = gw + static_cast<std::size_t>(fan_in) * fan_out;
      const double* a_in = acts[l].data();
      for (int o = 0; o < fan_out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        double* grow = gw + static_cast<std::size_t>(o) * fan_in;
        for (int i = 0; i < fan_in; ++i) grow[i] += d * a_in[i];
        gb[o] += d;
      }
      if (l == 0) break;
      const double* w = local.data() + offsets[l];
      delta_prev.assign(static_cast<std::size_t>(fan_in), 0.0);
      for (int o = 0; o < fan_out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        const double* wrow = w + static_cast<std::size_t>(o) * fan_in;
        for (int i = 0; i < fan_in; ++i) delta_prev[static_cast<std::size_t>(i)] += wrow[i] * d;
      }
      for (int i = 0; i < fan_in; ++i)
        delta_prev[static_cast<std::size_t>(i)] *=
            activate_grad(zs[l - 1][static_cast<std::size_t>(i)], spec.activation);
      delta.swap(delta_prev);
    }
  }

  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] += mu * (local[i] - global_anchor[i]);
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!mask.trainable(i)) grad[i] = 0.0;
  return grad;
}

std::vector<double> trainable_slice(const ParamVector& params, const TrainableMask& mask) {
  if (params.size() != mask.size())
    throw std::invalid_argument("trainable_slice: mask length mismatch");
  std::vector<double> slice;
  slice.reserve(mask.trainable_count());
  for (std::size_t i = 0; i < params.size(); ++i)
    if (mask.trainable(i)) slice.push_back(params[i]);
  return slice;
}

void scatter_trainable(ParamVector& dst, const TrainableMask& mask,
                       std::span<const double> slice) {
  if (dst.size() != mask.size())
    throw std::invalid_argument("scatter_trainable: mask length mismatch");
  if (slice.size() != mask.trainable_count())
    throw std::invalid_argument("scatter_trainable: slice length mismatch");
  std::size_t j = 0;
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (mask.trainable(i)) dst[i] = slice[j++];
}

}  // namespace fedtop
