#include "snl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snl/error.hpp"
#include "snl/kernels.hpp"
#include "snl/parallel.hpp"

namespace snl {

const char* to_string(Rule r) noexcept {
  switch (r) {
    case Rule::SGD: return "sgd";
    case Rule::NSAM: return "nsam";
    case Rule::SAM1: return "sam1";
    case Rule::LSAM: return "lsam";
    case Rule::JSAM: return "jsam";
    case Rule::REGSGD: return "regsgd";
  }
  return "?";
}

Rule rule_from_string(const std::string& s) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "sgd") return Rule::SGD;
  if (v == "nsam" || v == "n-sam") return Rule::NSAM;
  if (v == "sam1" || v == "1-sam" || v == "sam") return Rule::SAM1;
  if (v == "lsam" || v == "l-sam") return Rule::LSAM;
  if (v == "jsam" || v == "j-sam") return Rule::JSAM;
  if (v == "regsgd" || v == "reg-sgd") return Rule::REGSGD;
  throw InvalidArgument("unknown update rule '" + s + "'");
}

bool uses_rho(Rule r) noexcept { return r == Rule::NSAM || r == Rule::SAM1 || r == Rule::LSAM || r == Rule::JSAM; }

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(rho >= 0.0)) throw InvalidArgument("rho must be >= 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight decay must be >= 0");
  if (!(gamma_z >= 0.0) || !(gamma_v >= 0.0)) throw InvalidArgument("penalty weights must be >= 0");
  if (!full_batch && batch_size == 0) throw InvalidArgument("batch size must be positive");
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

Optimizer::Optimizer(OptimConfig config, const Model& shape) : config_(config) {
  config_.validate();
  if (config_.rule == Rule::REGSGD && !shape.has_hidden()) {
    throw UnsupportedModel("regularized SGD needs a model with a hidden layer");
  }
  mean_.resize(shape.param_count());
}

double Optimizer::perturbation_scale(std::span<const double> grad, double rho) {
  const double norm = param_norm(grad);
  if (!(norm >= kDegenerateNorm)) return -1.0;
  return rho / norm;
}

Optimizer::Scratch& Optimizer::scratch(std::size_t slot, const Model& model) {
  Scratch& s = scratch_[slot];
  if (s.grad.size() != model.param_count()) {
    s.here = Workspace(model);
    s.there = Workspace(model);
    s.grad.assign(model.param_count(), 0.0);
    s.shifted = model;
  }
  return s;
}

// Writes (or adds) the update term of one example. `shared` is the NSAM
// perturbed model; null for every other rule.
void Optimizer::contribute(Rule rule, const Model& model, std::span<const double> x, std::int64_t label,
                           const Model* shared, Scratch& s, std::span<double> out, bool accumulate) {
  auto& here = s.here;
  switch (rule) {
    case Rule::SGD: {
      forward(model, x, here.acts);
      loss_cotangent(here.acts.logits, label, here.cot);
      backward(model, x, here.acts, here.cot, {}, 1.0, out, accumulate);
      return;
    }
    case Rule::NSAM: {
      const Model& at = shared != nullptr ? *shared : model;
      forward(at, x, here.acts);
      loss_cotangent(here.acts.logits, label, here.cot);
      backward(at, x, here.acts, here.cot, {}, 1.0, out, accumulate);
      return;
    }
    case Rule::REGSGD: {
      forward(model, x, here.acts);
      loss_cotangent(here.acts.logits, label, here.cot);
      std::span<const double> hidden_cot;
      if (config_.gamma_z > 0.0) {
        const std::size_t h = model.hidden_dim();
        const double znorm = std::sqrt(kernels::sum_sq(here.acts.hidden.data(), h));
        // d||z||/dz = z/||z||; zero subgradient at z = 0.
        if (znorm > 0.0) {
          const double c = config_.gamma_z / znorm;
          for (std::size_t j = 0; j < h; ++j) here.hidden_cot[j] = c * here.acts.hidden[j];
          hidden_cot = here.hidden_cot;
        }
      }
      backward(model, x, here.acts, here.cot, hidden_cot, 1.0, out, accumulate);
      return;
    }
    case Rule::SAM1:
    case Rule::LSAM:
    case Rule::JSAM:
      break;
  }

  // Per-example perturbation eps = rho * g / ||g||.
  forward(model, x, here.acts);
  loss_cotangent(here.acts.logits, label, here.cot);
  backward(model, x, here.acts, here.cot, {}, 1.0, s.grad, false);
  const double scale = perturbation_scale(s.grad, config_.rho);
  if (scale < 0.0) {
    // Degenerate gradient: skip the perturbation for this example.
    if (accumulate) {
      kernels::axpy(1.0, s.grad.data(), out.data(), out.size());
    } else {
      std::copy(s.grad.begin(), s.grad.end(), out.begin());
    }
    return;
  }
  auto shifted = s.shifted.params();
  std::copy(model.params().begin(), model.params().end(), shifted.begin());
  kernels::axpy(scale, s.grad.data(), shifted.data(), shifted.size());

  auto& there = s.there;
  forward(s.shifted, x, there.acts);
  switch (rule) {
    case Rule::SAM1:
      loss_cotangent(there.acts.logits, label, there.cot);
      backward(s.shifted, x, there.acts, there.cot, {}, 1.0, out, accumulate);
      break;
    case Rule::LSAM:
      // Logit scale from the perturbed weights, Jacobian from the current ones.
      loss_cotangent(there.acts.logits, label, there.cot);
      backward(model, x, here.acts, there.cot, {}, 1.0, out, accumulate);
      break;
    case Rule::JSAM:
      // Logit scale from the current weights, Jacobian from the perturbed ones.
      backward(s.shifted, x, there.acts, here.cot, {}, 1.0, out, accumulate);
      break;
    default:
      break;
  }
}

void Optimizer::reduce(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                       const Model* shared, Rule rule, std::span<double> out) {
  const std::size_t p = model.param_count();
  const std::size_t chunks = (batch.size() + kReductionChunk - 1) / kReductionChunk;
  if (chunk_sums_.size() < chunks) chunk_sums_.resize(chunks);
  if (scratch_.size() < chunks) scratch_.resize(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    chunk_sums_[c].resize(p);
    scratch(c, model);
  }

  default_pool().run(chunks, [&](std::size_t c) {
    auto& sum = chunk_sums_[c];
    std::fill(sum.begin(), sum.end(), 0.0);
    const std::size_t lo = c * kReductionChunk;
    const std::size_t hi = std::min(batch.size(), lo + kReductionChunk);
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = batch[k];
      contribute(rule, model, data.row(i), data.observed[i], shared, scratch_[c], sum, true);
    }
  });

  std::copy(chunk_sums_[0].begin(), chunk_sums_[0].end(), out.begin());
  for (std::size_t c = 1; c < chunks; ++c) kernels::axpy(1.0, chunk_sums_[c].data(), out.data(), p);
  kernels::scal(1.0 / static_cast<double>(batch.size()), out.data(), p);
}

std::vector<double> Optimizer::shared_perturbation(const Model& model, const LabeledDataset& data,
                                                   std::span<const std::size_t> batch) {
  std::vector<double> g(model.param_count());
  reduce(model, data, batch, nullptr, Rule::SGD, g);
  const double scale = perturbation_scale(g, config_.rho);
  if (scale < 0.0) return {};
  kernels::scal(scale, g.data(), g.size());
  return g;
}

void Optimizer::mean_update(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                            std::span<double> out) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  if (data.dim != model.input_dim()) throw DimensionMismatch("dataset and model input dimensions differ");
  if (out.size() != model.param_count()) throw DimensionMismatch("update buffer has the wrong size");

  if (config_.rule == Rule::NSAM) {
    // Shared perturbation from the batch-mean gradient; degenerate mean falls back to SGD.
    reduce(model, data, batch, nullptr, Rule::SGD, out);
    const double scale = perturbation_scale(out, config_.rho);
    if (scale < 0.0) return;
    if (shared_model_.param_count() != model.param_count()) shared_model_ = model;
    auto shifted = shared_model_.params();
    std::copy(model.params().begin(), model.params().end(), shifted.begin());
    kernels::axpy(scale, out.data(), shifted.data(), shifted.size());
    reduce(model, data, batch, &shared_model_, Rule::NSAM, out);
    return;
  }

  reduce(model, data, batch, nullptr, config_.rule, out);
  if (config_.rule == Rule::REGSGD && config_.gamma_v > 0.0) {
    // d(gamma_v ||v||^2)/dv = 2 gamma_v v
    const auto v = model.last_layer();
    kernels::axpy(2.0 * config_.gamma_v, v.data(), out.data() + model.first_size(), v.size());
  }
}

void Optimizer::step(Model& model, const LabeledDataset& data, std::span<const std::size_t> batch) {
  mean_.resize(model.param_count());
  mean_update(model, data, batch, mean_);
  kernels::descent(config_.lr, config_.weight_decay, mean_.data(), model.params().data(), model.param_count());
}

void Optimizer::example_update(const Model& model, std::span<const double> x, std::int64_t label,
                               std::span<const double> shared_shift, std::span<double> out) {
  if (out.size() != model.param_count()) throw DimensionMismatch("update buffer has the wrong size");
  if (scratch_.empty()) scratch_.resize(1);
  Scratch& s = scratch(0, model);
  const Model* shared = nullptr;
  if (config_.rule == Rule::NSAM && !shared_shift.empty()) {
    if (shared_model_.param_count() != model.param_count()) shared_model_ = model;
    auto shifted = shared_model_.params();
    std::copy(model.params().begin(), model.params().end(), shifted.begin());
    kernels::axpy(1.0, shared_shift.data(), shifted.data(), shifted.size());
    shared = &shared_model_;
  }
  contribute(config_.rule, model, x, label, shared, s, out, false);
}

namespace {

Model step_with(Rule rule, const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                OptimConfig config) {
  config.rule = rule;
  Optimizer opt(config, model);
  Model out = model;
  opt.step(out, data, batch);
  return out;
}

}  // namespace

Model step_sgd(const Model& m, const LabeledDataset& d, std::span<const std::size_t> b, const OptimConfig& c) {
  return step_with(Rule::SGD, m, d, b, c);
}
Model step_nsam(const Model& m, const LabeledDataset& d, std::span<const std::size_t> b, const OptimConfig& c) {
  return step_with(Rule::NSAM, m, d, b, c);
}
Model step_sam1(const Model& m, const LabeledDataset& d, std::span<const std::size_t> b, const OptimConfig& c) {
  return step_with(Rule::SAM1, m, d, b, c);
}
Model step_lsam(const Model& m, const LabeledDataset& d, std::span<const std::size_t> b, const OptimConfig& c) {
  return step_with(Rule::LSAM, m, d, b, c);
}
Model step_jsam(const Model& m, const LabeledDataset& d, std::span<const std::size_t> b, const OptimConfig& c) {
  return step_with(Rule::JSAM, m, d, b, c);
}
Model step_regsgd(const Model& m, const LabeledDataset& d, std::span<const std::size_t> b, const OptimConfig& c) {
  return step_with(Rule::REGSGD, m, d, b, c);
}

}  // namespace snl
