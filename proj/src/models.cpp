#include "snl/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "snl/error.hpp"
#include "snl/kernels.hpp"
#include "snl/rng.hpp"

namespace snl {

const char* to_string(Family f) noexcept {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::DLN2: return "dln2";
    case Family::MLP: return "mlp";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "linear") return Family::Linear;
  if (s == "dln2" || s == "dln") return Family::DLN2;
  if (s == "mlp") return Family::MLP;
  throw InvalidArgument("unknown model family '" + s + "'");
}

Model::Model(Family f, Activation a, std::size_t dim, std::size_t hidden, std::size_t outputs)
    : family_(f), act_(a), dim_(dim), hidden_(hidden), outputs_(outputs) {
  if (dim == 0) throw InvalidArgument("model input dimension must be positive");
  if (outputs == 0) throw InvalidArgument("model needs at least one output");
  if (f != Family::Linear && hidden == 0) throw InvalidArgument("hidden width must be positive");
  params_.assign(first_size() + last_size(), 0.0);
}

Model Model::linear(std::size_t dim, std::size_t outputs) {
  return Model(Family::Linear, Activation::Identity, dim, 0, outputs);
}

Model Model::dln2(std::size_t dim, std::size_t hidden, std::size_t outputs) {
  return Model(Family::DLN2, Activation::Identity, dim, hidden, outputs);
}

Model Model::mlp(std::size_t dim, std::size_t hidden, std::size_t outputs, Activation act) {
  return Model(Family::MLP, act, dim, hidden, outputs);
}

void Model::init_normal(double std, std::uint64_t seed) {
  if (!(std >= 0.0)) throw InvalidArgument("init std must be >= 0");
  if (std == 0.0) {
    std::fill(params_.begin(), params_.end(), 0.0);
    return;
  }
  auto rng = make_stream(seed, streams::kInit);
  std::normal_distribution<double> g(0.0, std);
  for (auto& p : params_) p = g(rng);
}

void Model::init_fan_in(std::uint64_t seed) {
  auto rng = make_stream(seed, streams::kInit);
  std::normal_distribution<double> g(0.0, 1.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(dim_));
  for (auto& p : first_layer()) p = s1 * g(rng);
  if (has_hidden()) {
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (auto& p : last_layer()) p = s2 * g(rng);
  }
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Workspace::Workspace(const Model& m) {
  acts.logits.resize(m.output_dim());
  if (m.has_hidden()) {
    acts.pre.resize(m.hidden_dim());
    acts.hidden.resize(m.hidden_dim());
    hidden_cot.resize(m.hidden_dim());
  }
  cot.resize(m.output_dim());
}

void forward(const Model& model, std::span<const double> x, Activations& acts) {
  if (x.size() != model.input_dim()) {
    throw DimensionMismatch("input has " + std::to_string(x.size()) + " features, model expects " +
                            std::to_string(model.input_dim()));
  }
  const std::size_t k = model.output_dim();
  acts.logits.resize(k);
  if (!model.has_hidden()) {
    kernels::gemv(model.first_layer().data(), k, model.input_dim(), x.data(), acts.logits.data());
    return;
  }
  const std::size_t h = model.hidden_dim();
  acts.pre.resize(h);
  acts.hidden.resize(h);
  kernels::gemv(model.first_layer().data(), h, model.input_dim(), x.data(), acts.pre.data());
  if (model.activation() == Activation::ReLU) {
    for (std::size_t j = 0; j < h; ++j) acts.hidden[j] = acts.pre[j] > 0.0 ? acts.pre[j] : 0.0;
  } else {
    std::copy(acts.pre.begin(), acts.pre.end(), acts.hidden.begin());
  }
  kernels::gemv(model.last_layer().data(), k, h, acts.hidden.data(), acts.logits.data());
}

std::vector<double> forward(const Model& model, std::span<const double> x) {
  Activations acts;
  forward(model, x, acts);
  return acts.logits;
}

namespace {

void check_label(std::span<const double> logits, std::int64_t label) {
  if (logits.size() == 1) {
    if (label != 1 && label != -1) throw InvalidArgument("binary labels must be -1 or +1");
  } else if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw InvalidArgument("class label " + std::to_string(label) + " out of range");
  }
}

double log_sum_exp(std::span<const double> f) {
  const double m = *std::max_element(f.begin(), f.end());
  double s = 0.0;
  for (double v : f) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

double loss_cotangent(std::span<const double> logits, std::int64_t label, std::span<double> cot) {
  check_label(logits, label);
  if (logits.size() == 1) {
    const double t = static_cast<double>(label);
    const double m = t * logits[0];
    cot[0] = -t * sigmoid(-m);
    return softplus(-m);
  }
  const double lse = log_sum_exp(logits);
  for (std::size_t k = 0; k < logits.size(); ++k) cot[k] = std::exp(logits[k] - lse);
  cot[static_cast<std::size_t>(label)] -= 1.0;
  return lse - logits[static_cast<std::size_t>(label)];
}

double loss_value(std::span<const double> logits, std::int64_t label) {
  check_label(logits, label);
  if (logits.size() == 1) return softplus(-static_cast<double>(label) * logits[0]);
  return log_sum_exp(logits) - logits[static_cast<std::size_t>(label)];
}

std::vector<double> logit_scale(std::span<const double> logits, std::int64_t label) {
  check_label(logits, label);
  if (logits.size() == 1) return {sigmoid(-static_cast<double>(label) * logits[0])};
  std::vector<double> g(logits.size());
  loss_cotangent(logits, label, g);
  return g;
}

std::int64_t predict(std::span<const double> logits) {
  if (logits.size() == 1) return logits[0] >= 0.0 ? 1 : -1;
  return static_cast<std::int64_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void backward(const Model& model, std::span<const double> x, const Activations& acts,
              std::span<const double> out_cot, std::span<const double> hidden_cot, double alpha,
              std::span<double> grad, bool accumulate) {
  if (grad.size() != model.param_count()) throw DimensionMismatch("gradient buffer has the wrong size");
  if (!accumulate) std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t d = model.input_dim();
  const std::size_t k = model.output_dim();
  if (!model.has_hidden()) {
    kernels::ger(alpha, out_cot.data(), k, x.data(), d, grad.data());
    return;
  }
  const std::size_t h = model.hidden_dim();
  double* g_first = grad.data();
  double* g_last = grad.data() + model.first_size();
  kernels::ger(alpha, out_cot.data(), k, acts.hidden.data(), h, g_last);

  // Cotangent of z, then of the pre-activation.
  thread_local std::vector<double> delta;
  delta.resize(h);
  kernels::gemv_t(model.last_layer().data(), k, h, out_cot.data(), delta.data());
  if (!hidden_cot.empty()) {
    for (std::size_t j = 0; j < h; ++j) delta[j] += hidden_cot[j];
  }
  if (model.activation() == Activation::ReLU) {
    for (std::size_t j = 0; j < h; ++j) {
      if (!(acts.pre[j] > 0.0)) delta[j] = 0.0;
    }
  }
  kernels::ger(alpha, delta.data(), h, x.data(), d, g_first);
}

double loss_gradient(const Model& model, std::span<const double> x, std::int64_t label, Workspace& ws,
                     std::span<double> grad) {
  forward(model, x, ws.acts);
  const double loss = loss_cotangent(ws.acts.logits, label, ws.cot);
  backward(model, x, ws.acts, ws.cot, {}, 1.0, grad, false);
  return loss;
}

std::vector<double> network_jacobian(const Model& model, std::span<const double> x) {
  Activations acts;
  forward(model, x, acts);
  const std::size_t p = model.param_count();
  const std::size_t k = model.output_dim();
  const std::size_t d = model.input_dim();
  std::vector<double> jac(k * p, 0.0);
  switch (model.family()) {
    case Family::Linear:
      // df_c/dw_c = x
      for (std::size_t c = 0; c < k; ++c) std::copy(x.begin(), x.end(), jac.begin() + static_cast<std::ptrdiff_t>(c * p + c * d));
      break;
    case Family::DLN2: {
      // df_c/dW = V_c x^T,  df_c/dV_c = z
      const std::size_t h = model.hidden_dim();
      const auto v = model.last_layer();
      for (std::size_t c = 0; c < k; ++c) {
        double* row = jac.data() + c * p;
        for (std::size_t j = 0; j < h; ++j) {
          for (std::size_t i = 0; i < d; ++i) row[j * d + i] = v[c * h + j] * x[i];
        }
        std::copy(acts.hidden.begin(), acts.hidden.end(), row + model.first_size() + c * h);
      }
      break;
    }
    case Family::MLP: {
      // One backward pass per output with a one-hot cotangent.
      std::vector<double> onehot(k, 0.0);
      for (std::size_t c = 0; c < k; ++c) {
        onehot[c] = 1.0;
        backward(model, x, acts, onehot, {}, 1.0, std::span<double>(jac.data() + c * p, p), false);
        onehot[c] = 0.0;
      }
      break;
    }
  }
  return jac;
}

std::vector<double> assemble_gradient(std::span<const double> scale, std::span<const double> jacobian,
                                      std::int64_t label, std::size_t p) {
  std::vector<double> grad(p, 0.0);
  if (scale.size() == 1) {
    const double c = -static_cast<double>(label) * scale[0];
    for (std::size_t i = 0; i < p; ++i) grad[i] = c * jacobian[i];
    return grad;
  }
  for (std::size_t k = 0; k < scale.size(); ++k) {
    const double* row = jacobian.data() + k * p;
    for (std::size_t i = 0; i < p; ++i) grad[i] += scale[k] * row[i];
  }
  return grad;
}

GradDecomp grad_decomp(const Model& model, std::span<const double> x, std::int64_t label) {
  GradDecomp out;
  const auto logits = forward(model, x);
  out.logit_scale = logit_scale(logits, label);
  out.loss = loss_value(logits, label);
  out.output = logits[0];
  out.jacobian = network_jacobian(model, x);
  out.grad = assemble_gradient(out.logit_scale, out.jacobian, label, model.param_count());
  return out;
}

double param_norm(std::span<const double> v) { return std::sqrt(kernels::sum_sq(v.data(), v.size())); }

Model perturb(const Model& model, std::span<const double> direction, double rho) {
  if (direction.size() != model.param_count()) throw DimensionMismatch("perturbation direction has the wrong size");
  const double norm = param_norm(direction);
  if (!(norm >= kDegenerateNorm)) throw DegenerateGradient("perturbation direction has zero norm");
  Model out = model;
  kernels::axpy(rho / norm, direction.data(), out.params().data(), out.param_count());
  return out;
}

}  // namespace snl
