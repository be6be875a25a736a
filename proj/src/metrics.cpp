#include "snl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>

#include "snl/error.hpp"
#include "snl/kernels.hpp"
#include "snl/parallel.hpp"

namespace snl {

namespace {

constexpr std::size_t kEvalChunk = 64;

// fn(lo, hi) over fixed-size chunks of [0, n). Results are written per index
// by the caller and summed afterwards in index order.
void for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t chunks = (n + kEvalChunk - 1) / kEvalChunk;
  default_pool().run(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kEvalChunk;
    fn(lo, std::min(n, lo + kEvalChunk));
  });
}

double norm2(std::span<const double> v) { return std::sqrt(kernels::sum_sq(v.data(), v.size())); }

}  // namespace

std::optional<StratumStats> stratum_stats(const Model& model, const LabeledDataset& data, bool want_clean) {
  if (data.dim != model.input_dim()) throw DimensionMismatch("dataset and model input dimensions differ");
  std::vector<double> loss(data.n), hit(data.n), scale(data.n);
  for_chunks(data.n, [&](std::size_t lo, std::size_t hi) {
    Activations acts;
    for (std::size_t i = lo; i < hi; ++i) {
      if ((data.clean[i] != 0) != want_clean) continue;
      forward(model, data.row(i), acts);
      loss[i] = loss_value(acts.logits, data.observed[i]);
      hit[i] = predict(acts.logits) == data.observed[i] ? 1.0 : 0.0;
      scale[i] = norm2(logit_scale(acts.logits, data.observed[i]));
    }
  });
  StratumStats s;
  for (std::size_t i = 0; i < data.n; ++i) {
    if ((data.clean[i] != 0) != want_clean) continue;
    ++s.count;
    s.loss += loss[i];
    s.accuracy += hit[i];
    s.logit_scale += scale[i];
  }
  if (s.count == 0) return std::nullopt;
  const double inv = 1.0 / static_cast<double>(s.count);
  s.loss *= inv;
  s.accuracy *= inv;
  s.logit_scale *= inv;
  return s;
}

StratifiedStats stratified_stats(const Model& model, const LabeledDataset& data) {
  if (data.n == 0) throw InvalidArgument("empty dataset");
  auto clean = stratum_stats(model, data, true);
  auto noisy = stratum_stats(model, data, false);
  if (!clean) throw EmptyStratum("dataset has no clean examples");
  if (!noisy) throw EmptyStratum("dataset has no noisy examples");
  return {*clean, *noisy};
}

double accuracy(const Model& model, const LabeledDataset& data) {
  if (data.n == 0) throw InvalidArgument("empty dataset");
  if (data.dim != model.input_dim()) throw DimensionMismatch("dataset and model input dimensions differ");
  std::vector<std::uint8_t> hit(data.n);
  for_chunks(data.n, [&](std::size_t lo, std::size_t hi) {
    Activations acts;
    for (std::size_t i = lo; i < hi; ++i) {
      forward(model, data.row(i), acts);
      hit[i] = predict(acts.logits) == data.observed[i];
    }
  });
  std::size_t k = 0;
  for (auto h : hit) k += h;
  return static_cast<double>(k) / static_cast<double>(data.n);
}

double grad_norm_ratio(const Model& model, const LabeledDataset& data, const OptimConfig& rule,
                       std::span<const std::size_t> indices) {
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all = all_indices(data.n);
    indices = all;
  }
  std::vector<double> shift;
  if (rule.rule == Rule::NSAM && rule.rho > 0.0) {
    Optimizer opt(rule, model);
    shift = opt.shared_perturbation(model, data, indices);
  }
  std::vector<double> norms(indices.size());
  for_chunks(indices.size(), [&](std::size_t lo, std::size_t hi) {
    Optimizer opt(rule, model);
    std::vector<double> u(model.param_count());
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = indices[k];
      opt.example_update(model, data.row(i), data.observed[i], shift, u);
      norms[k] = norm2(u);
    }
  });
  double clean = 0.0, noisy = 0.0;
  std::size_t nc = 0, nn = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (data.clean[indices[k]] != 0) {
      clean += norms[k];
      ++nc;
    } else {
      noisy += norms[k];
      ++nn;
    }
  }
  if (nc == 0) throw EmptyStratum("no clean examples for the gradient ratio");
  if (nn == 0) throw EmptyStratum("no noisy examples for the gradient ratio");
  return (clean / static_cast<double>(nc)) / (noisy / static_cast<double>(nn));
}

double logit_upweight_ratio(const Model& model, std::span<const double> x, std::int64_t label, double rho) {
  Workspace ws(model);
  std::vector<double> grad(model.param_count());
  loss_gradient(model, x, label, ws, grad);
  const double before = norm2(logit_scale(ws.acts.logits, label));
  if (rho == 0.0) return 1.0;
  const Model shifted = perturb(model, grad, rho);
  const auto logits = forward(shifted, x);
  return norm2(logit_scale(logits, label)) / before;
}

std::pair<std::optional<double>, std::optional<double>> mean_upweight_ratios(
    const Model& model, const LabeledDataset& data, double rho, std::span<const std::size_t> indices) {
  std::vector<double> ratio(indices.size(), std::nan(""));
  for_chunks(indices.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = indices[k];
      try {
        ratio[k] = logit_upweight_ratio(model, data.row(i), data.observed[i], rho);
      } catch (const DegenerateGradient&) {
      }
    }
  });
  double sc = 0.0, sn = 0.0;
  std::size_t nc = 0, nn = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (std::isnan(ratio[k])) continue;
    if (data.clean[indices[k]] != 0) {
      sc += ratio[k];
      ++nc;
    } else {
      sn += ratio[k];
      ++nn;
    }
  }
  std::pair<std::optional<double>, std::optional<double>> out;
  if (nc > 0) out.first = sc / static_cast<double>(nc);
  if (nn > 0) out.second = sn / static_cast<double>(nn);
  return out;
}

double mean_activation_norm(const Model& model, const LabeledDataset& data) {
  if (!model.has_hidden()) throw UnsupportedModel("model has no hidden layer");
  if (data.n == 0) throw InvalidArgument("empty dataset");
  std::vector<double> norms(data.n);
  for_chunks(data.n, [&](std::size_t lo, std::size_t hi) {
    Activations acts;
    for (std::size_t i = lo; i < hi; ++i) {
      forward(model, data.row(i), acts);
      norms[i] = norm2(acts.hidden);
    }
  });
  double s = 0.0;
  for (double v : norms) s += v;
  return s / static_cast<double>(data.n);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double closed_form_toy_accuracy(std::span<const double> w, const ToyDataConfig& config) {
  if (w.size() != config.dim) throw DimensionMismatch("weight vector length differs from the toy dimension");
  const double w1 = w[0];
  const double rest = norm2(w.subspan(1));
  if (w1 == 0.0 && rest == 0.0) throw UndefinedAccuracy("accuracy of the zero classifier is undefined");
  if (rest == 0.0 || config.gamma == 0.0) {
    if (w1 > 0.0) return 1.0;
    if (w1 < 0.0) return 0.0;
    return 0.5;
  }
  const double snr = config.signal_b * std::sqrt(static_cast<double>(config.dim - 1)) * w1 / (config.gamma * rest);
  return 1.0 - normal_cdf(-snr);
}

void MetricTrace::append(MetricRecord r) {
  if (r.test_acc) best_ = best_ ? std::max(*best_, *r.test_acc) : *r.test_acc;
  r.best_test_acc = best_;
  records_.push_back(r);
}

std::optional<std::pair<double, std::size_t>> MetricTrace::best() const {
  std::optional<std::pair<double, std::size_t>> out;
  for (const auto& r : records_) {
    if (r.test_acc && (!out || *r.test_acc > out->first)) out = std::make_pair(*r.test_acc, r.epoch);
  }
  return out;
}

const MetricRecord* MetricTrace::at_epoch(std::size_t epoch) const {
  for (const auto& r : records_) {
    if (r.epoch == epoch) return &r;
  }
  return nullptr;
}

const char* MetricTrace::csv_header() {
  return "epoch,rule,rho,lr,seed,train_acc_clean,train_acc_noisy,train_loss_clean,train_loss_noisy,test_acc,"
         "best_test_acc,closed_form_acc,grad_ratio,logit_ratio_clean,logit_ratio_noisy,act_norm,v_norm,acc_gap";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void MetricTrace::write_csv(std::ostream& os) const {
  auto field = [&os](const std::optional<double>& v) {
    os << ',';
    if (v) os << format_double(*v);
  };
  os << csv_header() << '\n';
  for (const auto& r : records_) {
    os << r.epoch << ',' << rule_ << ',' << format_double(rho_) << ',' << format_double(lr_) << ',' << seed_;
    field(r.train_acc_clean);
    field(r.train_acc_noisy);
    field(r.train_loss_clean);
    field(r.train_loss_noisy);
    field(r.test_acc);
    field(r.best_test_acc);
    field(r.closed_form_acc);
    field(r.grad_ratio);
    field(r.logit_ratio_clean);
    field(r.logit_ratio_noisy);
    field(r.act_norm);
    field(r.v_norm);
    field(r.acc_gap);
    os << '\n';
  }
}

void MetricTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(os);
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace snl
