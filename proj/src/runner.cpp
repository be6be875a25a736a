#include "snl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "snl/dataset_io.hpp"
#include "snl/error.hpp"
#include "snl/rng.hpp"

namespace snl {

Split make_data(const DataSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case DataKind::Toy: {
      ToyDataConfig c = spec.toy;
      c.seed = seed;
      return sample_toy(c);
    }
    case DataKind::Mixture: {
      MixtureConfig c = spec.mixture;
      c.seed = seed;
      return sample_mixture(c);
    }
    case DataKind::File:
      break;
  }
  Split s;
  if (spec.format == "snld") {
    s.train = load_snld(spec.train);
    if (!spec.test.empty()) s.test = load_snld(spec.test);
  } else if (spec.format == "idx") {
    s.train = load_idx(spec.train, spec.train_labels);
    if (!spec.test.empty()) s.test = load_idx(spec.test, spec.test_labels);
  } else if (spec.format == "cifar") {
    s.train = load_cifar_binary(spec.train, spec.normalize);
    if (!spec.test.empty()) s.test = load_cifar_binary(spec.test, spec.normalize);
  } else {
    throw InvalidArgument("unknown data format '" + spec.format + "'");
  }
  if (spec.noise_rate > 0.0) corrupt_dataset(s.train, spec.noise_rate, seed);
  if (s.test.n > 0 && s.test.dim != s.train.dim) throw DimensionMismatch("train and test dimensions differ");
  return s;
}

Model make_model(const ModelSpec& spec, const LabeledDataset& train, std::uint64_t seed) {
  const std::size_t k = train.binary() ? 1 : train.num_classes;
  Model m;
  switch (spec.family) {
    case Family::Linear: m = Model::linear(train.dim, k); break;
    case Family::DLN2: m = Model::dln2(train.dim, spec.hidden, k); break;
    case Family::MLP: m = Model::mlp(train.dim, spec.hidden, k, spec.activation); break;
  }
  if (spec.fan_in) {
    m.init_fan_in(seed);
  } else {
    m.init_normal(spec.init_std, seed);
  }
  return m;
}

namespace {

std::vector<std::size_t> probe_indices(std::size_t n, std::size_t size, std::uint64_t seed) {
  auto idx = all_indices(n);
  if (size == 0 || size >= n) return idx;
  auto rng = make_stream(seed, streams::kProbe);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

bool has_both_strata(const LabeledDataset& d, std::span<const std::size_t> idx) {
  bool clean = false, noisy = false;
  for (auto i : idx) (d.clean[i] != 0 ? clean : noisy) = true;
  return clean && noisy;
}

MetricRecord evaluate(const ExperimentConfig& cfg, const Model& model, const Split& data,
                      std::span<const std::size_t> probe, std::size_t epoch) {
  MetricRecord r;
  r.epoch = epoch;
  const auto clean = stratum_stats(model, data.train, true);
  const auto noisy = stratum_stats(model, data.train, false);
  for (const auto* s : {&clean, &noisy}) {
    if (*s && !std::isfinite((*s)->loss)) {
      throw Diverged("non-finite training loss at epoch " + std::to_string(epoch), static_cast<int>(epoch));
    }
  }
  if (clean) {
    r.train_acc_clean = clean->accuracy;
    r.train_loss_clean = clean->loss;
  }
  if (noisy) {
    r.train_acc_noisy = noisy->accuracy;
    r.train_loss_noisy = noisy->loss;
  }
  if (clean && noisy) r.acc_gap = clean->accuracy - noisy->accuracy;
  if (data.test.n > 0) r.test_acc = accuracy(model, data.test);
  if (cfg.data.kind == DataKind::Toy && model.family() == Family::Linear) {
    try {
      r.closed_form_acc = closed_form_toy_accuracy(model.params(), cfg.data.toy);
    } catch (const UndefinedAccuracy&) {
    }
  }
  if (has_both_strata(data.train, probe)) r.grad_ratio = grad_norm_ratio(model, data.train, cfg.optim, probe);
  const auto [lc, ln] = mean_upweight_ratios(model, data.train, cfg.optim.rho, probe);
  r.logit_ratio_clean = lc;
  r.logit_ratio_noisy = ln;
  if (model.has_hidden()) {
    r.act_norm = mean_activation_norm(model, data.train);
    r.v_norm = param_norm(model.last_layer());
  }
  return r;
}

std::string trace_text(const MetricTrace& trace) {
  std::ostringstream os;
  trace.write_csv(os);
  return os.str();
}

nlohmann::json run_json(const RunResult& r) {
  return {{"tag", run_tag(r.optim, r.seed)},
          {"rule", to_string(r.optim.rule)},
          {"rho", r.optim.rho},
          {"lr", r.optim.lr},
          {"gamma_z", r.optim.gamma_z},
          {"gamma_v", r.optim.gamma_v},
          {"seed", r.seed},
          {"best_test_acc", r.best_test_acc},
          {"best_epoch", r.best_epoch},
          {"csv", r.csv.filename().string()}};
}

void write_summary(const ExperimentConfig& cfg, const std::vector<RunResult>& runs) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) j["runs"].push_back(run_json(r));
  write_atomic(cfg.out / "summary.json", j.dump(2) + "\n");
}

void save_trace(const ExperimentConfig& cfg, RunResult& r) {
  if (cfg.out.empty()) return;
  r.csv = cfg.out / (run_tag(r.optim, r.seed) + ".csv");
  write_atomic(r.csv, trace_text(r.trace));
}

}  // namespace

std::string run_tag(const OptimConfig& o, std::uint64_t seed) {
  std::string tag = std::string(to_string(o.rule)) + "_rho" + format_double(o.rho);
  if (o.rule == Rule::REGSGD) tag += "_gz" + format_double(o.gamma_z) + "_gv" + format_double(o.gamma_v);
  return tag + "_seed" + std::to_string(seed);
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << text;
    os.flush();
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

RunResult train_one(const ExperimentConfig& cfg, const Split& data, std::uint64_t seed) {
  cfg.validate();
  const auto& train = data.train;
  if (train.n == 0) throw InvalidArgument("empty training set");
  RunResult res{MetricTrace(to_string(cfg.optim.rule), cfg.optim.rho, cfg.optim.lr, seed),
                make_model(cfg.model, train, seed), seed, cfg.optim, 0.0, 0, {}};
  Model& model = res.model;
  Optimizer opt(cfg.optim, model);

  const std::size_t batch = cfg.optim.full_batch ? train.n : std::min(cfg.optim.batch_size, train.n);
  auto order = all_indices(train.n);
  auto shuffle_rng = make_stream(seed, streams::kShuffle);
  const auto probe = probe_indices(train.n, cfg.probe_size, seed);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (!cfg.optim.full_batch) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t lo = 0; lo < train.n; lo += batch) {
      const std::size_t hi = std::min(train.n, lo + batch);
      opt.step(model, train, std::span<const std::size_t>(order.data() + lo, hi - lo));
    }
    for (double p : model.params()) {
      if (!std::isfinite(p)) {
        throw Diverged("non-finite parameters at epoch " + std::to_string(epoch), static_cast<int>(epoch));
      }
    }
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      res.trace.append(evaluate(cfg, model, data, probe, epoch));
    }
  }
  if (const auto best = res.trace.best()) {
    res.best_test_acc = best->first;
    res.best_epoch = best->second;
  }
  return res;
}

std::vector<RunResult> run(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunResult> out;
  for (auto seed : cfg.seeds) {
    const Split data = make_data(cfg.data, seed);
    out.push_back(train_one(cfg, data, seed));
    save_trace(cfg, out.back());
  }
  if (!cfg.out.empty()) write_summary(cfg, out);
  return out;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<OptimConfig> points;
  if (!cfg.rho_grid.empty()) {
    for (double rho : cfg.rho_grid) {
      OptimConfig o = cfg.optim;
      o.rho = rho;
      points.push_back(o);
    }
  } else if (!cfg.gamma_grid.empty()) {
    for (auto [gz, gv] : cfg.gamma_grid) {
      OptimConfig o = cfg.optim;
      o.gamma_z = gz;
      o.gamma_v = gv;
      points.push_back(o);
    }
  } else {
    throw InvalidArgument("sweep needs a nonempty rho or gamma grid");
  }

  std::vector<RunResult> runs;
  std::vector<SweepRow> rows(points.size());
  std::vector<std::vector<double>> best(points.size());
  for (auto seed : cfg.seeds) {
    const Split data = make_data(cfg.data, seed);
    for (std::size_t p = 0; p < points.size(); ++p) {
      ExperimentConfig one = cfg;
      one.optim = points[p];
      runs.push_back(train_one(one, data, seed));
      save_trace(one, runs.back());
      best[p].push_back(runs.back().best_test_acc);
    }
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    auto& row = rows[p];
    row.rule = points[p].rule;
    row.rho = points[p].rho;
    row.gamma_z = points[p].gamma_z;
    row.gamma_v = points[p].gamma_v;
    row.seeds = best[p].size();
    for (double b : best[p]) row.mean_best += b;
    row.mean_best /= static_cast<double>(row.seeds);
    if (row.seeds > 1) {
      double ss = 0.0;
      for (double b : best[p]) ss += (b - row.mean_best) * (b - row.mean_best);
      row.std_best = std::sqrt(ss / static_cast<double>(row.seeds - 1));
    }
  }

  if (!cfg.out.empty()) {
    write_summary(cfg, runs);
    std::ostringstream os;
    os << "rule,rho,gamma_z,gamma_v,mean_best_test_acc,std_best_test_acc,seeds\n";
    for (const auto& r : rows) {
      os << to_string(r.rule) << ',' << format_double(r.rho) << ',' << format_double(r.gamma_z) << ','
         << format_double(r.gamma_v) << ',' << format_double(r.mean_best) << ',' << format_double(r.std_best) << ','
         << r.seeds << '\n';
    }
    write_atomic(cfg.out / "sweep.csv", os.str());
  }
  return rows;
}

bool verify(std::ostream& os, const std::filesystem::path& out) {
  const auto reports = run_oracle_suite();
  print_reports(os, reports);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_reports_json(out / "oracle.json", reports);
  }
  return std::all_of(reports.begin(), reports.end(), [](const OracleReport& r) { return r.pass; });
}

}  // namespace snl
