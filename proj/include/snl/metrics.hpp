#pragma once
// Training diagnostics: clean/noisy strata statistics, per-example update
// norm ratios, SAM logit up-weighting, the closed-form toy test accuracy, and
// the per-epoch CSV trace.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "snl/dataset.hpp"
#include "snl/models.hpp"
#include "snl/optim.hpp"
#include "snl/synthdata.hpp"

namespace snl {

struct StratumStats {
  std::size_t count = 0;
  double loss = 0.0;        // mean loss against the observed label
  double accuracy = 0.0;    // agreement with the observed label
  double logit_scale = 0.0; // mean logit-scale norm
};

struct StratifiedStats {
  StratumStats clean;
  StratumStats noisy;
  double acc_gap() const { return clean.accuracy - noisy.accuracy; }
};

// Statistics of the examples with clean[i] == want_clean; nullopt when there are none.
std::optional<StratumStats> stratum_stats(const Model& model, const LabeledDataset& data, bool want_clean);

// Both strata. Noisy accuracy counts predictions equal to the corrupted label.
// Throws EmptyStratum when either stratum is empty.
StratifiedStats stratified_stats(const Model& model, const LabeledDataset& data);

// Fraction of examples whose prediction matches the observed label.
double accuracy(const Model& model, const LabeledDataset& data);

// Mean norm of the rule's per-example update term over clean examples divided
// by the same mean over noisy examples, both restricted to `indices` (all
// examples when empty). NSAM uses the shared perturbation of those examples.
double grad_norm_ratio(const Model& model, const LabeledDataset& data, const OptimConfig& rule,
                       std::span<const std::size_t> indices = {});

// ||g(w + eps)|| / ||g(w)|| for the logit scale g and the example's 1-SAM
// perturbation eps. Throws DegenerateGradient for a zero gradient.
double logit_upweight_ratio(const Model& model, std::span<const double> x, std::int64_t label, double rho);

// Mean logit_upweight_ratio over the clean (first) and noisy (second) examples
// of `indices`; examples with a zero gradient are skipped. nullopt for an empty stratum.
std::pair<std::optional<double>, std::optional<double>> mean_upweight_ratios(
    const Model& model, const LabeledDataset& data, double rho, std::span<const std::size_t> indices);

// Mean ||z|| of the hidden activations over the dataset.
double mean_activation_norm(const Model& model, const LabeledDataset& data);

// Standard normal CDF.
double normal_cdf(double x);

// Population test accuracy of the linear classifier sign(<w, x>) on the toy
// distribution. Throws UndefinedAccuracy for w = 0.
double closed_form_toy_accuracy(std::span<const double> w, const ToyDataConfig& config);

struct MetricRecord {
  std::size_t epoch = 0;
  std::optional<double> train_acc_clean;
  std::optional<double> train_acc_noisy;
  std::optional<double> train_loss_clean;
  std::optional<double> train_loss_noisy;
  std::optional<double> test_acc;
  std::optional<double> best_test_acc;
  std::optional<double> closed_form_acc;
  std::optional<double> grad_ratio;
  std::optional<double> logit_ratio_clean;
  std::optional<double> logit_ratio_noisy;
  std::optional<double> act_norm;
  std::optional<double> v_norm;
  std::optional<double> acc_gap;
};

class MetricTrace {
 public:
  MetricTrace(std::string rule, double rho, double lr, std::uint64_t seed)
      : rule_(std::move(rule)), rho_(rho), lr_(lr), seed_(seed) {}

  // Appends a record, filling best_test_acc with the running maximum.
  void append(MetricRecord r);

  const std::vector<MetricRecord>& records() const noexcept { return records_; }
  const std::string& rule() const noexcept { return rule_; }
  double rho() const noexcept { return rho_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Best test accuracy and the first epoch reaching it; nullopt without test data.
  std::optional<std::pair<double, std::size_t>> best() const;
  const MetricRecord* at_epoch(std::size_t epoch) const;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;

  static const char* csv_header();

 private:
  std::string rule_;
  double rho_;
  double lr_;
  std::uint64_t seed_;
  std::optional<double> best_;
  std::vector<MetricRecord> records_;
};

// Shortest round-trip decimal form of v.
std::string format_double(double v);

}  // namespace snl
