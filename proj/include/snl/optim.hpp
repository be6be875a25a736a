#pragma once
// Update rules: SGD, naive SAM (one shared perturbation per batch), 1-SAM
// (one perturbation per example), logit-only SAM, Jacobian-only SAM and SGD
// with an activation-norm / last-layer-norm penalty.
//
// Every rule averages per-example update terms with the same chunked,
// index-ordered reduction, then applies w <- w - lr * (mean + decay * w).
// With rho = 0 (and zero penalties) each rule therefore reproduces SGD
// bit-for-bit.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snl/dataset.hpp"
#include "snl/models.hpp"

namespace snl {

enum class Rule { SGD, NSAM, SAM1, LSAM, JSAM, REGSGD };

const char* to_string(Rule r) noexcept;
Rule rule_from_string(const std::string& s);
// Rules whose update depends on rho.
bool uses_rho(Rule r) noexcept;

struct OptimConfig {
  Rule rule = Rule::SGD;
  double lr = 0.01;
  double rho = 0.0;
  double weight_decay = 0.0;
  double gamma_z = 0.0;
  double gamma_v = 0.0;
  std::size_t batch_size = 128;
  bool full_batch = false;

  void validate() const;
};

// Examples per reduction chunk. Fixed so results do not depend on thread count.
inline constexpr std::size_t kReductionChunk = 16;

class Optimizer {
 public:
  Optimizer(OptimConfig config, const Model& shape);

  const OptimConfig& config() const noexcept { return config_; }

  // One update on the examples `batch` of `data`.
  void step(Model& model, const LabeledDataset& data, std::span<const std::size_t> batch);

  // Mean per-example update term over the batch, before lr and weight decay.
  // Includes the last-layer penalty gradient for REGSGD.
  void mean_update(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                   std::span<double> out);

  // The rule's update term for one example, written to `out`. For NSAM,
  // `shared_shift` is the batch perturbation (empty means unperturbed).
  void example_update(const Model& model, std::span<const double> x, std::int64_t label,
                      std::span<const double> shared_shift, std::span<double> out);

  // Shared NSAM perturbation rho * g / ||g|| for the batch mean gradient g.
  // Empty when g is degenerate.
  std::vector<double> shared_perturbation(const Model& model, const LabeledDataset& data,
                                          std::span<const std::size_t> batch);

  // Per-example perturbation scale rho / ||g|| for gradient g, or a negative
  // value when ||g|| is degenerate (the perturbation is then skipped).
  static double perturbation_scale(std::span<const double> grad, double rho);

 private:
  struct Scratch {
    Workspace here;
    Workspace there;
    std::vector<double> grad;
    Model shifted;
  };

  void contribute(Rule rule, const Model& model, std::span<const double> x, std::int64_t label, const Model* shared,
                  Scratch& s, std::span<double> out, bool accumulate);
  void reduce(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
              const Model* shared, Rule rule, std::span<double> out);
  Scratch& scratch(std::size_t slot, const Model& model);

  OptimConfig config_;
  std::vector<std::vector<double>> chunk_sums_;
  std::vector<Scratch> scratch_;
  std::vector<double> mean_;
  Model shared_model_;
};

// Single-step conveniences returning the updated copy.
Model step_sgd(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
               const OptimConfig& config);
Model step_nsam(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                const OptimConfig& config);
Model step_sam1(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                const OptimConfig& config);
Model step_lsam(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                const OptimConfig& config);
Model step_jsam(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                const OptimConfig& config);
Model step_regsgd(const Model& model, const LabeledDataset& data, std::span<const std::size_t> batch,
                  const OptimConfig& config);

// Index list 0..n-1.
std::vector<std::size_t> all_indices(std::size_t n);

}  // namespace snl
