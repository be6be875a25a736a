#pragma once
// Brute-force reference checks for the analytic paths: finite differences
// against the assembled gradients, a closed-form J-SAM update for DLN2 against
// the perturb-and-recompute path, the monotone reweighting function, the
// large-rho limit of 1-SAM and the ridge limit, and the rule collapse
// identities.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "snl/dataset.hpp"
#include "snl/models.hpp"

namespace snl {

struct OracleReport {
  std::string name;
  double max_rel_err = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::size_t n = 0;
};

// ||a - b|| / max(||a||, ||b||, 1e-12)
double relative_error(std::span<const double> a, std::span<const double> b);

using GradientFn = std::function<std::vector<double>(const Model&, std::span<const double>, std::int64_t)>;

inline constexpr double kFdStep = 1e-5;

// Central differences of the loss against `grad` (grad_decomp by default) on
// random instances. MLP instances with a pre-activation within 10 * kFdStep of
// the ReLU kink are redrawn and not counted.
OracleReport fd_gradient_check(Family family, std::size_t n_instances, double tol, std::uint64_t seed = 1,
                               GradientFn grad = {});

// J-SAM per-example update on random binary DLN2 instances versus the closed
// form grad + (rho s / J) [z x^T, |x|^2 v] with s = sigma(-t f), J the joint
// Jacobian norm.
OracleReport jsam_identity_check(std::size_t n_instances, double tol = 1e-10, std::uint64_t seed = 2);

// (1 + e^z) / (1 + e^(z - c))
double reweight_factor(double z, double c);

// Strict increase of reweight_factor in z on the grid, a positive analytic
// derivative, and agreement of the library's logit up-weighting ratio with the
// factor (unit-norm linear examples). max_rel_err is the largest disagreement.
OracleReport lemma_monotonicity_check(std::span<const double> c_grid, double z_lo = -10.0, double z_hi = 10.0,
                                      std::size_t points = 1000);

// Cosine gap 1 - cos(full-batch 1-SAM update at w = 0, X^T t) for a binary
// dataset and large rho.
OracleReport asymptotic_sam_check(const LabeledDataset& data, double rho, double tol = 1e-6);

// Largest |s_i / s_j - 1| over the perturbed logit scales s_i of all examples at w = 0.
OracleReport asymptotic_scale_spread_check(const LabeledDataset& data, double rho, double tol = 1e-3);

// |mean_i t_i x_i1 - expected|; tol is three standard errors of that mean.
OracleReport first_coordinate_check(const LabeledDataset& data, double expected);

// 1 - cos((X^T X + lambda I)^-1 X^T t, X^T t / lambda) on a random n x d instance.
OracleReport ridge_limit_check(std::size_t n, std::size_t d, double lambda, double tol = 1e-6,
                               std::uint64_t seed = 3);

// rho = 0 (and zero penalties) steps of every rule against SGD for each
// family; passes only on bit equality.
OracleReport collapse_check(std::uint64_t seed = 4);

// Linear models: SAM1 vs LSAM and JSAM vs SGD, relative difference.
OracleReport linear_identity_check(double tol = 1e-12, std::uint64_t seed = 5);

// Every check above with its default tolerance, plus a mutation run that
// must make the finite-difference check fail.
std::vector<OracleReport> run_oracle_suite();

void print_reports(std::ostream& os, const std::vector<OracleReport>& reports);
void write_reports_json(const std::filesystem::path& path, const std::vector<OracleReport>& reports);

}  // namespace snl
