#pragma once
// Experiment configuration, the training loop, grid sweeps and the oracle
// entry point used by the CLI.
//
// Config files are JSON. Every key is optional; missing keys keep the
// defaults below and command-line flags override both.
//
//   {
//     "data":  {"kind": "toy" | "mixture" | "file", ...ToyDataConfig / MixtureConfig fields,
//               "format": "snld" | "idx" | "cifar", "train": PATH, "train_labels": PATH,
//               "test": PATH, "test_labels": PATH, "noise_rate": R, "normalize": BOOL},
//     "model": {"family": "linear" | "dln2" | "mlp", "hidden": H, "init": "normal" | "fan_in",
//               "init_std": S, "activation": "relu" | "identity"},
//     "optim": {"rule": NAME, "lr": ETA, "rho": RHO, "weight_decay": L, "gamma_z": GZ,
//               "gamma_v": GV, "batch_size": B, "full_batch": BOOL},
//     "epochs": E, "eval_every": K, "seeds": [..], "probe_size": P, "out": DIR,
//     "sweep": {"rho": [..]} | {"gamma": [[GZ, GV], ..]}
//   }

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snl/metrics.hpp"
#include "snl/models.hpp"
#include "snl/optim.hpp"
#include "snl/oracle.hpp"
#include "snl/synthdata.hpp"

namespace snl {

enum class DataKind { Toy, Mixture, File };

struct DataSpec {
  DataKind kind = DataKind::Toy;
  ToyDataConfig toy;
  MixtureConfig mixture;
  std::string format = "snld";
  std::filesystem::path train, train_labels, test, test_labels;
  double noise_rate = 0.0;  // corruption applied to loaded training files
  bool normalize = false;
};

struct ModelSpec {
  Family family = Family::Linear;
  std::size_t hidden = 500;
  bool fan_in = false;
  double init_std = 0.01;
  Activation activation = Activation::ReLU;
};

struct ExperimentConfig {
  DataSpec data;
  ModelSpec model;
  OptimConfig optim;
  std::size_t epochs = 200;
  std::size_t eval_every = 1;
  std::vector<std::uint64_t> seeds{0};
  std::size_t probe_size = 1000;
  std::filesystem::path out = "runs";
  std::vector<double> rho_grid;
  std::vector<std::pair<double, double>> gamma_grid;

  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
// Applies the keys present in `json_text` on top of `base`.
ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base = {});
std::string config_to_json(const ExperimentConfig& config);

// Train/test split for one seed.
Split make_data(const DataSpec& spec, std::uint64_t seed);
Model make_model(const ModelSpec& spec, const LabeledDataset& train, std::uint64_t seed);

struct RunResult {
  MetricTrace trace;
  Model model;
  std::uint64_t seed = 0;
  OptimConfig optim;
  double best_test_acc = 0.0;
  std::size_t best_epoch = 0;
  std::filesystem::path csv;
};

// Trains one model on `data` and records a trace at every eval_every-th epoch
// and at the last one. Throws Diverged on a non-finite loss or parameter.
RunResult train_one(const ExperimentConfig& config, const Split& data, std::uint64_t seed);

// One run per seed; writes <out>/<tag>.csv per run and <out>/summary.json.
std::vector<RunResult> run(const ExperimentConfig& config);

struct SweepRow {
  Rule rule = Rule::SGD;
  double rho = 0.0;
  double gamma_z = 0.0;
  double gamma_v = 0.0;
  double mean_best = 0.0;
  double std_best = 0.0;
  std::size_t seeds = 0;
};

// One run per grid point and seed (the rho grid, else the gamma grid);
// writes per-run CSVs, summary.json and sweep.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& config);

// File stem for a run's trace.
std::string run_tag(const OptimConfig& optim, std::uint64_t seed);

// Oracle suite; prints the table and writes <out>/oracle.json when out is
// non-empty. Returns true when every check passes.
bool verify(std::ostream& os, const std::filesystem::path& out = {});

// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace snl
