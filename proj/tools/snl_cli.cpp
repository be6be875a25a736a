// snl: generate data, train, sweep and verify from the command line.
//
//   snl gen-data --config toy.json --seed 3 --out data/
//   snl train    --config toy.json --rule sam1 --rho 0.12 --seeds 0 1 2 --out runs/
//   snl sweep    --config toy.json --rho-grid 0 0.06 0.12 0.18 --out sweep/
//   snl verify   --out report/

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "snl/dataset_io.hpp"
#include "snl/error.hpp"
#include "snl/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> rule;
  std::optional<std::string> family;
  std::optional<double> rho, lr;
  std::optional<std::size_t> epochs, eval_every, probe_size;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::vector<double> rho_grid;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--rule", f.rule, "sgd | nsam | sam1 | lsam | jsam | regsgd");
  cmd->add_option("--family", f.family, "linear | dln2 | mlp");
  cmd->add_option("--rho", f.rho, "perturbation radius");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--eval-every", f.eval_every, "epochs between evaluations");
  cmd->add_option("--seed", f.seed, "single seed");
  cmd->add_option("--seeds", f.seeds, "list of seeds");
  cmd->add_option("--probe-size", f.probe_size, "examples used for ratio metrics");
  cmd->add_option("--out", f.out, "output directory");
}

// flags > file > defaults
snl::ExperimentConfig resolve(const Flags& f) {
  snl::ExperimentConfig c = f.config.empty() ? snl::ExperimentConfig{} : snl::load_config(f.config);
  if (f.rule) c.optim.rule = snl::rule_from_string(*f.rule);
  if (f.family) c.model.family = snl::family_from_string(*f.family);
  if (f.rho) c.optim.rho = *f.rho;
  if (f.lr) c.optim.lr = *f.lr;
  if (f.epochs) c.epochs = *f.epochs;
  if (f.eval_every) c.eval_every = *f.eval_every;
  if (f.probe_size) c.probe_size = *f.probe_size;
  if (f.seed) c.seeds = {*f.seed};
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (!f.rho_grid.empty()) {
    c.rho_grid = f.rho_grid;
    c.gamma_grid.clear();
  }
  if (f.out) c.out = *f.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharpness-aware training under label noise"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("gen-data", "write train.snld and test.snld for the first seed");
  add_common(gen, f);
  auto* train = app.add_subcommand("train", "train one model per seed and write traces");
  add_common(train, f);
  auto* sweep = app.add_subcommand("sweep", "train over a rho or gamma grid");
  add_common(sweep, f);
  sweep->add_option("--rho-grid", f.rho_grid, "rho values (overrides the config grid)");
  auto* verify = app.add_subcommand("verify", "run the oracle checks");
  verify->add_option("--out", f.out, "directory for oracle.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) {
      return snl::verify(std::cout, f.out.value_or("")) ? 0 : 1;
    }
    const auto cfg = resolve(f);
    if (*gen) {
      const auto split = snl::make_data(cfg.data, cfg.seeds.front());
      std::filesystem::create_directories(cfg.out);
      snl::save_snld(cfg.out / "train.snld", split.train);
      snl::save_snld(cfg.out / "test.snld", split.test);
      std::cout << "wrote " << split.train.n << " train and " << split.test.n << " test examples to "
                << cfg.out.string() << '\n';
    } else if (*train) {
      for (const auto& r : snl::run(cfg)) {
        std::cout << snl::run_tag(r.optim, r.seed) << ": best test acc " << r.best_test_acc << " at epoch "
                  << r.best_epoch << '\n';
      }
    } else if (*sweep) {
      for (const auto& r : snl::sweep(cfg)) {
        std::cout << snl::to_string(r.rule) << " rho=" << r.rho << " gamma_z=" << r.gamma_z
                  << " gamma_v=" << r.gamma_v << ": mean best " << r.mean_best << " (sd " << r.std_best << ", "
                  << r.seeds << " seeds)\n";
      }
    }
  } catch (const snl::Diverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
