#include <fstream>
#include <sstream>

#include "json.hpp"

#include "snl/error.hpp"
#include "snl/runner.hpp"

namespace snl {

using nlohmann::json;

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

DataKind kind_from_string(const std::string& s) {
  if (s == "toy") return DataKind::Toy;
  if (s == "mixture") return DataKind::Mixture;
  if (s == "file") return DataKind::File;
  throw InvalidArgument("unknown data kind '" + s + "'");
}

const char* to_string(DataKind k) {
  switch (k) {
    case DataKind::Toy: return "toy";
    case DataKind::Mixture: return "mixture";
    case DataKind::File: return "file";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw InvalidArgument("unknown activation '" + s + "'");
}

void read_data(const json& j, DataSpec& d) {
  if (j.contains("kind")) d.kind = kind_from_string(j.at("kind").get<std::string>());
  auto& t = d.toy;
  auto& m = d.mixture;
  if (d.kind == DataKind::Toy) {
    take(j, "signal_b", t.signal_b);
    take(j, "gamma", t.gamma);
    take(j, "dim", t.dim);
    take(j, "noise_rate", t.noise_rate);
    take(j, "n_train", t.n_train);
    take(j, "n_test", t.n_test);
  } else if (d.kind == DataKind::Mixture) {
    take(j, "num_classes", m.num_classes);
    take(j, "dim", m.dim);
    take(j, "separation", m.separation);
    take(j, "noise", m.noise);
    take(j, "noise_rate", m.noise_rate);
    take(j, "n_train", m.n_train);
    take(j, "n_test", m.n_test);
    take(j, "geometry_seed", m.geometry_seed);
  } else {
    take(j, "format", d.format);
    if (j.contains("train")) d.train = j.at("train").get<std::string>();
    if (j.contains("train_labels")) d.train_labels = j.at("train_labels").get<std::string>();
    if (j.contains("test")) d.test = j.at("test").get<std::string>();
    if (j.contains("test_labels")) d.test_labels = j.at("test_labels").get<std::string>();
    take(j, "noise_rate", d.noise_rate);
    take(j, "normalize", d.normalize);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (eval_every < 1) throw InvalidArgument("eval_every must be >= 1");
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
  optim.validate();
  if (data.kind == DataKind::Toy) data.toy.validate();
  if (data.kind == DataKind::Mixture) data.mixture.validate();
  if (data.kind == DataKind::File && data.train.empty()) throw InvalidArgument("file data needs a train path");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid config JSON: ") + e.what(), e.byte);
  }
  try {
    if (j.contains("data")) read_data(j.at("data"), c.data);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.contains("family")) c.model.family = family_from_string(m.at("family").get<std::string>());
      take(m, "hidden", c.model.hidden);
      if (m.contains("init")) {
        const auto init = m.at("init").get<std::string>();
        if (init != "normal" && init != "fan_in") throw InvalidArgument("unknown init '" + init + "'");
        c.model.fan_in = init == "fan_in";
      }
      take(m, "init_std", c.model.init_std);
      if (m.contains("activation")) c.model.activation = activation_from_string(m.at("activation").get<std::string>());
    }
    if (j.contains("optim")) {
      const auto& o = j.at("optim");
      if (o.contains("rule")) c.optim.rule = rule_from_string(o.at("rule").get<std::string>());
      take(o, "lr", c.optim.lr);
      take(o, "rho", c.optim.rho);
      take(o, "weight_decay", c.optim.weight_decay);
      take(o, "gamma_z", c.optim.gamma_z);
      take(o, "gamma_v", c.optim.gamma_v);
      take(o, "batch_size", c.optim.batch_size);
      take(o, "full_batch", c.optim.full_batch);
    }
    take(j, "epochs", c.epochs);
    take(j, "eval_every", c.eval_every);
    take(j, "seeds", c.seeds);
    take(j, "probe_size", c.probe_size);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      take(s, "rho", c.rho_grid);
      take(s, "gamma", c.gamma_grid);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad config value: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json data{{"kind", to_string(c.data.kind)}};
  if (c.data.kind == DataKind::Toy) {
    const auto& t = c.data.toy;
    data.update({{"signal_b", t.signal_b}, {"gamma", t.gamma}, {"dim", t.dim}, {"noise_rate", t.noise_rate},
                 {"n_train", t.n_train}, {"n_test", t.n_test}});
  } else if (c.data.kind == DataKind::Mixture) {
    const auto& m = c.data.mixture;
    data.update({{"num_classes", m.num_classes}, {"dim", m.dim}, {"separation", m.separation}, {"noise", m.noise},
                 {"noise_rate", m.noise_rate}, {"n_train", m.n_train}, {"n_test", m.n_test},
                 {"geometry_seed", m.geometry_seed}});
  } else {
    data.update({{"format", c.data.format}, {"train", c.data.train.string()},
                 {"train_labels", c.data.train_labels.string()}, {"test", c.data.test.string()},
                 {"test_labels", c.data.test_labels.string()}, {"noise_rate", c.data.noise_rate},
                 {"normalize", c.data.normalize}});
  }
  json j{
      {"data", data},
      {"model",
       {{"family", to_string(c.model.family)},
        {"hidden", c.model.hidden},
        {"init", c.model.fan_in ? "fan_in" : "normal"},
        {"init_std", c.model.init_std},
        {"activation", c.model.activation == Activation::ReLU ? "relu" : "identity"}}},
      {"optim",
       {{"rule", to_string(c.optim.rule)},
        {"lr", c.optim.lr},
        {"rho", c.optim.rho},
        {"weight_decay", c.optim.weight_decay},
        {"gamma_z", c.optim.gamma_z},
        {"gamma_v", c.optim.gamma_v},
        {"batch_size", c.optim.batch_size},
        {"full_batch", c.optim.full_batch}}},
      {"epochs", c.epochs},
      {"eval_every", c.eval_every},
      {"seeds", c.seeds},
      {"probe_size", c.probe_size},
      {"out", c.out.string()},
  };
  if (!c.rho_grid.empty()) j["sweep"]["rho"] = c.rho_grid;
  if (!c.gamma_grid.empty()) j["sweep"]["gamma"] = c.gamma_grid;
  return j.dump(2);
}

}  // namespace snl
