#include "clqa/run_config.hpp"
#include "clqa/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <initializer_list>
#include <set>
#include <stdexcept>

namespace clqa {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

QualityMap quality_map_from(const json& j) {
  check_keys(j, {"kind", "a", "b", "scale"}, "quality_map");
  QualityMap m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") {
    m.kind = QualityMap::Kind::identity;
  } else if (kind == "affine") {
    m.kind = QualityMap::Kind::affine;
  } else if (kind == "logistic") {
    m.kind = QualityMap::Kind::logistic;
  } else if (kind == "cube-root") {
    m.kind = QualityMap::Kind::cube_root;
  } else {
    throw std::invalid_argument("quality_map: unknown kind '" + kind + "'");
  }
  read(j, "a", m.a);
  read(j, "b", m.b);
  read(j, "scale", m.scale);
  return m;
}

ojson quality_map_json(const QualityMap& m) {
  return {{"kind", m.name()}, {"a", m.a}, {"b", m.b}, {"scale", m.scale}};
}

TaskSpec task_spec_from(const json& j) {
  check_keys(j,
             {"name", "n_train", "n_test", "n_clusters", "cluster_spread", "center_scale",
              "feature_dim", "quality_map", "noise_std", "relative_noise", "shift_offset"},
             "synthetic task");
  TaskSpec t;
  t.name = j.at("name").get<std::string>();
  read(j, "n_train", t.n_train);
  read(j, "n_test", t.n_test);
  read(j, "n_clusters", t.n_clusters);
  read(j, "cluster_spread", t.cluster_spread);
  read(j, "center_scale", t.center_scale);
  read(j, "feature_dim", t.feature_dim);
  if (j.contains("quality_map")) t.quality_map = quality_map_from(j.at("quality_map"));
  if (j.contains("noise_std") && !j.at("noise_std").is_null()) t.noise_std = j.at("noise_std").get<Real>();
  read(j, "relative_noise", t.relative_noise);
  if (j.contains("shift_offset")) {
    const auto v = j.at("shift_offset").get<std::vector<Real>>();
    t.shift_offset = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else {
    t.shift_offset = Vector::Zero(t.feature_dim);
  }
  return t;
}

ojson task_spec_json(const TaskSpec& t) {
  ojson j;
  j["name"] = t.name;
  j["n_train"] = t.n_train;
  j["n_test"] = t.n_test;
  j["n_clusters"] = t.n_clusters;
  j["cluster_spread"] = t.cluster_spread;
  j["center_scale"] = t.center_scale;
  j["feature_dim"] = t.feature_dim;
  j["quality_map"] = quality_map_json(t.quality_map);
  j["noise_std"] = t.noise_std ? ojson(*t.noise_std) : ojson(nullptr);
  j["relative_noise"] = t.relative_noise;
  j["shift_offset"] = std::vector<Real>(t.shift_offset.begin(), t.shift_offset.end());
  return j;
}

// Either {"preset": "default", "seed": s, "tasks": n} or a full description.
SequenceSpec sequence_spec_from(const json& j) {
  if (j.contains("preset")) {
    check_keys(j, {"preset", "seed", "tasks"}, "synthetic");
    const auto preset = j.at("preset").get<std::string>();
    if (preset != "default") throw std::invalid_argument("synthetic: unknown preset '" + preset + "'");
    return default_sequence_spec(j.value("seed", std::uint64_t{0}), j.value("tasks", std::size_t{4}));
  }
  check_keys(j, {"seed", "latent", "tasks", "max_placement_attempts"}, "synthetic");
  SequenceSpec spec;
  read(j, "seed", spec.seed);
  read(j, "max_placement_attempts", spec.max_placement_attempts);
  if (j.contains("latent")) {
    const auto& l = j.at("latent");
    check_keys(l, {"hidden", "gain", "seed"}, "synthetic.latent");
    read(l, "hidden", spec.latent.hidden);
    read(l, "gain", spec.latent.gain);
    read(l, "seed", spec.latent.seed);
  }
  for (const auto& t : j.at("tasks")) spec.tasks.push_back(task_spec_from(t));
  return spec;
}

ojson sequence_spec_json(const SequenceSpec& spec) {
  ojson j;
  j["seed"] = spec.seed;
  j["latent"] = {{"hidden", spec.latent.hidden}, {"gain", spec.latent.gain}, {"seed", spec.latent.seed}};
  j["max_placement_attempts"] = spec.max_placement_attempts;
  auto tasks = ojson::array();
  for (const auto& t : spec.tasks) tasks.push_back(task_spec_json(t));
  j["tasks"] = std::move(tasks);
  return j;
}

}  // namespace

std::vector<std::string> RunConfig::task_names() const {
  if (!data.tasks.empty()) return data.tasks;
  std::vector<std::string> names;
  if (data.synthetic) {
    for (const auto& t : data.synthetic->tasks) names.push_back(t.name);
  }
  return names;
}

void RunConfig::validate() const {
  const auto names = task_names();
  if (names.empty()) throw std::invalid_argument("config: no tasks (set data.tasks or data.synthetic)");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw std::invalid_argument("config: task '" + n + "' listed twice");
  }
  if (methods.empty()) throw std::invalid_argument("config: no methods");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  if (pairs.pairs_per_task == 0) throw std::invalid_argument("config: pairs_per_task must be positive");
  if (weighting.tau < 0) throw std::invalid_argument("config: tau must be non-negative");
  if (trunk.frozen_prefix_layers > trunk.layer_widths.size()) {
    throw std::invalid_argument("config: frozen_prefix_layers exceeds the number of layers");
  }
  train.validate();
}

RunConfig run_config_from_json(const std::string& text) {
  const json doc = json::parse(text);
  check_keys(doc, {"data", "trunk", "pairs", "train", "weighting", "output_dir", "methods", "seeds"},
             "config");
  RunConfig c;
  if (doc.contains("data")) {
    const auto& d = doc.at("data");
    check_keys(d, {"dir", "synthetic", "tasks"}, "data");
    if (d.contains("dir")) c.data.dir = d.at("dir").get<std::string>();
    if (d.contains("synthetic")) c.data.synthetic = sequence_spec_from(d.at("synthetic"));
    read(d, "tasks", c.data.tasks);
  }
  if (doc.contains("trunk")) {
    const auto& t = doc.at("trunk");
    check_keys(t, {"layer_widths", "frozen_prefix_layers"}, "trunk");
    read(t, "layer_widths", c.trunk.layer_widths);
    read(t, "frozen_prefix_layers", c.trunk.frozen_prefix_layers);
  }
  if (doc.contains("pairs")) {
    const auto& p = doc.at("pairs");
    check_keys(p, {"pairs_per_task"}, "pairs");
    read(p, "pairs_per_task", c.pairs.pairs_per_task);
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    check_keys(t,
               {"epochs", "warmup_epochs", "lr", "lr_decay_factor", "lr_decay_every", "batch_warmup",
                "batch_main", "lambda", "kmeans_k", "adam"},
               "train");
    read(t, "epochs", c.train.epochs);
    read(t, "warmup_epochs", c.train.warmup_epochs);
    read(t, "lr", c.train.lr);
    read(t, "lr_decay_factor", c.train.lr_decay_factor);
    read(t, "lr_decay_every", c.train.lr_decay_every);
    read(t, "batch_warmup", c.train.batch_warmup);
    read(t, "batch_main", c.train.batch_main);
    if (t.contains("lambda") && !t.at("lambda").is_null()) c.train.lambda = t.at("lambda").get<Real>();
    read(t, "kmeans_k", c.train.kmeans_k);
    if (t.contains("adam")) {
      const auto& a = t.at("adam");
      check_keys(a, {"beta1", "beta2", "epsilon"}, "train.adam");
      read(a, "beta1", c.train.adam.beta1);
      read(a, "beta2", c.train.adam.beta2);
      read(a, "epsilon", c.train.adam.epsilon);
    }
  }
  if (doc.contains("weighting")) {
    const auto& w = doc.at("weighting");
    check_keys(w, {"tau"}, "weighting");
    read(w, "tau", c.weighting.tau);
  }
  c.train.tau = c.weighting.tau;
  if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
  if (doc.contains("methods")) {
    c.methods.clear();
    for (const auto& m : doc.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  read(doc, "seeds", c.seeds);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(read_file(path));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string run_config_to_json(const RunConfig& c) {
  ojson doc;
  ojson data;
  data["dir"] = c.data.dir.generic_string();
  if (c.data.synthetic) data["synthetic"] = sequence_spec_json(*c.data.synthetic);
  if (!c.data.tasks.empty()) data["tasks"] = c.data.tasks;
  doc["data"] = std::move(data);
  doc["trunk"] = {{"layer_widths", c.trunk.layer_widths},
                  {"frozen_prefix_layers", c.trunk.frozen_prefix_layers}};
  doc["pairs"] = {{"pairs_per_task", c.pairs.pairs_per_task}};
  ojson train;
  train["epochs"] = c.train.epochs;
  train["warmup_epochs"] = c.train.warmup_epochs;
  train["lr"] = c.train.lr;
  train["lr_decay_factor"] = c.train.lr_decay_factor;
  train["lr_decay_every"] = c.train.lr_decay_every;
  train["batch_warmup"] = c.train.batch_warmup;
  train["batch_main"] = c.train.batch_main;
  train["lambda"] = c.train.lambda ? ojson(*c.train.lambda) : ojson(nullptr);
  train["kmeans_k"] = c.train.kmeans_k;
  train["adam"] = {{"beta1", c.train.adam.beta1}, {"beta2", c.train.adam.beta2}, {"epsilon", c.train.adam.epsilon}};
  doc["train"] = std::move(train);
  doc["weighting"] = {{"tau", c.weighting.tau}};
  doc["output_dir"] = c.output_dir.generic_string();
  auto methods = ojson::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  doc["methods"] = std::move(methods);
  doc["seeds"] = c.seeds;
  return doc.dump(2) + "\n";
}

RunConfig benchmark_run_config(std::uint64_t data_seed) {
  RunConfig c;
  c.data.synthetic = default_sequence_spec(data_seed);
  const auto setup = benchmark_setup(Method::LwF_AW, 0, 0);
  c.trunk.layer_widths = setup.trunk.layer_widths;
  c.trunk.frozen_prefix_layers = setup.trunk.frozen_prefix_layers;
  c.pairs.pairs_per_task = setup.pairs.pairs_per_task;
  c.train = setup.train;
  c.weighting.tau = setup.train.tau;
  return c;
}

RunSetup cell_setup(const RunConfig& config, Method method, std::uint64_t seed, Eigen::Index input_dim) {
  RunSetup base;
  base.trunk = config.trunk;
  base.trunk.input_dim = input_dim;
  base.pairs = config.pairs;
  base.train = config.train;
  base.train.tau = config.weighting.tau;
  return replicate_setup(std::move(base), method, seed);
}

std::string sequence_spec_to_json(const SequenceSpec& spec) { return sequence_spec_json(spec).dump(2) + "\n"; }

SequenceSpec sequence_spec_from_json(const std::string& text) { return sequence_spec_from(json::parse(text)); }

}  // namespace clqa
