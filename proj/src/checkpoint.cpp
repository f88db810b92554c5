#include "clqa/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace clqa {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<Real>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<Real>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("checkpoint: matrix size mismatch");
  }
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

json vector_json(const Vector& v) { return std::vector<Real>(v.begin(), v.end()); }

Vector vector_from(const json& j) {
  const auto data = j.get<std::vector<Real>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  const auto& model = checkpoint.model;
  json doc;
  doc["format"] = "clqa-checkpoint";
  doc["version"] = 1;
  doc["tasks_seen"] = checkpoint.tasks_seen;
  doc["trunk"] = {{"input_dim", model.config.input_dim},
                  {"layer_widths", model.config.layer_widths},
                  {"frozen_prefix_layers", model.config.frozen_prefix_layers},
                  {"activation", "rectifier"},
                  {"seed", model.config.seed}};
  auto layers = json::array();
  for (const auto& layer : model.layers) {
    layers.push_back({{"weight", matrix_json(layer.weight)}, {"bias", vector_json(layer.bias)}});
  }
  doc["layers"] = std::move(layers);
  auto heads = json::array();
  for (const auto& h : model.heads) heads.push_back(vector_json(h));
  doc["heads"] = std::move(heads);
  auto summaries = json::array();
  for (const auto& s : model.summaries) {
    summaries.push_back({{"task_index", s.task_index}, {"centroids", matrix_json(s.centroids)}});
  }
  doc["summaries"] = std::move(summaries);
  if (checkpoint.importance) {
    const auto& imp = *checkpoint.importance;
    doc["importance"] = {{"method", to_string(imp.method)},
                         {"offset", imp.offset},
                         {"beta", vector_json(imp.beta)},
                         {"anchor", vector_json(imp.anchor)},
                         {"accumulators", vector_json(imp.accumulators)}};
  }
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.value("format", "") != "clqa-checkpoint") throw std::invalid_argument("not a clqa checkpoint");
  if (doc.at("version").get<int>() != 1) throw std::invalid_argument("unsupported checkpoint version");
  Checkpoint out;
  auto& model = out.model;
  const auto& trunk = doc.at("trunk");
  if (trunk.at("activation").get<std::string>() != "rectifier") {
    throw std::invalid_argument("checkpoint: unknown activation");
  }
  model.config.input_dim = trunk.at("input_dim").get<Eigen::Index>();
  model.config.layer_widths = trunk.at("layer_widths").get<std::vector<Eigen::Index>>();
  model.config.frozen_prefix_layers = trunk.at("frozen_prefix_layers").get<std::size_t>();
  model.config.seed = trunk.at("seed").get<std::uint64_t>();
  for (const auto& l : doc.at("layers")) {
    model.layers.push_back({matrix_from(l.at("weight")), vector_from(l.at("bias"))});
  }
  for (const auto& h : doc.at("heads")) model.heads.push_back(vector_from(h));
  for (const auto& s : doc.at("summaries")) {
    model.summaries.push_back({s.at("task_index").get<std::size_t>(), matrix_from(s.at("centroids"))});
  }
  model.validate();
  out.tasks_seen = doc.value("tasks_seen", model.learned_tasks());
  if (doc.contains("importance")) {
    const auto& j = doc.at("importance");
    ImportanceState imp;
    imp.method = regularizer_from_string(j.at("method").get<std::string>());
    imp.offset = j.at("offset").get<Eigen::Index>();
    imp.beta = vector_from(j.at("beta"));
    imp.anchor = vector_from(j.at("anchor"));
    imp.accumulators = vector_from(j.at("accumulators"));
    out.importance = std::move(imp);
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path));
}

}  // namespace clqa
