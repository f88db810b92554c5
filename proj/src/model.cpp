#include "clqa/model.hpp"
#include "clqa/random.hpp"

#include <stdexcept>
#include <string>

namespace clqa {

namespace {

constexpr std::uint64_t kHeadSalt = 0x48454144;  // per-head init stream

Matrix rectify(Matrix z) { return z.cwiseMax(0.0); }

Vector he_vector(Eigen::Index size, Eigen::Index fan_in, Rng& rng) {
  std::normal_distribution<Real> normal(0.0, std::sqrt(2.0 / static_cast<Real>(fan_in)));
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

void TrunkConfig::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("trunk: input_dim must be positive");
  for (auto w : layer_widths) {
    if (w <= 0) throw std::invalid_argument("trunk: layer widths must be positive");
  }
  if (frozen_prefix_layers > layer_widths.size()) {
    throw std::invalid_argument("trunk: frozen_prefix_layers exceeds the number of layers");
  }
}

Eigen::Index ContinualModel::embedding_dim() const {
  return config.layer_widths.empty() ? config.input_dim : config.layer_widths.back();
}

Eigen::Index ContinualModel::stable_dim() const {
  const auto s = config.frozen_prefix_layers;
  return s == 0 ? config.input_dim : config.layer_widths[s - 1];
}

std::size_t ContinualModel::add_head() {
  Rng rng(mix_seed(config.seed, kHeadSalt + heads.size()));
  heads.push_back(he_vector(embedding_dim(), embedding_dim(), rng));
  return heads.size() - 1;
}

ParameterLayout ContinualModel::layout() const {
  ParameterLayout out;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l == config.frozen_prefix_layers) out.frozen_size = offset;
    out.layer_offsets.push_back(offset);
    offset += layers[l].weight.size() + layers[l].bias.size();
  }
  if (config.frozen_prefix_layers >= layers.size()) out.frozen_size = offset;
  out.trunk_size = offset;
  for (const auto& h : heads) {
    out.head_offsets.push_back(offset);
    offset += h.size();
  }
  out.total_size = offset;
  return out;
}

Vector ContinualModel::parameters() const {
  const auto lay = layout();
  Vector flat(lay.total_size);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto o = lay.layer_offsets[l];
    flat.segment(o, layer.weight.size()) = layer.weight.reshaped();
    flat.segment(o + layer.weight.size(), layer.bias.size()) = layer.bias;
  }
  for (std::size_t t = 0; t < heads.size(); ++t) {
    flat.segment(lay.head_offsets[t], heads[t].size()) = heads[t];
  }
  return flat;
}

void ContinualModel::set_parameters(const Vector& flat) {
  const auto lay = layout();
  if (flat.size() != lay.total_size) {
    throw std::invalid_argument("set_parameters: expected " + std::to_string(lay.total_size) +
                                " values, got " + std::to_string(flat.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    const auto o = lay.layer_offsets[l];
    layer.weight.reshaped() = flat.segment(o, layer.weight.size());
    layer.bias = flat.segment(o + layer.weight.size(), layer.bias.size());
  }
  for (std::size_t t = 0; t < heads.size(); ++t) {
    heads[t] = flat.segment(lay.head_offsets[t], heads[t].size());
  }
}

Matrix ContinualModel::head_matrix() const {
  Matrix h(embedding_dim(), static_cast<Eigen::Index>(heads.size()));
  for (std::size_t t = 0; t < heads.size(); ++t) h.col(static_cast<Eigen::Index>(t)) = heads[t];
  return h;
}

void ContinualModel::validate() const {
  config.validate();
  if (layers.size() != config.layer_widths.size()) {
    throw std::invalid_argument("model: layer count does not match config");
  }
  Eigen::Index in = config.input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto out = config.layer_widths[l];
    if (layers[l].weight.rows() != out || layers[l].weight.cols() != in ||
        layers[l].bias.size() != out) {
      throw std::invalid_argument("model: layer " + std::to_string(l) + " has wrong shape");
    }
    in = out;
  }
  for (const auto& h : heads) {
    if (h.size() != embedding_dim()) throw std::invalid_argument("model: head dimension mismatch");
  }
  for (const auto& s : summaries) {
    if (s.dim() != stable_dim() || s.k() < 1 || !s.centroids.allFinite()) {
      throw std::invalid_argument("model: malformed task summary");
    }
  }
}

ContinualModel init_model(const TrunkConfig& config) {
  config.validate();
  ContinualModel model;
  model.config = config;
  Rng rng(config.seed);
  Eigen::Index in = config.input_dim;
  for (auto out : config.layer_widths) {
    DenseLayer layer;
    layer.weight = he_vector(out * in, in, rng).reshaped(out, in);
    layer.bias = Vector::Zero(out);
    model.layers.push_back(std::move(layer));
    in = out;
  }
  return model;
}

namespace {

Matrix apply_layers(const ContinualModel& model, Matrix a, std::size_t count) {
  for (std::size_t l = 0; l < count; ++l) {
    const auto& layer = model.layers[l];
    a = rectify((layer.weight * a).colwise() + layer.bias);
  }
  return a;
}

void check_input(const ContinualModel& model, Eigen::Index rows) {
  if (rows != model.input_dim()) {
    throw std::invalid_argument("input dimension " + std::to_string(rows) + " does not match model " +
                                std::to_string(model.input_dim()));
  }
}

}  // namespace

Embedding stable_features(const ContinualModel& model, const Vector& x) {
  check_input(model, x.size());
  Embedding e;
  const Matrix out = apply_layers(model, x, model.config.frozen_prefix_layers);
  e.values = normalized(out.col(0), &e.degenerate);
  return e;
}

Matrix stable_features(const ContinualModel& model, const Matrix& inputs) {
  check_input(model, inputs.rows());
  Matrix out = apply_layers(model, inputs, model.config.frozen_prefix_layers);
  for (Eigen::Index i = 0; i < out.cols(); ++i) out.col(i) = normalized(out.col(i));
  return out;
}

Embedding embed(const ContinualModel& model, const Vector& x) {
  check_input(model, x.size());
  Embedding e;
  const Matrix out = apply_layers(model, x, model.layers.size());
  e.values = normalized(out.col(0), &e.degenerate);
  return e;
}

Real head_score(const ContinualModel& model, std::size_t t, const Embedding& e) {
  if (t >= model.heads.size()) {
    throw std::out_of_range("head index " + std::to_string(t) + " out of range");
  }
  if (e.values.size() != model.embedding_dim()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  return model.heads[t].dot(e.values);
}

Real predicted_preference(const ContinualModel& model, std::size_t t, const Vector& x,
                          const Vector& y) {
  return preference_from_scores(head_score(model, t, embed(model, x)),
                                head_score(model, t, embed(model, y)));
}

BatchForward::BatchForward(const ContinualModel& model, Matrix inputs)
    : model_(model), inputs_(std::move(inputs)) {
  check_input(model, inputs_.rows());
  const Matrix* a = &inputs_;
  activations_.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    activations_.push_back(rectify((layer.weight * *a).colwise() + layer.bias));
    a = &activations_.back();
  }
  norms_ = a->colwise().norm().transpose();
  embeddings_ = Matrix::Zero(a->rows(), a->cols());
  for (Eigen::Index i = 0; i < a->cols(); ++i) {
    if (norms_[i] > 0) embeddings_.col(i) = a->col(i) / norms_[i];
  }
  scores_ = model.head_matrix().transpose() * embeddings_;
}

Vector head_gradient(const ContinualModel& model, const Matrix& embeddings,
                     const Matrix& score_seeds) {
  const auto lay = model.layout();
  Vector grad = Vector::Zero(lay.total_size);
  const Matrix d_heads = embeddings * score_seeds.transpose();
  for (std::size_t t = 0; t < model.heads.size(); ++t) {
    grad.segment(lay.head_offsets[t], d_heads.rows()) = d_heads.col(static_cast<Eigen::Index>(t));
  }
  return grad;
}

Vector BatchForward::backward_scores(const Matrix& score_seeds, bool trunk) const {
  if (score_seeds.rows() != static_cast<Eigen::Index>(model_.heads.size()) ||
      score_seeds.cols() != size()) {
    throw std::invalid_argument("backward: seed matrix shape mismatch");
  }
  Vector grad = head_gradient(model_, embeddings_, score_seeds);
  const std::size_t frozen = model_.config.frozen_prefix_layers;
  const std::size_t count = model_.layers.size();
  if (!trunk || frozen >= count) return grad;

  const auto lay = model_.layout();
  // Through the unit-norm projection: df = (dE - e (e . dE)) / |f|.
  Matrix d_a = model_.head_matrix() * score_seeds;
  const Vector radial = (embeddings_.cwiseProduct(d_a)).colwise().sum().transpose();
  for (Eigen::Index i = 0; i < d_a.cols(); ++i) {
    if (norms_[i] > 0) {
      d_a.col(i) = (d_a.col(i) - embeddings_.col(i) * radial[i]) / norms_[i];
    } else {
      d_a.col(i).setZero();
    }
  }
  for (std::size_t l = count; l-- > frozen;) {
    const auto& layer = model_.layers[l];
    const Matrix& input = l == 0 ? inputs_ : activations_[l - 1];
    const Matrix d_z = d_a.cwiseProduct((activations_[l].array() > 0).cast<Real>().matrix());
    const auto o = lay.layer_offsets[l];
    const Matrix d_w = d_z * input.transpose();
    grad.segment(o, d_w.size()) = d_w.reshaped();
    grad.segment(o + d_w.size(), layer.bias.size()) = d_z.rowwise().sum();
    if (l > frozen) d_a = layer.weight.transpose() * d_z;
  }
  return grad;
}

Matrix BatchForward::score_seeds(std::span<const PairSeed> seeds) const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(model_.heads.size()), size());
  constexpr Real inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (const auto& s : seeds) {
    if (s.head >= model_.heads.size()) throw std::out_of_range("backward: head out of range");
    const Real z = (scores_(s.head, s.first) - scores_(s.head, s.second)) * inv_sqrt2;
    const Real d = s.d_loss_d_preference * std_normal_pdf(z) * inv_sqrt2;
    out(s.head, s.first) += d;
    out(s.head, s.second) -= d;
  }
  return out;
}

Vector BatchForward::backward(std::span<const PairSeed> seeds, bool trunk) const {
  return backward_scores(score_seeds(seeds), trunk);
}

}  // namespace clqa
