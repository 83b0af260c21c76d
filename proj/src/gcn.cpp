#include "gcx/gcn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gcx/rng.hpp"

namespace gcx {

namespace {

void softmax_rows_inplace(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
}

template <typename Adjacency>
Eigen::MatrixXd forward_impl(const GcnModel& model, const Adjacency& a_hat, const Eigen::MatrixXd& x) {
  if (model.layers.empty()) throw std::invalid_argument("forward: empty model");
  if (x.cols() != model.input_dim()) throw std::invalid_argument("forward: feature dim does not match first layer");
  Eigen::MatrixXd h = x;
  for (int l = 0; l < model.layer_count(); ++l) {
    const GcnLayer& layer = model.layers[static_cast<std::size_t>(l)];
    if (h.cols() != layer.weight.rows()) throw std::invalid_argument("forward: layer dimension mismatch");
    Eigen::MatrixXd z = (a_hat * h) * layer.weight;
    z.rowwise() += layer.bias;
    if (l + 1 < model.layer_count()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  softmax_rows_inplace(h);
  return h;
}

}  // namespace

GcnModel glorot_init(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("glorot_init: need at least input and output dims");
  Rng rng(seed);
  GcnModel model;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    GcnLayer layer;
    layer.weight.resize(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) layer.weight(i, j) = rng.uniform(-limit, limit);
    layer.bias = Eigen::RowVectorXd::Zero(out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Eigen::MatrixXd forward(const GcnModel& model, const LabeledGraph& g) {
  return forward_impl(model, normalized_adjacency_sparse(g), g.features());
}

Eigen::MatrixXd forward(const GcnModel& model, const Eigen::SparseMatrix<double>& a_hat, const Eigen::MatrixXd& x) {
  return forward_impl(model, a_hat, x);
}

Eigen::MatrixXd forward_dense(const GcnModel& model, const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x) {
  return forward_impl(model, a_hat, x);
}

int argmax_row(const Eigen::MatrixXd& probs, int row) {
  int best = 0;
  for (int c = 1; c < probs.cols(); ++c) {
    if (probs(row, c) > probs(row, best)) best = c;
  }
  return best;
}

int predicted_class(const GcnModel& model, const LabeledGraph& g, int v) {
  if (v < 0 || v >= g.node_count()) throw std::invalid_argument("predicted_class: node out of range");
  const Eigen::MatrixXd probs = forward(model, g);
  return argmax_row(probs, v);
}

LossAndGradients loss_and_gradients(const GcnModel& model, const Eigen::SparseMatrix<double>& a_hat,
                                    const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                    const std::vector<char>& mask, double weight_decay) {
  const int layer_count = model.layer_count();
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n || static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("loss_and_gradients: labels/mask size mismatch");

  // Forward pass, keeping the per-layer inputs A_hat * H for the backward pass.
  std::vector<Eigen::MatrixXd> ah(static_cast<std::size_t>(layer_count));
  std::vector<Eigen::MatrixXd> z(static_cast<std::size_t>(layer_count));
  Eigen::MatrixXd h = x;
  for (int l = 0; l < layer_count; ++l) {
    const GcnLayer& layer = model.layers[static_cast<std::size_t>(l)];
    ah[static_cast<std::size_t>(l)] = a_hat * h;
    Eigen::MatrixXd zl = ah[static_cast<std::size_t>(l)] * layer.weight;
    zl.rowwise() += layer.bias;
    z[static_cast<std::size_t>(l)] = zl;
    h = (l + 1 < layer_count) ? zl.cwiseMax(0.0) : std::move(zl);
  }
  Eigen::MatrixXd probs = h;
  softmax_rows_inplace(probs);

  double count = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (mask[static_cast<std::size_t>(i)]) count += 1.0;
  if (count == 0.0) throw std::invalid_argument("loss_and_gradients: empty node mask");

  double loss = 0.0;
  Eigen::MatrixXd dz = probs;  // softmax + cross-entropy gradient: (P - Y) / count on masked rows
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) {
      dz.row(i).setZero();
      continue;
    }
    const int y = labels[static_cast<std::size_t>(i)];
    loss -= std::log(std::max(probs(i, y), 1e-300));
    dz(i, y) -= 1.0;
    dz.row(i) /= count;
  }
  loss /= count;

  LossAndGradients out;
  out.gradients.resize(static_cast<std::size_t>(layer_count));
  for (int l = layer_count - 1; l >= 0; --l) {
    const GcnLayer& layer = model.layers[static_cast<std::size_t>(l)];
    GcnLayer& grad = out.gradients[static_cast<std::size_t>(l)];
    grad.weight = ah[static_cast<std::size_t>(l)].transpose() * dz;
    if (weight_decay != 0.0) {
      grad.weight += weight_decay * layer.weight;
      loss += 0.5 * weight_decay * layer.weight.squaredNorm();
    }
    grad.bias = dz.colwise().sum();
    if (l > 0) {
      Eigen::MatrixXd dh = a_hat * (dz * layer.weight.transpose());  // A_hat is symmetric
      dz = dh.cwiseProduct((z[static_cast<std::size_t>(l - 1)].array() > 0.0).cast<double>().matrix());
    }
  }
  out.loss = loss;
  return out;
}

std::pair<GcnModel, TrainReport> train(const LabeledGraph& g, const std::vector<int>& hidden_dims,
                                       const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("train: learning rate must be positive");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction > 1.0)
    throw std::invalid_argument("train: train_fraction outside (0,1]");

  const int n = g.node_count();
  std::vector<int> dims;
  dims.push_back(g.feature_dim());
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(g.class_count());
  GcnModel model = glorot_init(dims, cfg.seed);

  Rng rng(derive_seed(cfg.seed, 0x5b17));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  const int train_count = std::max(1, static_cast<int>(std::llround(cfg.train_fraction * n)));
  std::vector<char> train_mask(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < std::min(train_count, n); ++i) train_mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;

  const Eigen::SparseMatrix<double> a_hat = normalized_adjacency_sparse(g);
  double last_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossAndGradients lg = loss_and_gradients(model, a_hat, g.features(), g.labels(), train_mask, cfg.weight_decay);
    if (!std::isfinite(lg.loss)) throw TrainError("train: non-finite loss at epoch " + std::to_string(epoch), epoch);
    for (int l = 0; l < model.layer_count(); ++l) {
      model.layers[static_cast<std::size_t>(l)].weight -= cfg.learning_rate * lg.gradients[static_cast<std::size_t>(l)].weight;
      model.layers[static_cast<std::size_t>(l)].bias -= cfg.learning_rate * lg.gradients[static_cast<std::size_t>(l)].bias;
    }
    last_loss = lg.loss;
  }

  const Eigen::MatrixXd probs = forward(model, a_hat, g.features());
  double train_hit = 0.0, train_tot = 0.0, test_hit = 0.0, test_tot = 0.0;
  for (int i = 0; i < n; ++i) {
    const bool hit = argmax_row(probs, i) == g.labels()[static_cast<std::size_t>(i)];
    if (train_mask[static_cast<std::size_t>(i)]) {
      train_tot += 1.0;
      train_hit += hit ? 1.0 : 0.0;
    } else {
      test_tot += 1.0;
      test_hit += hit ? 1.0 : 0.0;
    }
  }
  TrainReport report;
  report.train_accuracy = train_tot > 0.0 ? train_hit / train_tot : 0.0;
  report.test_accuracy = test_tot > 0.0 ? test_hit / test_tot : report.train_accuracy;
  report.final_loss = last_loss;
  return {std::move(model), report};
}

double grad_check(const GcnModel& model, const LabeledGraph& g, const std::vector<int>& labels,
                  double epsilon, std::uint64_t seed, int samples) {
  if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be positive");
  const Eigen::SparseMatrix<double> a_hat = normalized_adjacency_sparse(g);
  const std::vector<char> mask(static_cast<std::size_t>(g.node_count()), 1);
  const LossAndGradients analytic = loss_and_gradients(model, a_hat, g.features(), labels, mask, 0.0);

  Rng rng(seed);
  GcnModel probe = model;
  double max_rel = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int l = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(model.layer_count())));
    GcnLayer& layer = probe.layers[static_cast<std::size_t>(l)];
    const bool pick_bias = rng.uniform_below(8) == 0;
    double* slot;
    double analytic_value;
    if (pick_bias) {
      const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(layer.bias.cols())));
      slot = &layer.bias(j);
      analytic_value = analytic.gradients[static_cast<std::size_t>(l)].bias(j);
    } else {
      const int i = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(layer.weight.rows())));
      const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(layer.weight.cols())));
      slot = &layer.weight(i, j);
      analytic_value = analytic.gradients[static_cast<std::size_t>(l)].weight(i, j);
    }
    const double saved = *slot;
    *slot = saved + epsilon;
    const double lp = loss_and_gradients(probe, a_hat, g.features(), labels, mask, 0.0).loss;
    *slot = saved - epsilon;
    const double lm = loss_and_gradients(probe, a_hat, g.features(), labels, mask, 0.0).loss;
    *slot = saved;
    const double fd = (lp - lm) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic_value), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic_value - fd) / denom);
  }
  return max_rel;
}

std::string model_to_json(const GcnModel& model) {
  nlohmann::ordered_json j;
  auto layers = nlohmann::ordered_json::array();
  for (const GcnLayer& layer : model.layers) {
    nlohmann::ordered_json lj;
    lj["in"] = static_cast<int>(layer.weight.rows());
    lj["out"] = static_cast<int>(layer.weight.cols());
    auto w = nlohmann::ordered_json::array();
    for (int i = 0; i < layer.weight.rows(); ++i)
      for (int k = 0; k < layer.weight.cols(); ++k) w.push_back(layer.weight(i, k));
    lj["weights"] = std::move(w);
    auto b = nlohmann::ordered_json::array();
    for (int k = 0; k < layer.bias.cols(); ++k) b.push_back(layer.bias(k));
    lj["bias"] = std::move(b);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

GcnModel model_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GcnModel model;
  for (const auto& lj : j.at("layers")) {
    const int in = lj.at("in").get<int>();
    const int out = lj.at("out").get<int>();
    GcnLayer layer;
    layer.weight.resize(in, out);
    const auto& w = lj.at("weights");
    if (static_cast<int>(w.size()) != in * out) throw std::invalid_argument("model_from_json: weight size mismatch");
    for (int i = 0; i < in; ++i)
      for (int k = 0; k < out; ++k) layer.weight(i, k) = w[static_cast<std::size_t>(i * out + k)].get<double>();
    layer.bias.resize(out);
    const auto& b = lj.at("bias");
    if (static_cast<int>(b.size()) != out) throw std::invalid_argument("model_from_json: bias size mismatch");
    for (int k = 0; k < out; ++k) layer.bias(k) = b[static_cast<std::size_t>(k)].get<double>();
    model.layers.push_back(std::move(layer));
  }
  if (model.layers.empty()) throw std::invalid_argument("model_from_json: no layers");
  return model;
}

GcnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

void save_model(const GcnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << model_to_json(model) << "\n";
}

}  // namespace gcx
