#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcx/graph.hpp"

namespace gcx {

struct GcnLayer {
  Eigen::MatrixXd weight;    // in_dim x out_dim
  Eigen::RowVectorXd bias;   // out_dim
};

// Stacked GCN: H^(l) = relu(A_hat H^(l-1) W^(l) + b^(l)), relu omitted on the
// final layer, softmax over the last-layer logits.
struct GcnModel {
  std::vector<GcnLayer> layers;

  int layer_count() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.rows()); }
  int class_count() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.cols()); }
};

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct TrainReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
};

class TrainError : public std::runtime_error {
 public:
  TrainError(const std::string& what, int epoch) : std::runtime_error(what), epoch(epoch) {}
  int epoch;
};

GcnModel glorot_init(const std::vector<int>& dims, std::uint64_t seed);

// Row-stochastic class probabilities, one row per node.
Eigen::MatrixXd forward(const GcnModel& model, const LabeledGraph& g);
Eigen::MatrixXd forward(const GcnModel& model, const Eigen::SparseMatrix<double>& a_hat, const Eigen::MatrixXd& x);
Eigen::MatrixXd forward_dense(const GcnModel& model, const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x);

// Argmax of row v; ties broken toward the lowest class id.
int predicted_class(const GcnModel& model, const LabeledGraph& g, int v);
int argmax_row(const Eigen::MatrixXd& probs, int row);

// Mean cross-entropy over the masked nodes plus (wd/2)*||W||^2, with the
// analytic parameter gradients.
struct LossAndGradients {
  double loss = 0.0;
  std::vector<GcnLayer> gradients;
};
LossAndGradients loss_and_gradients(const GcnModel& model, const Eigen::SparseMatrix<double>& a_hat,
                                    const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                    const std::vector<char>& mask, double weight_decay);

// Full-batch gradient descent on cross-entropy over a seeded train split.
std::pair<GcnModel, TrainReport> train(const LabeledGraph& g, const std::vector<int>& hidden_dims,
                                       const TrainConfig& cfg);

// Max relative error between analytic gradients and central finite
// differences over >= `samples` randomly chosen parameters.
double grad_check(const GcnModel& model, const LabeledGraph& g, const std::vector<int>& labels,
                  double epsilon, std::uint64_t seed = 0, int samples = 60);

std::string model_to_json(const GcnModel& model);
GcnModel model_from_json(const std::string& text);
GcnModel load_model(const std::string& path);
void save_model(const GcnModel& model, const std::string& path);

}  // namespace gcx
