#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ramgain {

/// Per-dimension (mean, std) affine map. Dimensions with zero variance get
/// std clamped to 1 and the flag set.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  bool clamped = false;

  static Standardizer identity(Eigen::Index dim);
  static Standardizer fit(const Eigen::MatrixXd& samples_as_cols);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& y) const;
};

/// Exact parameter count sum_l (n_{l-1} + 1) * n_l.
std::int64_t param_count(std::span<const int> layer_sizes);

/// Dense feed-forward net, tanh hidden layers, linear output, with input and
/// output standardizers folded into forward(). 64-bit floats throughout.
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
  std::vector<Eigen::VectorXd> biases;
  Standardizer input_scaler;
  Standardizer output_scaler;

  /// Scaled-uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Mlp create(std::vector<int> layer_sizes, std::uint64_t seed);

  Eigen::Index input_dim() const { return layer_sizes.front(); }
  Eigen::Index output_dim() const { return layer_sizes.back(); }
  std::int64_t parameters() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  /// Columns are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
};

/// Mean over batch and output dimensions of the squared error, in the
/// de-standardized output domain (what forward() returns).
double mse(const Mlp& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Analytic backprop gradients of mse() w.r.t. every weight and bias.
Gradients grad(const Mlp& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 2000;
  int early_stop_patience = 100;
  double test_fraction = 0.2;  // used by callers that split internally
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainResult {
  std::vector<double> train_mse_history;
  std::vector<double> test_mse_history;
  double best_test_mse = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  bool degenerate_input = false;  // some input dimension had zero variance
};

/// Adam over shuffled mini-batches; standardizers are fitted on the training
/// split only; returns the weights achieving the best test MSE. Fully
/// deterministic given config.seed.
TrainResult train(Mlp& model, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                  const Eigen::MatrixXd& x_test, const Eigen::MatrixXd& y_test,
                  const TrainConfig& config);

nlohmann::json mlp_to_json(const Mlp& model);
Mlp mlp_from_json(const nlohmann::json& j);
void save_mlp(const Mlp& model, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace ramgain
