#include "ramgain/mlp.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "ramgain/errors.hpp"
#include "ramgain/rng.hpp"

namespace ramgain {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

Standardizer Standardizer::identity(Index dim) {
  Standardizer s;
  s.mean = VectorXd::Zero(dim);
  s.std = VectorXd::Ones(dim);
  return s;
}

Standardizer Standardizer::fit(const MatrixXd& samples_as_cols) {
  Standardizer s;
  const auto b = static_cast<double>(samples_as_cols.cols());
  s.mean = samples_as_cols.rowwise().mean();
  MatrixXd centered = samples_as_cols.colwise() - s.mean;
  s.std = (centered.array().square().rowwise().sum() / b).sqrt();
  for (Index i = 0; i < s.std.size(); ++i) {
    if (s.std(i) < 1e-12) {
      s.std(i) = 1.0;
      s.clamped = true;
    }
  }
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd& x) const {
  return (x.colwise() - mean).array().colwise() / std.array();
}

MatrixXd Standardizer::invert(const MatrixXd& y) const {
  return (y.array().colwise() * std.array()).colwise() + mean.array();
}

std::int64_t param_count(std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("param_count: need at least input and output layers");
  std::int64_t total = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    total += static_cast<std::int64_t>(layer_sizes[l - 1]) * layer_sizes[l] + layer_sizes[l];
  }
  return total;
}

Mlp Mlp::create(std::vector<int> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least two layers");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be >= 1");
  Mlp m;
  m.layer_sizes = std::move(sizes);
  Rng rng(seed);
  for (std::size_t l = 1; l < m.layer_sizes.size(); ++l) {
    const Index rows = m.layer_sizes[l];
    const Index cols = m.layer_sizes[l - 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    MatrixXd w(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(VectorXd::Zero(rows));
  }
  m.input_scaler = Standardizer::identity(m.layer_sizes.front());
  m.output_scaler = Standardizer::identity(m.layer_sizes.back());
  return m;
}

std::int64_t Mlp::parameters() const { return param_count(layer_sizes); }

namespace {

void check_input_dims(const Mlp& m, const MatrixXd& x) {
  if (x.rows() != m.input_dim())
    throw DimensionMismatch("mlp: input dim " + std::to_string(x.rows()) + " != " +
                            std::to_string(m.input_dim()));
}

/// Forward pass keeping every post-activation; activations[0] is the
/// standardized input, activations.back() the raw (pre de-standardize) output.
std::vector<MatrixXd> forward_states(const Mlp& m, const MatrixXd& x) {
  std::vector<MatrixXd> acts;
  acts.reserve(m.weights.size() + 1);
  acts.push_back(m.input_scaler.apply(x));
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    MatrixXd z = (m.weights[l] * acts.back()).colwise() + m.biases[l];
    if (l + 1 < m.weights.size()) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

MatrixXd Mlp::forward_batch(const MatrixXd& inputs) const {
  check_input_dims(*this, inputs);
  MatrixXd a = input_scaler.apply(inputs);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    a = (weights[l] * a).colwise() + biases[l];
    if (l + 1 < weights.size()) a = a.array().tanh();
  }
  return output_scaler.invert(a);
}

VectorXd Mlp::forward(const VectorXd& input) const { return forward_batch(input); }

double mse(const Mlp& model, const MatrixXd& x, const MatrixXd& y) {
  check_input_dims(model, x);
  if (y.rows() != model.output_dim() || y.cols() != x.cols())
    throw DimensionMismatch("mse: target shape mismatch");
  if (x.cols() == 0) throw std::invalid_argument("mse: empty batch");
  return (model.forward_batch(x) - y).squaredNorm() /
         static_cast<double>(y.rows() * y.cols());
}

Gradients grad(const Mlp& model, const MatrixXd& x, const MatrixXd& y) {
  check_input_dims(model, x);
  if (y.rows() != model.output_dim() || y.cols() != x.cols())
    throw DimensionMismatch("grad: target shape mismatch");
  if (x.cols() == 0) throw std::invalid_argument("grad: empty batch");

  const auto acts = forward_states(model, x);
  const double scale = 2.0 / static_cast<double>(y.rows() * y.cols());

  // de-standardized prediction and loss derivative through the output scaler
  MatrixXd pred = model.output_scaler.invert(acts.back());
  MatrixXd delta =
      (scale * (pred - y)).array().colwise() * model.output_scaler.std.array();

  Gradients g;
  g.d_weights.resize(model.weights.size());
  g.d_biases.resize(model.weights.size());
  for (auto l = static_cast<std::ptrdiff_t>(model.weights.size()) - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    g.d_weights[ul].noalias() = delta * acts[ul].transpose();
    g.d_biases[ul] = delta.rowwise().sum();
    if (l > 0) {
      delta = (model.weights[ul].transpose() * delta).array() *
              (1.0 - acts[ul].array().square());
    }
  }
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  if (early_stop_patience > max_epochs)
    throw ConfigError("early_stop_patience must be <= max_epochs");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must be in [0, 1)");
}

TrainResult train(Mlp& model, const MatrixXd& x_train, const MatrixXd& y_train,
                  const MatrixXd& x_test, const MatrixXd& y_test, const TrainConfig& config) {
  config.validate();
  check_input_dims(model, x_train);
  if (y_train.rows() != model.output_dim() || y_train.cols() != x_train.cols())
    throw DimensionMismatch("train: target shape mismatch");
  if (x_train.cols() == 0) throw std::invalid_argument("train: empty training set");
  const bool have_test = x_test.cols() > 0;
  if (have_test && (x_test.rows() != model.input_dim() || y_test.rows() != model.output_dim() ||
                    y_test.cols() != x_test.cols()))
    throw DimensionMismatch("train: test shape mismatch");

  TrainResult result;
  model.input_scaler = Standardizer::fit(x_train);
  model.output_scaler = Standardizer::fit(y_train);
  result.degenerate_input = model.input_scaler.clamped;

  // Adam state
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<MatrixXd> mw, vw;
  std::vector<VectorXd> mb, vb;
  for (const auto& w : model.weights) {
    mw.emplace_back(MatrixXd::Zero(w.rows(), w.cols()));
    vw.emplace_back(MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : model.biases) {
    mb.emplace_back(VectorXd::Zero(b.size()));
    vb.emplace_back(VectorXd::Zero(b.size()));
  }

  Rng rng(config.seed);
  const auto n = static_cast<std::size_t>(x_train.cols());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  auto best_weights = model.weights;
  auto best_biases = model.biases;
  double best_test = std::numeric_limits<double>::infinity();
  long step = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t bsz = std::min<std::size_t>(config.batch_size, n - start);
      MatrixXd xb(x_train.rows(), static_cast<Index>(bsz));
      MatrixXd yb(y_train.rows(), static_cast<Index>(bsz));
      for (std::size_t k = 0; k < bsz; ++k) {
        xb.col(static_cast<Index>(k)) = x_train.col(static_cast<Index>(order[start + k]));
        yb.col(static_cast<Index>(k)) = y_train.col(static_cast<Index>(order[start + k]));
      }
      Gradients g = grad(model, xb, yb);
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        mw[l] = beta1 * mw[l] + (1.0 - beta1) * g.d_weights[l];
        vw[l] = beta2 * vw[l].array() + (1.0 - beta2) * g.d_weights[l].array().square();
        model.weights[l].array() -=
            config.learning_rate * (mw[l].array() / bc1) /
            ((vw[l].array() / bc2).sqrt() + eps);
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * g.d_biases[l];
        vb[l] = beta2 * vb[l].array() + (1.0 - beta2) * g.d_biases[l].array().square();
        model.biases[l].array() -=
            config.learning_rate * (mb[l].array() / bc1) /
            ((vb[l].array() / bc2).sqrt() + eps);
      }
    }

    const double train_loss = mse(model, x_train, y_train);
    const double test_loss = have_test ? mse(model, x_test, y_test) : train_loss;
    result.train_mse_history.push_back(train_loss);
    result.test_mse_history.push_back(test_loss);
    result.epochs_run = epoch + 1;

    if (test_loss < best_test) {
      best_test = test_loss;
      result.best_epoch = epoch;
      best_weights = model.weights;
      best_biases = model.biases;
    } else if (epoch - result.best_epoch >= config.early_stop_patience) {
      break;
    }
  }

  model.weights = std::move(best_weights);
  model.biases = std::move(best_biases);
  result.best_test_mse = best_test;
  return result;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols)
    throw SchemaError("matrix data length != rows*cols");
  MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[k++];
  return m;
}

std::vector<double> vec_to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd vec_from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

json mlp_to_json(const Mlp& model) {
  json j{{"schema", "ramgain.mlp"},
         {"version", 1},
         {"layer_sizes", model.layer_sizes},
         {"hidden_activation", "tanh"},
         {"output_activation", "linear"},
         {"input_mean", vec_to_std(model.input_scaler.mean)},
         {"input_std", vec_to_std(model.input_scaler.std)},
         {"output_mean", vec_to_std(model.output_scaler.mean)},
         {"output_std", vec_to_std(model.output_scaler.std)}};
  json ws = json::array(), bs = json::array();
  for (const auto& w : model.weights) ws.push_back(matrix_to_json(w));
  for (const auto& b : model.biases) bs.push_back(vec_to_std(b));
  j["weights"] = std::move(ws);
  j["biases"] = std::move(bs);
  return j;
}

Mlp mlp_from_json(const json& j) {
  try {
    if (j.at("schema") != "ramgain.mlp") throw SchemaError("not an mlp checkpoint");
    if (j.at("version") != 1) throw SchemaError("unsupported mlp checkpoint version");
    if (j.at("hidden_activation") != "tanh" || j.at("output_activation") != "linear")
      throw SchemaError("unsupported activation names");
    Mlp m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (m.layer_sizes.size() < 2) throw SchemaError("layer_sizes needs >= 2 entries");
    for (const auto& wj : j.at("weights")) m.weights.push_back(matrix_from_json(wj));
    for (const auto& bj : j.at("biases"))
      m.biases.push_back(vec_from_std(bj.get<std::vector<double>>()));
    if (m.weights.size() != m.layer_sizes.size() - 1 || m.biases.size() != m.weights.size())
      throw SchemaError("layer count mismatch");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      if (m.weights[l].rows() != m.layer_sizes[l + 1] ||
          m.weights[l].cols() != m.layer_sizes[l] ||
          m.biases[l].size() != m.layer_sizes[l + 1])
        throw SchemaError("weight shape inconsistent with layer_sizes");
    }
    m.input_scaler.mean = vec_from_std(j.at("input_mean").get<std::vector<double>>());
    m.input_scaler.std = vec_from_std(j.at("input_std").get<std::vector<double>>());
    m.output_scaler.mean = vec_from_std(j.at("output_mean").get<std::vector<double>>());
    m.output_scaler.std = vec_from_std(j.at("output_std").get<std::vector<double>>());
    if (m.input_scaler.mean.size() != m.layer_sizes.front() ||
        m.input_scaler.std.size() != m.layer_sizes.front() ||
        m.output_scaler.mean.size() != m.layer_sizes.back() ||
        m.output_scaler.std.size() != m.layer_sizes.back())
      throw SchemaError("standardizer length inconsistent with layer_sizes");
    for (Index i = 0; i < m.input_scaler.std.size(); ++i)
      if (!(m.input_scaler.std(i) > 0)) throw SchemaError("standardizer std must be > 0");
    for (Index i = 0; i < m.output_scaler.std.size(); ++i)
      if (!(m.output_scaler.std(i) > 0)) throw SchemaError("standardizer std must be > 0");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad mlp checkpoint: ") + e.what());
  }
}

void save_mlp(const Mlp& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << mlp_to_json(model).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

Mlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse '" + path + "': " + e.what());
  }
  return mlp_from_json(j);
}

}  // namespace ramgain
