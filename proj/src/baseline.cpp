#include "ramgain/baseline.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ramgain/errors.hpp"

namespace ramgain {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

BaselineTraining train_conventional(const std::vector<SampleRecord>& records,
                                    const ChannelGrid& grid, const TrainConfig& config) {
  if (records.empty()) throw std::invalid_argument("train_conventional: empty dataset");
  const auto np = static_cast<Index>(records.front().pump_powers_w.size());
  const auto nc = static_cast<Index>(grid.n_ch);

  MatrixXd x(np + nc, static_cast<Index>(records.size()));
  MatrixXd y(nc, static_cast<Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (static_cast<Index>(r.pump_powers_w.size()) != np ||
        static_cast<Index>(r.launch.size()) != nc || static_cast<Index>(r.gain.size()) != nc)
      throw DimensionMismatch("train_conventional: record " + std::to_string(r.sample_id) +
                              " has inconsistent dimensions");
    const auto col = static_cast<Index>(i);
    for (Index p = 0; p < np; ++p) x(p, col) = r.pump_powers_w[static_cast<std::size_t>(p)];
    for (Index c = 0; c < nc; ++c)
      x(np + c, col) = r.launch.per_channel_dbm[static_cast<std::size_t>(c)];
    for (Index c = 0; c < nc; ++c) y(c, col) = r.gain.net_gain_db[static_cast<std::size_t>(c)];
  }

  auto [train_idx, test_idx] = split_indices(records.size(), config.test_fraction, config.seed);
  MatrixXd xtr(x.rows(), static_cast<Index>(train_idx.size()));
  MatrixXd ytr(y.rows(), static_cast<Index>(train_idx.size()));
  for (std::size_t k = 0; k < train_idx.size(); ++k) {
    xtr.col(static_cast<Index>(k)) = x.col(static_cast<Index>(train_idx[k]));
    ytr.col(static_cast<Index>(k)) = y.col(static_cast<Index>(train_idx[k]));
  }
  MatrixXd xte(x.rows(), static_cast<Index>(test_idx.size()));
  MatrixXd yte(y.rows(), static_cast<Index>(test_idx.size()));
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    xte.col(static_cast<Index>(k)) = x.col(static_cast<Index>(test_idx[k]));
    yte.col(static_cast<Index>(k)) = y.col(static_cast<Index>(test_idx[k]));
  }

  BaselineTraining out{
      {Mlp::create({static_cast<int>(np + nc), 200, static_cast<int>(nc)}, config.seed), grid, {}},
      0.0,
      {}};
  out.result = train(out.model.nn, xtr, ytr, xte, yte, config);
  out.heldout_rmse_db = test_idx.empty() ? std::sqrt(out.result.best_test_mse)
                                         : std::sqrt(mse(out.model.nn, xte, yte));
  return out;
}

GainProfile predict_conventional(const BaselineModel& model,
                                 std::span<const double> pump_powers_w,
                                 const LaunchProfile& launch) {
  const Index np = model.nn.input_dim() - static_cast<Index>(model.grid.n_ch);
  if (static_cast<Index>(pump_powers_w.size()) != np)
    throw DimensionMismatch("predict_conventional: expected " + std::to_string(np) +
                            " pump powers");
  if (static_cast<int>(launch.size()) != model.grid.n_ch)
    throw DimensionMismatch("predict_conventional: launch profile length " +
                            std::to_string(launch.size()) + " != n_ch " +
                            std::to_string(model.grid.n_ch));
  VectorXd in(model.nn.input_dim());
  for (Index p = 0; p < np; ++p) in(p) = pump_powers_w[static_cast<std::size_t>(p)];
  for (int c = 0; c < model.grid.n_ch; ++c)
    in(np + c) = launch.per_channel_dbm[static_cast<std::size_t>(c)];
  VectorXd out = model.nn.forward(in);
  GainProfile g;
  g.net_gain_db.assign(out.data(), out.data() + out.size());
  return g;
}

void save_baseline(const BaselineModel& model, const std::string& path, const Provenance& prov) {
  json j{{"schema", "ramgain.model"},
         {"version", 1},
         {"kind", "conventional"},
         {"grid",
          {{"n_ch", model.grid.n_ch},
           {"start_freq_thz", model.grid.start_freq_thz},
           {"spacing_ghz", model.grid.spacing_ghz}}},
         {"pump_wavelengths_nm", model.pump_wavelengths_nm},
         {"provenance",
          {{"tool_version", prov.tool_version},
           {"config_digest", prov.config_digest},
           {"master_seed", prov.master_seed}}},
         {"nn", mlp_to_json(model.nn)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

BaselineModel load_baseline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse '" + path + "': " + e.what());
  }
  try {
    if (j.at("schema") != "ramgain.model" || j.at("kind") != "conventional")
      throw SchemaError("'" + path + "' is not a conventional model bundle");
    BaselineModel m;
    m.grid.n_ch = j.at("grid").at("n_ch").get<int>();
    m.grid.start_freq_thz = j.at("grid").at("start_freq_thz").get<double>();
    m.grid.spacing_ghz = j.at("grid").at("spacing_ghz").get<double>();
    m.pump_wavelengths_nm = j.at("pump_wavelengths_nm").get<std::vector<double>>();
    m.nn = mlp_from_json(j.at("nn"));
    if (m.nn.output_dim() != m.grid.n_ch) throw SchemaError("nn output dim != grid n_ch");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError("bad model bundle '" + path + "': " + e.what());
  }
}

}  // namespace ramgain
