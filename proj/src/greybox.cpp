#include "ramgain/greybox.hpp"

#include <Eigen/QR>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ramgain/errors.hpp"

namespace ramgain {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

TransferFit fit_transfer_coeffs(const GainProfile& g, const GainProfile& g_base) {
  if (g.size() != g_base.size())
    throw DimensionMismatch("fit_transfer_coeffs: profile lengths differ");
  const auto n = static_cast<Index>(g.size());
  if (n < 3) throw std::invalid_argument("fit_transfer_coeffs: need at least 3 channels");

  VectorXd y = Eigen::Map<const VectorXd>(g.net_gain_db.data(), n);
  VectorXd base = Eigen::Map<const VectorXd>(g_base.net_gain_db.data(), n);

  MatrixXd design(n, 3);
  design.col(0).setOnes();
  design.col(1) = VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
  design.col(2) = base;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  TransferFit fit;
  if (qr.rank() < 3) {
    // g_base is collinear with [1, n]: fix b3 = 1 and fit offset + tilt only
    fit.rank_deficient = true;
    MatrixXd d2 = design.leftCols(2);
    VectorXd r = y - base;
    VectorXd beta = d2.colPivHouseholderQr().solve(r);
    fit.coeffs = {beta(0), beta(1), 1.0};
  } else {
    VectorXd beta = qr.solve(y);
    fit.coeffs = {beta(0), beta(1), beta(2)};
  }
  VectorXd residual = y - (VectorXd::Constant(n, fit.coeffs.b1) +
                           fit.coeffs.b2 * VectorXd::LinSpaced(n, 1.0, static_cast<double>(n)) +
                           fit.coeffs.b3 * base);
  fit.residual_rmse_db = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return fit;
}

GainProfile apply_transfer(const TransferCoeffs& coeffs, const GainProfile& g_base) {
  GainProfile out;
  out.net_gain_db.resize(g_base.size());
  for (std::size_t i = 0; i < g_base.size(); ++i) {
    out.net_gain_db[i] =
        coeffs.b1 + coeffs.b2 * static_cast<double>(i + 1) + coeffs.b3 * g_base.net_gain_db[i];
  }
  return out;
}

namespace {

MatrixXd pump_features(const std::vector<SampleRecord>& records) {
  const auto np = static_cast<Index>(records.front().pump_powers_w.size());
  MatrixXd x(np, static_cast<Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (static_cast<Index>(records[i].pump_powers_w.size()) != np)
      throw DimensionMismatch("inconsistent pump count across records");
    for (Index p = 0; p < np; ++p)
      x(p, static_cast<Index>(i)) = records[i].pump_powers_w[static_cast<std::size_t>(p)];
  }
  return x;
}

MatrixXd gain_targets(const std::vector<SampleRecord>& records) {
  const auto nc = static_cast<Index>(records.front().gain.size());
  MatrixXd y(nc, static_cast<Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (static_cast<Index>(records[i].gain.size()) != nc)
      throw DimensionMismatch("inconsistent channel count across records");
    for (Index c = 0; c < nc; ++c)
      y(c, static_cast<Index>(i)) = records[i].gain.net_gain_db[static_cast<std::size_t>(c)];
  }
  return y;
}

std::pair<MatrixXd, MatrixXd> take_columns(const MatrixXd& x, const MatrixXd& y,
                                           const std::vector<std::size_t>& idx) {
  MatrixXd xs(x.rows(), static_cast<Index>(idx.size()));
  MatrixXd ys(y.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    xs.col(static_cast<Index>(k)) = x.col(static_cast<Index>(idx[k]));
    ys.col(static_cast<Index>(k)) = y.col(static_cast<Index>(idx[k]));
  }
  return {std::move(xs), std::move(ys)};
}

double heldout_rmse(const Mlp& m, const MatrixXd& x, const MatrixXd& y) {
  return std::sqrt(mse(m, x, y));
}

}  // namespace

Nn1Training train_nn1(const std::vector<SampleRecord>& ds1, double p_ref_dbm,
                      const TrainConfig& config) {
  if (ds1.empty()) throw std::invalid_argument("train_nn1: empty dataset");
  for (const auto& r : ds1) {
    if (std::abs(r.launch.total_dbm() - p_ref_dbm) > 0.05)
      throw std::invalid_argument("train_nn1: record " + std::to_string(r.sample_id) +
                                  " total power is not p_ref");
  }
  const MatrixXd x = pump_features(ds1);
  const MatrixXd y = gain_targets(ds1);
  auto [train_idx, test_idx] = split_indices(ds1.size(), config.test_fraction, config.seed);
  auto [xtr, ytr] = take_columns(x, y, train_idx);
  auto [xte, yte] = take_columns(x, y, test_idx);

  Nn1Training out{Mlp::create({static_cast<int>(x.rows()), 200, static_cast<int>(y.rows())},
                              config.seed),
                  0.0,
                  {}};
  out.result = train(out.model, xtr, ytr, xte, yte, config);
  out.heldout_rmse_db = test_idx.empty() ? std::sqrt(out.result.best_test_mse)
                                         : heldout_rmse(out.model, xte, yte);
  return out;
}

Nn2Training train_nn2(const std::vector<SampleRecord>& ds2,
                      const std::vector<SampleRecord>& ds1, double p_ref_dbm,
                      const TrainConfig& config, const Mlp* nn1_base) {
  if (ds2.empty()) throw std::invalid_argument("train_nn2: empty dataset");
  std::unordered_map<std::int64_t, const SampleRecord*> by_id;
  for (const auto& r : ds1) by_id[r.sample_id] = &r;

  const auto np = ds2.front().pump_powers_w.size();
  std::vector<const SampleRecord*> kept;
  std::vector<TransferCoeffs> labels;
  int dropped = 0;
  for (const auto& r : ds2) {
    auto it = by_id.find(r.sample_id);
    if (it == by_id.end())
      throw UnpairedRecord("ds2 sample " + std::to_string(r.sample_id) + " has no ds1 partner");
    const SampleRecord& partner = *it->second;
    if (partner.pump_powers_w != r.pump_powers_w)
      throw UnpairedRecord("ds2 sample " + std::to_string(r.sample_id) +
                           " pump powers differ from its ds1 partner");
    GainProfile base = partner.gain;
    if (nn1_base != nullptr) {
      VectorXd pumps = Eigen::Map<const VectorXd>(r.pump_powers_w.data(),
                                                  static_cast<Index>(np));
      VectorXd pred = nn1_base->forward(pumps);
      base.net_gain_db.assign(pred.data(), pred.data() + pred.size());
    }
    TransferFit fit = fit_transfer_coeffs(r.gain, base);
    if (fit.rank_deficient) {
      ++dropped;
      continue;
    }
    kept.push_back(&r);
    labels.push_back(fit.coeffs);
  }
  if (kept.empty()) throw std::invalid_argument("train_nn2: all samples rank-deficient");

  MatrixXd x(static_cast<Index>(np) + 1, static_cast<Index>(kept.size()));
  MatrixXd y(3, static_cast<Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t p = 0; p < np; ++p)
      x(static_cast<Index>(p), static_cast<Index>(i)) = kept[i]->pump_powers_w[p];
    x(static_cast<Index>(np), static_cast<Index>(i)) = kept[i]->launch.total_dbm() - p_ref_dbm;
    y(0, static_cast<Index>(i)) = labels[i].b1;
    y(1, static_cast<Index>(i)) = labels[i].b2;
    y(2, static_cast<Index>(i)) = labels[i].b3;
  }

  auto [train_idx, test_idx] = split_indices(kept.size(), config.test_fraction, config.seed);
  auto [xtr, ytr] = take_columns(x, y, train_idx);
  auto [xte, yte] = take_columns(x, y, test_idx);

  Nn2Training out{Mlp::create({static_cast<int>(np) + 1, 50, 30, 3}, config.seed), 0.0, dropped,
                  {}};
  out.result = train(out.model, xtr, ytr, xte, yte, config);
  out.heldout_rmse_db = test_idx.empty() ? std::sqrt(out.result.best_test_mse)
                                         : heldout_rmse(out.model, xte, yte);
  return out;
}

GainProfile predict(const GreyboxModel& model, std::span<const double> pump_powers_w,
                    double total_launch_dbm) {
  if (static_cast<Index>(pump_powers_w.size()) != model.nn1.input_dim())
    throw DimensionMismatch("predict: expected " + std::to_string(model.nn1.input_dim()) +
                            " pump powers, got " + std::to_string(pump_powers_w.size()));
  VectorXd pumps = Eigen::Map<const VectorXd>(pump_powers_w.data(),
                                              static_cast<Index>(pump_powers_w.size()));
  // i) base profile at the reference total power
  VectorXd base = model.nn1.forward(pumps);
  // ii) transfer coefficients from the power difference
  VectorXd nn2_in(pumps.size() + 1);
  nn2_in.head(pumps.size()) = pumps;
  nn2_in(pumps.size()) = total_launch_dbm - model.p_ref_dbm;
  VectorXd coeffs = model.nn2.forward(nn2_in);
  // iii) affine transfer
  GainProfile base_profile;
  base_profile.net_gain_db.assign(base.data(), base.data() + base.size());
  return apply_transfer({coeffs(0), coeffs(1), coeffs(2)}, base_profile);
}

void save_greybox(const GreyboxModel& model, const std::string& path, const Provenance& prov) {
  json j{{"schema", "ramgain.model"},
         {"version", 1},
         {"kind", "greybox"},
         {"p_ref_dbm", model.p_ref_dbm},
         {"grid",
          {{"n_ch", model.grid.n_ch},
           {"start_freq_thz", model.grid.start_freq_thz},
           {"spacing_ghz", model.grid.spacing_ghz}}},
         {"pump_wavelengths_nm", model.pump_wavelengths_nm},
         {"provenance",
          {{"tool_version", prov.tool_version},
           {"config_digest", prov.config_digest},
           {"master_seed", prov.master_seed}}},
         {"nn1", mlp_to_json(model.nn1)},
         {"nn2", mlp_to_json(model.nn2)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

GreyboxModel load_greybox(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse '" + path + "': " + e.what());
  }
  try {
    if (j.at("schema") != "ramgain.model" || j.at("kind") != "greybox")
      throw SchemaError("'" + path + "' is not a greybox model bundle");
    GreyboxModel m;
    m.p_ref_dbm = j.at("p_ref_dbm").get<double>();
    m.grid.n_ch = j.at("grid").at("n_ch").get<int>();
    m.grid.start_freq_thz = j.at("grid").at("start_freq_thz").get<double>();
    m.grid.spacing_ghz = j.at("grid").at("spacing_ghz").get<double>();
    m.pump_wavelengths_nm = j.at("pump_wavelengths_nm").get<std::vector<double>>();
    m.nn1 = mlp_from_json(j.at("nn1"));
    m.nn2 = mlp_from_json(j.at("nn2"));
    if (m.nn1.output_dim() != m.grid.n_ch)
      throw SchemaError("nn1 output dim != grid n_ch");
    if (m.nn2.input_dim() != m.nn1.input_dim() + 1)
      throw SchemaError("nn2 input dim != pump count + 1");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError("bad model bundle '" + path + "': " + e.what());
  }
}

}  // namespace ramgain
