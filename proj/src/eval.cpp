#include "ramgain/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ramgain/errors.hpp"
#include "ramgain/rng.hpp"

namespace ramgain {

using nlohmann::json;

double rmse_db(const GainProfile& pred, const GainProfile& truth) {
  if (pred.size() != truth.size())
    throw DimensionMismatch("rmse: profile lengths differ (" + std::to_string(pred.size()) +
                            " vs " + std::to_string(truth.size()) + ")");
  if (pred.size() == 0) throw EmptyInput("rmse: empty profiles");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.net_gain_db[i] - truth.net_gain_db[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> errors) {
  if (errors.empty()) throw EmptyInput("empirical_cdf: no values");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> curve;
  curve.reserve(sorted.size());
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    curve.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  return curve;
}

double percentile(std::span<const double> errors, double p) {
  if (errors.empty()) throw EmptyInput("percentile: no values");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p must be in [0, 100]");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() == 1) return sorted.front();
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

EvalReport summarize(std::vector<double> errors, int dataset_size, std::string method) {
  EvalReport r;
  r.per_sample_rmse_db = std::move(errors);
  r.dataset_size = dataset_size;
  r.method_tag = std::move(method);
  double sum = 0.0, mx = 0.0;
  for (double e : r.per_sample_rmse_db) {
    sum += e;
    mx = std::max(mx, e);
  }
  r.mean_rmse_db = sum / static_cast<double>(r.per_sample_rmse_db.size());
  r.max_rmse_db = mx;
  r.percentile_90_db = percentile(r.per_sample_rmse_db, 90.0);
  return r;
}

}  // namespace

EvalReport evaluate_greybox(const GreyboxModel& model,
                            const std::vector<SampleRecord>& validation) {
  if (validation.empty()) throw EmptyInput("evaluate: empty validation set");
  std::vector<double> errors;
  errors.reserve(validation.size());
  for (const auto& r : validation) {
    const GainProfile pred = predict(model, r.pump_powers_w, r.launch.total_dbm());
    errors.push_back(rmse_db(pred, r.gain));
  }
  return summarize(std::move(errors), 0, "greybox");
}

EvalReport evaluate_conventional(const BaselineModel& model,
                                 const std::vector<SampleRecord>& validation) {
  if (validation.empty()) throw EmptyInput("evaluate: empty validation set");
  std::vector<double> errors;
  errors.reserve(validation.size());
  for (const auto& r : validation) {
    const GainProfile pred = predict_conventional(model, r.pump_powers_w, r.launch);
    errors.push_back(rmse_db(pred, r.gain));
  }
  return summarize(std::move(errors), 0, "conventional");
}

std::vector<SweepCell> sweep(const std::vector<SampleRecord>& ds1,
                             const std::vector<SampleRecord>& ds2,
                             const std::vector<SampleRecord>& validation,
                             const std::vector<int>& dataset_sizes, std::uint64_t master_seed,
                             const SweepParams& params) {
  if (validation.empty()) throw EmptyInput("sweep: empty validation set");
  std::unordered_map<std::int64_t, const SampleRecord*> ds1_by_id;
  for (const auto& r : ds1) ds1_by_id[r.sample_id] = &r;

  // one shuffle for all sizes: prefixes give nested training subsets
  std::vector<std::size_t> pair_order(ds2.size());
  for (std::size_t i = 0; i < pair_order.size(); ++i) pair_order[i] = i;
  Rng shuffle_rng(derive_seed(master_seed, ds2.size(), 0x5BEDULL));
  shuffle_rng.shuffle(pair_order);

  std::vector<int> sizes = dataset_sizes;
  std::sort(sizes.begin(), sizes.end());

  std::vector<SweepCell> cells;
  for (int budget : sizes) {
    if (budget < 4 || budget % 2 != 0)
      throw std::invalid_argument("sweep: dataset sizes must be even and >= 4");
    const auto k = static_cast<std::size_t>(budget / 2);
    if (k > ds2.size())
      throw std::invalid_argument("sweep: budget " + std::to_string(budget) +
                                  " exceeds available pairs (" + std::to_string(ds2.size()) +
                                  " ds2 records)");
    std::vector<SampleRecord> sub_ds1, sub_ds2, unioned;
    sub_ds1.reserve(k);
    sub_ds2.reserve(k);
    unioned.reserve(2 * k);
    for (std::size_t j = 0; j < k; ++j) {
      const SampleRecord& d2 = ds2[pair_order[j]];
      auto it = ds1_by_id.find(d2.sample_id);
      if (it == ds1_by_id.end())
        throw UnpairedRecord("sweep: ds2 sample " + std::to_string(d2.sample_id) +
                             " has no ds1 partner");
      sub_ds1.push_back(*it->second);
      sub_ds2.push_back(d2);
      unioned.push_back(*it->second);
      unioned.push_back(d2);
    }

    SweepCell cell;
    cell.dataset_size = budget;

    TrainConfig nn1_cfg = params.train;
    nn1_cfg.seed = derive_seed(master_seed, static_cast<std::uint64_t>(budget), 1);
    Nn1Training nn1 = train_nn1(sub_ds1, params.p_ref_dbm, nn1_cfg);

    TrainConfig nn2_cfg = params.train;
    nn2_cfg.seed = derive_seed(master_seed, static_cast<std::uint64_t>(budget), 2);
    Nn2Training nn2 = train_nn2(sub_ds2, sub_ds1, params.p_ref_dbm, nn2_cfg);

    cell.greybox = GreyboxModel{std::move(nn1.model), std::move(nn2.model), params.p_ref_dbm,
                                params.grid, params.pump_wavelengths_nm};

    TrainConfig conv_cfg = params.train;
    conv_cfg.seed = derive_seed(master_seed, static_cast<std::uint64_t>(budget), 3);
    BaselineTraining conv = train_conventional(unioned, params.grid, conv_cfg);
    cell.conventional = std::move(conv.model);
    cell.conventional.pump_wavelengths_nm = params.pump_wavelengths_nm;

    cell.greybox_report = evaluate_greybox(cell.greybox, validation);
    cell.greybox_report.dataset_size = budget;
    cell.greybox_report.seed = master_seed;
    cell.greybox_report.config_digest = params.config_digest;

    cell.conventional_report = evaluate_conventional(cell.conventional, validation);
    cell.conventional_report.dataset_size = budget;
    cell.conventional_report.seed = master_seed;
    cell.conventional_report.config_digest = params.config_digest;

    cells.push_back(std::move(cell));
  }
  return cells;
}

void write_report(const std::vector<EvalReport>& reports, const std::string& out_dir,
                  const Provenance& prov) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());

  json summary{{"schema", "ramgain.report"},
               {"version", 1},
               {"provenance",
                {{"tool_version", prov.tool_version},
                 {"config_digest", prov.config_digest},
                 {"master_seed", prov.master_seed}}}};
  json entries = json::array();
  for (const auto& r : reports) {
    entries.push_back({{"method", r.method_tag},
                       {"dataset_size", r.dataset_size},
                       {"seed", r.seed},
                       {"config_digest", r.config_digest},
                       {"n_validation", r.per_sample_rmse_db.size()},
                       {"mean_rmse_db", r.mean_rmse_db},
                       {"max_rmse_db", r.max_rmse_db},
                       {"percentile_90_db", r.percentile_90_db}});
  }
  summary["reports"] = std::move(entries);

  const std::string provenance_comment = "# ramgain " + prov.tool_version +
                                         " config=" + prov.config_digest +
                                         " seed=" + std::to_string(prov.master_seed);

  {
    std::ofstream out(fs::path(out_dir) / "summary.json", std::ios::trunc);
    if (!out) throw IoError("cannot write summary.json in '" + out_dir + "'");
    out << summary.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "errors.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write errors.csv in '" + out_dir + "'");
    out << provenance_comment << '\n';
    out << "method,dataset_size,sample_index,rmse_db\n";
    out.precision(17);
    for (const auto& r : reports)
      for (std::size_t i = 0; i < r.per_sample_rmse_db.size(); ++i)
        out << r.method_tag << ',' << r.dataset_size << ',' << i << ','
            << r.per_sample_rmse_db[i] << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "cdf.csv", std::ios::trunc);
    if (!out) throw IoError("cannot write cdf.csv in '" + out_dir + "'");
    out << provenance_comment << '\n';
    out << "method,dataset_size,rmse_db,cum_fraction\n";
    out.precision(17);
    for (const auto& r : reports)
      for (const auto& [v, f] : empirical_cdf(r.per_sample_rmse_db))
        out << r.method_tag << ',' << r.dataset_size << ',' << v << ',' << f << '\n';
  }
}

std::vector<EvalReport> load_report_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse '" + path + "': " + e.what());
  }
  try {
    if (j.at("schema") != "ramgain.report") throw SchemaError("not a report summary");
    std::vector<EvalReport> out;
    for (const auto& e : j.at("reports")) {
      EvalReport r;
      r.method_tag = e.at("method").get<std::string>();
      r.dataset_size = e.at("dataset_size").get<int>();
      r.seed = e.at("seed").get<std::uint64_t>();
      r.config_digest = e.at("config_digest").get<std::string>();
      r.mean_rmse_db = e.at("mean_rmse_db").get<double>();
      r.max_rmse_db = e.at("max_rmse_db").get<double>();
      r.percentile_90_db = e.at("percentile_90_db").get<double>();
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw SchemaError("bad report summary '" + path + "': " + e.what());
  }
}

}  // namespace ramgain
