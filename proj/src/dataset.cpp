#include "ramgain/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "ramgain/errors.hpp"
#include "ramgain/rng.hpp"
#include "ramgain/units.hpp"

namespace ramgain {

using nlohmann::json;

namespace {

// seed-derivation streams, part of the on-disk reproducibility contract
constexpr std::uint64_t kStreamDs1 = 0;
constexpr std::uint64_t kStreamDs2 = 1;
constexpr std::uint64_t kStreamValidation = 2;

std::uint64_t tag_stream(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::ds1: return kStreamDs1;
    case DatasetTag::ds2: return kStreamDs2;
    case DatasetTag::validation: return kStreamValidation;
  }
  return 0;
}

/// Runs fn(i) for i in [0, n) on a small worker pool; deterministic because
/// each index writes only its own slot. The first exception wins and aborts
/// the remaining work.
void parallel_for(std::size_t n, int threads, const ProgressFn& progress,
                  const std::function<void(std::size_t)>& fn) {
  unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, n == 0 ? 1 : static_cast<unsigned>(n));

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::mutex progress_mutex;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        break;
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, n);
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

SampleRecord label_sample(const DatasetParams& params, SampleRecord rec) {
  const PumpSet pumps = params.pump_template.with_powers(rec.pump_powers_w);
  try {
    rec.gain = net_gain(params.fiber, params.grid, pumps, rec.launch, params.propagation);
  } catch (const Error& e) {
    throw NonConvergence("sample " + std::to_string(rec.sample_id) + ": " + e.what());
  }
  return rec;
}

}  // namespace

std::string to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::ds1: return "ds1";
    case DatasetTag::ds2: return "ds2";
    case DatasetTag::validation: return "validation";
  }
  return "?";
}

DatasetTag dataset_tag_from_string(const std::string& s) {
  if (s == "ds1") return DatasetTag::ds1;
  if (s == "ds2") return DatasetTag::ds2;
  if (s == "validation") return DatasetTag::validation;
  throw SchemaError("unknown dataset tag '" + s + "'");
}

LaunchProfile gen_launch_profile(double total_dbm, double ripple_db, int n_ch,
                                 std::uint64_t seed) {
  if (n_ch < 1) throw std::invalid_argument("gen_launch_profile: n_ch must be >= 1");
  if (ripple_db < 0.0) throw std::invalid_argument("gen_launch_profile: ripple_db must be >= 0");
  Rng rng(seed);
  std::vector<double> offsets(static_cast<std::size_t>(n_ch));
  for (auto& o : offsets) o = rng.uniform(-ripple_db / 2.0, ripple_db / 2.0);
  double sum_mw = 0.0;
  for (double o : offsets) sum_mw += std::pow(10.0, o / 10.0);
  const double flat = total_dbm - 10.0 * std::log10(sum_mw);
  LaunchProfile lp;
  lp.per_channel_dbm.reserve(offsets.size());
  for (double o : offsets) lp.per_channel_dbm.push_back(flat + o);
  return lp;
}

std::vector<SampleRecord> gen_dataset1(const DatasetParams& params, int n_samples,
                                       std::uint64_t seed, const ProgressFn& progress) {
  if (n_samples < 1) throw std::invalid_argument("gen_dataset1: n_samples must be >= 1");
  std::vector<SampleRecord> out(static_cast<std::size_t>(n_samples));
  parallel_for(out.size(), params.threads, progress, [&](std::size_t i) {
    SampleRecord rec;
    rec.sample_id = static_cast<std::int64_t>(i);
    rec.tag = DatasetTag::ds1;
    rec.rng_seed = derive_seed(seed, i, kStreamDs1);
    Rng rng(rec.rng_seed);
    rec.pump_powers_w.resize(params.pump_template.pumps.size());
    for (auto& p : rec.pump_powers_w)
      p = rng.uniform(params.pump_power_min_w, params.pump_power_max_w);
    rec.launch = gen_launch_profile(params.p_ref_dbm, params.ripple_db, params.grid.n_ch,
                                    rng.next_u64());
    out[i] = label_sample(params, std::move(rec));
  });
  return out;
}

std::vector<SampleRecord> gen_dataset2(const DatasetParams& params,
                                       const std::vector<SampleRecord>& ds1, std::uint64_t seed,
                                       const ProgressFn& progress) {
  if (ds1.empty()) throw std::invalid_argument("gen_dataset2: ds1 must be nonempty");
  if (params.ds2_total_dbm_choices.empty())
    throw std::invalid_argument("gen_dataset2: no total-power choices configured");
  std::vector<SampleRecord> out(ds1.size());
  parallel_for(out.size(), params.threads, progress, [&](std::size_t i) {
    SampleRecord rec;
    rec.sample_id = ds1[i].sample_id;  // pairing is by sample_id
    rec.tag = DatasetTag::ds2;
    rec.rng_seed = derive_seed(seed, static_cast<std::uint64_t>(ds1[i].sample_id), kStreamDs2);
    Rng rng(rec.rng_seed);
    rec.pump_powers_w = ds1[i].pump_powers_w;
    const auto& totals = params.ds2_total_dbm_choices;
    const double total = totals[rng.uniform_index(totals.size())];
    rec.launch = gen_launch_profile(total, params.ripple_db, params.grid.n_ch, rng.next_u64());
    out[i] = label_sample(params, std::move(rec));
  });
  return out;
}

std::vector<SampleRecord> gen_validation(const DatasetParams& params, int n_samples,
                                         std::uint64_t seed, const ProgressFn& progress) {
  if (n_samples < 1) throw std::invalid_argument("gen_validation: n_samples must be >= 1");
  if (params.validation_total_dbm_choices.empty())
    throw std::invalid_argument("gen_validation: no total-power choices configured");
  std::vector<SampleRecord> out(static_cast<std::size_t>(n_samples));
  parallel_for(out.size(), params.threads, progress, [&](std::size_t i) {
    SampleRecord rec;
    rec.sample_id = static_cast<std::int64_t>(i);
    rec.tag = DatasetTag::validation;
    rec.rng_seed = derive_seed(seed, i, kStreamValidation);
    Rng rng(rec.rng_seed);
    rec.pump_powers_w.resize(params.pump_template.pumps.size());
    for (auto& p : rec.pump_powers_w)
      p = rng.uniform(params.pump_power_min_w, params.pump_power_max_w);
    const auto& totals = params.validation_total_dbm_choices;
    const double total = totals[rng.uniform_index(totals.size())];
    rec.launch = gen_launch_profile(total, params.ripple_db, params.grid.n_ch, rng.next_u64());
    out[i] = label_sample(params, std::move(rec));
  });
  return out;
}

namespace {

json record_to_json(const SampleRecord& r) {
  return json{{"sample_id", r.sample_id},
              {"tag", to_string(r.tag)},
              {"seed", r.rng_seed},
              {"pump_powers_w", r.pump_powers_w},
              {"launch_dbm", r.launch.per_channel_dbm},
              {"gain_db", r.gain.net_gain_db}};
}

template <typename T>
T field(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaError("line " + std::to_string(line) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("line " + std::to_string(line) + ": bad field '" + key + "': " + e.what());
  }
}

SampleRecord record_from_json(const json& j, std::size_t line) {
  SampleRecord r;
  r.sample_id = field<std::int64_t>(j, "sample_id", line);
  r.tag = dataset_tag_from_string(field<std::string>(j, "tag", line));
  r.rng_seed = field<std::uint64_t>(j, "seed", line);
  r.pump_powers_w = field<std::vector<double>>(j, "pump_powers_w", line);
  r.launch.per_channel_dbm = field<std::vector<double>>(j, "launch_dbm", line);
  r.gain.net_gain_db = field<std::vector<double>>(j, "gain_db", line);
  if (r.gain.size() != r.launch.size())
    throw SchemaError("line " + std::to_string(line) + ": gain length " +
                      std::to_string(r.gain.size()) + " != launch length " +
                      std::to_string(r.launch.size()));
  for (double g : r.gain.net_gain_db)
    if (!std::isfinite(g))
      throw SchemaError("line " + std::to_string(line) + ": non-finite gain value");
  return r;
}

}  // namespace

void save_dataset(const std::vector<SampleRecord>& records, const std::string& path,
                  const Provenance& prov) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  json header{{"schema", "ramgain.dataset"},
              {"version", 1},
              {"count", records.size()},
              {"provenance",
               {{"tool_version", prov.tool_version},
                {"config_digest", prov.config_digest},
                {"master_seed", prov.master_seed}}}};
  out << header.dump() << '\n';
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<SampleRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<SampleRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("schema")) {
      if (j["schema"] != "ramgain.dataset")
        throw SchemaError("line " + std::to_string(line_no) + ": unexpected schema '" +
                          j["schema"].dump() + "'");
      if (field<int>(j, "version", line_no) != 1)
        throw SchemaError("line " + std::to_string(line_no) + ": unsupported dataset version");
      continue;
    }
    records.push_back(record_from_json(j, line_no));
  }
  return records;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("split_indices: test_fraction must be in [0, 1)");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, n, 0x5917ULL));
  rng.shuffle(idx);
  std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n >= 2 && n_test == 0 && test_fraction > 0.0) n_test = 1;
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

}  // namespace ramgain
