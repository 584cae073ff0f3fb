#include "ramgain/config.hpp"

#include <cstdio>
#include <fstream>

#include "ramgain/errors.hpp"

namespace ramgain {

using nlohmann::json;

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  fiber.validate();
  grid.validate();
  pumps.validate();
  train.validate();
  if (pumps.pumps.empty()) throw ConfigError("need at least one pump");
  if (ripple_db < 0) throw ConfigError("ripple_db must be >= 0");
  if (pump_power_min_w < 0 || pump_power_max_w < pump_power_min_w)
    throw ConfigError("pump power range must satisfy 0 <= min <= max");
  if (ds2_total_dbm.empty()) throw ConfigError("ds2_total_dbm must be nonempty");
  if (validation_total_dbm.empty()) throw ConfigError("validation_total_dbm must be nonempty");
  if (!(propagation.step_m > 0)) throw ConfigError("propagation step_m must be > 0");
  if (!(propagation.boundary_tol_db > 0)) throw ConfigError("boundary_tol_db must be > 0");
  if (propagation.max_shooting_iterations < 1)
    throw ConfigError("max_shooting_iterations must be >= 1");
  if (!(propagation.relaxation > 0 && propagation.relaxation <= 1))
    throw ConfigError("relaxation must be in (0, 1]");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

DatasetParams RunConfig::dataset_params() const {
  DatasetParams p;
  p.fiber = fiber;
  p.grid = grid;
  p.pump_template = pumps;
  p.p_ref_dbm = p_ref_dbm;
  p.ripple_db = ripple_db;
  p.pump_power_min_w = pump_power_min_w;
  p.pump_power_max_w = pump_power_max_w;
  p.ds2_total_dbm_choices = ds2_total_dbm;
  p.validation_total_dbm_choices = validation_total_dbm;
  p.propagation = propagation;
  p.threads = threads;
  return p;
}

std::vector<double> RunConfig::pump_wavelengths_nm() const {
  std::vector<double> out;
  out.reserve(pumps.pumps.size());
  for (const auto& p : pumps.pumps) out.push_back(p.wavelength_nm);
  return out;
}

json RunConfig::to_json() const {
  json overrides = json::array();
  for (const auto& o : fiber.atten_overrides)
    overrides.push_back({{"freq_thz", o.freq_thz}, {"atten_db_per_km", o.atten_db_per_km}});
  return json{
      {"fiber",
       {{"length_km", fiber.length_km},
        {"atten_db_per_km", fiber.atten_db_per_km},
        {"raman_peak_efficiency", fiber.raman_peak_efficiency},
        {"raman_peak_shift_thz", fiber.raman_peak_shift_thz},
        {"reference_pump_freq_thz", fiber.reference_pump_freq_thz},
        {"atten_overrides", overrides}}},
      {"grid",
       {{"n_ch", grid.n_ch},
        {"start_freq_thz", grid.start_freq_thz},
        {"spacing_ghz", grid.spacing_ghz}}},
      {"pumps",
       {{"wavelengths_nm", pump_wavelengths_nm()},
        {"direction", pumps.direction == Direction::backward ? "backward" : "forward"}}},
      {"dataset",
       {{"p_ref_dbm", p_ref_dbm},
        {"ripple_db", ripple_db},
        {"pump_power_min_w", pump_power_min_w},
        {"pump_power_max_w", pump_power_max_w},
        {"ds2_total_dbm", ds2_total_dbm},
        {"validation_total_dbm", validation_total_dbm}}},
      {"propagation",
       {{"step_m", propagation.step_m},
        {"boundary_tol_db", propagation.boundary_tol_db},
        {"max_shooting_iterations", propagation.max_shooting_iterations},
        {"relaxation", propagation.relaxation}}},
      {"train",
       {{"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"max_epochs", train.max_epochs},
        {"early_stop_patience", train.early_stop_patience},
        {"test_fraction", train.test_fraction}}},
      {"threads", threads}};
}

std::string RunConfig::digest() const { return fnv1a64_hex(to_json().dump()); }

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad config field '") + key + "': " + e.what());
    }
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  if (auto f = j.find("fiber"); f != j.end()) {
    maybe(*f, "length_km", c.fiber.length_km);
    maybe(*f, "atten_db_per_km", c.fiber.atten_db_per_km);
    maybe(*f, "raman_peak_efficiency", c.fiber.raman_peak_efficiency);
    maybe(*f, "raman_peak_shift_thz", c.fiber.raman_peak_shift_thz);
    maybe(*f, "reference_pump_freq_thz", c.fiber.reference_pump_freq_thz);
    if (auto o = f->find("atten_overrides"); o != f->end()) {
      c.fiber.atten_overrides.clear();
      for (const auto& e : *o) {
        AttenOverride ov{};
        ov.freq_thz = e.at("freq_thz").get<double>();
        ov.atten_db_per_km = e.at("atten_db_per_km").get<double>();
        c.fiber.atten_overrides.push_back(ov);
      }
    }
  }
  if (auto g = j.find("grid"); g != j.end()) {
    maybe(*g, "n_ch", c.grid.n_ch);
    maybe(*g, "start_freq_thz", c.grid.start_freq_thz);
    maybe(*g, "spacing_ghz", c.grid.spacing_ghz);
  }
  if (auto p = j.find("pumps"); p != j.end()) {
    if (auto w = p->find("wavelengths_nm"); w != p->end()) {
      auto wl = w->get<std::vector<double>>();
      c.pumps.pumps.clear();
      for (double nm : wl) c.pumps.pumps.push_back({nm, 0.0});
    }
    if (auto d = p->find("direction"); d != p->end()) {
      const auto s = d->get<std::string>();
      if (s == "forward") c.pumps.direction = Direction::forward;
      else if (s == "backward") c.pumps.direction = Direction::backward;
      else throw ConfigError("pump direction must be 'forward' or 'backward'");
    }
  }
  if (auto d = j.find("dataset"); d != j.end()) {
    maybe(*d, "p_ref_dbm", c.p_ref_dbm);
    maybe(*d, "ripple_db", c.ripple_db);
    maybe(*d, "pump_power_min_w", c.pump_power_min_w);
    maybe(*d, "pump_power_max_w", c.pump_power_max_w);
    maybe(*d, "ds2_total_dbm", c.ds2_total_dbm);
    maybe(*d, "validation_total_dbm", c.validation_total_dbm);
  }
  if (auto p = j.find("propagation"); p != j.end()) {
    maybe(*p, "step_m", c.propagation.step_m);
    maybe(*p, "boundary_tol_db", c.propagation.boundary_tol_db);
    maybe(*p, "max_shooting_iterations", c.propagation.max_shooting_iterations);
    maybe(*p, "relaxation", c.propagation.relaxation);
  }
  if (auto t = j.find("train"); t != j.end()) {
    maybe(*t, "learning_rate", c.train.learning_rate);
    maybe(*t, "batch_size", c.train.batch_size);
    maybe(*t, "max_epochs", c.train.max_epochs);
    maybe(*t, "early_stop_patience", c.train.early_stop_patience);
    maybe(*t, "test_fraction", c.train.test_fraction);
  }
  maybe(j, "threads", c.threads);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace ramgain
