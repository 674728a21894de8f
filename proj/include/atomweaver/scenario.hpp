#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomweaver/amplitude.hpp"
#include "atomweaver/csv.hpp"
#include "atomweaver/lattice.hpp"
#include "atomweaver/phase_optimizer.hpp"
#include "atomweaver/simulator.hpp"
#include "atomweaver/spectrum.hpp"
#include "atomweaver/sweep.hpp"
#include "atomweaver/waveform.hpp"

namespace atomweaver {

enum class ExperimentKind { single_cycle, repeated, maintenance, method1_2d, method2_2d, waveform, phases, sweep_table };

inline constexpr std::pair<std::string_view, ExperimentKind> kExperimentNames[] = {
    {"single-cycle", ExperimentKind::single_cycle}, {"repeated", ExperimentKind::repeated},
    {"maintenance", ExperimentKind::maintenance},   {"2d-method1", ExperimentKind::method1_2d},
    {"2d-method2", ExperimentKind::method2_2d},     {"waveform", ExperimentKind::waveform},
    {"phases", ExperimentKind::phases},             {"sweep-table", ExperimentKind::sweep_table},
};

inline std::string_view kind_name(ExperimentKind k) {
  for (const auto& [name, kind] : kExperimentNames)
    if (kind == k) return name;
  return "unknown";
}

enum class PhaseMode { equal, random, optimized };
enum class RepairMode { off, on, both };

/// A configuration problem. Syntax errors map to exit status 2, bad values to 3.
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { parse, invalid_parameter };

  ConfigError(Kind kind, std::string where, const std::string& message)
      : std::runtime_error(where.empty() ? message : where + ": " + message), kind_(kind) {}

  Kind kind() const { return kind_; }
  int exit_code() const { return kind_ == Kind::parse ? 2 : 3; }

 private:
  Kind kind_;
};

struct Scenario {
  std::string name;
  ExperimentKind kind = ExperimentKind::single_cycle;
  std::filesystem::path out;
  bool json = false;
  MCConfig mc;

  // repeated / maintenance
  std::vector<std::size_t> targets{20};
  std::size_t max_attempts = 10;
  RepairMode repair = RepairMode::both;
  double duration = 30.0;

  // 2D projections
  std::vector<std::size_t> grid_rows{5, 10, 15, 20};
  std::vector<std::size_t> grid_cols{5, 10, 15, 20};
  std::size_t target_cols = 0;
  std::size_t max_passes = 1000;

  // waveform / phases / sweep-table
  double waveform_duration = 1e-3;
  Hz upconversion_hz = kUpconversionHz;
  Hz sample_rate_hz = kSampleRateHz;
  PhaseMode phase_mode = PhaseMode::optimized;
  double coupling = 0.0;  // > 0 enables amplitude calibration against the intermod plant
  double sweep_duration = kBaseSweepDuration;
  std::filesystem::path waveform_out;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || text.empty())
    throw ConfigError(ConfigError::Kind::invalid_parameter, where, "cannot parse number '" + text + "'");
  return value;
}

inline bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "off" || text == "no" || text == "0") return false;
  throw ConfigError(ConfigError::Kind::invalid_parameter, where, "expected a boolean, got '" + text + "'");
}

inline void require(bool ok, const std::string& where, const std::string& message) {
  if (!ok) throw ConfigError(ConfigError::Kind::invalid_parameter, where, message);
}

inline std::vector<std::size_t> parse_size_list(const std::string& v, const std::string& where) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_number<std::size_t>(item, where));
  require(!out.empty(), where, "list must not be empty");
  return out;
}

using Setter = std::function<void(Scenario&, const std::string&, const std::string&)>;

inline double positive_double(const std::string& v, const std::string& w) {
  const double d = parse_number<double>(v, w);
  require(d > 0.0, w, "must be positive");
  return d;
}

inline double nonneg_double(const std::string& v, const std::string& w) {
  const double d = parse_number<double>(v, w);
  require(d >= 0.0 && std::isfinite(d), w, "must be a finite value >= 0");
  return d;
}

inline void set_axis(Scenario& s, const std::function<void(AxisComb&)>& edit, const std::string& where) {
  AxisComb axis = s.mc.lattice.col_axis();
  edit(axis);
  try {
    s.mc.lattice = TrapLattice::line(axis);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::invalid_parameter, where, e.what());
  }
}

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"kind",
       [](Scenario& s, const std::string& v, const std::string& w) {
         for (const auto& [name, kind] : kExperimentNames)
           if (v == name) {
             s.kind = kind;
             return;
           }
         throw ConfigError(ConfigError::Kind::invalid_parameter, w, "unknown experiment kind '" + v + "'");
       }},
      {"out", [](Scenario& s, const std::string& v, const std::string& w) {
         require(!v.empty(), w, "output path must not be empty");
         s.out = v;
       }},
      {"json", [](Scenario& s, const std::string& v, const std::string& w) { s.json = parse_bool(v, w); }},
      {"seed", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.seed = parse_number<std::uint64_t>(v, w); }},
      {"trials", [](Scenario& s, const std::string& v, const std::string& w) {
         s.mc.trials = parse_number<std::size_t>(v, w);
         require(s.mc.trials >= 1, w, "trials must be >= 1");
       }},
      {"threads", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.threads = parse_number<unsigned>(v, w); }},
      {"sites", [](Scenario& s, const std::string& v, const std::string& w) {
         const auto n = parse_number<std::size_t>(v, w);
         set_axis(s, [n](AxisComb& a) { a.sites = n; }, w);
       }},
      {"freq_start_hz", [](Scenario& s, const std::string& v, const std::string& w) {
         const auto f = parse_number<Hz>(v, w);
         set_axis(s, [f](AxisComb& a) { a.freq_start_hz = f; }, w);
       }},
      {"freq_step_hz", [](Scenario& s, const std::string& v, const std::string& w) {
         const auto f = parse_number<Hz>(v, w);
         set_axis(s, [f](AxisComb& a) { a.freq_step_hz = f; }, w);
       }},
      {"pitch_m", [](Scenario& s, const std::string& v, const std::string& w) {
         const auto p = parse_number<double>(v, w);
         set_axis(s, [p](AxisComb& a) { a.pitch_m = p; }, w);
       }},
      {"p_load", [](Scenario& s, const std::string& v, const std::string& w) {
         const double p = parse_number<double>(v, w);
         require(p >= 0.0 && p <= 1.0, w, "p_load must lie in [0, 1]");
         s.mc.loading.p_load = p;
       }},
      {"tau", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.loss.tau = positive_double(v, w); }},
      {"beta_move", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.loss.beta_move = nonneg_double(v, w); }},
      {"exposure", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.exposure = nonneg_double(v, w); }},
      {"transfer_base", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.transfer_base = nonneg_double(v, w); }},
      {"transfer_per_row", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.transfer_per_row = nonneg_double(v, w); }},
      {"analysis", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.analysis = nonneg_double(v, w); }},
      {"waveform_per_sweep", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.waveform_per_sweep = nonneg_double(v, w); }},
      {"move_per_sweep_set", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.move_per_sweep_set = nonneg_double(v, w); }},
      {"buffer", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.buffer = nonneg_double(v, w); }},
      {"cycle_period", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.cycle_period = nonneg_double(v, w); }},
      {"repair_period", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.repair_period = positive_double(v, w); }},
      {"rearrange_period", [](Scenario& s, const std::string& v, const std::string& w) { s.mc.timing.rearrange_period = nonneg_double(v, w); }},
      {"targets", [](Scenario& s, const std::string& v, const std::string& w) { s.targets = parse_size_list(v, w); }},
      {"max_attempts", [](Scenario& s, const std::string& v, const std::string& w) {
         s.max_attempts = parse_number<std::size_t>(v, w);
         require(s.max_attempts >= 1, w, "max_attempts must be >= 1");
       }},
      {"repair", [](Scenario& s, const std::string& v, const std::string& w) {
         if (v == "both") s.repair = RepairMode::both;
         else s.repair = parse_bool(v, w) ? RepairMode::on : RepairMode::off;
       }},
      {"duration", [](Scenario& s, const std::string& v, const std::string& w) { s.duration = positive_double(v, w); }},
      {"rows", [](Scenario& s, const std::string& v, const std::string& w) { s.grid_rows = parse_size_list(v, w); }},
      {"cols", [](Scenario& s, const std::string& v, const std::string& w) { s.grid_cols = parse_size_list(v, w); }},
      {"target_cols", [](Scenario& s, const std::string& v, const std::string& w) { s.target_cols = parse_number<std::size_t>(v, w); }},
      {"max_passes", [](Scenario& s, const std::string& v, const std::string& w) {
         s.max_passes = parse_number<std::size_t>(v, w);
         require(s.max_passes >= 1, w, "max_passes must be >= 1");
       }},
      {"waveform_duration", [](Scenario& s, const std::string& v, const std::string& w) { s.waveform_duration = positive_double(v, w); }},
      {"upconversion_hz", [](Scenario& s, const std::string& v, const std::string& w) { s.upconversion_hz = parse_number<Hz>(v, w); }},
      {"sample_rate_hz", [](Scenario& s, const std::string& v, const std::string& w) {
         s.sample_rate_hz = parse_number<Hz>(v, w);
         require(s.sample_rate_hz > 0, w, "sample rate must be positive");
       }},
      {"phases", [](Scenario& s, const std::string& v, const std::string& w) {
         if (v == "equal") s.phase_mode = PhaseMode::equal;
         else if (v == "random") s.phase_mode = PhaseMode::random;
         else if (v == "optimized") s.phase_mode = PhaseMode::optimized;
         else throw ConfigError(ConfigError::Kind::invalid_parameter, w, "phases must be equal, random or optimized");
       }},
      {"coupling", [](Scenario& s, const std::string& v, const std::string& w) { s.coupling = nonneg_double(v, w); }},
      {"sweep_duration", [](Scenario& s, const std::string& v, const std::string& w) { s.sweep_duration = positive_double(v, w); }},
      {"waveform_out", [](Scenario& s, const std::string& v, const std::string& w) {
         require(!v.empty(), w, "path must not be empty");
         s.waveform_out = v;
       }},
  };
  return table;
}

}  // namespace detail

/// Parses INI-style text: one `[name]` section per scenario holding `key = value`
/// lines. `#` and `;` start comments. Every scenario needs `kind` and `out`.
inline std::vector<Scenario> parse_scenarios(std::istream& in, const std::string& source = "<config>") {
  std::vector<Scenario> out;
  std::vector<std::string> seen_keys;
  std::string line;
  std::size_t lineno = 0;
  std::size_t section_line = 0;
  auto finish = [&]() {
    if (out.empty()) return;
    const Scenario& s = out.back();
    const std::string where = source + ":" + std::to_string(section_line) + ": [" + s.name + "]";
    const bool has_kind = std::find(seen_keys.begin(), seen_keys.end(), "kind") != seen_keys.end();
    const bool has_out = std::find(seen_keys.begin(), seen_keys.end(), "out") != seen_keys.end();
    detail::require(has_kind, where, "missing required key 'kind'");
    detail::require(has_out, where, "missing required key 'out'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    const std::string text = detail::trim(cut == std::string::npos ? line : line.substr(0, cut));
    if (text.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3)
        throw ConfigError(ConfigError::Kind::parse, where, "malformed section header");
      const std::string name = detail::trim(text.substr(1, text.size() - 2));
      const bool valid = !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
      });
      if (!valid) throw ConfigError(ConfigError::Kind::parse, where, "invalid scenario name '" + name + "'");
      for (const auto& s : out)
        if (s.name == name) throw ConfigError(ConfigError::Kind::parse, where, "duplicate scenario '" + name + "'");
      finish();
      out.emplace_back();
      out.back().name = name;
      seen_keys.clear();
      section_line = lineno;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(ConfigError::Kind::parse, where, "expected 'key = value'");
    if (out.empty()) throw ConfigError(ConfigError::Kind::parse, where, "key outside of a [scenario] section");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(ConfigError::Kind::parse, where, "empty key");
    if (std::find(seen_keys.begin(), seen_keys.end(), key) != seen_keys.end())
      throw ConfigError(ConfigError::Kind::parse, where, "duplicate key '" + key + "'");
    const auto& table = detail::setters();
    const auto it = table.find(key);
    if (it == table.end())
      throw ConfigError(ConfigError::Kind::invalid_parameter, where, "unknown key '" + key + "'");
    it->second(out.back(), value, where + ": field '" + key + "'");
    seen_keys.push_back(key);
  }
  finish();
  return out;
}

inline std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigError::Kind::parse, path.string(), "cannot open config file");
  return parse_scenarios(in, path.string());
}

inline constexpr std::string_view kPresetNames[] = {"fig3", "fig4c", "fig4d", "figS5a", "figS5b", "figS5c", "figS5d"};

/// Scenario preloaded with the parameters of one published figure.
inline Scenario preset(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  s.out = s.name + ".csv";
  s.mc.seed = 42;
  s.mc.lattice = default_lattice_1d();
  s.mc.loading.p_load = 0.6;
  s.mc.loss.tau = 6.2;
  if (name == "fig3") {
    s.kind = ExperimentKind::single_cycle;
    s.mc.trials = 10'000;
  } else if (name == "fig4c") {
    s.kind = ExperimentKind::repeated;
    s.mc.trials = 10'000;
    s.targets = {40, 50, 60};
    s.max_attempts = 10;
  } else if (name == "fig4d") {
    s.kind = ExperimentKind::maintenance;
    s.mc.trials = 10'000;
    s.mc.loss.tau = 10.0;
    // ~45 atoms loaded on average, so reservoirs are ~25 (N = 20) and ~5 (N = 40).
    s.mc.loading.p_load = 0.45;
    s.targets = {20, 40};
    s.repair = RepairMode::both;
    s.duration = 30.0;
  } else if (name == "figS5a" || name == "figS5b" || name == "figS5c" || name == "figS5d") {
    const bool upgraded = name == "figS5b" || name == "figS5d";
    const bool deletion = name == "figS5a" || name == "figS5b";
    s.kind = deletion ? ExperimentKind::method1_2d : ExperimentKind::method2_2d;
    s.mc.trials = 500;
    s.mc.loading.p_load = upgraded ? 0.9 : 0.6;
    s.mc.loss.tau = upgraded ? 60.0 : 10.0;
    if (deletion) {
      s.grid_rows = {2, 3, 4, 5, 6, 8, 10, 12};
      s.grid_cols = {2, 3, 4, 5, 6, 8, 10, 12};
    } else {
      s.grid_rows = {10, 15, 20, 25, 30, 35, 40};
      s.grid_cols = {10, 20, 30, 40};
    }
  } else {
    std::string valid;
    for (auto n : kPresetNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
    throw ConfigError(ConfigError::Kind::invalid_parameter, "preset",
                      "unknown preset '" + std::string(name) + "'; valid names: " + valid);
  }
  return s;
}

/// Files written by one scenario plus a summary for the JSON sidecar.
struct ScenarioReport {
  std::vector<std::filesystem::path> files;
  nlohmann::json summary = nlohmann::json::object();
};

namespace detail {

inline std::filesystem::path sibling(const std::filesystem::path& main, const std::string& suffix,
                                     const std::string& ext = ".csv") {
  return main.parent_path() / (main.stem().string() + suffix + ext);
}

inline CsvTable single_cycle_table(const Scenario& s, const SingleCycleResult& r) {
  CsvTable csv({"N", "pre_estimate", "pre_lo", "pre_hi", "post_estimate", "post_lo", "post_hi", "solid", "dashed",
                "dashdot", "trials", "seed", "scenario"});
  const auto pmf = binomial_pmf(s.mc.lattice.size(), s.mc.loading.p_load);
  for (std::size_t N = 1; N < r.pre.size(); ++N) {
    const auto th = theory_curves(N, pmf, s.mc.loss.tau, s.mc.timing.rearrange_period);
    csv.row(N, r.pre[N].estimate, r.pre[N].lower, r.pre[N].upper, r.post[N].estimate, r.post[N].lower,
            r.post[N].upper, th.solid, th.dashed, th.dashdot, s.mc.trials, s.mc.seed, s.name);
  }
  return csv;
}

inline ScenarioReport run_single_cycle(const Scenario& s, const std::filesystem::path& out) {
  const auto r = simulate_single_cycle(s.mc);
  ScenarioReport rep;
  single_cycle_table(s, r).save(out);
  rep.files.push_back(out);

  CsvTable occ({"site", "pre_occupancy", "pre_lo", "pre_hi", "post_occupancy", "post_lo", "post_hi"});
  for (std::size_t i = 0; i < r.pre_occupancy.size(); ++i)
    occ.row(i, r.pre_occupancy[i].estimate, r.pre_occupancy[i].lower, r.pre_occupancy[i].upper,
            r.post_occupancy[i].estimate, r.post_occupancy[i].lower, r.post_occupancy[i].upper);
  occ.save(sibling(out, "_occupancy"));
  rep.files.push_back(sibling(out, "_occupancy"));

  // Without rearrangement only exposure and readout are needed: 150 ms vs 200 ms cycles.
  const double pre_cycle = s.mc.timing.cycle_period - s.mc.timing.rearrange_period;
  CsvTable wait({"N", "wait_pre_theory_s", "wait_post_theory_s", "wait_post_s", "wait_post_lo_s", "wait_post_hi_s"});
  const auto pmf = binomial_pmf(s.mc.lattice.size(), s.mc.loading.p_load);
  for (std::size_t N = 1; N < r.post.size(); ++N) {
    const double pre_theory = std::pow(s.mc.loading.p_load, static_cast<double>(N));
    const double post_theory = theory_curves(N, pmf, s.mc.loss.tau, s.mc.timing.rearrange_period).dashdot;
    const auto& post = r.post[N];
    if (!(pre_theory > 0.0) || !(post_theory > 0.0) || post.lower <= 0.0) continue;
    const double pre_wait = wait_time(pre_theory, pre_cycle);
    if (!std::isfinite(pre_wait)) continue;
    wait.row(N, pre_wait, wait_time(post_theory, s.mc.timing.cycle_period), wait_time(post.estimate, s.mc.timing.cycle_period),
             wait_time(post.upper, s.mc.timing.cycle_period), wait_time(post.lower, s.mc.timing.cycle_period));
  }
  wait.save(sibling(out, "_wait"));
  rep.files.push_back(sibling(out, "_wait"));

  rep.summary["post_occupancy_left40"] = [&] {
    double sum = 0.0;
    const std::size_t k = std::min<std::size_t>(40, r.post_occupancy.size());
    for (std::size_t i = 0; i < k; ++i) sum += r.post_occupancy[i].estimate;
    return k ? sum / static_cast<double>(k) : 0.0;
  }();
  return rep;
}

inline ScenarioReport run_repeated(const Scenario& s, const std::filesystem::path& out) {
  CsvTable csv({"N", "attempt", "estimate", "lo", "hi", "bound", "trials", "seed", "scenario"});
  const auto pmf = binomial_pmf(s.mc.lattice.size(), s.mc.loading.p_load);
  for (auto N : s.targets) {
    require(N <= s.mc.lattice.size(), s.name, "target larger than lattice");
    const auto curve = simulate_repeated_rearrangement(s.mc, N, s.max_attempts);
    for (std::size_t k = 0; k < curve.size(); ++k)
      csv.row(N, k + 1, curve[k].estimate, curve[k].lower, curve[k].upper, tail_at_least(pmf, N), s.mc.trials,
              s.mc.seed, s.name);
  }
  csv.save(out);
  return {{out}, {}};
}

inline ScenarioReport run_maintenance(const Scenario& s, const std::filesystem::path& out) {
  CsvTable curve({"N", "repair", "time_s", "estimate", "lo", "hi", "valid_trials", "seed", "scenario"});
  CsvTable life({"N", "repair", "mean_lifetime_s", "lo", "hi", "valid_trials", "censored_trials", "tau_over_n_s",
                 "seed", "scenario"});
  std::vector<bool> modes;
  if (s.repair != RepairMode::on) modes.push_back(false);
  if (s.repair != RepairMode::off) modes.push_back(true);
  ScenarioReport rep;
  for (auto N : s.targets) {
    require(N >= 1 && N <= s.mc.lattice.size(), s.name, "target must lie in [1, sites]");
    for (bool repair : modes) {
      const auto r = simulate_maintenance(s.mc, N, repair, s.duration);
      for (std::size_t k = 0; k < r.survival.size(); ++k)
        curve.row(N, repair, r.probe_times[k], r.survival[k].estimate, r.survival[k].lower, r.survival[k].upper,
                  r.valid_trials, s.mc.seed, s.name);
      if (r.valid_trials > 0)
        life.row(N, repair, r.lifetime.estimate, r.lifetime.lower, r.lifetime.upper, r.valid_trials,
                 r.censored_trials, s.mc.loss.tau / static_cast<double>(N), s.mc.seed, s.name);
    }
  }
  curve.save(out);
  life.save(sibling(out, "_lifetime"));
  rep.files = {out, sibling(out, "_lifetime")};
  return rep;
}

inline ScenarioReport run_2d(const Scenario& s, const std::filesystem::path& out) {
  Options2D opt;
  opt.method = s.kind == ExperimentKind::method1_2d ? Method2D::row_col_deletion : Method2D::row_by_row;
  opt.target_cols = s.target_cols;
  opt.max_passes = s.max_passes;
  const auto points = simulate_2d_sweep(s.mc, s.grid_rows, s.grid_cols, opt);
  CsvTable csv({"method", "rows", "cols", "expected_atoms", "lo", "hi", "trials", "seed", "scenario"});
  const GridPoint2D* best = nullptr;
  for (const auto& p : points) {
    csv.row(static_cast<int>(opt.method), p.rows, p.cols, p.expected_atoms.estimate, p.expected_atoms.lower,
            p.expected_atoms.upper, s.mc.trials, s.mc.seed, s.name);
    if (!best || p.expected_atoms.estimate > best->expected_atoms.estimate) best = &p;
  }
  csv.save(out);
  ScenarioReport rep{{out}, {}};
  if (best) rep.summary["best"] = {{"rows", best->rows}, {"cols", best->cols}, {"expected_atoms", best->expected_atoms.estimate}};
  return rep;
}

struct TrapDrive {
  std::vector<double> phases;
  std::vector<double> amplitudes;
  nlohmann::json info = nlohmann::json::object();
  std::vector<double> objective_trace;
};

/// Phases (and, with coupling > 0, calibrated amplitudes) for every lattice site.
inline TrapDrive trap_drive(const Scenario& s) {
  const AxisComb& axis = s.mc.lattice.col_axis();
  std::vector<Hz> freqs;
  for (std::size_t i = 0; i < axis.sites; ++i) freqs.push_back(axis.frequency(i));
  TrapDrive d;
  d.amplitudes.assign(axis.sites, 1.0);
  RngStream rng(s.mc.seed, 0);
  switch (s.phase_mode) {
    case PhaseMode::equal:
      d.phases.assign(axis.sites, 0.0);
      break;
    case PhaseMode::random:
      for (std::size_t i = 0; i < axis.sites; ++i) d.phases.push_back(kTwoPi * rng.uniform());
      break;
    case PhaseMode::optimized: {
      const auto opt = optimize_phases(freqs, d.amplitudes, rng);
      d.phases = opt.phases;
      d.objective_trace = opt.objective_per_sweep;
      d.info["sweeps"] = opt.sweeps;
      break;
    }
  }
  d.info["imd_objective"] = axis.sites >= 1 ? imd_objective(d.phases, d.amplitudes, freqs) : 0.0;
  std::vector<double> equal(axis.sites, 0.0);
  d.info["imd_objective_equal_phases"] = imd_objective(equal, d.amplitudes, freqs);
  if (s.coupling > 0.0) {
    const auto plant = make_intermod_plant(freqs, d.phases, s.coupling);
    const std::vector<double> targets(axis.sites, 1.0);
    const auto cal = calibrate_amplitudes(freqs, plant, targets);
    d.amplitudes = cal.amplitudes;
    d.info["calibration_iterations"] = cal.iterations;
    d.info["calibration_residual"] = cal.residual_spread;
  }
  return d;
}

inline ScenarioReport run_waveform(const Scenario& s, const std::filesystem::path& out) {
  const auto drive = trap_drive(s);
  ToneSet ts = tone_set_for(s.mc.lattice, drive.phases, drive.amplitudes);
  ts.upconversion_hz = s.upconversion_hz;
  ts.sample_rate_hz = s.sample_rate_hz;
  try {
    ts.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::invalid_parameter, s.name, e.what());
  }
  std::vector<std::complex<double>> buf;
  try {
    buf = synthesize(ts, s.waveform_duration);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::invalid_parameter, s.name, e.what());
  }
  const auto bin_path = s.waveform_out.empty() ? sibling(out, "", ".bin") : s.waveform_out;
  if (bin_path.has_parent_path()) std::filesystem::create_directories(bin_path.parent_path());
  write_waveform_binary(bin_path, buf);
  write_spectrum_csv(out, power_spectrum(buf, ts.sample_rate_hz, ts.upconversion_hz));
  ScenarioReport rep{{out, bin_path}, drive.info};
  rep.summary["samples"] = buf.size();
  return rep;
}

inline ScenarioReport run_phases(const Scenario& s, const std::filesystem::path& out) {
  const auto drive = trap_drive(s);
  const AxisComb& axis = s.mc.lattice.col_axis();
  CsvTable csv({"site", "frequency_hz", "amplitude", "phase"});
  for (std::size_t i = 0; i < axis.sites; ++i) csv.row(i, axis.frequency(i), drive.amplitudes[i], drive.phases[i]);
  csv.save(out);
  ScenarioReport rep{{out}, drive.info};
  if (!drive.objective_trace.empty()) {
    CsvTable trace({"sweep", "objective"});
    for (std::size_t k = 0; k < drive.objective_trace.size(); ++k) trace.row(k, drive.objective_trace[k]);
    trace.save(sibling(out, "_trace"));
    rep.files.push_back(sibling(out, "_trace"));
  }
  return rep;
}

inline ScenarioReport run_sweep_table(const Scenario& s, const std::filesystem::path& out) {
  const auto drive = trap_drive(s);
  const AxisComb& axis = s.mc.lattice.col_axis();
  std::vector<double> f;
  for (std::size_t i = 0; i < axis.sites; ++i) f.push_back(static_cast<double>(axis.frequency(i)));
  auto map = std::make_shared<const AmplitudeMap>(f, drive.amplitudes);
  SweepTable table = [&] {
    try {
      return sweep_table(s.mc.lattice, map, drive.phases, s.sweep_duration);
    } catch (const SweepUnreachable& e) {
      throw ConfigError(ConfigError::Kind::invalid_parameter, s.name, e.what());
    }
  }();
  CsvTable csv({"start_site", "end_site", "start_hz", "end_hz", "duration_s", "start_phase", "end_phase", "identity"});
  for (std::size_t i = 0; i < table.sites(); ++i)
    for (std::size_t j = 0; j < table.sites(); ++j) {
      const auto& p = table.at(i, j);
      csv.row(i, j, p.start_hz, p.end_hz, p.duration, p.start_phase, p.end_phase, p.identity());
    }
  csv.save(out);
  return {{out}, drive.info};
}

}  // namespace detail

/// Runs one scenario; relative output paths resolve against `base_dir`.
inline ScenarioReport run_scenario(const Scenario& s, const std::filesystem::path& base_dir = ".") {
  try {
    s.mc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::invalid_parameter, s.name, e.what());
  }
  const auto out = s.out.is_absolute() ? s.out : base_dir / s.out;
  Scenario resolved = s;
  if (!s.waveform_out.empty() && s.waveform_out.is_relative()) resolved.waveform_out = base_dir / s.waveform_out;
  ScenarioReport rep;
  switch (s.kind) {
    case ExperimentKind::single_cycle: rep = detail::run_single_cycle(s, out); break;
    case ExperimentKind::repeated: rep = detail::run_repeated(s, out); break;
    case ExperimentKind::maintenance: rep = detail::run_maintenance(s, out); break;
    case ExperimentKind::method1_2d:
    case ExperimentKind::method2_2d: rep = detail::run_2d(s, out); break;
    case ExperimentKind::waveform: rep = detail::run_waveform(resolved, out); break;
    case ExperimentKind::phases: rep = detail::run_phases(s, out); break;
    case ExperimentKind::sweep_table: rep = detail::run_sweep_table(s, out); break;
  }
  if (s.json) {
    nlohmann::json j;
    j["scenario"] = s.name;
    j["kind"] = std::string(kind_name(s.kind));
    j["seed"] = s.mc.seed;
    j["trials"] = s.mc.trials;
    j["p_load"] = s.mc.loading.p_load;
    j["tau"] = std::isfinite(s.mc.loss.tau) ? nlohmann::json(s.mc.loss.tau) : nlohmann::json("inf");
    j["summary"] = rep.summary;
    for (const auto& f : rep.files) j["files"].push_back(f.filename().string());
    const auto json_path = detail::sibling(out, "", ".json");
    std::ofstream os(json_path);
    os << j.dump(2) << '\n';
    rep.files.push_back(json_path);
  }
  return rep;
}

}  // namespace atomweaver
