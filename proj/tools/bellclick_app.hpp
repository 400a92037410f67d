#pragma once

// Command-line front end.  Kept in a header so the test suite can drive
// run() in-process.
//
// Exit codes: 0 success, 1 validation failure, 2 config error, 3 I/O error.

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellclick/bellclick.hpp"

namespace bellclick::cli {

using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kValidationFailure = 1,
  kConfigError = 2,
  kIoError = 3,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run can be configured with.  Keys in a --config JSON file
/// are the field names below; command-line flags use the same names with
/// '-' for '_' and take precedence over the file.
struct RunConfig {
  std::string state = "entangled";
  double amp = 1.0;
  std::optional<double> a1;
  std::optional<double> am1;
  double alpha0 = 0.0;
  double beta0 = 0.0;
  std::string settings = "fig2-settings";
  std::optional<double> sx, sy, pu, pv;
  bool degrees = false;
  std::optional<double> gain;
  std::optional<double> kappa;
  double tolerance = kDefaultTolerance;

  double kappa_min = 0.0;
  double kappa_max = 10.0;
  std::int64_t points = 201;
  std::string scale = "linear";

  std::int64_t trials = 1'000'000;
  std::uint64_t seed = McConfig{}.master_seed;
  std::int64_t batch = 10'000;

  std::string objective = "max-c";
  std::int64_t grid = 24;
  std::optional<double> fix_sx, fix_sy, fix_pu, fix_pv;

  std::int64_t threads = 1;
};

namespace detail {

enum class Kind { number, integer, unsigned_integer, text, flag };

struct Field {
  const char* key;
  Kind kind;
  const char* help;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
T get_as(const json& v, const char* key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

inline double get_number(const json& v, const char* key) {
  if (!v.is_number()) {
    throw ConfigError(std::string("field '") + key + "' must be a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ConfigError(std::string("field '") + key + "' must be finite");
  }
  return d;
}

inline std::int64_t get_integer(const json& v, const char* key) {
  if (!v.is_number_integer()) {
    throw ConfigError(std::string("field '") + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

#define BELLCLICK_NUMBER(name, help) \
  {#name, Kind::number, help,        \
   [](RunConfig& c, const json& v) { c.name = get_number(v, #name); }}
#define BELLCLICK_INTEGER(name, help) \
  {#name, Kind::integer, help,        \
   [](RunConfig& c, const json& v) { c.name = get_integer(v, #name); }}
#define BELLCLICK_TEXT(name, help) \
  {#name, Kind::text, help,        \
   [](RunConfig& c, const json& v) { c.name = get_as<std::string>(v, #name); }}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      BELLCLICK_TEXT(state, "field state: entangled | separable"),
      BELLCLICK_NUMBER(amp, "amplitude eps (both modes for entangled)"),
      BELLCLICK_NUMBER(a1, "entangled amplitude of mode |1>|up>"),
      BELLCLICK_NUMBER(am1, "entangled amplitude of mode |-1>|right>"),
      BELLCLICK_NUMBER(alpha0, "separable spatial direction alpha0"),
      BELLCLICK_NUMBER(beta0, "separable polarization direction beta0"),
      BELLCLICK_TEXT(settings,
                     "settings preset: fig2-settings | fig4-settings | "
                     "nl-entangled"),
      BELLCLICK_NUMBER(sx, "spatial analyzer angle x (overrides preset)"),
      BELLCLICK_NUMBER(sy, "spatial analyzer angle y (overrides preset)"),
      BELLCLICK_NUMBER(pu, "polarizer angle u (overrides preset)"),
      BELLCLICK_NUMBER(pv, "polarizer angle v (overrides preset)"),
      {"degrees", Kind::flag, "angles are given in degrees",
       [](RunConfig& c, const json& v) {
         if (!v.is_boolean()) {
           throw ConfigError("field 'degrees' must be a boolean");
         }
         c.degrees = v.get<bool>();
       }},
      BELLCLICK_NUMBER(gain, "detector gain eta*T"),
      BELLCLICK_NUMBER(kappa, "kappa = eta*T*eps^2 (sets the gain)"),
      BELLCLICK_NUMBER(tolerance, "violation tolerance"),
      BELLCLICK_NUMBER(kappa_min, "sweep start"),
      BELLCLICK_NUMBER(kappa_max, "sweep end"),
      BELLCLICK_INTEGER(points, "sweep points"),
      BELLCLICK_TEXT(scale, "sweep scale: linear | log"),
      BELLCLICK_INTEGER(trials, "Monte Carlo trials per channel"),
      {"seed", Kind::unsigned_integer, "Monte Carlo master seed",
       [](RunConfig& c, const json& v) {
         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
           throw ConfigError("field 'seed' must be a non-negative integer");
         }
         c.seed = v.get<std::uint64_t>();
       }},
      BELLCLICK_INTEGER(batch, "Monte Carlo trials per sub-stream"),
      BELLCLICK_TEXT(objective, "search objective: max-c | min-cnl-gap"),
      BELLCLICK_INTEGER(grid, "search grid points per angle"),
      BELLCLICK_NUMBER(fix_sx, "hold x fixed during search"),
      BELLCLICK_NUMBER(fix_sy, "hold y fixed during search"),
      BELLCLICK_NUMBER(fix_pu, "hold u fixed during search"),
      BELLCLICK_NUMBER(fix_pv, "hold v fixed during search"),
      BELLCLICK_INTEGER(threads, "worker threads (results do not depend on it)"),
  };
  return table;
}

#undef BELLCLICK_NUMBER
#undef BELLCLICK_INTEGER
#undef BELLCLICK_TEXT

inline const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

inline void apply_json(RunConfig& cfg, const json& object) {
  if (!object.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    const Field* f = find_field(key);
    if (f == nullptr) throw ConfigError("unknown config field '" + key + "'");
    if (value.is_null()) continue;
    f->set(cfg, value);
  }
}

/// Converts a raw command-line string to JSON according to the field type.
inline json raw_to_json(const Field& f, const std::string& raw) {
  const std::string key = f.key;
  try {
    std::size_t used = 0;
    switch (f.kind) {
      case Kind::number: {
        const double d = std::stod(raw, &used);
        if (used != raw.size()) break;
        return d;
      }
      case Kind::integer: {
        const long long i = std::stoll(raw, &used);
        if (used == raw.size()) return static_cast<std::int64_t>(i);
        // Accept integral values in float notation such as 1e6.
        const double d = std::stod(raw, &used);
        if (used != raw.size() || d != std::floor(d) || std::fabs(d) > 9e15) {
          break;
        }
        return static_cast<std::int64_t>(d);
      }
      case Kind::unsigned_integer: {
        if (!raw.empty() && raw[0] == '-') break;
        const unsigned long long u = std::stoull(raw, &used, 0);
        if (used != raw.size()) break;
        return static_cast<std::uint64_t>(u);
      }
      case Kind::text: return raw;
      case Kind::flag: return true;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("field '" + key + "': cannot parse '" + raw + "'");
}

inline std::string flag_name(const char* key) {
  std::string name = key;
  for (char& ch : name) {
    if (ch == '_') ch = '-';
  }
  return "--" + name;
}

// Keys exposed on each subcommand.
inline const std::vector<std::string>& common_keys() {
  static const std::vector<std::string> keys = {
      "state", "amp",   "a1",    "am1",   "alpha0",    "beta0",  "settings",
      "sx",    "sy",    "pu",    "pv",    "degrees",   "gain",   "kappa",
      "tolerance", "threads"};
  return keys;
}
inline const std::vector<std::string> kSweepKeys = {"kappa_min", "kappa_max",
                                                    "points", "scale"};
inline const std::vector<std::string> kMcKeys = {"trials", "seed", "batch"};
inline const std::vector<std::string> kSearchKeys = {
    "objective", "grid", "fix_sx", "fix_sy", "fix_pu", "fix_pv"};

struct ResolvedRun {
  FieldState state;
  MeasurementSettings settings;
  Detector detector;
};

inline double to_radians(const RunConfig& c, double angle) {
  return c.degrees ? angle * std::numbers::pi / 180.0 : angle;
}

inline FieldState resolve_state(const RunConfig& c) {
  if (c.state == "entangled") {
    if (c.alpha0 != 0.0 || c.beta0 != 0.0) {
      throw ConfigError(
          "field 'alpha0'/'beta0' only apply to the separable state");
    }
    return EntangledState{c.a1.value_or(c.amp), c.am1.value_or(c.amp)};
  }
  if (c.state == "separable") {
    if (c.a1 || c.am1) {
      throw ConfigError("field 'a1'/'am1' only apply to the entangled state");
    }
    return SeparableState{c.amp, to_radians(c, c.alpha0),
                          to_radians(c, c.beta0)};
  }
  throw ConfigError("field 'state' must be 'entangled' or 'separable', got '" +
                    c.state + "'");
}

inline MeasurementSettings resolve_settings(const RunConfig& c) {
  auto preset = presets::settings_by_name(c.settings);
  if (!preset) {
    throw ConfigError("field 'settings': unknown preset '" + c.settings + "'");
  }
  auto angles = preset->angles();
  const std::array<std::optional<double>, 4> overrides = {c.sx, c.sy, c.pu,
                                                          c.pv};
  for (std::size_t i = 0; i < 4; ++i) {
    if (overrides[i]) angles[i] = to_radians(c, *overrides[i]);
  }
  return MeasurementSettings::from_angles(angles[0], angles[1], angles[2],
                                          angles[3]);
}

inline Detector resolve_detector(const RunConfig& c, const FieldState& state) {
  if (c.gain && c.kappa) {
    throw ConfigError("fields 'gain' and 'kappa' are mutually exclusive");
  }
  if (c.gain) {
    if (*c.gain < 0.0) throw ConfigError("field 'gain' must be >= 0");
    return Detector(*c.gain);
  }
  const double kappa = c.kappa.value_or(1.0);
  if (kappa < 0.0) throw ConfigError("field 'kappa' must be >= 0");
  try {
    return Detector::for_kappa(state, kappa);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("field 'kappa': ") + e.what());
  }
}

inline ResolvedRun resolve(const RunConfig& c) {
  if (c.tolerance < 0.0) throw ConfigError("field 'tolerance' must be >= 0");
  if (c.threads < 1) throw ConfigError("field 'threads' must be >= 1");
  ResolvedRun r{resolve_state(c), resolve_settings(c), Detector{}};
  validate(r.state);
  r.detector = resolve_detector(c, r.state);
  return r;
}

/// Fully resolved configuration: radians, explicit angles, explicit gain.
inline json resolved_config_json(const ResolvedRun& r, double tolerance) {
  json j;
  if (const auto* e = std::get_if<EntangledState>(&r.state)) {
    j["state"] = "entangled";
    j["a1"] = e->a1;
    j["am1"] = e->am1;
  } else {
    const auto& s = std::get<SeparableState>(r.state);
    j["state"] = "separable";
    j["amp"] = s.amp;
    j["alpha0"] = s.alpha0;
    j["beta0"] = s.beta0;
  }
  const auto a = r.settings.angles();
  j["sx"] = a[0];
  j["sy"] = a[1];
  j["pu"] = a[2];
  j["pv"] = a[3];
  j["gain"] = r.detector.gain();
  j["tolerance"] = tolerance;
  return j;
}

inline SweepSpec resolve_sweep(const RunConfig& c) {
  SweepSpec spec;
  spec.kappa_min = c.kappa_min;
  spec.kappa_max = c.kappa_max;
  if (c.points < 2 || c.points > 10'000'000) {
    throw ConfigError("field 'points' must lie in [2, 1e7]");
  }
  spec.points = static_cast<int>(c.points);
  if (c.scale == "linear" || c.scale == "lin") {
    spec.scale = SweepScale::linear;
  } else if (c.scale == "log" || c.scale == "logarithmic") {
    spec.scale = SweepScale::logarithmic;
  } else {
    throw ConfigError("field 'scale' must be 'linear' or 'log'");
  }
  spec.validate();
  return spec;
}

inline McConfig resolve_mc(const RunConfig& c) {
  if (c.trials < 1) throw ConfigError("field 'trials' must be >= 1");
  if (c.batch < 1) throw ConfigError("field 'batch' must be >= 1");
  McConfig mc;
  mc.trials = static_cast<std::uint64_t>(c.trials);
  mc.batch = std::min(static_cast<std::uint64_t>(c.batch), mc.trials);
  mc.master_seed = c.seed;
  mc.validate();
  return mc;
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline bool use_color() {
  return std::getenv("NO_COLOR") == nullptr && ::isatty(STDOUT_FILENO) == 1;
}

inline std::string flag_text(bool violated, bool color) {
  if (!violated) return "ok";
  return color ? "\x1b[31mVIOLATED\x1b[0m" : "VIOLATED";
}

/// Writes to `path`, or to `out` when path is empty.
inline void emit(const std::string& path, const std::string& text,
                 std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << text;
  file.flush();
  if (!file) throw IoError("failed writing '" + path + "'");
}

inline const char* csv_header() {
  return "kappa,c_value,ch_lower,ch_upper,cnl_value,cnl_lower,cnl_upper,"
         "violated_ch,violated_nl\n";
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = csv_header();
  for (const auto& r : rows) {
    s += fmt17(r.kappa) + ',' + fmt17(r.c_value) + ',' + fmt17(r.ch_lower) +
         ',' + fmt17(r.ch_upper) + ',' + fmt17(r.cnl_value) + ',' +
         fmt17(r.cnl_lower) + ',' + fmt17(r.cnl_upper) + ',' +
         (r.violated_ch ? "true" : "false") + ',' +
         (r.violated_nl ? "true" : "false") + '\n';
  }
  return s;
}

inline json sweep_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"kappa", r.kappa},
                   {"c_value", r.c_value},
                   {"ch_lower", r.ch_lower},
                   {"ch_upper", r.ch_upper},
                   {"cnl_value", r.cnl_value},
                   {"cnl_lower", r.cnl_lower},
                   {"cnl_upper", r.cnl_upper},
                   {"violated_ch", r.violated_ch},
                   {"violated_nl", r.violated_nl}});
  }
  return arr;
}

inline json probabilities_json(const ClickProbabilitySet& p) {
  json j;
  for (Channel c : kAllChannels) j[channel_name(c)] = p[c];
  return j;
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
  RunConfig config;
  bool json_output = false;
  std::string format = "csv";
  std::string output;
  std::string out_dir = ".";
  std::string figure;
};

inline json eval_report(const ResolvedRun& r, double tolerance) {
  const auto probs = probability_set(r.state, r.settings, r.detector);
  const auto ch = ch_report_from(probs, tolerance);
  const auto nl = nonlinear_report_from(probs, tolerance);
  const double lin = linearized_ch(r.state, r.settings, probs.kappa());
  const auto [lin_lo, lin_hi] = linearized_bounds(probs.kappa());
  json j;
  j["kappa"] = probs.kappa();
  j["kappa_nominal"] = probs.kappa_nominal();
  j["probabilities"] = probabilities_json(probs);
  j["ch"] = {{"value", ch.c_value},
             {"lower", ch.lower_bound},
             {"upper", ch.upper_bound},
             {"violated_upper", ch.violated_upper},
             {"violated_lower", ch.violated_lower}};
  j["nonlinear"] = {{"value", nl.cnl_value},
                    {"lower", nl.lower_bound},
                    {"upper", nl.upper_bound},
                    {"violated", nl.violated}};
  j["linearized"] = {{"value", lin},
                     {"lower", lin_lo},
                     {"upper", lin_hi},
                     {"label", linearization_label(r.state)}};
  j["config"] = resolved_config_json(r, tolerance);
  return j;
}

inline int cmd_eval(const Options& o, std::ostream& out) {
  const auto r = resolve(o.config);
  const json report = eval_report(r, o.config.tolerance);
  if (o.json_output) {
    emit(o.output, report.dump(2) + "\n", out);
    return kOk;
  }
  const bool color = o.output.empty() && use_color();
  std::ostringstream s;
  s << std::setprecision(10);
  s << "kappa = " << report["kappa"].get<double>()
    << (report["kappa_nominal"].get<bool>() ? " (nominal)" : "") << "\n";
  for (Channel c : kAllChannels) {
    s << "  " << std::left << std::setw(5) << channel_name(c) << " = "
      << report["probabilities"][channel_name(c)].get<double>() << "\n";
  }
  const auto& ch = report["ch"];
  s << "C     = " << ch["value"].get<double>() << "   bounds [-1, 0]   "
    << flag_text(ch["violated_upper"].get<bool>() ||
                     ch["violated_lower"].get<bool>(),
                 color)
    << "\n";
  const auto& nl = report["nonlinear"];
  s << "C_nl  = " << nl["value"].get<double>() << "   bounds ["
    << nl["lower"].get<double>() << ", 1]   "
    << flag_text(nl["violated"].get<bool>(), color) << "\n";
  const auto& lin = report["linearized"];
  s << "C_lin = " << lin["value"].get<double>() << "   bounds ["
    << lin["lower"].get<double>() << ", 0]   ("
    << lin["label"].get<std::string>() << ")\n";
  emit(o.output, s.str(), out);
  return kOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  const auto r = resolve(o.config);
  const auto spec = resolve_sweep(o.config);
  const auto rows = kappa_sweep(r.state, r.settings, spec, o.config.tolerance);
  if (o.json_output || o.format == "json") {
    json j;
    j["config"] = resolved_config_json(r, o.config.tolerance);
    j["config"].erase("gain");
    j["rows"] = sweep_json(rows);
    emit(o.output, j.dump(2) + "\n", out);
  } else if (o.format == "csv") {
    emit(o.output, sweep_csv(rows), out);
  } else {
    throw ConfigError("field 'format' must be 'csv' or 'json'");
  }
  return kOk;
}

inline int cmd_search(const Options& o, std::ostream& out) {
  const RunConfig& c = o.config;
  const auto r = resolve(c);
  Objective kind;
  if (c.objective == "max-c") {
    kind = Objective::max_ch;
  } else if (c.objective == "min-cnl-gap") {
    kind = Objective::min_nonlinear_gap;
  } else {
    throw ConfigError("field 'objective' must be 'max-c' or 'min-cnl-gap'");
  }
  const double kappa = kappa_of(r.state, r.detector);
  if (!(kappa > 0.0)) throw ConfigError("field 'kappa': search needs kappa > 0");
  if (c.grid < 1 || c.grid > 400) {
    throw ConfigError("field 'grid' must lie in [1, 400]");
  }
  SearchConfig sc;
  sc.grid_points = static_cast<int>(c.grid);
  sc.workers = static_cast<unsigned>(c.threads);
  const std::array<std::optional<double>, 4> fixed = {c.fix_sx, c.fix_sy,
                                                      c.fix_pu, c.fix_pv};
  for (std::size_t i = 0; i < 4; ++i) {
    if (fixed[i]) sc.fixed[i] = to_radians(c, *fixed[i]);
  }
  const auto res = search_settings(r.state, kappa, kind, sc);
  const auto a = res.settings.angles();
  json j;
  j["objective_kind"] = c.objective;
  j["objective"] = res.objective;
  j["grid_objective"] = res.grid_objective;
  j["evaluations"] = res.evaluations;
  j["kappa"] = kappa;
  j["settings"] = {{"sx", a[0]}, {"sy", a[1]}, {"pu", a[2]}, {"pv", a[3]}};
  if (o.json_output) {
    emit(o.output, j.dump(2) + "\n", out);
    return kOk;
  }
  std::ostringstream s;
  s << std::setprecision(12);
  s << "objective " << objective_name(kind) << " = " << res.objective
    << "  (coarse grid " << res.grid_objective << ")\n"
    << "kappa = " << kappa << "\n"
    << "x = " << a[0] << "  y = " << a[1] << "  u = " << a[2]
    << "  v = " << a[3] << "  (radians)\n"
    << "evaluations = " << res.evaluations << "\n";
  emit(o.output, s.str(), out);
  return kOk;
}

inline int cmd_mc(const Options& o, std::ostream& out) {
  const auto r = resolve(o.config);
  const auto mc_cfg = resolve_mc(o.config);
  const auto analytic = probability_set(r.state, r.settings, r.detector);
  const auto mc = simulate_probability_set(
      r.state, r.settings, r.detector, mc_cfg,
      ClickSampler::poisson_threshold,
      static_cast<unsigned>(o.config.threads));

  auto z_score = [](double estimate, double target, double se) {
    if (se > 0.0) return (estimate - target) / se;
    return std::fabs(estimate - target) <= 1e-12 ? 0.0 : INFINITY;
  };

  bool failed = false;
  json rows = json::array();
  std::ostringstream s;
  s << std::setprecision(8) << std::left;
  s << std::setw(8) << "channel" << std::setw(14) << "analytic"
    << std::setw(14) << "estimate" << std::setw(14) << "stderr" << "z\n";
  for (Channel c : kAllChannels) {
    const auto& e = mc[c];
    const double z = z_score(e.p_hat, analytic[c], e.std_error);
    failed = failed || !(std::fabs(z) <= 5.0);
    s << std::setw(8) << channel_name(c) << std::setw(14) << analytic[c]
      << std::setw(14) << e.p_hat << std::setw(14) << e.std_error << z
      << "\n";
    rows.push_back({{"channel", channel_name(c)},
                    {"analytic", analytic[c]},
                    {"estimate", e.p_hat},
                    {"stderr", e.std_error},
                    {"z", std::isfinite(z) ? json(z) : json("inf")}});
  }
  const double c_exact = ch_value(analytic);
  const double c_z = z_score(mc.ch_value(), c_exact, mc.ch_std_error());
  failed = failed || !(std::fabs(c_z) <= 5.0);
  s << std::setw(8) << "C" << std::setw(14) << c_exact << std::setw(14)
    << mc.ch_value() << std::setw(14) << mc.ch_std_error() << c_z << "\n";
  s << "trials " << mc_cfg.trials << ", seed " << mc_cfg.master_seed
    << ", batch " << mc_cfg.batch << ": "
    << (failed ? "validation FAILED (|z| > 5)" : "validation passed") << "\n";

  if (o.json_output) {
    json j;
    j["channels"] = rows;
    j["ch"] = {{"analytic", c_exact},
               {"estimate", mc.ch_value()},
               {"stderr", mc.ch_std_error()},
               {"z", std::isfinite(c_z) ? json(c_z) : json("inf")}};
    j["trials"] = mc_cfg.trials;
    j["seed"] = mc_cfg.master_seed;
    j["batch"] = mc_cfg.batch;
    j["passed"] = !failed;
    emit(o.output, j.dump(2) + "\n", out);
  } else {
    emit(o.output, s.str(), out);
  }
  return failed ? kValidationFailure : kOk;
}

struct Dataset {
  std::string file;
  FieldState state;
  MeasurementSettings settings;
};

inline std::vector<Dataset> figure_datasets(const std::string& figure) {
  const FieldState entangled = EntangledState{1.0, 1.0};
  if (figure == "fig2") {
    return {{"fig2.csv", entangled, presets::fig2_settings()}};
  }
  if (figure == "fig3") {
    return {{"fig3.csv", presets::fig3_separable(), presets::fig2_settings()}};
  }
  if (figure == "fig4") {
    return {{"fig4-entangled.csv", entangled, presets::fig4_settings()},
            {"fig4-separable.csv", presets::fig4_separable(),
             presets::fig4_settings()}};
  }
  if (figure == "nl-separable") {
    return {{"nl-separable.csv", presets::fig3_separable(),
             presets::fig2_settings()}};
  }
  if (figure == "nl-entangled") {
    return {{"nl-entangled.csv", entangled, presets::nl_entangled_settings()}};
  }
  throw ConfigError("unknown figure '" + figure + "'");
}

inline int cmd_reproduce(const Options& o, std::ostream& out) {
  const auto spec = resolve_sweep(o.config);
  const auto datasets = figure_datasets(o.figure);
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  for (const auto& d : datasets) {
    const auto rows = kappa_sweep(d.state, d.settings, spec, o.config.tolerance);
    const auto path = (std::filesystem::path(o.out_dir) / d.file).string();
    emit(path, sweep_csv(rows), out);
    out << path << "\n";
  }
  return kOk;
}

}  // namespace detail

/// Parses arguments and runs one subcommand.  argv[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  using namespace detail;
  CLI::App app{"Click-probability Bell tests for classical two-beam fields",
               "bellclick"};
  app.require_subcommand(1);

  Options opt;
  std::string config_path;
  std::map<std::string, std::string> raw;
  std::map<std::string, bool> raw_flags;
  std::map<CLI::App*, std::map<std::string, CLI::Option*>> registry;

  auto add_fields = [&](CLI::App* sub, const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
      const Field* f = find_field(key);
      CLI::Option* option = nullptr;
      if (f->kind == Kind::flag) {
        option = sub->add_flag(flag_name(f->key), raw_flags[key], f->help);
      } else {
        option = sub->add_option(flag_name(f->key), raw[key], f->help);
      }
      registry[sub][key] = option;
    }
  };
  auto add_command = [&](const char* name, const char* help,
                         std::vector<std::vector<std::string>> groups) {
    CLI::App* sub = app.add_subcommand(name, help);
    for (const auto& g : groups) add_fields(sub, g);
    sub->add_option("--config", config_path,
                    "JSON config file; flags override its values");
    sub->add_flag("--json", opt.json_output, "JSON output");
    sub->add_option("-o,--output", opt.output, "output file (default stdout)");
    return sub;
  };

  CLI::App* eval =
      add_command("eval", "evaluate one configuration", {common_keys()});
  CLI::App* sweep = add_command("sweep", "kappa sweep as CSV or JSON",
                                {common_keys(), kSweepKeys});
  sweep->add_option("--format", opt.format, "csv | json");
  CLI::App* search = add_command("search", "search settings for violation",
                                 {common_keys(), kSearchKeys});
  CLI::App* mc = add_command("mc", "Monte Carlo validation", {common_keys(), kMcKeys});
  CLI::App* reproduce = add_command(
      "reproduce", "write figure datasets as CSV files",
      {{"tolerance", "threads"}, kSweepKeys});
  reproduce->add_option("figure", opt.figure,
                        "fig2 | fig3 | fig4 | nl-separable | nl-entangled")
      ->required();
  reproduce->add_option("--out-dir", opt.out_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "bellclick: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    if (!config_path.empty()) {
      std::ifstream file(config_path);
      if (!file) throw ConfigError("cannot read config file '" + config_path + "'");
      json j;
      try {
        j = json::parse(file);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") +
                          e.what());
      }
      apply_json(opt.config, j);
    }
    for (const auto& [key, option] : registry[chosen]) {
      if (option->count() == 0) continue;
      const Field* f = find_field(key);
      const json value = f->kind == Kind::flag ? json(raw_flags[key])
                                               : raw_to_json(*f, raw[key]);
      f->set(opt.config, value);
    }

    if (chosen == eval) return cmd_eval(opt, out);
    if (chosen == sweep) return cmd_sweep(opt, out);
    if (chosen == search) return cmd_search(opt, out);
    if (chosen == mc) return cmd_mc(opt, out);
    if (chosen == reproduce) return cmd_reproduce(opt, out);
  } catch (const IoError& e) {
    err << "bellclick: " << e.what() << "\n";
    return kIoError;
  } catch (const ConfigError& e) {
    err << "bellclick: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "bellclick: " << e.what() << "\n";
    return kConfigError;
  } catch (const DegenerateInputError& e) {
    err << "bellclick: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace bellclick::cli
