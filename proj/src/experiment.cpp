#include "bandedge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "bandedge/parallel.hpp"

namespace bandedge {

namespace fs = std::filesystem;

bool ExperimentConfig::wants(std::string_view format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class TomlReader {
 public:
  explicit TomlReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void error(const toml::node* node, const std::string& field, const std::string& msg) const {
    std::string where = source_;
    if (node && node->source().begin.line > 0) where += ":" + std::to_string(node->source().begin.line);
    fail(ErrorCode::ConfigError, where + ": " + field + ": " + msg);
  }

  void check_keys(const toml::table& t, const std::string& path, std::initializer_list<std::string_view> allowed) const {
    for (auto&& [key, node] : t) {
      if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end())
        error(&node, join(path, key.str()), "unknown field");
    }
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

  const toml::table* table(const toml::table& t, const std::string& path, std::string_view key) const {
    const toml::node* n = t.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) error(n, join(path, key), "expected a table");
    return n->as_table();
  }

  double number(const toml::node* n, const std::string& field) const {
    if (auto v = n->as_floating_point()) return v->get();
    if (auto v = n->as_integer()) return static_cast<double>(v->get());
    error(n, field, "expected a number");
  }

  double get_double(const toml::table& t, const std::string& path, std::string_view key, double fallback) const {
    const toml::node* n = t.get(key);
    return n ? number(n, join(path, key)) : fallback;
  }

  std::int64_t get_int(const toml::table& t, const std::string& path, std::string_view key, std::int64_t fallback) const {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->as_integer()) return v->get();
    error(n, join(path, key), "expected an integer");
  }

  bool get_bool(const toml::table& t, const std::string& path, std::string_view key, bool fallback) const {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->as_boolean()) return v->get();
    error(n, join(path, key), "expected true or false");
  }

  std::string get_string(const toml::table& t, const std::string& path, std::string_view key,
                         const std::string& fallback) const {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->as_string()) return v->get();
    error(n, join(path, key), "expected a string");
  }

  const toml::array* array(const toml::table& t, const std::string& path, std::string_view key) const {
    const toml::node* n = t.get(key);
    if (!n) return nullptr;
    if (!n->is_array()) error(n, join(path, key), "expected an array");
    return n->as_array();
  }

  std::vector<double> get_doubles(const toml::table& t, const std::string& path, std::string_view key,
                                  std::vector<double> fallback) const {
    const toml::array* a = array(t, path, key);
    if (!a) return fallback;
    std::vector<double> out;
    for (const auto& el : *a) out.push_back(number(&el, join(path, key)));
    return out;
  }

  std::vector<int> get_ints(const toml::table& t, const std::string& path, std::string_view key,
                            std::vector<int> fallback) const {
    const toml::array* a = array(t, path, key);
    if (!a) return fallback;
    std::vector<int> out;
    for (const auto& el : *a) {
      auto v = el.as_integer();
      if (!v) error(&el, join(path, key), "expected integers");
      out.push_back(static_cast<int>(v->get()));
    }
    return out;
  }

  std::vector<std::string> get_strings(const toml::table& t, const std::string& path, std::string_view key,
                                       std::vector<std::string> fallback) const {
    const toml::array* a = array(t, path, key);
    if (!a) return fallback;
    std::vector<std::string> out;
    for (const auto& el : *a) {
      auto v = el.as_string();
      if (!v) error(&el, join(path, key), "expected strings");
      out.push_back(v->get());
    }
    return out;
  }

 private:
  std::string source_;
};

Point point_from(const std::vector<double>& v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<Eigen::Index>(i)) = v[i];
  return p;
}

void parse_model(const TomlReader& r, const toml::table& root, ModelSpec& m) {
  const toml::table* t = r.table(root, "", "model");
  if (!t) r.error(&root, "model", "missing [model] table");
  r.check_keys(*t, "model", {"dimension", "points_per_unit", "omega_lower", "omega_upper", "background", "bumps"});
  m.dimension = static_cast<int>(r.get_int(*t, "model", "dimension", 1));
  if (m.dimension != 1 && m.dimension != 2) r.error(t->get("dimension"), "model.dimension", "must be 1 or 2");
  m.points_per_unit = static_cast<int>(r.get_int(*t, "model", "points_per_unit", 32));
  try {
    (void)CellGrid::unit(m.dimension, m.points_per_unit);
  } catch (const Error& e) {
    r.error(t->get("points_per_unit"), "model.points_per_unit", e.message());
  }
  m.bounds.lower = r.get_double(*t, "model", "omega_lower", 1.0);
  m.bounds.upper = r.get_double(*t, "model", "omega_upper", 3.0);
  if (!(m.bounds.lower < m.bounds.upper)) r.error(t, "model.omega_lower", "must be smaller than model.omega_upper");

  double constant = 0.0;
  std::vector<FourierTerm> terms;
  if (const toml::table* w = r.table(*t, "model", "background")) {
    r.check_keys(*w, "model.background", {"constant", "terms"});
    constant = r.get_double(*w, "model.background", "constant", 0.0);
    if (const toml::array* list = r.array(*w, "model.background", "terms")) {
      std::size_t i = 0;
      for (const auto& el : *list) {
        const std::string path = "model.background.terms[" + std::to_string(i++) + "]";
        const toml::table* term = el.as_table();
        if (!term) r.error(&el, path, "expected a table");
        r.check_keys(*term, path, {"wavevector", "cos", "sin"});
        FourierTerm ft;
        ft.wavevector = r.get_ints(*term, path, "wavevector", {});
        if (static_cast<int>(ft.wavevector.size()) != m.dimension)
          r.error(term, path + ".wavevector", "needs " + std::to_string(m.dimension) + " components");
        ft.cos_coef = r.get_double(*term, path, "cos", 0.0);
        ft.sin_coef = r.get_double(*term, path, "sin", 0.0);
        terms.push_back(std::move(ft));
      }
    }
  }
  m.background = PeriodicBackground(m.dimension, constant, std::move(terms));

  const toml::array* bumps = r.array(*t, "model", "bumps");
  if (!bumps || bumps->empty()) r.error(t, "model.bumps", "at least one bump is required");
  std::size_t i = 0;
  for (const auto& el : *bumps) {
    const std::string path = "model.bumps[" + std::to_string(i++) + "]";
    const toml::table* b = el.as_table();
    if (!b) r.error(&el, path, "expected a table");
    r.check_keys(*b, path, {"center", "radius", "amplitude"});
    Bump bump{point_from(r.get_doubles(*b, path, "center", {})), r.get_double(*b, path, "radius", 0.0),
              r.get_double(*b, path, "amplitude", 0.0)};
    try {
      (void)build_single_site({bump}, m.dimension);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BumpOutsideCell)
        r.error(b, path, "BumpOutsideCell: support must stay strictly inside the unit cell (|center_i| + radius < 1/2)");
      r.error(b, path, e.what());
    }
    m.bumps.push_back(std::move(bump));
  }
}

void parse_sweep(const TomlReader& r, const toml::table& root, const ModelSpec& model, SweepSpec& s) {
  const toml::table empty;
  const toml::table* t = r.table(root, "", "sweep");
  if (!t) t = &empty;
  r.check_keys(*t, "sweep", {"n_theta", "n_bands", "band_lambda", "lambda_ladder", "lambda_max", "lambda_steps",
                             "alphabet", "max_period", "quadratic_delta"});
  s.n_theta = static_cast<int>(r.get_int(*t, "sweep", "n_theta", s.n_theta));
  if (s.n_theta < 8) r.error(t->get("n_theta"), "sweep.n_theta", "must be at least 8");
  s.n_bands = static_cast<int>(r.get_int(*t, "sweep", "n_bands", s.n_bands));
  if (s.n_bands < 2) r.error(t->get("n_bands"), "sweep.n_bands", "must be at least 2");
  s.band_lambda = r.get_double(*t, "sweep", "band_lambda", 0.0);
  if (s.band_lambda < 0.0) r.error(t->get("band_lambda"), "sweep.band_lambda", "must be nonnegative");
  if (t->get("lambda_ladder")) {
    if (t->get("lambda_max") || t->get("lambda_steps"))
      r.error(t->get("lambda_max"), "sweep.lambda_max", "give either lambda_ladder or lambda_max/lambda_steps");
    s.lambda_ladder = r.get_doubles(*t, "sweep", "lambda_ladder", {});
  } else {
    const double lmax = r.get_double(*t, "sweep", "lambda_max", 24.0);
    const auto steps = r.get_int(*t, "sweep", "lambda_steps", 24);
    if (lmax < 0.0 || steps < 0 || (steps == 0 && lmax != 0.0))
      r.error(t->get("lambda_max"), "sweep.lambda_max", "need lambda_max >= 0 and lambda_steps >= 1");
    s.lambda_ladder.assign(1, 0.0);
    for (std::int64_t i = 1; i <= steps; ++i) s.lambda_ladder.push_back(lmax * static_cast<double>(i) / static_cast<double>(steps));
  }
  if (s.lambda_ladder.empty() || s.lambda_ladder.front() != 0.0)
    r.error(t->get("lambda_ladder"), "sweep.lambda_ladder", "must start at 0");
  for (std::size_t i = 1; i < s.lambda_ladder.size(); ++i)
    if (!(s.lambda_ladder[i] > s.lambda_ladder[i - 1]))
      r.error(t->get("lambda_ladder"), "sweep.lambda_ladder", "must be strictly ascending");
  s.alphabet = r.get_doubles(*t, "sweep", "alphabet", {});
  for (double a : s.alphabet)
    if (!model.bounds.contains(a)) r.error(t->get("alphabet"), "sweep.alphabet", "entries must lie in [omega_lower, omega_upper]");
  s.max_period = r.get_ints(*t, "sweep", "max_period", {});
  if (!s.max_period.empty()) {
    if (static_cast<int>(s.max_period.size()) != model.dimension)
      r.error(t->get("max_period"), "sweep.max_period", "needs one entry per dimension");
    for (int k : s.max_period)
      if (k < 1) r.error(t->get("max_period"), "sweep.max_period", "entries must be >= 1");
  }
  s.quadratic_delta = r.get_double(*t, "sweep", "quadratic_delta", s.quadratic_delta);
  if (!(s.quadratic_delta > 0.0)) r.error(t->get("quadratic_delta"), "sweep.quadratic_delta", "must be positive");
}

void parse_checks(const TomlReader& r, const toml::table& root, const ModelSpec& model, CheckSpec& c) {
  const toml::table empty;
  const toml::table* t = r.table(root, "", "checks");
  if (!t) t = &empty;
  r.check_keys(*t, "checks",
               {"verify_kind", "lambdas", "lambda_fractions", "small_fraction", "box_sampling", "box_samples",
                "box_ladder", "projection", "projection_samples", "projection_fraction", "projection_period",
                "projection_tolerance", "seed", "refine_tol", "singular_tol", "gap_threshold", "absolute_floor",
                "supercell_n_theta", "projection_n_theta"});
  const std::string p = "checks";
  c.verify_kind = r.get_string(*t, p, "verify_kind", c.verify_kind);
  if (c.verify_kind != "auto" && c.verify_kind != "min-location" && c.verify_kind != "fixed-sign")
    r.error(t->get("verify_kind"), "checks.verify_kind", "must be auto, min-location or fixed-sign");
  c.lambdas = r.get_doubles(*t, p, "lambdas", {});
  c.lambda_fractions = r.get_doubles(*t, p, "lambda_fractions", c.lambda_fractions);
  for (double l : c.lambdas)
    if (l < 0.0) r.error(t->get("lambdas"), "checks.lambdas", "must be nonnegative");
  for (double l : c.lambda_fractions)
    if (l < 0.0) r.error(t->get("lambda_fractions"), "checks.lambda_fractions", "must be nonnegative");
  c.small_fraction = r.get_double(*t, p, "small_fraction", c.small_fraction);
  c.box_sampling = r.get_bool(*t, p, "box_sampling", c.box_sampling);
  const auto box_samples = r.get_int(*t, p, "box_samples", static_cast<std::int64_t>(c.box_samples));
  if (box_samples < 1) r.error(t->get("box_samples"), "checks.box_samples", "must be >= 1");
  c.box_samples = static_cast<std::size_t>(box_samples);
  c.box_ladder = r.get_ints(*t, p, "box_ladder", c.box_ladder);
  if (c.box_ladder.empty() || c.box_ladder.front() < 1 || !std::is_sorted(c.box_ladder.begin(), c.box_ladder.end()))
    r.error(t->get("box_ladder"), "checks.box_ladder", "must be ascending and positive");
  c.projection = r.get_bool(*t, p, "projection", c.projection);
  const auto proj_samples = r.get_int(*t, p, "projection_samples", static_cast<std::int64_t>(c.projection_samples));
  if (proj_samples < 1) r.error(t->get("projection_samples"), "checks.projection_samples", "must be >= 1");
  c.projection_samples = static_cast<std::size_t>(proj_samples);
  c.projection_fraction = r.get_double(*t, p, "projection_fraction", c.projection_fraction);
  c.projection_period = r.get_ints(*t, p, "projection_period", {});
  if (!c.projection_period.empty() && static_cast<int>(c.projection_period.size()) != model.dimension)
    r.error(t->get("projection_period"), "checks.projection_period", "needs one entry per dimension");
  const auto seed = r.get_int(*t, p, "seed", static_cast<std::int64_t>(c.seed));
  if (seed < 0) r.error(t->get("seed"), "checks.seed", "must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.supercell_n_theta = static_cast<int>(r.get_int(*t, p, "supercell_n_theta", c.supercell_n_theta));
  if (c.supercell_n_theta < 8) r.error(t->get("supercell_n_theta"), "checks.supercell_n_theta", "must be at least 8");
  c.projection_n_theta = static_cast<int>(r.get_int(*t, p, "projection_n_theta", c.projection_n_theta));
  if (c.projection_n_theta < 1) r.error(t->get("projection_n_theta"), "checks.projection_n_theta", "must be >= 1");

  auto positive = [&](std::string_view key, double& value) {
    value = r.get_double(*t, p, key, value);
    if (!(value > 0.0)) r.error(t->get(key), "checks." + std::string(key), "must be positive");
  };
  positive("small_fraction", c.small_fraction);
  positive("projection_fraction", c.projection_fraction);
  positive("projection_tolerance", c.projection_tolerance);
  positive("refine_tol", c.refine_tol);
  positive("singular_tol", c.singular_tol);
  positive("gap_threshold", c.gap_threshold);
  positive("absolute_floor", c.absolute_floor);
}

void parse_output(const TomlReader& r, const toml::table& root, OutputSpec& o) {
  const toml::table empty;
  const toml::table* t = r.table(root, "", "output");
  if (!t) t = &empty;
  r.check_keys(*t, "output", {"directory", "formats"});
  o.directory = r.get_string(*t, "output", "directory", o.directory);
  o.formats = r.get_strings(*t, "output", "formats", o.formats);
  for (const auto& f : o.formats)
    if (f != "csv" && f != "json" && f != "svg" && f != "md")
      r.error(t->get("formats"), "output.formats", "unknown format '" + f + "' (csv, json, svg, md)");
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string(source) + ":" + std::to_string(e.source().begin.line) + ": " +
                                     std::string(e.description()));
  }
  const TomlReader r{std::string(source)};
  r.check_keys(root, "", {"schema", "model", "sweep", "checks", "output"});
  ExperimentConfig cfg;
  if (!root.get("schema")) r.error(&root, "schema", "missing schema version");
  cfg.schema = static_cast<int>(r.get_int(root, "", "schema", 0));
  if (cfg.schema != kConfigSchema)
    r.error(root.get("schema"), "schema", "unsupported version " + std::to_string(cfg.schema) + " (expected " +
                                              std::to_string(kConfigSchema) + ")");
  parse_model(r, root, cfg.model);
  parse_sweep(r, root, cfg.model, cfg.sweep);
  parse_checks(r, root, cfg.model, cfg.checks);
  parse_output(r, root, cfg.output);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::ConfigError, path + ": cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path);
}

BlochModel base_model(const ExperimentConfig& config) {
  const ModelSpec& m = config.model;
  return BlochModel{CellGrid::unit(m.dimension, m.points_per_unit), m.background,
                    build_single_site(m.bumps, m.dimension), 0.0,
                    DisorderConfiguration::constant(m.dimension, m.bounds.lower, m.bounds)};
}

std::string coupling_fingerprint(const ExperimentConfig& config) {
  const Json inputs{{"model", to_json(base_model(config))},
                    {"n_theta", config.sweep.n_theta},
                    {"ladder", config.sweep.lambda_ladder},
                    {"refine_tol", config.checks.refine_tol},
                    {"singular_tol", config.checks.singular_tol}};
  std::uint64_t h = 1469598103934665603ULL;   // FNV-1a
  for (unsigned char ch : inputs.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::All: return "all";
    case Stage::Bands: return "bands";
    case Stage::Minima: return "minima";
    case Stage::Coupling: return "coupling";
    case Stage::Verify: return "verify";
    case Stage::ProjectCheck: return "project-check";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::All, Stage::Bands, Stage::Minima, Stage::Coupling, Stage::Verify, Stage::ProjectCheck})
    if (to_string(s) == name) return s;
  fail(ErrorCode::ConfigError, "unknown stage '" + std::string(name) +
                                   "' (all, bands, minima, coupling, verify, project-check)");
}

// ---------------------------------------------------------------------------
// Pipeline

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Definiteness definiteness_from(const std::string& s) {
  for (Definiteness d : {Definiteness::PositiveDefinite, Definiteness::NegativeDefinite, Definiteness::Indefinite,
                         Definiteness::NumericallySingular})
    if (to_string(d) == s) return d;
  fail(ErrorCode::MissingUpstream, "coupling.json has an unknown class '" + s + "'");
}

bool definite(Definiteness d) {
  return d == Definiteness::PositiveDefinite || d == Definiteness::NegativeDefinite;
}

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, const RunOptions& opts)
      : cfg_(cfg), opts_(opts), dir_(opts.out_dir ? *opts.out_dir : cfg.output.directory), base_(base_model(cfg)) {
    fs::create_directories(dir_);
  }

  RunResult run() {
    const Stage stage = opts_.stage;
    if (stage == Stage::All || stage == Stage::Bands) guarded("bands", [&] { bands(); });
    if (stage == Stage::All || stage == Stage::Minima) guarded("minima", [&] { minima(); });
    if (stage == Stage::All || stage == Stage::Coupling) guarded("coupling", [&] { coupling_doc_ = compute_coupling(); });
    if (stage == Stage::All || stage == Stage::Verify) guarded("verify", [&] { verify(); });
    if (stage == Stage::All || stage == Stage::ProjectCheck) guarded("project-check", [&] { project_check(); });
    if (stage == Stage::All && cfg_.wants("md")) guarded("report", [&] { report(); });
    result_.exit_code = result_.failures.empty() && (!opts_.strict || result_.warnings.empty()) ? 0 : 1;
    return result_;
  }

 private:
  template <typename Fn>
  void guarded(std::string_view stage, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + std::string(stage) + ": " + e.message());
    }
  }

  void log(const std::string& line) {
    if (opts_.log) *opts_.log << line << '\n';
  }

  void warn(const std::string& msg) {
    log("warning: " + msg);
    result_.warnings.push_back(msg);
  }

  void failure(const std::string& msg) {
    log("FAIL: " + msg);
    result_.failures.push_back(msg);
  }

  std::string path(std::string_view name) const { return (dir_ / name).string(); }

  void emit_json(std::string_view name, const Json& doc) {
    write_json_file(path(name), doc);
    result_.files.push_back(std::string(name));
    log("wrote " + path(name));
  }

  template <typename Fn>
  void emit_text(std::string_view name, Fn&& fn) {
    std::ofstream out(path(name), std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::InvalidArgument, "cannot write " + path(name));
    fn(out);
    result_.files.push_back(std::string(name));
    log("wrote " + path(name));
  }

  Json header() const {
    return Json{{"schema", kConfigSchema}, {"fingerprint", coupling_fingerprint(cfg_)}};
  }

  MinimumSearchOptions search() const {
    MinimumSearchOptions s;
    s.refine_tol = cfg_.checks.refine_tol;
    return s;
  }

  CouplingOptions coupling_options() const {
    return CouplingOptions{cfg_.sweep.n_theta, search(), cfg_.checks.singular_tol};
  }

  const BandStructure& band_structure() {
    if (!bands_) bands_ = compute_band_structure(base_.with_lambda(cfg_.sweep.band_lambda), cfg_.sweep.n_theta, cfg_.sweep.n_bands);
    return *bands_;
  }

  void bands() {
    const BandStructure& band = band_structure();
    if (cfg_.wants("csv")) emit_text("bands.csv", [&](std::ostream& os) { write_bands_csv(os, band); });
  }

  void minima() {
    const BandStructure& band = band_structure();
    const MinimaSet set = find_band_minima(band, search());
    Json doc = header();
    doc["model"] = to_json(band.model ? *band.model : base_);
    doc["n_theta"] = cfg_.sweep.n_theta;
    doc["minima"] = to_json(set);
    try {
      const QuadraticModel q = quadratic_model(band, set, cfg_.sweep.quadratic_delta);
      Json fits = Json::array();
      for (const auto& f : q.fits) fits.push_back(to_json(f));
      doc["quadratic"] = Json{{"delta", cfg_.sweep.quadratic_delta}, {"fits", fits}};
    } catch (const Error& e) {
      doc["quadratic"] = Json{{"delta", cfg_.sweep.quadratic_delta},
                              {"error", e.what()}};
      warn("quadratic model: " + std::string(e.what()));
    }
    const LambdaTrack track = track_minima_in_lambda(base_, cfg_.sweep.lambda_ladder, cfg_.sweep.n_theta, search());
    Json steps = Json::array();
    for (std::size_t i = 0; i < track.ladder.size(); ++i)
      steps.push_back(Json{{"lambda", track.ladder[i]},
                           {"count", track.sets[i].count()},
                           {"energy", track.sets[i].energy},
                           {"displacement", track.displacement[i]}});
    doc["lambda_track"] = Json{{"topology_change", track.topology_change}, {"steps", steps}};
    if (track.topology_change) warn("number of minima changes along the lambda ladder");
    minima_doc_ = doc;
    emit_json("minima.json", doc);
    if (cfg_.wants("svg") && band.grid.dimension() == 1)
      emit_text("bands.svg", [&](std::ostream& os) { write_bands_svg(os, band, &set); });
  }

  Json compute_coupling() {
    Json doc = header();
    doc["model"] = to_json(base_);
    try {
      const ThresholdScan scan = lambda_threshold_scan(base_, cfg_.sweep.lambda_ladder, coupling_options());
      doc.update(to_json(scan));
      if (scan.order_change) warn("number of minima m changes along the lambda ladder");
      log("coupling: A(0) " + std::string(to_string(scan.class_at_zero)) + ", lambda0 estimate " +
          format_number(scan.lambda0) + ", envelope C " + format_number(scan.envelope_constant));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotDefiniteAtZero) throw;
      const CouplingMatrix a0 = coupling_for_model(base_, coupling_options());
      doc["class_at_zero"] = to_string(a0.definiteness);
      doc["lambda0_estimate"] = 0.0;
      doc["ladder"] = Json::array({to_json(a0)});
      warn(e.message());
    }
    emit_json("coupling.json", doc);
    return doc;
  }

  const Json& coupling_doc() {
    if (coupling_doc_) return *coupling_doc_;
    const std::string file = path("coupling.json");
    if (fs::exists(file)) {
      Json doc = read_json_file(file);
      if (doc.value("fingerprint", std::string()) == coupling_fingerprint(cfg_)) {
        log("reusing " + file + " (fingerprint " + doc["fingerprint"].get<std::string>() + ")");
        coupling_doc_ = std::move(doc);
        return *coupling_doc_;
      }
      log(file + " does not match this config");
    }
    if (!opts_.recompute)
      fail(ErrorCode::MissingUpstream, "no usable coupling.json in " + dir_.string() + " and recompute is disabled");
    coupling_doc_ = compute_coupling();
    return *coupling_doc_;
  }

  void verify() {
    const Json& coup = coupling_doc();
    const Definiteness cls = definiteness_from(coup.at("class_at_zero").get<std::string>());
    const double lambda0 = coup.at("lambda0_estimate").get<double>();
    std::vector<double> lambdas = cfg_.checks.lambdas;
    if (lambdas.empty())
      for (double f : cfg_.checks.lambda_fractions) lambdas.push_back(f * lambda0);

    std::string kind = cfg_.checks.verify_kind;
    if (kind == "auto") kind = grid_sign(base_.site, base_.grid) != 0 ? "fixed-sign" : "min-location";

    VerificationOptions vo;
    vo.alphabet = cfg_.sweep.alphabet;
    vo.max_period = cfg_.sweep.max_period;
    vo.supercell.n_theta = cfg_.checks.supercell_n_theta;
    vo.supercell.search = search();
    vo.coupling = coupling_options();
    vo.absolute_floor = cfg_.checks.absolute_floor;
    vo.seed = derive_seed(cfg_.checks.seed, 1);

    Json entries = Json::array();
    std::vector<VerificationReport> reports;
    for (double lambda : lambdas) {
      const BlochModel model = base_.with_lambda(lambda);
      if (kind == "min-location" && lambda > cfg_.checks.small_fraction * lambda0)
        warn("lambda " + format_number(lambda) + " exceeds " + format_number(cfg_.checks.small_fraction) +
             " x lambda0 estimate");
      if (kind == "min-location" && !definite(cls)) {
        entries.push_back(Json{{"check", kind}, {"lambda", lambda}, {"verdict", "not-applicable"},
                               {"reason", "A(0) is " + std::string(to_string(cls))}});
        warn("min-location check not applicable: A(0) is " + std::string(to_string(cls)));
        continue;
      }
      VerificationReport rep = kind == "fixed-sign" ? monotone_case_oracle(model, vo) : verify_min_location(model, vo);
      Json entry = to_json(rep);
      log("verify: " + kind + " lambda " + format_number(lambda) + " argmin " +
          (rep.argmin_is_predicted() ? "= predicted" : "!= predicted") + ", gap " + format_number(rep.gap) +
          ", budget " + format_number(rep.budget) + ", " + (rep.pass ? "pass" : "fail"));
      if (!rep.pass) failure(kind + " check failed at lambda " + format_number(lambda));
      if (cfg_.checks.box_sampling) {
        BoxSamplingOptions bo;
        bo.box_ladder = cfg_.checks.box_ladder;
        bo.n_samples = cfg_.checks.box_samples;
        bo.seed = derive_seed(cfg_.checks.seed, 2);
        if (!rep.alphabet.empty()) bo.law = DisorderLaw{rep.alphabet};
        const BoxSamplingSummary box =
            box_sampling_check(model, rep.spectra[rep.predicted_index].energy, rep.budget, bo);
        entry["box_sampling"] = to_json(box);
        if (!box.pass) failure("box sampling check failed at lambda " + format_number(lambda));
      }
      entries.push_back(std::move(entry));
      reports.push_back(std::move(rep));
    }
    Json doc = header();
    doc["check"] = kind;
    doc["lambda0_estimate"] = lambda0;
    doc["lambdas"] = lambdas;
    doc["reports"] = entries;
    verification_doc_ = doc;
    emit_json("verification.json", doc);
    if (cfg_.wants("csv"))
      emit_text("verification.csv", [&](std::ostream& os) { write_verification_csv(os, reports); });
  }

  void project_check() {
    const Json& coup = coupling_doc();
    const Definiteness cls = definiteness_from(coup.at("class_at_zero").get<std::string>());
    const double lambda0 = coup.at("lambda0_estimate").get<double>();
    Json doc = header();
    if (!definite(cls)) {
      doc["verdict"] = "not-applicable";
      doc["reason"] = "A(0) is " + std::string(to_string(cls));
      warn("projection check not applicable: A(0) is " + std::string(to_string(cls)));
      projection_doc_ = doc;
      emit_json("projection.json", doc);
      return;
    }
    const Extreme extreme = cls == Definiteness::PositiveDefinite ? Extreme::Lower : Extreme::Upper;
    const double lambda = cfg_.checks.projection_fraction * lambda0;
    LatticeVector period = cfg_.checks.projection_period;
    if (period.empty()) period = cfg_.sweep.max_period.empty() ? default_max_period(cfg_.model.dimension) : cfg_.sweep.max_period;

    const CouplingBounds bounds = cfg_.model.bounds;
    std::vector<DisorderConfiguration> configs;
    const std::uint64_t seed = derive_seed(cfg_.checks.seed, 3);
    for (std::size_t s = 0; s < cfg_.checks.projection_samples; ++s) {
      const auto boxed = sample_random_config(seed + s, DisorderLaw{bounds}, period, bounds);
      configs.push_back(DisorderConfiguration::periodic(period, boxed.values(), bounds));
    }
    ProjectionOptions po;
    po.n_theta = cfg_.checks.projection_n_theta;
    po.gap_threshold = cfg_.checks.gap_threshold;
    po.search = search();
    po.unit_n_theta = cfg_.sweep.n_theta;
    const auto checks = projection_positivity_check(base_.with_lambda(lambda), configs, extreme, po);

    double overall = std::numeric_limits<double>::infinity();
    bool gaps_ok = true;
    Json per_config = Json::array();
    const std::size_t n_theta = checks.empty() ? 0 : checks.front().size();
    std::vector<double> per_theta_min(n_theta, std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < checks.size(); ++c) {
      double cmin = std::numeric_limits<double>::infinity();
      Json list = Json::array();
      for (std::size_t t = 0; t < checks[c].size(); ++t) {
        const auto& ch = checks[c][t];
        cmin = std::min(cmin, ch.min_eigenvalue);
        per_theta_min[t] = std::min(per_theta_min[t], ch.min_eigenvalue);
        gaps_ok = gaps_ok && ch.gap_ok;
        list.push_back(to_json(ch));
      }
      overall = std::min(overall, cmin);
      per_config.push_back(Json{{"config", to_json(configs[c])}, {"min_eigenvalue", cmin}, {"checks", list}});
    }
    Json table = Json::array();
    log("project-check: lambda " + format_number(lambda) + ", extreme " + std::string(to_string(extreme)));
    log("  theta | min over configs | folded gap");
    for (std::size_t t = 0; t < n_theta; ++t) {
      const auto& first = checks.front()[t];
      table.push_back(Json{{"theta", to_json(first.theta)}, {"min_eigenvalue", per_theta_min[t]}, {"gap", first.gap}});
      log("  " + to_json(first.theta).dump() + " | " + format_number(per_theta_min[t]) + " | " + format_number(first.gap));
    }
    const bool pass = overall >= -cfg_.checks.projection_tolerance && gaps_ok;
    if (!gaps_ok) warn("folded band gap below threshold at some theta; projection check invalid there");
    if (!pass) failure("projection positivity check failed");
    doc["lambda"] = lambda;
    doc["lambda0_estimate"] = lambda0;
    doc["extreme"] = to_string(extreme);
    doc["period"] = period;
    doc["tolerance"] = cfg_.checks.projection_tolerance;
    doc["min_eigenvalue"] = overall;
    doc["gaps_ok"] = gaps_ok;
    doc["verdict"] = pass ? "pass" : "fail";
    doc["per_theta"] = table;
    doc["configs"] = per_config;
    projection_doc_ = doc;
    emit_json("projection.json", doc);
  }

  void report() {
    std::ostringstream md;
    auto num = [](const Json& j) { return j.dump(); };
    md << "# Band edge experiment report\n\n";
    md << "Config fingerprint `" << coupling_fingerprint(cfg_) << "`. Every number below is copied from the JSON "
          "artifacts in this directory.\n\n";
    md << "## Model\n\n";
    const Json model = to_json(base_);
    md << "- dimension " << num(model["dimension"]) << ", " << num(model["points_per_unit"]) << " grid points per unit\n";
    md << "- couplings in [" << num(model["omega_lower"]) << ", " << num(model["omega_upper"]) << "]\n";
    md << "- background " << model["background"].dump() << "\n";
    md << "- single site bumps " << model["bumps"].dump() << "\n\n";
    if (minima_doc_) {
      const Json& m = (*minima_doc_)["minima"];
      md << "## First band minima (minima.json)\n\n";
      md << "- E_min " << num(m["energy"]) << ", m = " << num(m["count"]) << ", resolution " << num(m["resolution"]) << "\n";
      for (const auto& x : m["minima"]) md << "- theta " << x["theta"].dump() << ", Hessian " << x["hessian"].dump() << "\n";
      md << "- minima count changes along the lambda ladder: "
         << num((*minima_doc_)["lambda_track"]["topology_change"]) << "\n\n";
    }
    if (coupling_doc_) {
      const Json& c = *coupling_doc_;
      md << "## Coupling matrix (coupling.json)\n\n";
      md << "- A(0) class: " << c["class_at_zero"].get<std::string>() << "\n";
      if (c.contains("c0")) {
        md << "- C0 (margin of A(0)): " << num(c["c0"]) << "\n";
        md << "- lambda0 estimate (empirical, ladder based): " << num(c["lambda0_estimate"]) << "\n";
        md << "- linear envelope constant C: " << num(c["envelope_constant"]) << "\n\n";
        md << "| lambda | m | class | Hermitian eigenvalues |\n|---|---|---|---|\n";
        for (const auto& e : c["ladder"])
          md << "| " << num(e["lambda"]) << " | " << num(e["order"]) << " | " << e["class"].get<std::string>()
             << " | " << e["hermitian_eigenvalues"].dump() << " |\n";
        md << "\n";
      }
    }
    if (verification_doc_) {
      md << "## Minimum location (verification.json)\n\n";
      md << "| check | lambda | predicted | argmin is predicted | gap | budget | verdict |\n|---|---|---|---|---|---|---|\n";
      for (const auto& r : (*verification_doc_)["reports"]) {
        if (r["verdict"] == "not-applicable") {
          md << "| " << r["check"].get<std::string>() << " | " << num(r["lambda"]) << " | - | - | - | - | not applicable |\n";
          continue;
        }
        md << "| " << r["check"].get<std::string>() << " | " << num(r["lambda"]) << " | "
           << r["predicted_extreme"].get<std::string>() << " | " << num(r["argmin_is_predicted"]) << " | "
           << num(r["gap"]) << " | " << num(r["budget"]) << " | " << r["verdict"].get<std::string>() << " |\n";
      }
      md << "\n";
      for (const auto& r : (*verification_doc_)["reports"])
        if (r.contains("box_sampling")) {
          const Json& b = r["box_sampling"];
          md << "- Dirichlet boxes at lambda " << num(r["lambda"]) << ": predicted infimum "
             << num(b["predicted_infimum"]) << ", levels " << b["levels"].dump() << ", verdict "
             << b["verdict"].get<std::string>() << "\n";
        }
      md << "\n";
    }
    if (projection_doc_) {
      const Json& p = *projection_doc_;
      md << "## First band projection (projection.json)\n\n";
      if (p["verdict"] == "not-applicable") {
        md << "Not applicable: " << p["reason"].get<std::string>() << "\n\n";
      } else {
        md << "- lambda " << num(p["lambda"]) << ", extreme " << p["extreme"].get<std::string>() << ", period "
           << p["period"].dump() << "\n";
        md << "- min eigenvalue over all configurations and theta: " << num(p["min_eigenvalue"]) << " (tolerance "
           << num(p["tolerance"]) << "), gaps ok: " << num(p["gaps_ok"]) << ", verdict "
           << p["verdict"].get<std::string>() << "\n\n";
      }
    }
    md << "## Scope\n\n";
    md << "- Only periodic configurations over a finite alphabet and bounded periods are compared; the infimum over "
          "all periodic configurations is not checked.\n";
    md << "- The lambda0 value is an empirical ladder estimate, not the true threshold.\n";
    md << "- Internal spectral edges are not verified.\n";
    if (!result_.warnings.empty()) {
      md << "\n## Warnings\n\n";
      for (const auto& w : result_.warnings) md << "- " << w << "\n";
    }
    emit_text("report.md", [&](std::ostream& os) { os << md.str(); });
  }

  const ExperimentConfig& cfg_;
  RunOptions opts_;
  fs::path dir_;
  BlochModel base_;
  RunResult result_;
  std::optional<BandStructure> bands_;
  std::optional<Json> minima_doc_, coupling_doc_, verification_doc_, projection_doc_;
};

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  Pipeline p(config, options);
  return p.run();
}

}  // namespace bandedge
