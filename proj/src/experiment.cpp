#include "cvshadow/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "cvshadow/entropy.hpp"
#include "cvshadow/kernels.hpp"
#include "cvshadow/parallel.hpp"
#include "cvshadow/shadow_kernel.hpp"

namespace cvshadow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- typed field access with JSON-pointer error paths ----

const json& require(const json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.is_object()) throw ConfigError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(ptr + "/" + key, "required field is missing");
  return *it;
}

double as_number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ConfigError(ptr, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(ptr, "expected a finite number");
  return x;
}

long long as_integer(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw ConfigError(ptr, "expected an integer");
  return v.get<long long>();
}

std::string as_string(const json& v, const std::string& ptr) {
  if (!v.is_string()) throw ConfigError(ptr, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_vector(const json& v, const std::string& ptr) {
  if (!v.is_array()) throw ConfigError(ptr, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], ptr + "/" + std::to_string(i)));
  return out;
}

double number_or(const json& obj, const std::string& key, const std::string& ptr, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, ptr + "/" + key);
}

void reject_unknown(const json& obj, const std::string& ptr, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(ptr + "/" + it.key(), "unknown field");
  }
}

StateSpec parse_state_json(const json& s, const std::string& ptr, std::string& kind) {
  if (!s.is_object()) throw ConfigError(ptr, "expected an object");
  kind = as_string(require(s, "kind", ptr), ptr + "/kind");
  try {
    if (kind == "vacuum") {
      reject_unknown(s, ptr, {"kind", "modes"});
      const long long m = s.contains("modes") ? as_integer(s["modes"], ptr + "/modes") : 1;
      if (m < 1) throw ConfigError(ptr + "/modes", "must be at least 1");
      return vacuum_state(static_cast<int>(m));
    }
    if (kind == "coherent") {
      reject_unknown(s, ptr, {"kind", "mean"});
      const auto mean = as_vector(require(s, "mean", ptr), ptr + "/mean");
      if (mean.empty() || mean.size() % 2) throw ConfigError(ptr + "/mean", "needs 2m entries");
      return coherent_state(Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size()));
    }
    if (kind == "thermal") {
      reject_unknown(s, ptr, {"kind", "nu"});
      const double nu = as_number(require(s, "nu", ptr), ptr + "/nu");
      if (nu < 0) throw ConfigError(ptr + "/nu", "must be non-negative");
      return thermal_state(nu);
    }
    if (kind == "squeezed") {
      reject_unknown(s, ptr, {"kind", "r"});
      const double r = as_number(require(s, "r", ptr), ptr + "/r");
      GaussianStateSpec g{Eigen::VectorXd::Zero(2), Eigen::Vector2d(std::exp(-2 * r), std::exp(2 * r)).asDiagonal()};
      return g;
    }
    if (kind == "gaussian") {
      reject_unknown(s, ptr, {"kind", "mean", "cov"});
      const auto mean = as_vector(require(s, "mean", ptr), ptr + "/mean");
      const json& cov = require(s, "cov", ptr);
      const std::size_t n = mean.size();
      if (n == 0 || n % 2) throw ConfigError(ptr + "/mean", "needs 2m entries");
      if (!cov.is_array() || cov.size() != n) throw ConfigError(ptr + "/cov", "expected a 2m x 2m array");
      GaussianStateSpec g{Eigen::Map<const Eigen::VectorXd>(mean.data(), n), Eigen::MatrixXd(n, n)};
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = as_vector(cov[i], ptr + "/cov/" + std::to_string(i));
        if (row.size() != n) throw ConfigError(ptr + "/cov/" + std::to_string(i), "row length differs from 2m");
        for (std::size_t k = 0; k < n; ++k) g.cov(i, k) = row[k];
      }
      try {
        g.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(ptr + "/cov", e.what());
      }
      return g;
    }
    if (kind == "cat") {
      reject_unknown(s, ptr, {"kind", "alpha", "logical"});
      const auto a = as_vector(require(s, "alpha", ptr), ptr + "/alpha");
      if (a.size() != 2) throw ConfigError(ptr + "/alpha", "expected a phase-space point [x, p]");
      const std::string logical = s.contains("logical") ? as_string(s["logical"], ptr + "/logical") : "zero";
      CatStateSpec c{ModePoint(a[0], a[1]), CatLogical::zero};
      if (logical == "zero") c.logical = CatLogical::zero;
      else if (logical == "one") c.logical = CatLogical::one;
      else if (logical == "plus") c.logical = CatLogical::plus;
      else if (logical == "minus") c.logical = CatLogical::minus;
      else throw ConfigError(ptr + "/logical", "expected zero, one, plus or minus");
      if (c.alpha.norm() == 0.0) throw ConfigError(ptr + "/alpha", "cat amplitude must be non-zero");
      return c;
    }
    if (kind == "fock") {
      reject_unknown(s, ptr, {"kind", "n"});
      const long long n = as_integer(require(s, "n", ptr), ptr + "/n");
      if (n < 0 || n > 150) throw ConfigError(ptr + "/n", "photon number must lie in [0, 150]");
      return FockNumberSpec{static_cast<int>(n)};
    }
    if (kind == "chain") {
      reject_unknown(s, ptr, {"kind", "m", "kappa", "disorder", "disorder_seed"});
      ChainSpec c;
      c.m = static_cast<int>(as_integer(require(s, "m", ptr), ptr + "/m"));
      c.kappa = as_number(require(s, "kappa", ptr), ptr + "/kappa");
      if (s.contains("disorder")) {
        if (!s["disorder"].is_boolean()) throw ConfigError(ptr + "/disorder", "expected a boolean");
        c.disorder = s["disorder"].get<bool>();
      }
      if (s.contains("disorder_seed"))
        c.disorder_seed = static_cast<std::uint64_t>(as_integer(s["disorder_seed"], ptr + "/disorder_seed"));
      if (c.m < 2) throw ConfigError(ptr + "/m", "a chain needs at least 2 modes");
      return chain_ground_state(c);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(ptr, e.what());
  }
  throw ConfigError(ptr + "/kind", "unknown state kind '" + kind + "'");
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ManifestWriter {
 public:
  ManifestWriter(const ExperimentConfig& cfg, std::string command) : cfg_(cfg) {
    manifest_.command = std::move(command);
    manifest_.config_hash = hex64(fnv1a64(cfg.canonical + "|" + CVSHADOW_VERSION));
    manifest_.seed = cfg.seed;
    manifest_.started_utc = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
    manifest_.threads = thread_count();
    manifest_.simd = kernels::isa_name(kernels::active_isa());
    start_ = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output);
  }

  fs::path path(const std::string& name) const { return cfg_.output / name; }

  void write(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    manifest_.files.push_back({name, text.size(), hex64(fnv1a64(text))});
  }

  void warn(const std::string& w) {
    std::cerr << "warning: " << w << '\n';
    manifest_.warnings.push_back(w);
  }

  void finish() {
    manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(path("manifest_" + manifest_.command + ".json"), manifest_to_json(manifest_));
  }

 private:
  const ExperimentConfig& cfg_;
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

std::string grid_shape_error(const GridSpec& g, int dims) {
  double total = std::pow(static_cast<double>(g.points), dims);
  if (total > 5e6) return fmt::format("{}^{} grid points exceed the 5e6 limit", g.points, dims);
  return {};
}

std::vector<double> axis_values(const GridSpec& g) {
  std::vector<double> v(g.points);
  for (int i = 0; i < g.points; ++i) v[i] = g.points == 1 ? g.lo : g.lo + (g.hi - g.lo) * i / (g.points - 1);
  return v;
}

CharGrid empty_grid(const GridSpec& g, int dims, const std::string& provenance) {
  return make_grid(std::vector<double>(dims, g.lo), std::vector<double>(dims, g.hi), g.points, provenance);
}

// Grid point in mode-major axis order converted to the PhasePoint ordering (x_1..x_r, p_1..p_r).
PhasePoint to_phase_point(const std::vector<double>& axes) {
  const int r = static_cast<int>(axes.size() / 2);
  PhasePoint u(2 * r);
  for (int j = 0; j < r; ++j) {
    u[j] = axes[2 * j];
    u[r + j] = axes[2 * j + 1];
  }
  return u;
}

StateSpec reduced_state(const StateSpec& state, const std::vector<int>& A) {
  if (const auto* g = std::get_if<GaussianStateSpec>(&state)) return g->reduce(A);
  if (A.size() != 1 || A[0] != 0) throw std::invalid_argument("non-Gaussian states are single-mode; A must be [0]");
  return state;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

StateSpec parse_state(const std::string& json_text) {
  std::string kind;
  return parse_state_json(json::parse(json_text), "/state", kind);
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("", "expected a JSON object");
  reject_unknown(root, "", {"schema_version", "state", "protocol", "N", "M", "modes", "window", "squeezing", "grid",
                            "quadrature", "seed", "output", "samples", "bounds", "entropy"});
  ExperimentConfig cfg;
  const long long version = as_integer(require(root, "schema_version", ""), "/schema_version");
  if (version != kConfigSchemaVersion)
    throw ConfigError("/schema_version", fmt::format("unsupported schema version {} (expected {})", version,
                                                      kConfigSchemaVersion));
  cfg.state = parse_state_json(require(root, "state", ""), "/state", cfg.state_kind);
  cfg.state_json = root["state"].dump();
  if (root.contains("protocol")) {
    const std::string p = as_string(root["protocol"], "/protocol");
    if (p != "homodyne" && p != "heterodyne") throw ConfigError("/protocol", "expected homodyne or heterodyne");
    cfg.protocol = protocol_from_string(p);
  }
  if (root.contains("N")) {
    const long long N = as_integer(root["N"], "/N");
    if (N < 1) throw ConfigError("/N", "must be at least 1");
    cfg.N = static_cast<std::size_t>(N);
  }
  if (root.contains("M")) {
    const long long M = as_integer(root["M"], "/M");
    if (M < 0 || M > 60) throw ConfigError("/M", "must lie in [0, 60]");
    cfg.M = static_cast<int>(M);
  }
  const int modes = modes_of(cfg.state);
  if (root.contains("modes")) {
    const json& a = root["modes"];
    if (!a.is_array() || a.empty()) throw ConfigError("/modes", "expected a non-empty array of mode indices");
    cfg.A.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const long long j = as_integer(a[i], "/modes/" + std::to_string(i));
      if (j < 0 || j >= modes) throw ConfigError("/modes/" + std::to_string(i), "mode index outside the state");
      cfg.A.push_back(static_cast<int>(j));
    }
  }
  if (root.contains("window")) {
    const json& w = root["window"];
    reject_unknown(w, "/window", {"eta", "R", "profile"});
    cfg.window.eta = as_number(require(w, "eta", "/window"), "/window/eta");
    cfg.window.R = as_number(require(w, "R", "/window"), "/window/R");
    if (w.contains("profile")) cfg.window.profile = static_cast<int>(as_integer(w["profile"], "/window/profile"));
    try {
      cfg.window.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/window", e.what());
    }
    cfg.window_given = true;
  }
  if (root.contains("squeezing")) {
    const double s = as_number(root["squeezing"], "/squeezing");
    if (!(s > 0.0)) throw ConfigError("/squeezing", "must be positive");
    cfg.squeezing = s;
  }
  if (root.contains("grid")) {
    const json& g = root["grid"];
    reject_unknown(g, "/grid", {"lo", "hi", "points"});
    cfg.grid.lo = number_or(g, "lo", "/grid", cfg.grid.lo);
    cfg.grid.hi = number_or(g, "hi", "/grid", cfg.grid.hi);
    if (g.contains("points")) cfg.grid.points = static_cast<int>(as_integer(g["points"], "/grid/points"));
    if (!(cfg.grid.hi > cfg.grid.lo)) throw ConfigError("/grid", "need lo < hi");
    if (cfg.grid.points < 2) throw ConfigError("/grid/points", "need at least 2 points per axis");
  }
  cfg.quadrature = cfg.protocol == Protocol::homodyne ? QuadratureRule::homodyne_default()
                                                      : QuadratureRule::heterodyne_default();
  if (root.contains("quadrature")) {
    const json& q = root["quadrature"];
    reject_unknown(q, "/quadrature", {"kind", "budget", "tolerance"});
    if (q.contains("kind")) {
      const std::string k = as_string(q["kind"], "/quadrature/kind");
      if (k == "adaptive_1d") cfg.quadrature.kind = QuadratureRule::Kind::adaptive_1d;
      else if (k == "qmc") cfg.quadrature.kind = QuadratureRule::Kind::qmc;
      else if (k == "tensor_grid") cfg.quadrature.kind = QuadratureRule::Kind::tensor_grid;
      else throw ConfigError("/quadrature/kind", "expected adaptive_1d, qmc or tensor_grid");
    }
    if (q.contains("budget")) cfg.quadrature.budget = static_cast<int>(as_integer(q["budget"], "/quadrature/budget"));
    cfg.quadrature.tolerance = number_or(q, "tolerance", "/quadrature", cfg.quadrature.tolerance);
    try {
      cfg.quadrature.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/quadrature", e.what());
    }
    cfg.quadrature_given = true;
  }
  if (root.contains("seed")) {
    const json& s = root["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("/seed", "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (root.contains("output")) cfg.output = as_string(root["output"], "/output");
  if (root.contains("samples")) cfg.samples = as_string(root["samples"], "/samples");
  if (root.contains("bounds")) {
    const json& b = root["bounds"];
    reject_unknown(b, "/bounds", {"n", "alpha", "E_n", "E_alpha", "r", "epsilon", "delta", "m", "L"});
    auto& p = cfg.bounds.profile;
    p.n = number_or(b, "n", "/bounds", p.n);
    p.alpha = number_or(b, "alpha", "/bounds", p.alpha);
    p.E_n = number_or(b, "E_n", "/bounds", p.E_n);
    p.E_alpha = number_or(b, "E_alpha", "/bounds", p.E_alpha);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/bounds", e.what());
    }
    if (b.contains("r")) cfg.bounds.r = static_cast<int>(as_integer(b["r"], "/bounds/r"));
    if (cfg.bounds.r < 1) throw ConfigError("/bounds/r", "must be at least 1");
    cfg.bounds.epsilon = number_or(b, "epsilon", "/bounds", cfg.bounds.epsilon);
    cfg.bounds.delta = number_or(b, "delta", "/bounds", cfg.bounds.delta);
    if (!(cfg.bounds.epsilon > 0 && cfg.bounds.epsilon < 1)) throw ConfigError("/bounds/epsilon", "must lie in (0, 1)");
    if (!(cfg.bounds.delta > 0 && cfg.bounds.delta < 1)) throw ConfigError("/bounds/delta", "must lie in (0, 1)");
    if (b.contains("m")) cfg.bounds.m = as_integer(b["m"], "/bounds/m");
    if (cfg.bounds.m < 1) throw ConfigError("/bounds/m", "must be at least 1");
    if (b.contains("L") && !b["L"].is_null()) {
      cfg.bounds.L = as_integer(b["L"], "/bounds/L");
      if (*cfg.bounds.L < 1) throw ConfigError("/bounds/L", "must be at least 1");
    }
  }
  if (root.contains("entropy")) {
    const json& e = root["entropy"];
    reject_unknown(e, "/entropy", {"d_p", "epsilon", "E", "source", "input"});
    if (e.contains("d_p")) {
      const long long d = as_integer(e["d_p"], "/entropy/d_p");
      if (d < 2 || d > 100000) throw ConfigError("/entropy/d_p", "must lie in [2, 100000]");
      cfg.entropy.d_p = static_cast<int>(d);
    }
    cfg.entropy.epsilon = number_or(e, "epsilon", "/entropy", cfg.entropy.epsilon);
    cfg.entropy.E = number_or(e, "E", "/entropy", cfg.entropy.E);
    if (!(cfg.entropy.epsilon > 0 && cfg.entropy.epsilon <= 1)) throw ConfigError("/entropy/epsilon", "must lie in (0, 1]");
    if (e.contains("source")) {
      cfg.entropy.source = as_string(e["source"], "/entropy/source");
      if (cfg.entropy.source != "file" && cfg.entropy.source != "exact")
        throw ConfigError("/entropy/source", "expected file or exact");
    }
    if (e.contains("input")) cfg.entropy.input = as_string(e["input"], "/entropy/input");
  }
  apply_overrides(cfg, std::nullopt, std::nullopt);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
  if (seed) cfg.seed = *seed;
  if (out) cfg.output = *out;
  const WindowSpec w = cfg.effective_window();
  json c;
  c["schema_version"] = kConfigSchemaVersion;
  c["state"] = json::parse(cfg.state_json);
  c["protocol"] = to_string(cfg.protocol);
  c["N"] = cfg.N;
  c["M"] = cfg.M;
  c["modes"] = cfg.A;
  c["window"] = {{"eta", w.eta}, {"R", w.R}, {"profile", w.profile}};
  if (cfg.squeezing) c["squeezing"] = *cfg.squeezing;
  c["grid"] = {{"lo", cfg.grid.lo}, {"hi", cfg.grid.hi}, {"points", cfg.grid.points}};
  c["quadrature"] = {{"kind", static_cast<int>(cfg.quadrature.kind)},
                     {"budget", cfg.quadrature.budget},
                     {"tolerance", cfg.quadrature.tolerance}};
  c["seed"] = cfg.seed;
  const auto& p = cfg.bounds.profile;
  c["bounds"] = {{"n", p.n},         {"alpha", p.alpha},           {"E_n", p.E_n},
                 {"E_alpha", p.E_alpha}, {"r", cfg.bounds.r},      {"epsilon", cfg.bounds.epsilon},
                 {"delta", cfg.bounds.delta}, {"m", cfg.bounds.m}, {"L", cfg.bounds.L ? json(*cfg.bounds.L) : json()}};
  c["entropy"] = {{"d_p", cfg.entropy.d_p ? json(*cfg.entropy.d_p) : json()},
                  {"epsilon", cfg.entropy.epsilon},
                  {"E", cfg.entropy.E},
                  {"source", cfg.entropy.source}};
  cfg.canonical = c.dump();
}

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["tool"] = "cvshadow";
  j["version"] = m.version;
  j["command"] = m.command;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["started_utc"] = m.started_utc;
  j["wall_seconds"] = m.wall_seconds;
  j["threads"] = m.threads;
  j["simd"] = m.simd;
  j["files"] = json::array();
  for (const auto& f : m.files) j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a}});
  j["warnings"] = m.warnings;
  return j.dump(2);
}

std::string average_to_json(const ShadowAverage& avg) {
  const int D = avg.mean.dim();
  std::vector<double> re, im, se, se_re, se_im;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      re.push_back(avg.mean(a, b).real());
      im.push_back(avg.mean(a, b).imag());
      se.push_back(avg.stderr_abs(a, b));
      se_re.push_back(avg.stderr_re(a, b));
      se_im.push_back(avg.stderr_im(a, b));
    }
  json j;
  j["M"] = avg.mean.truncation();
  j["A"] = avg.modes;
  j["protocol"] = to_string(avg.protocol);
  j["count"] = avg.count;
  j["entries_re"] = re;
  j["entries_im"] = im;
  j["stderr"] = se;
  j["stderr_re"] = se_re;
  j["stderr_im"] = se_im;
  j["checksum"] = hex64(fnv1a64(j["entries_re"].dump() + j["entries_im"].dump()));
  return j.dump(2);
}

ShadowAverage average_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("shadow average: malformed JSON: ") + e.what());
  }
  try {
    const int M = j.at("M").get<int>();
    const auto A = j.at("A").get<std::vector<int>>();
    if (M < 0 || A.empty()) throw std::runtime_error("invalid shape");
    const std::string checksum = hex64(fnv1a64(j.at("entries_re").dump() + j.at("entries_im").dump()));
    if (checksum != j.at("checksum").get<std::string>()) throw std::runtime_error("checksum mismatch");
    const auto re = j.at("entries_re").get<std::vector<double>>();
    const auto im = j.at("entries_im").get<std::vector<double>>();
    const auto se = j.at("stderr").get<std::vector<double>>();
    ShadowAverage avg;
    avg.mean = FockMatrix(static_cast<int>(A.size()), M);
    const int D = avg.mean.dim();
    if (re.size() != static_cast<std::size_t>(D) * D || im.size() != re.size() || se.size() != re.size())
      throw std::runtime_error("entry count does not match (M+1)^{2|A|}");
    avg.stderr_abs = Eigen::MatrixXd(D, D);
    avg.stderr_re = Eigen::MatrixXd::Zero(D, D);
    avg.stderr_im = Eigen::MatrixXd::Zero(D, D);
    const bool split = j.contains("stderr_re") && j.contains("stderr_im");
    const auto se_re = split ? j["stderr_re"].get<std::vector<double>>() : std::vector<double>{};
    const auto se_im = split ? j["stderr_im"].get<std::vector<double>>() : std::vector<double>{};
    if (split && (se_re.size() != re.size() || se_im.size() != re.size()))
      throw std::runtime_error("standard-error arrays have the wrong length");
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        const std::size_t k = static_cast<std::size_t>(a) * D + b;
        if (!std::isfinite(re[k]) || !std::isfinite(im[k])) throw std::runtime_error("non-finite entry");
        avg.mean(a, b) = Complex(re[k], im[k]);
        avg.stderr_abs(a, b) = se[k];
        if (split) {
          avg.stderr_re(a, b) = se_re[k];
          avg.stderr_im(a, b) = se_im[k];
        }
      }
    avg.count = j.value("count", std::size_t{0});
    avg.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    avg.modes = A;
    return avg;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("shadow average: integrity error: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("shadow average: integrity error: ") + e.what());
  }
}

CharGrid reconstruct_heterodyne_grid(const SampleBatch& batch, const std::vector<int>& A, const GridSpec& g) {
  if (batch.records.empty()) throw std::invalid_argument("reconstruct_heterodyne_grid: empty batch");
  const int dims = 2 * static_cast<int>(A.size());
  CharGrid grid = empty_grid(g, dims, "reconstructed");
  const std::vector<double> axis = axis_values(g);
  const int p = g.points;
  const int half = dims / 2;
  std::size_t na = 1, nb = 1;
  for (int k = 0; k < half; ++k) na *= p;
  for (int k = half; k < dims; ++k) nb *= p;
  for (const auto& rec : batch.records) {
    if (rec.protocol != Protocol::heterodyne) throw std::invalid_argument("reconstruct_heterodyne_grid: not heterodyne");
    for (int j : A)
      if (j < 0 || j >= rec.modes()) throw std::out_of_range("reconstruct_heterodyne_grid: mode outside the record");
  }
  std::vector<double> acc_re(na * nb, 0.0), acc_im(na * nb, 0.0);
  // Rows of the (na x nb) accumulator are split across workers; each cell sums records in order.
  const std::size_t chunks = std::min<std::size_t>(na, 64);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = na * c / chunks;
    const std::size_t hi = na * (c + 1) / chunks;
    std::vector<Complex> axis_phase(static_cast<std::size_t>(dims) * p);
    std::vector<double> a_re(hi - lo), a_im(hi - lo), b_re(nb), b_im(nb);
    for (const auto& rec : batch.records) {
      for (int ax = 0; ax < dims; ++ax) {
        const ModePoint x = rec.heterodyne_point(A[ax / 2]);
        // -i u^T Omega x = -i (u_x p - u_p x): axis x pairs with the outcome p and vice versa.
        const double coef = (ax % 2 == 0) ? -x[1] : x[0];
        for (int k = 0; k < p; ++k) axis_phase[static_cast<std::size_t>(ax) * p + k] = std::polar(1.0, coef * axis[k]);
      }
      auto fill = [&](std::size_t flat, int first, int last) {
        Complex v{1.0, 0.0};
        for (int ax = last - 1; ax >= first; --ax) {
          v *= axis_phase[static_cast<std::size_t>(ax) * p + flat % p];
          flat /= p;
        }
        return v;
      };
      for (std::size_t i = lo; i < hi; ++i) {
        const Complex v = fill(i, 0, half);
        a_re[i - lo] = v.real();
        a_im[i - lo] = v.imag();
      }
      for (std::size_t i = 0; i < nb; ++i) {
        const Complex v = fill(i, half, dims);
        b_re[i] = v.real();
        b_im[i] = v.imag();
      }
      kernels::outer_accumulate(a_re.data(), a_im.data(), static_cast<int>(hi - lo), b_re.data(), b_im.data(),
                                static_cast<int>(nb), acc_re.data() + lo * nb, acc_im.data() + lo * nb);
    }
  });
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto u = grid.point(i);
    double norm2 = 0.0;
    for (double c : u) norm2 += c * c;
    grid.values[i] = Complex(acc_re[i], acc_im[i]) * (std::exp(0.25 * norm2) * inv_n);
  }
  return grid;
}

CharGrid exact_grid(const StateSpec& state, const std::vector<int>& A, const GridSpec& g) {
  const int dims = 2 * static_cast<int>(A.size());
  const StateSpec reduced = reduced_state(state, A);
  CharGrid grid = empty_grid(g, dims, "exact");
  parallel_for(grid.size(), [&](std::size_t i) { grid.values[i] = char_of(reduced, to_phase_point(grid.point(i))); });
  return grid;
}

double variance_metric(const CharGrid& exact, const CharGrid& recon) {
  if (exact.shape != recon.shape || exact.origin != recon.origin || exact.step != recon.step)
    throw std::invalid_argument("variance_metric: grids differ");
  double vol = 1.0;
  for (std::size_t k = 0; k < exact.shape.size(); ++k) vol *= exact.step[k] * (exact.shape[k] - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) sum += std::norm(exact.values[i] - recon.values[i]);
  return sum / (vol * static_cast<double>(exact.size()));
}

std::string grid_to_csv(const CharGrid& exact, const CharGrid& recon) {
  if (exact.shape != recon.shape) throw std::invalid_argument("grid_to_csv: grids differ");
  std::string out;
  const std::size_t dims = exact.shape.size();
  for (std::size_t k = 0; k < dims; ++k) out += fmt::format("u{},", k + 1);
  out += "re_true,im_true,re_recon,im_recon\n";
  for (std::size_t i = 0; i < exact.size(); ++i) {
    for (double c : exact.point(i)) out += fmt::format("{},", c);
    out += fmt::format("{},{},{},{}\n", exact.values[i].real(), exact.values[i].imag(), recon.values[i].real(),
                       recon.values[i].imag());
  }
  return out;
}

int cmd_sample(const ExperimentConfig& cfg) {
  ManifestWriter mw(cfg, "sample");
  const auto sampler = make_sampler(cfg.state, cfg.protocol);
  const SampleBatch batch = sample_batch(*sampler, cfg.N, cfg.seed, cfg.state_json);
  std::ostringstream out;
  write_jsonl(batch, out);
  mw.write("samples.jsonl", out.str());
  if (sampler->acceptance_rate() < 1.0)
    std::cout << fmt::format("acceptance rate {:.4f}\n", sampler->acceptance_rate());
  std::cout << fmt::format("wrote {} {} records to {}\n", batch.size(), to_string(cfg.protocol),
                           mw.path("samples.jsonl").string());
  mw.finish();
  return 0;
}

int cmd_reconstruct(const ExperimentConfig& cfg) {
  ManifestWriter mw(cfg, "reconstruct");
  const fs::path samples = cfg.samples.empty() ? cfg.output / "samples.jsonl" : fs::path(cfg.samples);
  std::ifstream in(samples);
  if (!in) throw std::runtime_error("cannot read samples file " + samples.string());
  const SampleBatch batch = read_jsonl(in);
  if (batch.records.empty()) throw std::runtime_error("samples file is empty");
  if (batch.records.front().protocol != cfg.protocol)
    throw std::runtime_error(fmt::format("protocol mismatch: samples are {}, config says {}",
                                         to_string(batch.records.front().protocol), to_string(cfg.protocol)));
  const int dims = 2 * static_cast<int>(cfg.A.size());
  if (const auto err = grid_shape_error(cfg.grid, dims); !err.empty()) throw ConfigError("/grid/points", err);

  json metrics;
  metrics["N"] = batch.size();
  metrics["protocol"] = to_string(cfg.protocol);
  metrics["modes"] = cfg.A;

  // Truncated Fock average.
  std::optional<ShadowAverage> avg;
  const double fock_dim = std::pow(cfg.M + 1.0, static_cast<double>(cfg.A.size()));
  if (fock_dim <= 4096) {
    const WindowSpec w = cfg.effective_window();
    const bool direct = cfg.quadrature_given;
    std::optional<ShadowKernel> kernel;
    if (!direct)
      kernel = cfg.protocol == Protocol::homodyne ? ShadowKernel::homodyne(cfg.M) : ShadowKernel::heterodyne(cfg.M, w);
    avg = average_shadows(batch, cfg.A, cfg.M, w, kernel ? &*kernel : nullptr, cfg.quadrature);
    mw.write("shadow_average.json", average_to_json(*avg));
    metrics["trace"] = avg->mean.data().trace().real();
  } else {
    mw.warn(fmt::format("Fock average skipped: (M+1)^|A| = {} exceeds 4096", fock_dim));
  }

  // Characteristic-function grids.
  CharGrid recon;
  if (cfg.protocol == Protocol::heterodyne) {
    recon = reconstruct_heterodyne_grid(batch, cfg.A, cfg.grid);
  } else if (cfg.squeezing) {
    recon = empty_grid(cfg.grid, dims, "reconstructed");
    parallel_for(recon.size(), [&](std::size_t i) {
      const PhasePoint u = to_phase_point(recon.point(i));
      Complex acc{};
      for (const auto& rec : batch.records) acc += shadow_char_eval(rec, cfg.A, u, *cfg.squeezing);
      recon.values[i] = acc / static_cast<double>(batch.size());
    });
  } else if (avg) {
    // Without finite squeezing the pointwise shadow is a distribution; use chi of the Fock average.
    recon = empty_grid(cfg.grid, dims, "reconstructed");
    const FockMatrix& s = avg->mean;
    parallel_for(recon.size(), [&](std::size_t i) {
      const PhasePoint u = to_phase_point(recon.point(i));
      Complex acc{};
      for (int a = 0; a < s.dim(); ++a)
        for (int b = 0; b < s.dim(); ++b) acc += s(a, b) * char_fock_dyad(s.multi_index(a), s.multi_index(b), u);
      recon.values[i] = acc;
    });
  } else {
    throw std::runtime_error("homodyne grid reconstruction needs squeezing or a Fock average");
  }
  const CharGrid exact = exact_grid(cfg.state, cfg.A, cfg.grid);
  const double V = variance_metric(exact, recon);
  double corner = 0.0;
  for (int k = 0; k < dims; ++k) corner += std::max(cfg.grid.lo * cfg.grid.lo, cfg.grid.hi * cfg.grid.hi);
  if (cfg.protocol == Protocol::heterodyne && std::exp(0.25 * corner) / std::sqrt(static_cast<double>(batch.size())) > 1.0)
    mw.warn("grid extends beyond the region where e^{|u|^2/4}/sqrt(N) < 1; the reconstruction is dominated by noise there");
  mw.write("char_grid.csv", grid_to_csv(exact, recon));
  metrics["V"] = V;
  metrics["grid"] = {{"lo", cfg.grid.lo}, {"hi", cfg.grid.hi}, {"points", cfg.grid.points}, {"dims", dims}};
  double max_err = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) max_err = std::max(max_err, std::abs(recon.values[i] - exact.values[i]));
  metrics["max_abs_error"] = max_err;
  mw.write("metrics.json", metrics.dump(2));
  std::cout << fmt::format("V_(N,D) = {:.6e} over {} grid points\n", V, recon.size());
  mw.finish();
  return 0;
}

int cmd_bounds(const ExperimentConfig& cfg) {
  ManifestWriter mw(cfg, "bounds");
  const auto& b = cfg.bounds;
  const BoundReport rep = cfg.protocol == Protocol::homodyne
                              ? required_samples_homodyne(b.profile, b.r, b.epsilon, b.delta, b.m, b.L)
                              : required_samples_heterodyne(b.profile, b.r, b.epsilon, b.delta, b.m,
                                                            cfg.effective_window(), b.L);
  mw.write("bounds.json", report_to_json(rep));
  std::cout << fmt::format("{:<14}{}\n", "protocol", to_string(rep.protocol));
  std::cout << fmt::format("{:<14}{}\n", "feasible", rep.feasible ? "yes" : "no");
  if (rep.feasible) {
    std::cout << fmt::format("{:<14}{}\n", "M", rep.M_chosen);
    if (rep.protocol == Protocol::heterodyne) {
      std::cout << fmt::format("{:<14}{:.6g}\n", "eta", rep.eta_chosen);
      std::cout << fmt::format("{:<14}{:.6g}\n", "delta0", rep.delta0_value);
    }
    std::cout << fmt::format("{:<14}{:.6g}\n", "sigma", rep.sigma_value);
    std::cout << fmt::format("{:<14}{:.6g} (log10 {:.3f})\n", "N", rep.N_required, rep.log10_N);
  } else {
    std::cout << fmt::format("{:<14}{}\n", "reason", rep.message);
  }
  mw.finish();
  return 0;
}

int cmd_entropy(const ExperimentConfig& cfg) {
  ManifestWriter mw(cfg, "entropy");
  FockMatrix sigma;
  if (cfg.entropy.source == "exact") {
    if (modes_of(cfg.state) != 1) throw std::runtime_error("exact entropy source needs a single-mode state");
    sigma = fock_matrix_of(cfg.state, cfg.M).rho;
  } else {
    const fs::path input = cfg.entropy.input.empty() ? cfg.output / "shadow_average.json" : fs::path(cfg.entropy.input);
    if (!fs::exists(input)) throw std::runtime_error("shadow average file not found: " + input.string());
    sigma = average_from_json(read_text(input)).mean;
  }
  const int r = sigma.modes();
  const int M = sigma.truncation();
  const double D = std::pow(M + 1.0, r);
  const int d_p = cfg.entropy.d_p ? *cfg.entropy.d_p : static_cast<int>(std::ceil(3.0 * D / cfg.entropy.epsilon));
  json j;
  j["H"] = entropy_poly(sigma, d_p);
  j["d_p"] = d_p;
  j["M"] = M;
  j["r"] = r;
  j["polynomial_error_bound"] = D / d_p;
  j["source"] = cfg.entropy.source;
  try {
    j["plan"] = json::parse(plan_to_json(plan_entropy(M, r, cfg.entropy.epsilon, cfg.entropy.E,
                                                      std::max<long long>(r, cfg.bounds.m), cfg.bounds.delta)));
  } catch (const std::invalid_argument& e) {
    j["plan_error"] = e.what();
  }
  if (const auto* g = std::get_if<GaussianStateSpec>(&cfg.state)) {
    j["reference_entropy"] = entropy_reference(g->reduce(cfg.A));
  } else {
    j["reference_entropy"] = 0.0;  // cat and Fock states are pure
  }
  if (modes_of(cfg.state) == 1) {
    const FockMatrix exact = fock_matrix_of(cfg.state, M).rho;
    j["reference_truncated_entropy"] = matrix_entropy(exact);
  }
  mw.write("entropy.json", j.dump(2));
  std::cout << fmt::format("H^(d_p={}) = {:.8f}", d_p, j["H"].get<double>());
  std::cout << fmt::format("   reference S = {:.8f}\n", j["reference_entropy"].get<double>());
  mw.finish();
  return 0;
}

}  // namespace cvshadow
