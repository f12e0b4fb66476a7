#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvshadow/bounds.hpp"
#include "cvshadow/shadow.hpp"

namespace cvshadow {

constexpr int kConfigSchemaVersion = 1;

// Configuration error carrying the JSON pointer of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct GridSpec {
  double lo = -2.0;
  double hi = 2.0;
  int points = 81;
};

struct BoundsConfig {
  MomentProfile profile;
  int r = 1;
  double epsilon = 0.5;
  double delta = 0.05;
  long long m = 1;
  std::optional<long long> L;
};

struct EntropyConfig {
  std::optional<int> d_p;
  double epsilon = 0.5;
  double E = 1.0;
  std::string source = "file";  // "file" reads a shadow average, "exact" uses P_M(rho)
  std::string input;            // defaults to <output>/shadow_average.json
};

struct ExperimentConfig {
  std::string state_kind;
  std::string state_json;  // canonical dump of the "state" object
  StateSpec state;
  Protocol protocol = Protocol::heterodyne;
  std::size_t N = 1;
  int M = 3;
  std::vector<int> A{0};
  WindowSpec window;
  bool window_given = false;
  std::optional<double> squeezing;
  GridSpec grid;
  QuadratureRule quadrature;
  bool quadrature_given = false;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  std::string samples;  // defaults to <output>/samples.jsonl
  BoundsConfig bounds;
  EntropyConfig entropy;
  std::string canonical;  // canonical dump of the whole configuration after overrides

  WindowSpec effective_window() const { return window_given ? window : WindowSpec::default_for(M); }
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies --seed / --out overrides and refreshes the canonical form.
void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                     std::optional<std::filesystem::path> out);

// 64-bit FNV-1a, used for config hashes and file checksums.
std::uint64_t fnv1a64(const std::string& bytes);

struct ManifestFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string fnv1a;
};

struct RunManifest {
  std::string command;
  std::string version = CVSHADOW_VERSION;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_utc;
  double wall_seconds = 0.0;
  int threads = 1;
  std::string simd;
  std::vector<ManifestFile> files;
  std::vector<std::string> warnings;
};

std::string manifest_to_json(const RunManifest& manifest);

// Shadow-average artifact {M, A, protocol, entries_re[], entries_im[], stderr[], checksum}.
std::string average_to_json(const ShadowAverage& avg);
// Throws std::runtime_error when the file is malformed or its checksum does not match.
ShadowAverage average_from_json(const std::string& text);

// Improper heterodyne characteristic function averaged over the batch, on a regular grid over the
// 2|A| phase-space axes (mode-major: x_j, p_j). Separable per axis; accumulated with the SIMD kernels.
CharGrid reconstruct_heterodyne_grid(const SampleBatch& batch, const std::vector<int>& A, const GridSpec& grid);

// Characteristic function of the reduced exact state on the same grid.
CharGrid exact_grid(const StateSpec& state, const std::vector<int>& A, const GridSpec& grid);

// V = sum |chi - chi~|^2 / (vol(D) * N_grid).
double variance_metric(const CharGrid& exact, const CharGrid& reconstructed);

// CSV with columns u1..u{2|A|}, re_true, im_true, re_recon, im_recon.
std::string grid_to_csv(const CharGrid& exact, const CharGrid& reconstructed);

StateSpec parse_state(const std::string& json_text);

int cmd_sample(const ExperimentConfig& cfg);
int cmd_reconstruct(const ExperimentConfig& cfg);
int cmd_bounds(const ExperimentConfig& cfg);
int cmd_entropy(const ExperimentConfig& cfg);

}  // namespace cvshadow
