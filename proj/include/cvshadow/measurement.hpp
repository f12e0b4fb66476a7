#pragma once

#include <atomic>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cvshadow/parallel.hpp"
#include "cvshadow/states.hpp"

namespace cvshadow {

enum class Protocol { homodyne, heterodyne };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

// One measurement round. Homodyne outcomes hold one quadrature value per mode;
// heterodyne outcomes hold (x_j, p_j) pairs per mode, mode after mode.
struct ShadowRecord {
  Protocol protocol = Protocol::heterodyne;
  std::vector<double> thetas;
  std::vector<double> outcome;
  std::string seed_path;

  int modes() const;
  ModePoint heterodyne_point(int j) const;
  void validate() const;
  bool operator==(const ShadowRecord&) const = default;
};

struct SampleBatch {
  std::vector<ShadowRecord> records;
  std::string state_descriptor;

  std::size_t size() const { return records.size(); }
  void validate() const;
};

// p(q | theta) = sum rho_{n1 n2} e^{-i (n1 - n2) theta} psi_{n1}(q) psi_{n2}(q).
double homodyne_pdf(const FockMatrix& rho, double theta, double q);

// Husimi density <x|rho|x> / (2 pi)^m; x uses the PhasePoint ordering.
double heterodyne_pdf(const StateSpec& state, const PhasePoint& x);

struct SamplerOptions {
  int fock_cutoff = -1;  // -1 picks the smallest cutoff with trace deficit below 1e-14
  int grid_points = 4096;
  double envelope_inflation = 2.5;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual ShadowRecord draw(Rng& rng) const = 0;
  virtual Protocol protocol() const = 0;
  virtual int modes() const = 0;
  // Fraction of accepted proposals for rejection samplers, 1 otherwise.
  virtual double acceptance_rate() const { return 1.0; }
};

std::unique_ptr<Sampler> make_sampler(const StateSpec& state, Protocol protocol,
                                      const SamplerOptions& options = {});

ShadowRecord sample_homodyne(const StateSpec& state, Rng& rng);
ShadowRecord sample_heterodyne(const StateSpec& state, Rng& rng);

// Record i is drawn from stream_rng(seed, i); the result does not depend on the thread count.
SampleBatch sample_batch(const Sampler& sampler, std::size_t N, std::uint64_t seed,
                         const std::string& state_descriptor = "");

// Smallest Fock cutoff whose truncated trace deficit is below tol (capped at 200).
int auto_fock_cutoff(const StateSpec& state, double tol = 1e-14);

std::string record_to_json(const ShadowRecord& record);
ShadowRecord record_from_json(const std::string& line);
void write_jsonl(const SampleBatch& batch, std::ostream& out);
SampleBatch read_jsonl(std::istream& in);

}  // namespace cvshadow
