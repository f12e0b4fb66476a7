#include "cvshadow/measurement.hpp"

#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <json.hpp>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "cvshadow/special.hpp"

namespace cvshadow {

using nlohmann::json;

std::string to_string(Protocol p) { return p == Protocol::homodyne ? "homodyne" : "heterodyne"; }

Protocol protocol_from_string(const std::string& s) {
  if (s == "homodyne") return Protocol::homodyne;
  if (s == "heterodyne") return Protocol::heterodyne;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

int ShadowRecord::modes() const {
  return protocol == Protocol::homodyne ? static_cast<int>(outcome.size())
                                        : static_cast<int>(outcome.size() / 2);
}

ModePoint ShadowRecord::heterodyne_point(int j) const {
  return ModePoint(outcome[2 * j], outcome[2 * j + 1]);
}

void ShadowRecord::validate() const {
  if (protocol == Protocol::homodyne) {
    if (thetas.size() != outcome.size()) throw std::invalid_argument("ShadowRecord: angle count != mode count");
  } else {
    if (!thetas.empty()) throw std::invalid_argument("ShadowRecord: heterodyne record carries angles");
    if (outcome.size() % 2 != 0) throw std::invalid_argument("ShadowRecord: heterodyne outcome length odd");
  }
  for (double v : outcome)
    if (!std::isfinite(v)) throw std::invalid_argument("ShadowRecord: non-finite outcome");
  for (double v : thetas)
    if (!std::isfinite(v)) throw std::invalid_argument("ShadowRecord: non-finite angle");
}

void SampleBatch::validate() const {
  for (const auto& r : records) {
    r.validate();
    if (r.protocol != records.front().protocol) throw std::invalid_argument("SampleBatch: mixed protocols");
  }
}

double homodyne_pdf(const FockMatrix& rho, double theta, double q) {
  if (rho.modes() != 1) throw std::invalid_argument("homodyne_pdf: single-mode matrix required");
  const Eigen::MatrixXcd& d = rho.data();
  if ((d - d.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("homodyne_pdf: non-Hermitian input");
  const int M = rho.truncation();
  std::vector<double> psi(M + 1);
  hermite_wavefunctions(M, q, psi.data());
  double p = 0.0;
  for (int a = 0; a <= M; ++a) {
    p += d(a, a).real() * psi[a] * psi[a];
    for (int b = a + 1; b <= M; ++b) {
      const Complex term = d(a, b) * std::polar(1.0, -(a - b) * theta);
      p += 2.0 * term.real() * psi[a] * psi[b];
    }
  }
  return std::max(p, 0.0);
}

namespace {

double gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("gaussian_density: covariance not positive definite");
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double log_det = 0.0;
  for (int i = 0; i < cov.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double k = static_cast<double>(cov.rows());
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * log_det - 0.5 * k * std::log(2.0 * std::numbers::pi));
}

}  // namespace

double heterodyne_pdf(const StateSpec& state, const PhasePoint& x) {
  if (const auto* g = std::get_if<GaussianStateSpec>(&state)) {
    const int n = static_cast<int>(g->mean.size());
    if (x.size() != n) throw std::invalid_argument("heterodyne_pdf: dimension mismatch");
    const Eigen::MatrixXd cov = 0.5 * (Eigen::MatrixXd::Identity(n, n) + g->cov);
    return gaussian_density(x, g->mean, cov);
  }
  if (x.size() != 2) throw std::invalid_argument("heterodyne_pdf: single-mode state needs a 2-vector");
  const ModePoint v(x[0], x[1]);
  if (const auto* c = std::get_if<CatStateSpec>(&state)) return cat_position_pdf(*c, v) / (2.0 * std::numbers::pi);
  const int n = std::get<FockNumberSpec>(state).n;
  const double s = 0.5 * v.squaredNorm();
  const double log_q = -s + (n > 0 ? n * std::log(s) : 0.0) - log_factorial(n);
  return (s == 0.0 && n > 0) ? 0.0 : std::exp(log_q) / (2.0 * std::numbers::pi);
}

int auto_fock_cutoff(const StateSpec& state, double tol) {
  if (const auto* f = std::get_if<FockNumberSpec>(&state)) return std::max(f->n, 1);
  for (int M = 4; M <= 200; M += 2) {
    if (fock_matrix_of(state, M).trace_deficit < tol) return M;
  }
  return 200;
}

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd factor_psd(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

class GaussianHomodyneSampler final : public Sampler {
 public:
  explicit GaussianHomodyneSampler(const GaussianStateSpec& g) : mean_(g.mean), factor_(factor_psd(0.5 * g.cov)) {}

  ShadowRecord draw(Rng& rng) const override {
    const int m = static_cast<int>(mean_.size() / 2);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::normal_distribution<double> normal(0.0, 1.0);
    ShadowRecord rec;
    rec.protocol = Protocol::homodyne;
    rec.thetas.resize(m);
    for (int j = 0; j < m; ++j) rec.thetas[j] = angle(rng);
    Eigen::VectorXd z(2 * m);
    for (int i = 0; i < 2 * m; ++i) z[i] = normal(rng);
    const Eigen::VectorXd r = mean_ + factor_ * z;
    rec.outcome.resize(m);
    for (int j = 0; j < m; ++j)
      rec.outcome[j] = std::cos(rec.thetas[j]) * r[j] + std::sin(rec.thetas[j]) * r[m + j];
    return rec;
  }
  Protocol protocol() const override { return Protocol::homodyne; }
  int modes() const override { return static_cast<int>(mean_.size() / 2); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

class GaussianHeterodyneSampler final : public Sampler {
 public:
  explicit GaussianHeterodyneSampler(const GaussianStateSpec& g) : mean_(g.mean) {
    const int n = static_cast<int>(g.mean.size());
    factor_ = factor_psd(0.5 * (Eigen::MatrixXd::Identity(n, n) + g.cov));
  }

  ShadowRecord draw(Rng& rng) const override {
    const int m = static_cast<int>(mean_.size() / 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(2 * m);
    for (int i = 0; i < 2 * m; ++i) z[i] = normal(rng);
    const Eigen::VectorXd x = mean_ + factor_ * z;
    ShadowRecord rec;
    rec.protocol = Protocol::heterodyne;
    rec.outcome.resize(2 * m);
    for (int j = 0; j < m; ++j) {
      rec.outcome[2 * j] = x[j];
      rec.outcome[2 * j + 1] = x[m + j];
    }
    return rec;
  }
  Protocol protocol() const override { return Protocol::heterodyne; }
  int modes() const override { return static_cast<int>(mean_.size() / 2); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

// Spectral form rho = sum_k lambda_k |v_k><v_k| keeping non-negligible weights.
struct Spectral {
  std::vector<double> weights;
  std::vector<Eigen::VectorXcd> vectors;
};

Spectral spectral_form(const FockMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho.data() + rho.data().adjoint()));
  Spectral s;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()[k] > 1e-15) {
      s.weights.push_back(es.eigenvalues()[k]);
      s.vectors.push_back(es.eigenvectors().col(k));
    }
  }
  return s;
}

class FockHomodyneSampler final : public Sampler {
 public:
  FockHomodyneSampler(const FockMatrix& rho, int grid_points) : spectral_(spectral_form(rho)), M_(rho.truncation()) {
    q_max_ = std::sqrt(2.0 * (2.0 * M_ + 1.0)) + 5.0;
    grid_.resize(grid_points);
    psi_ = Eigen::MatrixXd(M_ + 1, grid_points);
    std::vector<double> buf(M_ + 1);
    for (int g = 0; g < grid_points; ++g) {
      grid_[g] = -q_max_ + 2.0 * q_max_ * g / (grid_points - 1);
      hermite_wavefunctions(M_, grid_[g], buf.data());
      for (int n = 0; n <= M_; ++n) psi_(n, g) = buf[n];
    }
  }

  ShadowRecord draw(Rng& rng) const override {
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ShadowRecord rec;
    rec.protocol = Protocol::homodyne;
    const double theta = angle(rng);
    rec.thetas = {theta};
    const int G = static_cast<int>(grid_.size());
    Eigen::VectorXd pdf = Eigen::VectorXd::Zero(G);
    Eigen::VectorXd re(M_ + 1), im(M_ + 1);
    for (std::size_t k = 0; k < spectral_.weights.size(); ++k) {
      for (int n = 0; n <= M_; ++n) {
        const Complex z = spectral_.vectors[k][n] * std::polar(1.0, -n * theta);
        re[n] = z.real();
        im[n] = z.imag();
      }
      const Eigen::VectorXd ar = psi_.transpose() * re;
      const Eigen::VectorXd ai = psi_.transpose() * im;
      pdf += spectral_.weights[k] * (ar.cwiseAbs2() + ai.cwiseAbs2());
    }
    // Piecewise-linear density; its CDF is piecewise quadratic and inverted exactly.
    const double h = grid_[1] - grid_[0];
    std::vector<double> cdf(G, 0.0);
    for (int g = 1; g < G; ++g) cdf[g] = cdf[g - 1] + 0.5 * h * (pdf[g - 1] + pdf[g]);
    const double target = unit(rng) * cdf[G - 1];
    int lo = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin()) - 1;
    lo = std::clamp(lo, 0, G - 2);
    const double p0 = pdf[lo];
    const double p1 = pdf[lo + 1];
    const double need = target - cdf[lo];
    const double slope = (p1 - p0) / h;
    double t;
    if (std::abs(slope) * h < 1e-12 * std::max(p0, 1e-300)) {
      t = p0 > 0.0 ? need / p0 : 0.5 * h;
    } else {
      const double disc = std::max(p0 * p0 + 2.0 * slope * need, 0.0);
      t = (std::sqrt(disc) - p0) / slope;
    }
    t = std::clamp(t, 0.0, h);
    rec.outcome = {grid_[lo] + t};
    return rec;
  }
  Protocol protocol() const override { return Protocol::homodyne; }
  int modes() const override { return 1; }

 private:
  Spectral spectral_;
  int M_;
  double q_max_;
  std::vector<double> grid_;
  Eigen::MatrixXd psi_;
};

class FockHeterodyneSampler final : public Sampler {
 public:
  FockHeterodyneSampler(const FockMatrix& rho, double inflation) : spectral_(spectral_form(rho)), M_(rho.truncation()) {
    const int n = M_ + 1;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Eigen::MatrixXcd x = (a + a.adjoint()) / std::numbers::sqrt2;
    const Eigen::MatrixXcd p = (a - a.adjoint()) / Complex(0.0, std::numbers::sqrt2);
    const Eigen::MatrixXcd& r = rho.data();
    const double mx = (r * x).trace().real();
    const double mp = (r * p).trace().real();
    const double vxx = 2.0 * ((r * x * x).trace().real() - mx * mx);
    const double vpp = 2.0 * ((r * p * p).trace().real() - mp * mp);
    const double vxp = ((r * (x * p + p * x)).trace().real() - 2.0 * mx * mp);
    mean_ = Eigen::Vector2d(mx, mp);
    Eigen::Matrix2d v;
    v << vxx, vxp, vxp, vpp;
    cov_ = inflation * 0.5 * (Eigen::Matrix2d::Identity() + v);
    factor_ = cov_.llt().matrixL();
    // Envelope constant from a dense scan around the mean, with a safety margin.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov_);
    const double span = 7.0 * std::sqrt(es.eigenvalues().maxCoeff());
    double ratio = 0.0;
    const int G = 161;
    for (int i = 0; i < G; ++i) {
      for (int j = 0; j < G; ++j) {
        const ModePoint pt(mx - span + 2.0 * span * i / (G - 1), mp - span + 2.0 * span * j / (G - 1));
        const double env = envelope(pt);
        if (env > 0.0) ratio = std::max(ratio, husimi(pt) / env);
      }
    }
    bound_ = 1.1 * ratio;
  }

  double husimi(const ModePoint& x) const {
    const Eigen::VectorXcd c = coherent_amplitudes(x, M_);
    double q = 0.0;
    for (std::size_t k = 0; k < spectral_.weights.size(); ++k)
      q += spectral_.weights[k] * std::norm(c.dot(spectral_.vectors[k]));
    return q / (2.0 * kPi);
  }

  double envelope(const ModePoint& x) const { return gaussian_density(x, mean_, cov_); }

  ShadowRecord draw(Rng& rng) const override {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      const Eigen::Vector2d z(normal(rng), normal(rng));
      const ModePoint x = mean_ + factor_ * z;
      const double u = unit(rng);
      const double q = husimi(x);
      const double env = bound_ * envelope(x);
      proposals_.fetch_add(1, std::memory_order_relaxed);
      if (q > env) {
        throw std::runtime_error(fmt::format(
            "heterodyne rejection sampler: envelope violated at x=({:.6g}, {:.6g}): Q={:.6g} > K*g={:.6g}; "
            "increase envelope_inflation",
            x[0], x[1], q, env));
      }
      if (u * env <= q) {
        accepted_.fetch_add(1, std::memory_order_relaxed);
        ShadowRecord rec;
        rec.protocol = Protocol::heterodyne;
        rec.outcome = {x[0], x[1]};
        return rec;
      }
    }
    throw std::runtime_error("heterodyne rejection sampler: no acceptance after 1e6 proposals");
  }
  Protocol protocol() const override { return Protocol::heterodyne; }
  int modes() const override { return 1; }
  double acceptance_rate() const override {
    const auto p = proposals_.load();
    return p == 0 ? 1.0 : static_cast<double>(accepted_.load()) / static_cast<double>(p);
  }

 private:
  Spectral spectral_;
  int M_;
  Eigen::Vector2d mean_;
  Eigen::Matrix2d cov_;
  Eigen::Matrix2d factor_;
  double bound_ = 1.0;
  mutable std::atomic<std::uint64_t> proposals_{0};
  mutable std::atomic<std::uint64_t> accepted_{0};
};

}  // namespace

std::unique_ptr<Sampler> make_sampler(const StateSpec& state, Protocol protocol, const SamplerOptions& options) {
  if (const auto* g = std::get_if<GaussianStateSpec>(&state)) {
    g->validate();
    if (protocol == Protocol::homodyne) return std::make_unique<GaussianHomodyneSampler>(*g);
    return std::make_unique<GaussianHeterodyneSampler>(*g);
  }
  const int cutoff = options.fock_cutoff >= 0 ? options.fock_cutoff : auto_fock_cutoff(state);
  const FockMatrix rho = fock_matrix_of(state, cutoff).rho;
  if (protocol == Protocol::homodyne) return std::make_unique<FockHomodyneSampler>(rho, options.grid_points);
  return std::make_unique<FockHeterodyneSampler>(rho, options.envelope_inflation);
}

ShadowRecord sample_homodyne(const StateSpec& state, Rng& rng) {
  return make_sampler(state, Protocol::homodyne)->draw(rng);
}

ShadowRecord sample_heterodyne(const StateSpec& state, Rng& rng) {
  return make_sampler(state, Protocol::heterodyne)->draw(rng);
}

SampleBatch sample_batch(const Sampler& sampler, std::size_t N, std::uint64_t seed, const std::string& state_descriptor) {
  SampleBatch batch;
  batch.state_descriptor = state_descriptor;
  batch.records.resize(N);
  parallel_for(N, [&](std::size_t i) {
    Rng rng = stream_rng(seed, i);
    ShadowRecord rec = sampler.draw(rng);
    rec.seed_path = stream_path(seed, i);
    batch.records[i] = std::move(rec);
  });
  return batch;
}

std::string record_to_json(const ShadowRecord& record) {
  json j;
  j["protocol"] = to_string(record.protocol);
  j["thetas"] = record.thetas;
  j["outcome"] = record.outcome;
  j["seed_path"] = record.seed_path;
  return j.dump();
}

ShadowRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  ShadowRecord r;
  r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  r.thetas = j.at("thetas").get<std::vector<double>>();
  r.outcome = j.at("outcome").get<std::vector<double>>();
  r.seed_path = j.at("seed_path").get<std::string>();
  r.validate();
  return r;
}

void write_jsonl(const SampleBatch& batch, std::ostream& out) {
  for (const auto& r : batch.records) out << record_to_json(r) << '\n';
}

SampleBatch read_jsonl(std::istream& in) {
  SampleBatch batch;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      batch.records.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("JSONL line {}: {}", lineno, e.what()));
    }
  }
  batch.validate();
  return batch;
}

}  // namespace cvshadow
