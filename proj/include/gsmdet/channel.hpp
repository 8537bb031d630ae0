#pragma once

// Rayleigh MIMO channel draws, the three receiver noise processes
// (i.i.d Gaussian, exponentially correlated, Student-t), received-signal
// synthesis and sample-covariance estimation.
//
// Energy calibration: every noise model is normalized so that the expected
// total noise power over the array is n_r * sigma2. For the correlated model
// the mixing matrix is therefore the unit-diagonal correlation matrix
// rescaled to trace(M M^H) = n_r; its covariance sigma2 * M M^H keeps the
// correlation shape while matching the i.i.d model's average energy, which is
// what makes cross-model BER comparisons at one SNR meaningful.
//
// SNR convention: snr = E||Hx||^2 / E||n||^2, with the signal power averaged
// over the signal set (static channels) or analytically over channel draws
// (varying channels), so sigma2 = E||Hx||^2 / (n_r * snr).

#include <cmath>
#include <string>
#include <vector>

#include "gsmdet/gsm.hpp"
#include "gsmdet/numerics.hpp"

namespace gsmdet {

enum class ChannelMode { Static, Varying };

struct Channel {
  ChannelMode mode = ChannelMode::Static;
  CMatrix h;  // the fixed realization in Static mode; unused in Varying mode
};

enum class NoiseKind { IidGaussian, Correlated, StudentT };

struct NoiseModel {
  NoiseKind kind = NoiseKind::IidGaussian;
  double sigma2 = 1.0;  // per-entry complex noise variance
  double rho_n = 0.0;   // correlation coefficient (Correlated only)
  double nu = 0.0;      // degrees of freedom (StudentT only)

  static NoiseModel iid_gaussian(double sigma2) {
    check_sigma2(sigma2);
    return {NoiseKind::IidGaussian, sigma2, 0.0, 0.0};
  }

  static NoiseModel correlated(double rho_n, double sigma2) {
    check_sigma2(sigma2);
    if (!(rho_n >= 0.0 && rho_n <= 1.0))
      throw config_error("NoiseModel: rho_n must be in [0, 1]");
    return {NoiseKind::Correlated, sigma2, rho_n, 0.0};
  }

  static NoiseModel student_t(double nu, double sigma2) {
    check_sigma2(sigma2);
    if (!(nu > 2.0))
      throw config_error("NoiseModel: Student-t needs nu > 2 for a finite variance");
    return {NoiseKind::StudentT, sigma2, 0.0, nu};
  }

  NoiseModel with_sigma2(double s2) const {
    NoiseModel m = *this;
    check_sigma2(s2);
    m.sigma2 = s2;
    return m;
  }

  bool same_process(const NoiseModel& o) const {
    return kind == o.kind && rho_n == o.rho_n && nu == o.nu;
  }

  std::string describe() const {
    switch (kind) {
      case NoiseKind::IidGaussian: return "iid-gaussian";
      case NoiseKind::Correlated: return "correlated(rho=" + std::to_string(rho_n) + ")";
      case NoiseKind::StudentT: return "student-t(nu=" + std::to_string(nu) + ")";
    }
    return "?";
  }

 private:
  static void check_sigma2(double s2) {
    if (!(s2 > 0.0)) throw config_error("NoiseModel: sigma2 must be positive");
  }
};

struct SnrPoint {
  double snr_db;
  double snr_linear;

  static SnrPoint from_db(double db) { return {db, std::pow(10.0, db / 10.0)}; }
};

// Rayleigh flat fading: entries i.i.d CN(0,1).
inline CMatrix draw_channel(int n_r, int n_t, Rng& rng) {
  detail::require(n_r >= 1 && n_t >= 1, "draw_channel: dims must be >= 1");
  CMatrix h(n_r, n_t);
  for (cplx& e : h.data()) e = rng.cnormal();
  return h;
}

// Exponential correlation profile: (N_c)_{ij} = rho^|i-j|, unit diagonal.
inline CMatrix correlation_matrix(int n_r, double rho_n) {
  if (!(rho_n >= 0.0 && rho_n <= 1.0))
    throw config_error("correlation_matrix: rho_n must be in [0, 1]");
  CMatrix m(n_r, n_r);
  for (int i = 0; i < n_r; ++i)
    for (int j = 0; j < n_r; ++j) m(i, j) = std::pow(rho_n, std::abs(i - j));
  return m;
}

// Correlation matrix rescaled so that trace(M M^H) = n_r; mixing unit-power
// i.i.d noise through M then keeps the array-average noise power unchanged.
inline CMatrix noise_mixing_matrix(int n_r, double rho_n) {
  CMatrix m = correlation_matrix(n_r, rho_n);
  const double f = frob_norm(m);
  const double scale = std::sqrt(static_cast<double>(n_r)) / f;
  for (cplx& e : m.data()) e *= scale;
  return m;
}

// Analytic covariance of sample_noise draws.
inline CMatrix noise_covariance(const NoiseModel& model, int n_r) {
  if (model.kind == NoiseKind::Correlated) {
    const CMatrix m = noise_mixing_matrix(n_r, model.rho_n);
    CMatrix cov = matmul(m, adjoint(m));
    for (cplx& e : cov.data()) e *= model.sigma2;
    return cov;
  }
  CMatrix cov = CMatrix::identity(n_r);
  for (cplx& e : cov.data()) e *= model.sigma2;
  return cov;
}

// Gamma(alpha, 1) for alpha >= 1 by the Marsaglia-Tsang squeeze.
inline double sample_gamma(double alpha, Rng& rng) {
  detail::require(alpha >= 1.0, "sample_gamma: alpha must be >= 1");
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double sample_chi_square(double dof, Rng& rng) {
  return 2.0 * sample_gamma(0.5 * dof, rng);
}

// Student-t with dof degrees of freedom, unit scale (variance dof/(dof-2)).
inline double sample_student_t(double dof, Rng& rng) {
  const double z = rng.normal();
  const double v = sample_chi_square(dof, rng);
  return z / std::sqrt(v / dof);
}

// Draws noise vectors for one model; precomputes the scaled mixing matrix so
// the per-call cost in Monte-Carlo loops is one matvec at most. Copyable:
// each worker owns one (the scratch buffer is per-instance state).
class NoiseSampler {
 public:
  NoiseSampler(const NoiseModel& model, int n_r) : model_(model), n_r_(n_r) {
    detail::require(n_r >= 1, "NoiseSampler: n_r must be >= 1");
    const double sigma = std::sqrt(model.sigma2);
    switch (model.kind) {
      case NoiseKind::IidGaussian:
        entry_scale_ = sigma;
        break;
      case NoiseKind::Correlated:
        mixing_ = noise_mixing_matrix(n_r, model.rho_n);
        for (cplx& e : mixing_.data()) e *= sigma;
        scratch_.resize(n_r);
        break;
      case NoiseKind::StudentT:
        // Per real dimension: unit-variance t is t * sqrt((nu-2)/nu); the
        // sqrt(1/2) split keeps the complex per-entry variance at sigma2.
        entry_scale_ = sigma * std::sqrt(0.5 * (model.nu - 2.0) / model.nu);
        break;
    }
  }

  const NoiseModel& model() const { return model_; }
  int dim() const { return n_r_; }

  void sample_into(Rng& rng, CVector& out) {
    out.resize(n_r_);
    switch (model_.kind) {
      case NoiseKind::IidGaussian:
        for (cplx& e : out) e = rng.cnormal() * entry_scale_;
        break;
      case NoiseKind::Correlated:
        for (cplx& e : scratch_) e = rng.cnormal();
        cmatvec_into(mixing_, scratch_, out);
        break;
      case NoiseKind::StudentT:
        for (cplx& e : out)
          e = cplx{sample_student_t(model_.nu, rng), sample_student_t(model_.nu, rng)} *
              entry_scale_;
        break;
    }
  }

 private:
  NoiseModel model_;
  int n_r_;
  double entry_scale_ = 1.0;
  CMatrix mixing_;
  CVector scratch_;
};

inline CVector sample_noise(const NoiseModel& model, int n_r, Rng& rng) {
  NoiseSampler s(model, n_r);
  CVector out;
  s.sample_into(rng, out);
  return out;
}

// y = Hx + n.
inline CVector transmit(const CMatrix& h, const CVector& x, const NoiseModel& model, Rng& rng) {
  CVector y = cmatvec(h, x);
  const CVector n = sample_noise(model, h.rows(), rng);
  for (int i = 0; i < h.rows(); ++i) y[i] += n[i];
  return y;
}

inline CVector transmit(const CMatrix& h, const GsmVector& x, const NoiseModel& model, Rng& rng) {
  return transmit(h, x.symbols, model, rng);
}

// Sample covariance (1/m) sum n n^H over a noise-only observation window.
inline CMatrix estimate_noise_covariance(const std::vector<CVector>& samples) {
  if (samples.empty()) throw std::invalid_argument("estimate_noise_covariance: no samples");
  const int n_r = static_cast<int>(samples.front().size());
  if (static_cast<int>(samples.size()) < n_r)
    throw std::invalid_argument("estimate_noise_covariance: need at least n_r samples, got " +
                                std::to_string(samples.size()));
  CMatrix cov(n_r, n_r);
  for (const CVector& s : samples) {
    detail::require(static_cast<int>(s.size()) == n_r,
                    "estimate_noise_covariance: ragged sample");
    for (int i = 0; i < n_r; ++i)
      for (int j = i; j < n_r; ++j) cov(i, j) += s[i] * std::conj(s[j]);
  }
  const double inv_m = 1.0 / static_cast<double>(samples.size());
  for (int i = 0; i < n_r; ++i) {
    cov(i, i) = cov(i, i).real() * inv_m;  // exact Hermitian diagonal
    for (int j = i + 1; j < n_r; ++j) {
      cov(i, j) *= inv_m;
      cov(j, i) = std::conj(cov(i, j));
    }
  }
  return cov;
}

// Mean of ||Hx||^2 over the signal set, for the SNR convention above.
inline double mean_signal_power(const CMatrix& h, const std::vector<GsmVector>& signal_set) {
  detail::require(!signal_set.empty(), "mean_signal_power: empty signal set");
  double acc = 0;
  CVector y;
  for (const GsmVector& x : signal_set) {
    cmatvec_into(h, x.symbols, y);
    for (const cplx& e : y) acc += std::norm(e);
  }
  return acc / static_cast<double>(signal_set.size());
}

// E||Hx||^2 over i.i.d CN(0,1) channel draws: n_r * ||x||^2 = n_r * n_rf for
// unit-energy alphabets.
inline double mean_signal_power_varying(const GsmConfig& cfg) {
  return static_cast<double>(cfg.n_r) * static_cast<double>(cfg.n_rf);
}

inline double noise_variance_for_snr(double signal_power, int n_r, double snr_linear) {
  detail::require(signal_power > 0 && snr_linear > 0 && n_r >= 1,
                  "noise_variance_for_snr: bad inputs");
  return signal_power / (static_cast<double>(n_r) * snr_linear);
}

}  // namespace gsmdet
