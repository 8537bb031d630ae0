#pragma once

// Classical GSM detectors: exhaustive maximum likelihood, covariance-whitened
// ML, and a linear-MMSE detector with energy-based pattern selection. Ties are
// always broken toward the bit-lexicographically smaller candidate so results
// are independent of search order and partitioning.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsmdet/channel.hpp"
#include "gsmdet/gsm.hpp"
#include "gsmdet/numerics.hpp"

namespace gsmdet {

struct DetectionResult {
  GsmVector x_hat;
  double metric = 0;
  BitString bits_hat;
};

// Exhaustive search over the signal set, optionally under a whitened metric
// (y - Hx)^H Sigma^{-1} (y - Hx). Candidate images (L^{-1} H x for the whole
// set) are precomputed once so the per-detection cost is |S| squared
// distances in n_r dimensions.
class MlDetector {
 public:
  MlDetector(const CMatrix& h, std::vector<GsmVector> signal_set)
      : set_(std::move(signal_set)), n_r_(h.rows()) {
    detail::require(!set_.empty(), "MlDetector: empty signal set");
    build_images(h);
  }

  // Whitened variant: sigma must be Hermitian positive definite.
  MlDetector(const CMatrix& h, std::vector<GsmVector> signal_set, const CMatrix& sigma)
      : set_(std::move(signal_set)), n_r_(h.rows()) {
    detail::require(!set_.empty(), "MlDetector: empty signal set");
    detail::require(sigma.rows() == h.rows() && sigma.cols() == h.rows(),
                    "MlDetector: Sigma shape mismatch");
    whiten_.emplace(sigma);
    build_images(h);
  }

  std::size_t size() const { return set_.size(); }
  const std::vector<GsmVector>& signal_set() const { return set_; }

  // Index of the metric-minimizing candidate; scratch avoids allocation in
  // Monte-Carlo loops. Ties go to the smaller bit string.
  std::size_t detect_index(const CVector& y, CVector& scratch) const {
    detail::require(static_cast<int>(y.size()) == n_r_, "MlDetector: y size mismatch");
    const CVector* yv = &y;
    if (whiten_) {
      scratch = y;
      whiten_->forward_solve_in_place(scratch);
      yv = &scratch;
    }
    std::size_t best = 0;
    double best_m = distance2(*yv, images_[0]);
    for (std::size_t k = 1; k < images_.size(); ++k) {
      const double m = distance2(*yv, images_[k]);
      if (m < best_m || (m == best_m && set_[k].bits < set_[best].bits)) {
        best_m = m;
        best = k;
      }
    }
    return best;
  }

  DetectionResult detect(const CVector& y) const {
    CVector scratch;
    const std::size_t k = detect_index(y, scratch);
    const CVector* yv = whiten_ ? &scratch : &y;
    return {set_[k], distance2(*yv, images_[k]), set_[k].bits};
  }

 private:
  void build_images(const CMatrix& h) {
    images_.resize(set_.size());
    for (std::size_t k = 0; k < set_.size(); ++k) {
      detail::require(static_cast<int>(set_[k].symbols.size()) == h.cols(),
                      "MlDetector: candidate length mismatch");
      cmatvec_into(h, set_[k].symbols, images_[k]);
      if (whiten_) whiten_->forward_solve_in_place(images_[k]);
    }
  }

  static double distance2(const CVector& a, const CVector& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return s;
  }

  std::vector<GsmVector> set_;
  std::vector<CVector> images_;
  std::optional<Cholesky> whiten_;
  int n_r_;
};

inline DetectionResult ml_detect(const CVector& y, const CMatrix& h,
                                 const std::vector<GsmVector>& signal_set) {
  return MlDetector(h, signal_set).detect(y);
}

inline DetectionResult modified_ml_detect(const CVector& y, const CMatrix& h,
                                          const std::vector<GsmVector>& signal_set,
                                          const CMatrix& sigma) {
  return MlDetector(h, signal_set, sigma).detect(y);
}

// MMSE estimate z = (H^H H + (1/snr) I)^{-1} H^H y, shared by the MMSE
// detector and the varying-channel preprocessing front end.
inline CVector mmse_preprocess(const CVector& y, const CMatrix& h, double snr_linear) {
  detail::require(snr_linear > 0, "mmse_preprocess: snr must be positive");
  detail::require(h.rows() == static_cast<int>(y.size()), "mmse_preprocess: size mismatch");
  CMatrix g = matmul(adjoint(h), h);
  const double ridge = 1.0 / snr_linear;
  for (int i = 0; i < g.rows(); ++i) g(i, i) += ridge;
  return Cholesky(g).solve(cmatvec(adjoint(h), y));
}

// Highest-energy valid pattern: argmax over T_A of sum_{i in pattern} |z_i|^2,
// ties to the lower combinadic rank.
inline std::size_t select_aap_by_energy(const CVector& z, const std::vector<Aap>& patterns) {
  std::vector<double> energy(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) energy[i] = std::norm(z[i]);
  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    double e = 0;
    for (int i : patterns[p].active) e += energy[i];
    if (e > best_e) {
      best_e = e;
      best = p;
    }
  }
  return best;
}

// Linear MMSE detection: filter, pick the valid pattern with the most
// estimated energy, slice each active entry to the nearest alphabet point.
class MmseDetector {
 public:
  MmseDetector(const CMatrix& h, double snr_linear, const GsmConfig& cfg)
      : cfg_(cfg), patterns_(valid_aaps(cfg.n_t, cfg.n_rf)) {
    detail::require(h.rows() == cfg.n_r && h.cols() == cfg.n_t,
                    "MmseDetector: channel shape mismatch");
    detail::require(snr_linear > 0, "MmseDetector: snr must be positive");
    CMatrix g = matmul(adjoint(h), h);
    const double ridge = 1.0 / snr_linear;
    for (int i = 0; i < g.rows(); ++i) g(i, i) += ridge;
    w_ = Cholesky(g).solve_matrix(adjoint(h));  // (H^H H + I/snr)^{-1} H^H
  }

  // Writes the detected bit string; z_scratch holds the MMSE estimate.
  void detect_bits(const CVector& y, CVector& z_scratch, BitString& out) const {
    cmatvec_into(w_, y, z_scratch);
    const std::size_t p = select_aap_by_energy(z_scratch, patterns_);
    out.assign(cfg_.rate_bits(), 0);
    uint_to_bits(static_cast<std::uint64_t>(p), cfg_.aap_bits(), out, 0);
    const int bps = cfg_.alphabet.bits_per_symbol;
    for (int i = 0; i < cfg_.n_rf; ++i) {
      const int idx = cfg_.alphabet.slice(z_scratch[patterns_[p].active[i]]);
      uint_to_bits(static_cast<std::uint64_t>(idx), bps, out, cfg_.aap_bits() + i * bps);
    }
  }

  DetectionResult detect(const CVector& y) const {
    CVector z;
    BitString bits;
    detect_bits(y, z, bits);
    DetectionResult r;
    r.x_hat = bits_to_gsm_vector(bits, cfg_);
    r.bits_hat = bits;
    double res = 0;  // slicing residual on the selected pattern
    for (int i : r.x_hat.aap.active) res += std::norm(z[i] - r.x_hat.symbols[i]);
    r.metric = res;
    return r;
  }

  const CMatrix& filter() const { return w_; }

 private:
  GsmConfig cfg_;
  std::vector<Aap> patterns_;
  CMatrix w_;
};

inline DetectionResult mmse_detect(const CVector& y, const CMatrix& h, double snr_linear,
                                   const GsmConfig& cfg) {
  return MmseDetector(h, snr_linear, cfg).detect(y);
}

// ---------------------------------------------------------------------------
// Real-operation accounting.
//
// Convention (also embedded in reports): a complex multiply is 4 real
// multiplies + 2 real adds, a complex add/subtract is 2 real adds, |z|^2 is
// 2 multiplies + 1 add. ML exploits the n_rf-sparsity of candidates. MMSE is
// one full detection including filter construction; the Cholesky third-power
// term is counted as n^3/3 complex multiply-adds. MLP cost is one
// multiply-accumulate (2 ops) per weight plus 1 per neuron for bias and
// activation; selector comparisons are booked separately.
// ---------------------------------------------------------------------------

inline constexpr const char* kOpCountConvention =
    "cmul=4mul+2add; cadd=2add; |z|^2=2mul+1add; chol=n^3/3 cmuladds; "
    "mlp=2 ops/weight + 1/neuron; selector under comparisons";

struct OpCount {
  std::int64_t real_multiplies = 0;
  std::int64_t real_additions = 0;
  std::int64_t comparisons = 0;

  std::int64_t total() const { return real_multiplies + real_additions + comparisons; }

  OpCount& operator+=(const OpCount& o) {
    real_multiplies += o.real_multiplies;
    real_additions += o.real_additions;
    comparisons += o.comparisons;
    return *this;
  }
};

// Exhaustive ML over |S| candidates with n_rf-sparse products.
inline OpCount count_ml_operations(const GsmConfig& cfg) {
  const std::int64_t n_r = cfg.n_r, n_rf = cfg.n_rf;
  const std::int64_t cands = static_cast<std::int64_t>(cfg.signal_set_size());
  OpCount per;
  per.real_multiplies = 4 * n_r * n_rf + 2 * n_r;        // Hx products + |.|^2
  per.real_additions = 2 * n_r * n_rf                    // cmul adds
                       + 2 * n_r * (n_rf - 1)            // summing products
                       + 2 * n_r                         // residual subtract
                       + n_r + (n_r - 1);                // |.|^2 adds + accumulate
  per.comparisons = 1;
  OpCount total;
  total.real_multiplies = per.real_multiplies * cands;
  total.real_additions = per.real_additions * cands;
  total.comparisons = per.comparisons * cands;
  return total;
}

// One full MMSE detection, filter construction included.
inline OpCount count_mmse_operations(const GsmConfig& cfg) {
  const std::int64_t n_r = cfg.n_r, n_t = cfg.n_t, n_rf = cfg.n_rf;
  const std::int64_t t_a = std::int64_t{1} << cfg.aap_bits();
  const std::int64_t m = static_cast<std::int64_t>(cfg.alphabet.points.size());
  OpCount c;
  // G = H^H H
  c.real_multiplies += 4 * n_t * n_t * n_r;
  c.real_additions += 2 * n_t * n_t * n_r + 2 * n_t * n_t * (n_r - 1);
  c.real_additions += n_t;  // ridge
  // Cholesky(n_t)
  const std::int64_t chol = n_t * n_t * n_t / 3;
  c.real_multiplies += 4 * chol;
  c.real_additions += 2 * chol;
  // H^H y
  c.real_multiplies += 4 * n_t * n_r;
  c.real_additions += 2 * n_t * n_r + 2 * n_t * (n_r - 1);
  // two triangular solves
  c.real_multiplies += 4 * n_t * n_t;
  c.real_additions += 2 * n_t * n_t;
  // pattern energies and selection
  c.real_multiplies += 2 * n_t;
  c.real_additions += n_t + t_a * (n_rf - 1);
  c.comparisons += t_a - 1;
  // slicing
  c.real_multiplies += 2 * n_rf * m;
  c.real_additions += 3 * n_rf * m;
  c.comparisons += n_rf * (m - 1);
  return c;
}

// Forward pass of one dense net: sizes[0] inputs through sizes.back() outputs.
inline OpCount count_mlp_forward_operations(const std::vector<int>& layer_sizes) {
  OpCount c;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::int64_t in = layer_sizes[l], out = layer_sizes[l + 1];
    c.real_multiplies += in * out;
    c.real_additions += in * out + out;  // MAC adds + bias/activation
  }
  return c;
}

// Modular detector forward: one AAP net, n_rf symbol nets, plus the
// max-index selectors.
inline OpCount count_modular_dnn_operations(const GsmConfig& cfg,
                                            const std::vector<int>& aap_sizes,
                                            const std::vector<int>& sym_sizes) {
  OpCount c = count_mlp_forward_operations(aap_sizes);
  OpCount sym = count_mlp_forward_operations(sym_sizes);
  for (int i = 0; i < cfg.n_rf; ++i) c += sym;
  c.comparisons += cfg.n_t;  // top-n_rf scan
  c.comparisons += static_cast<std::int64_t>(cfg.n_rf) *
                   (static_cast<std::int64_t>(cfg.alphabet.points.size()) - 1);
  return c;
}

}  // namespace gsmdet
