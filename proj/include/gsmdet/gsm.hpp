#pragma once

// GSM signal-set construction: modulation alphabets, antenna-activation
// patterns indexed by the combinatorial number system, and the bit <-> signal
// vector maps.
//
// Conventions (fixed for reproducibility):
//   - Combinadic rank of an ascending index set c_1 < ... < c_k is
//     sum_i C(c_i, i); the valid AAP set is the 2^K lowest-ranked patterns,
//     K = floor(log2 C(n_t, n_rf)), listed in rank order.
//   - Bit strings are big-endian: the first bit is the most significant, both
//     for the AAP rank and for each per-symbol group.
//   - BPSK maps bit 0 -> +1, bit 1 -> -1. 4-QAM is Gray labeled
//     {(+-1 +-i)/sqrt(2)}: of the two bits, the first selects the real sign
//     and the second the imaginary sign, 00 -> (+1+i)/sqrt(2).
//   - The i-th symbol group rides the i-th smallest active antenna index.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "gsmdet/numerics.hpp"

namespace gsmdet {

using BitString = std::vector<std::uint8_t>;

// Exact C(n, k) in 64 bits; the n we meet are far below the overflow line.
inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  return static_cast<std::uint64_t>(r);
}

inline int floor_log2_u64(std::uint64_t v) {
  int b = -1;
  while (v) {
    v >>= 1;
    ++b;
  }
  return b;
}

enum class ModScheme { Bpsk, Qam4 };

struct ModAlphabet {
  ModScheme name;
  std::vector<cplx> points;
  int bits_per_symbol;

  static ModAlphabet bpsk() { return {ModScheme::Bpsk, {cplx{1, 0}, cplx{-1, 0}}, 1}; }

  static ModAlphabet qam4() {
    const double s = 0.70710678118654752440;
    return {ModScheme::Qam4,
            {cplx{s, s}, cplx{s, -s}, cplx{-s, s}, cplx{-s, -s}},
            2};
  }

  // Nearest constellation point by Euclidean distance, ties to the lower index.
  int slice(cplx z) const {
    int best = 0;
    double best_d = std::norm(z - points[0]);
    for (int i = 1; i < static_cast<int>(points.size()); ++i) {
      const double d = std::norm(z - points[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

inline const char* to_string(ModScheme m) {
  return m == ModScheme::Bpsk ? "bpsk" : "qam4";
}

inline ModAlphabet alphabet_from_string(const std::string& s) {
  if (s == "bpsk") return ModAlphabet::bpsk();
  if (s == "qam4" || s == "4qam") return ModAlphabet::qam4();
  throw config_error("unknown modulation alphabet: " + s);
}

// Antenna activation pattern: which n_rf of the n_t antennas carry symbols.
struct Aap {
  std::vector<std::uint8_t> mask;  // length n_t, 0/1
  std::vector<int> active;         // ascending indices, length n_rf

  bool operator==(const Aap& o) const { return active == o.active && mask == o.mask; }
};

inline Aap make_aap(const std::vector<int>& active, int n_t) {
  Aap a;
  a.active = active;
  a.mask.assign(n_t, 0);
  for (int i : active) {
    detail::require(i >= 0 && i < n_t, "make_aap: index out of range");
    a.mask[i] = 1;
  }
  return a;
}

struct GsmConfig {
  int n_t;
  int n_rf;
  int n_r;
  ModAlphabet alphabet;

  GsmConfig(int n_t_, int n_rf_, int n_r_, ModAlphabet alpha)
      : n_t(n_t_), n_rf(n_rf_), n_r(n_r_), alphabet(std::move(alpha)) {
    if (!(n_rf > 1 && n_rf < n_t))
      throw config_error("GsmConfig: need 1 < n_rf < n_t, got n_rf=" + std::to_string(n_rf) +
                         " n_t=" + std::to_string(n_t));
    if (n_r < 1) throw config_error("GsmConfig: n_r must be >= 1");
  }

  // Index bits carried by the antenna pattern: floor(log2 C(n_t, n_rf)).
  int aap_bits() const { return floor_log2_u64(binomial(n_t, n_rf)); }

  // Bits per channel use.
  int rate_bits() const { return aap_bits() + n_rf * alphabet.bits_per_symbol; }

  std::uint64_t signal_set_size() const { return std::uint64_t{1} << rate_bits(); }

  std::string key() const {
    return std::to_string(n_t) + "x" + std::to_string(n_rf) + "x" + std::to_string(n_r) +
           ":" + to_string(alphabet.name);
  }
};

struct GsmVector {
  CVector symbols;  // length n_t, exactly n_rf nonzero entries
  Aap aap;
  BitString bits;   // length rate_bits
};

// Combinadic rank of an ascending index set: sum_i C(c_i, i), i starting at 1.
inline std::uint64_t aap_rank(const Aap& aap) {
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < aap.active.size(); ++i)
    r += binomial(aap.active[i], static_cast<int>(i) + 1);
  return r;
}

// Inverse of aap_rank over the GSM-valid window [0, 2^K).
inline Aap aap_unrank(std::uint64_t rank, int n_t, int n_rf) {
  detail::require(n_rf > 1 && n_rf < n_t, "aap_unrank: need 1 < n_rf < n_t");
  const int k_bits = floor_log2_u64(binomial(n_t, n_rf));
  if (rank >= (std::uint64_t{1} << k_bits))
    throw std::invalid_argument("aap_unrank: rank " + std::to_string(rank) +
                                " out of range [0, 2^" + std::to_string(k_bits) + ")");
  std::vector<int> active(n_rf);
  std::uint64_t rem = rank;
  int ceiling = n_t;  // indices are < n_t
  for (int i = n_rf; i >= 1; --i) {
    int c = i - 1;
    while (c + 1 < ceiling && binomial(c + 1, i) <= rem) ++c;
    active[i - 1] = c;
    rem -= binomial(c, i);
    ceiling = c;
  }
  return make_aap(active, n_t);
}

// The 2^K valid patterns in combinadic rank order.
inline std::vector<Aap> valid_aaps(int n_t, int n_rf) {
  detail::require(n_rf > 1 && n_rf < n_t, "valid_aaps: need 1 < n_rf < n_t");
  const int k_bits = floor_log2_u64(binomial(n_t, n_rf));
  std::vector<Aap> out;
  out.reserve(std::size_t{1} << k_bits);
  for (std::uint64_t r = 0; r < (std::uint64_t{1} << k_bits); ++r)
    out.push_back(aap_unrank(r, n_t, n_rf));
  return out;
}

inline std::uint64_t bits_to_uint(const BitString& bits, int from, int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | (bits[from + i] ? 1u : 0u);
  return v;
}

inline void uint_to_bits(std::uint64_t v, int count, BitString& out, int from) {
  for (int i = count - 1; i >= 0; --i) {
    out[from + i] = static_cast<std::uint8_t>(v & 1u);
    v >>= 1;
  }
}

// Assembles the signal vector for (pattern rank, per-slot alphabet indices).
inline GsmVector make_gsm_vector(std::uint64_t rank, const std::vector<int>& symbol_indices,
                                 const GsmConfig& cfg) {
  GsmVector v;
  v.aap = aap_unrank(rank, cfg.n_t, cfg.n_rf);
  v.symbols.assign(cfg.n_t, cplx{});
  const int bps = cfg.alphabet.bits_per_symbol;
  v.bits.assign(cfg.rate_bits(), 0);
  uint_to_bits(rank, cfg.aap_bits(), v.bits, 0);
  for (int i = 0; i < cfg.n_rf; ++i) {
    const int idx = symbol_indices[i];
    detail::require(idx >= 0 && idx < static_cast<int>(cfg.alphabet.points.size()),
                    "make_gsm_vector: symbol index out of range");
    v.symbols[v.aap.active[i]] = cfg.alphabet.points[idx];
    uint_to_bits(static_cast<std::uint64_t>(idx), bps, v.bits, cfg.aap_bits() + i * bps);
  }
  return v;
}

inline GsmVector bits_to_gsm_vector(const BitString& bits, const GsmConfig& cfg) {
  if (static_cast<int>(bits.size()) != cfg.rate_bits())
    throw std::invalid_argument("bits_to_gsm_vector: expected " +
                                std::to_string(cfg.rate_bits()) + " bits, got " +
                                std::to_string(bits.size()));
  const std::uint64_t rank = bits_to_uint(bits, 0, cfg.aap_bits());
  const int bps = cfg.alphabet.bits_per_symbol;
  std::vector<int> idx(cfg.n_rf);
  for (int i = 0; i < cfg.n_rf; ++i)
    idx[i] = static_cast<int>(bits_to_uint(bits, cfg.aap_bits() + i * bps, bps));
  GsmVector v = make_gsm_vector(rank, idx, cfg);
  v.bits = bits;
  return v;
}

// Exact inverse of bits_to_gsm_vector; rejects vectors outside the signal set.
inline BitString gsm_vector_to_bits(const GsmVector& x, const GsmConfig& cfg) {
  if (static_cast<int>(x.symbols.size()) != cfg.n_t)
    throw std::invalid_argument("gsm_vector_to_bits: wrong vector length");
  std::vector<int> active;
  for (int i = 0; i < cfg.n_t; ++i)
    if (x.symbols[i] != cplx{}) active.push_back(i);
  if (static_cast<int>(active.size()) != cfg.n_rf)
    throw std::invalid_argument("gsm_vector_to_bits: support size != n_rf");
  const std::uint64_t rank = aap_rank(make_aap(active, cfg.n_t));
  if (rank >= (std::uint64_t{1} << cfg.aap_bits()))
    throw std::invalid_argument("gsm_vector_to_bits: activation pattern not in the valid set");
  BitString bits(cfg.rate_bits(), 0);
  uint_to_bits(rank, cfg.aap_bits(), bits, 0);
  const int bps = cfg.alphabet.bits_per_symbol;
  for (int i = 0; i < cfg.n_rf; ++i) {
    const cplx s = x.symbols[active[i]];
    int idx = -1;
    for (int p = 0; p < static_cast<int>(cfg.alphabet.points.size()); ++p)
      if (cfg.alphabet.points[p] == s) {
        idx = p;
        break;
      }
    if (idx < 0)
      throw std::invalid_argument("gsm_vector_to_bits: entry is not a constellation point");
    uint_to_bits(static_cast<std::uint64_t>(idx), bps, bits, cfg.aap_bits() + i * bps);
  }
  return bits;
}

// All 2^rate signal vectors in bit-lexicographic order. Guarded by a rate cap:
// past it, map bit strings one at a time with bits_to_gsm_vector instead of
// materializing the set.
inline std::vector<GsmVector> enumerate_signal_set(const GsmConfig& cfg, int max_rate_bits = 20) {
  if (cfg.rate_bits() > max_rate_bits)
    throw config_error("enumerate_signal_set: rate " + std::to_string(cfg.rate_bits()) +
                       " bits exceeds the enumeration cap of " + std::to_string(max_rate_bits) +
                       "; stream vectors via bits_to_gsm_vector instead");
  const std::uint64_t n = cfg.signal_set_size();
  std::vector<GsmVector> set;
  set.reserve(n);
  BitString bits(cfg.rate_bits());
  for (std::uint64_t v = 0; v < n; ++v) {
    uint_to_bits(v, cfg.rate_bits(), bits, 0);
    set.push_back(bits_to_gsm_vector(bits, cfg));
  }
  return set;
}

}  // namespace gsmdet
