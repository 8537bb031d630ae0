#pragma once

#include <stdexcept>

namespace gsmdet {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kNetFormatVersion = 1;
inline constexpr const char* kCsvSchema = "detector,snr_db,bits,errors,ber,ci_lo,ci_hi";

// Bad user-facing configuration or input file (CLI exit code 2).
class config_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-positive pivots, diverging training (CLI exit code 3).
class numeric_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gsmdet
