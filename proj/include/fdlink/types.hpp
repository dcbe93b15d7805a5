#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdlink {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

// Invalid argument to an operation (out-of-range parameter, bad length).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent link / receiver / experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A linear system could not be solved to the required accuracy.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File ingestion / output failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real passband samples s(n), r(n) at the ADC/DAC rate f_s.
struct RealPassband {
  RVec samples;
  double rate_hz = 0.0;
};

/// Complex baseband samples at the symbol rate f_d (or an intermediate rate).
struct ComplexBaseband {
  CVec samples;
  double rate_hz = 0.0;

  std::size_t size() const { return samples.size(); }
};

struct FirTaps {
  RVec coefficients;
  std::size_t group_delay_samples = 0;
};

/// Physical-layer parameters shared by transmitter and front end.
struct LinkConfig {
  double carrier_hz = 36e3;
  double sample_rate_hz = 192e3;
  double symbol_rate_hz = 4e3;
  double rolloff = 0.2;
  int rrc_span_symbols = 16;

  // Upsampling ratio f_s / f_d; throws ConfigError when not an integer.
  int samples_per_symbol() const;
};

double mean_power(const CVec& x);
double mean_power(const RVec& x);
double to_db(double linear);
double from_db(double db);

}  // namespace fdlink
