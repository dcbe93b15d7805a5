#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fdlink/types.hpp"

namespace fdlink {

/// Symbol-spaced time-varying impulse response h(i, l), l = 0..L-1.
///
/// A single stored row means the channel is static; at(i, l) then returns
/// that row for every instant.
class TimeVaryingChannel {
 public:
  TimeVaryingChannel() = default;
  TimeVaryingChannel(std::size_t instants, std::size_t length, bool is_static = false);
  static TimeVaryingChannel make_static(std::span<const cplx> taps, std::size_t instants);

  std::size_t length() const { return length_; }
  std::size_t instants() const { return instants_; }
  bool is_static() const { return rows_ == 1; }

  cplx at(std::size_t i, std::size_t l) const { return taps_[row(i) * length_ + l]; }
  cplx& at(std::size_t i, std::size_t l) { return taps_[row(i) * length_ + l]; }
  std::span<const cplx> taps_at(std::size_t i) const {
    return {taps_.data() + row(i) * length_, length_};
  }
  std::span<cplx> taps_at(std::size_t i) { return {taps_.data() + row(i) * length_, length_}; }

  void scale(cplx factor);
  double energy() const;  // sum over instants and taps of |h|^2

 private:
  std::size_t row(std::size_t i) const { return rows_ == 1 ? 0 : i; }

  std::size_t instants_ = 0;
  std::size_t length_ = 0;
  std::size_t rows_ = 0;
  CVec taps_;
};

enum class Variation { static_taps, polynomial, sinusoidal };

/// Statistical description of a sparse multipath channel.
struct ChannelModelSpec {
  std::size_t length = 1;
  std::vector<std::size_t> delays{0};  // active taps, in symbols
  std::vector<double> gains_db{0.0};   // mean power of each active tap
  Variation variation = Variation::static_taps;

  // Polynomial variation: h(k) = c0 + c1 k + c2 k^2 over the record, with
  // |c1| N / |c0| and |c2| N^2 / |c0| drawn uniformly from these ranges.
  int poly_order = 2;
  double poly_linear_min = 0.0, poly_linear_max = 0.5;
  double poly_quadratic_min = 0.0, poly_quadratic_max = 0.5;

  // Sinusoidal variation: h(k) = c0 [(1 - depth) + depth exp(j(2 pi rate k / f + phi))].
  double sin_rate_hz = 1.0;
  double sin_depth = 0.3;
  double sample_rate_hz = 4e3;

  std::uint64_t seed = 1;
};

/// Realised channel plus the per-tap trajectory coefficients that produced it.
struct SynthesizedChannel {
  TimeVaryingChannel channel;
  // For polynomial variation: coefficients[a][0..2] for active tap a.
  std::vector<std::array<cplx, 3>> poly_coefficients;
};

SynthesizedChannel synthesize_channel(const ChannelModelSpec& spec, std::size_t n_instants);

/// y(i) = sum_l h(i, l) x(i - l), x(<0) = 0, output length = input length.
ComplexBaseband apply_channel(const ComplexBaseband& x, const TimeVaryingChannel& ch);
CVec apply_channel(std::span<const cplx> x, const TimeVaryingChannel& ch);

/// Variance of extra noise lowering a recording with signal+noise power
/// p_signal and noise power p_noise to the requested SNR:
///   sigma^2 = (p_signal - p_noise) / snr - p_noise.
/// Throws ParameterError when the result would be negative.
double noise_variance_for_snr(double p_signal, double p_noise, double snr_linear);

/// Levels of the received components relative to the noise power.
/// A missing ratio switches that component off.
struct MixSpec {
  std::optional<double> si_to_noise_db = 67.0;
  std::optional<double> far_snr_db = 16.0;
  double noise_power = 1.0;

  std::optional<double> sir_db() const;
};

struct MixResult {
  ComplexBaseband received;
  CVec si;     // scaled SI component
  CVec far;    // scaled far-end component
  CVec noise;
  double si_gain = 0.0;
  double far_gain = 0.0;
  double noise_variance = 0.0;
};

/// r = g_si * si + g_far * far + n with gains set from the frame powers.
MixResult mix(std::span<const cplx> si, std::span<const cplx> far, const MixSpec& spec,
              std::uint64_t seed, double rate_hz = 1.0);

/// Circular complex Gaussian noise with the given variance.
CVec complex_noise(std::size_t n, double variance, std::uint64_t seed);

}  // namespace fdlink
