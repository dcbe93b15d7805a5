#include "fdlink/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fdlink {

TimeVaryingChannel::TimeVaryingChannel(std::size_t instants, std::size_t length, bool is_static)
    : instants_(instants), length_(length), rows_(is_static ? 1 : instants) {
  if (length == 0) throw ParameterError("channel length must be positive");
  taps_.assign(rows_ * length_, cplx{});
}

TimeVaryingChannel TimeVaryingChannel::make_static(std::span<const cplx> taps, std::size_t instants) {
  TimeVaryingChannel ch(instants, taps.size(), true);
  std::copy(taps.begin(), taps.end(), ch.taps_.begin());
  return ch;
}

void TimeVaryingChannel::scale(cplx factor) {
  for (auto& h : taps_) h *= factor;
}

double TimeVaryingChannel::energy() const {
  double acc = 0.0;
  for (const auto& h : taps_) acc += std::norm(h);
  return is_static() ? acc * static_cast<double>(instants_) : acc;
}

SynthesizedChannel synthesize_channel(const ChannelModelSpec& spec, std::size_t n_instants) {
  if (n_instants == 0) throw ParameterError("channel needs at least one time instant");
  if (spec.length == 0) throw ParameterError("channel length must be positive");
  if (spec.delays.empty()) throw ParameterError("channel needs at least one active tap");
  if (spec.delays.size() != spec.gains_db.size()) {
    throw ParameterError("channel delays and gains differ in length");
  }
  for (std::size_t d : spec.delays) {
    if (d >= spec.length) throw ParameterError("path delay exceeds the channel length");
  }

  std::mt19937_64 gen(spec.seed * 0x9e3779b97f4a7c15ULL + 17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;

  SynthesizedChannel out;
  const bool is_static = spec.variation == Variation::static_taps;
  out.channel = TimeVaryingChannel(n_instants, spec.length, is_static);
  const double n = static_cast<double>(n_instants);

  for (std::size_t a = 0; a < spec.delays.size(); ++a) {
    const std::size_t l = spec.delays[a];
    const cplx c0 = std::polar(std::sqrt(from_db(spec.gains_db[a])), two_pi * unit(gen));
    switch (spec.variation) {
      case Variation::static_taps:
        out.channel.at(0, l) += c0;
        break;
      case Variation::polynomial: {
        const double r1 = spec.poly_linear_min + (spec.poly_linear_max - spec.poly_linear_min) * unit(gen);
        const double r2 =
            spec.poly_quadratic_min + (spec.poly_quadratic_max - spec.poly_quadratic_min) * unit(gen);
        const cplx c1 = spec.poly_order >= 1 ? c0 * std::polar(r1 / n, two_pi * unit(gen)) : cplx{};
        const cplx c2 = spec.poly_order >= 2 ? c0 * std::polar(r2 / (n * n), two_pi * unit(gen)) : cplx{};
        out.poly_coefficients.push_back({c0, c1, c2});
        for (std::size_t i = 0; i < n_instants; ++i) {
          const double k = static_cast<double>(i);
          out.channel.at(i, l) += c0 + c1 * k + c2 * k * k;
        }
        break;
      }
      case Variation::sinusoidal: {
        const double phi = two_pi * unit(gen);
        const double w = two_pi * spec.sin_rate_hz / spec.sample_rate_hz;
        for (std::size_t i = 0; i < n_instants; ++i) {
          const double ph = std::fmod(w * static_cast<double>(i) + phi, two_pi);
          out.channel.at(i, l) += c0 * ((1.0 - spec.sin_depth) + spec.sin_depth * std::polar(1.0, ph));
        }
        break;
      }
    }
  }
  return out;
}

CVec apply_channel(std::span<const cplx> x, const TimeVaryingChannel& ch) {
  if (!ch.is_static() && ch.instants() < x.size()) {
    throw ParameterError("channel has fewer time instants than the input");
  }
  const std::size_t L = ch.length();
  CVec y(x.size(), cplx{});
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto h = ch.taps_at(i);
    cplx acc{};
    const std::size_t lmax = std::min(L, i + 1);
    for (std::size_t l = 0; l < lmax; ++l) acc += h[l] * x[i - l];
    y[i] = acc;
  }
  return y;
}

ComplexBaseband apply_channel(const ComplexBaseband& x, const TimeVaryingChannel& ch) {
  return {apply_channel(x.samples, ch), x.rate_hz};
}

double noise_variance_for_snr(double p_signal, double p_noise, double snr_linear) {
  if (!(p_noise >= 0.0) || !(p_signal > p_noise) || !(snr_linear > 0.0)) {
    throw ParameterError("noise_variance_for_snr needs p_signal > p_noise >= 0 and snr > 0");
  }
  const double var = (p_signal - p_noise) / snr_linear - p_noise;
  // A relative slack absorbs rounding when the request equals the intrinsic SNR.
  if (var < -1e-12 * p_signal) {
    throw ParameterError("requested SNR exceeds the intrinsic SNR of the recording");
  }
  return std::max(var, 0.0);
}

std::optional<double> MixSpec::sir_db() const {
  if (!si_to_noise_db || !far_snr_db) return std::nullopt;
  return *far_snr_db - *si_to_noise_db;
}

CVec complex_noise(std::size_t n, double variance, std::uint64_t seed) {
  CVec out(n);
  if (variance <= 0.0) return out;
  std::mt19937_64 gen(seed * 0xd1b54a32d192ed03ULL + 0x2545f491ULL);
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  for (auto& v : out) {
    const double re = g(gen);
    const double im = g(gen);
    v = cplx(re, im);
  }
  return out;
}

MixResult mix(std::span<const cplx> si, std::span<const cplx> far, const MixSpec& spec,
              std::uint64_t seed, double rate_hz) {
  const std::size_t n = std::max(si.size(), far.size());
  MixResult out;
  out.si.assign(n, cplx{});
  out.far.assign(n, cplx{});
  std::copy(si.begin(), si.end(), out.si.begin());
  std::copy(far.begin(), far.end(), out.far.begin());

  auto gain_for = [&](const CVec& x, const std::optional<double>& ratio_db) {
    if (!ratio_db) return 0.0;
    const double p = mean_power(x);
    if (p <= 0.0) return 0.0;
    return std::sqrt(spec.noise_power * from_db(*ratio_db) / p);
  };
  out.si_gain = gain_for(out.si, spec.si_to_noise_db);
  out.far_gain = gain_for(out.far, spec.far_snr_db);
  for (auto& v : out.si) v *= out.si_gain;
  for (auto& v : out.far) v *= out.far_gain;

  out.noise_variance = spec.noise_power;
  out.noise = complex_noise(n, spec.noise_power, seed);
  out.received.rate_hz = rate_hz;
  out.received.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.received.samples[i] = out.si[i] + out.far[i] + out.noise[i];
  return out;
}

}  // namespace fdlink
