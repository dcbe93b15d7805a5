#include "fdlink/dsp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <numeric>

namespace fdlink {

int LinkConfig::samples_per_symbol() const {
  if (!(sample_rate_hz > 0.0) || !(symbol_rate_hz > 0.0)) {
    throw ConfigError("sample and symbol rates must be positive");
  }
  const double ratio = sample_rate_hz / symbol_rate_hz;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ConfigError("sample rate must be an integer multiple of the symbol rate");
  }
  return static_cast<int>(rounded);
}

double mean_power(const CVec& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return acc / static_cast<double>(x.size());
}

double mean_power(const RVec& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double to_db(double linear) { return 10.0 * std::log10(linear); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

namespace {

double rrc_value(double t, double beta) {
  using std::numbers::pi;
  if (std::abs(t) < 1e-12) {
    return 1.0 - beta + 4.0 * beta / pi;
  }
  const double edge = 1.0 / (4.0 * beta);
  if (std::abs(std::abs(t) - edge) < 1e-9) {
    return beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) +
            (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
  }
  const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
  const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

void check_rate(const RealPassband& p, const LinkConfig& cfg) {
  if (std::abs(p.rate_hz - cfg.sample_rate_hz) > 1e-9 * cfg.sample_rate_hz) {
    throw ConfigError("passband rate does not match the link sample rate");
  }
}

}  // namespace

namespace {

// Truncating the pulse leaves about 0.5% ISI in the matched pair. Newton steps
// with the minimum-norm correction pull the taps onto the nearest pulse whose
// autocorrelation is exactly 1 at lag 0 and 0 at every other symbol lag.
void make_nyquist(RVec& h, int span, int sps) {
  const auto n = static_cast<std::ptrdiff_t>(h.size());
  const int lags = span + 1;
  for (int it = 0; it < 20; ++it) {
    Eigen::VectorXd g(lags);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(lags, n);
    for (int k = 0; k < lags; ++k) {
      const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(k) * sps;
      double acc = 0.0;
      for (std::ptrdiff_t j = 0; j + s < n; ++j) acc += h[j] * h[j + s];
      g[k] = acc - (k == 0 ? 1.0 : 0.0);
      for (std::ptrdiff_t j = 0; j < n; ++j) {
        if (j + s < n) J(k, j) += h[j + s];
        if (j - s >= 0) J(k, j) += h[j - s];
      }
    }
    if (g.cwiseAbs().maxCoeff() < 1e-15) break;
    const Eigen::VectorXd step = J.transpose() * (J * J.transpose()).ldlt().solve(g);
    if (!step.allFinite()) break;
    for (std::ptrdiff_t j = 0; j < n; ++j) h[j] -= step[j];
  }
}

}  // namespace

FirTaps design_rrc(double rolloff, int span_symbols, int samples_per_symbol) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) {
    throw ParameterError("RRC rolloff must lie in (0, 1]");
  }
  if (span_symbols <= 0 || samples_per_symbol <= 0) {
    throw ParameterError("RRC span and samples per symbol must be positive");
  }
  const std::size_t n_taps = static_cast<std::size_t>(span_symbols) * samples_per_symbol + 1;
  const double centre = 0.5 * static_cast<double>(n_taps - 1);
  FirTaps taps;
  taps.coefficients.resize(n_taps);
  for (std::size_t n = 0; n < n_taps; ++n) {
    const double t = (static_cast<double>(n) - centre) / samples_per_symbol;
    taps.coefficients[n] = rrc_value(t, rolloff);
  }
  const double energy = std::inner_product(taps.coefficients.begin(), taps.coefficients.end(),
                                           taps.coefficients.begin(), 0.0);
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& c : taps.coefficients) c *= scale;
  make_nyquist(taps.coefficients, span_symbols, samples_per_symbol);
  taps.group_delay_samples = (n_taps - 1) / 2;
  return taps;
}

RealPassband shape_and_upconvert(std::span<const cplx> symbols, const LinkConfig& cfg) {
  const int sps = cfg.samples_per_symbol();
  if (symbols.empty()) throw ParameterError("symbol frame is empty");
  const FirTaps rrc = design_rrc(cfg.rolloff, cfg.rrc_span_symbols, sps);
  const std::size_t n_taps = rrc.coefficients.size();
  const std::size_t n_out = symbols.size() * sps + n_taps - 1;

  CVec shaped(n_out, cplx{});
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const cplx a = symbols[k];
    if (a == cplx{}) continue;
    cplx* out = shaped.data() + k * sps;
    for (std::size_t j = 0; j < n_taps; ++j) out[j] += a * rrc.coefficients[j];
  }

  RealPassband pb;
  pb.rate_hz = cfg.sample_rate_hz;
  pb.samples.resize(n_out);
  const double w = 2.0 * std::numbers::pi * cfg.carrier_hz / cfg.sample_rate_hz;
  for (std::size_t n = 0; n < n_out; ++n) {
    // Reduce the phase argument to keep cos/sin accurate on long frames.
    const double phase = std::fmod(w * static_cast<double>(n), 2.0 * std::numbers::pi);
    pb.samples[n] = shaped[n].real() * std::cos(phase) - shaped[n].imag() * std::sin(phase);
  }
  return pb;
}

ComplexBaseband complex_demodulate(const RealPassband& passband, const LinkConfig& cfg) {
  check_rate(passband, cfg);
  const int sps = cfg.samples_per_symbol();
  const FirTaps rrc = design_rrc(cfg.rolloff, cfg.rrc_span_symbols, sps);
  const std::size_t n_taps = rrc.coefficients.size();
  const std::size_t len = passband.samples.size();

  ComplexBaseband out;
  out.rate_hz = cfg.symbol_rate_hz;
  if (len < n_taps) return out;

  const double w = 2.0 * std::numbers::pi * cfg.carrier_hz / cfg.sample_rate_hz;
  CVec mixed(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double phase = std::fmod(w * static_cast<double>(n), 2.0 * std::numbers::pi);
    mixed[n] = 2.0 * passband.samples[n] * cplx(std::cos(phase), -std::sin(phase));
  }

  // Symbol k sits at filter output index k*sps + (n_taps - 1).
  const std::size_t n_sym = (len - n_taps) / sps + 1;
  out.samples.resize(n_sym);
  for (std::size_t k = 0; k < n_sym; ++k) {
    const std::size_t m = k * sps + n_taps - 1;
    cplx acc{};
    for (std::size_t j = 0; j < n_taps; ++j) acc += rrc.coefficients[j] * mixed[m - j];
    out.samples[k] = acc;
  }
  return out;
}

ComplexBaseband fir_filter(const ComplexBaseband& x, std::span<const cplx> taps) {
  if (taps.empty()) throw ParameterError("FIR taps are empty");
  ComplexBaseband y;
  y.rate_hz = x.rate_hz;
  y.samples.assign(x.samples.size(), cplx{});
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    cplx acc{};
    const std::size_t lmax = std::min(taps.size(), i + 1);
    for (std::size_t l = 0; l < lmax; ++l) acc += taps[l] * x.samples[i - l];
    y.samples[i] = acc;
  }
  return y;
}

CVec loopback(std::span<const cplx> symbols, const LinkConfig& cfg) {
  CVec out = complex_demodulate(shape_and_upconvert(symbols, cfg), cfg).samples;
  out.resize(symbols.size());
  return out;
}

}  // namespace fdlink
