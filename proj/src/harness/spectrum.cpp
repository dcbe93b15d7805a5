#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "fdlink/harness.hpp"

namespace fdlink {

Spectrum welch_spectrum(std::span<const cplx> x, double rate_hz, std::size_t segment, double center_hz) {
  if (x.empty()) throw ParameterError("cannot take the spectrum of an empty signal");
  if (segment < 2) throw ParameterError("Welch segment too short");
  const std::size_t seg = std::min(segment, x.size());
  const std::size_t hop = std::max<std::size_t>(seg / 2, 1);

  std::vector<double> win(seg);
  double wpow = 0.0;
  for (std::size_t k = 0; k < seg; ++k) {
    win[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(seg));
    wpow += win[k] * win[k];
  }

  Eigen::FFT<double> fft;
  std::vector<cplx> buf(seg), spec(seg);
  std::vector<double> acc(seg, 0.0);
  std::size_t count = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
    for (std::size_t k = 0; k < seg; ++k) buf[k] = x[start + k] * win[k];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < seg; ++k) acc[k] += std::norm(spec[k]);
    ++count;
  }

  Spectrum out;
  out.frequency_hz.resize(seg);
  out.power_db.resize(seg);
  const double scale = 1.0 / (static_cast<double>(count) * rate_hz * wpow);
  for (std::size_t j = 0; j < seg; ++j) {
    // fftshift: row j holds bin (j + seg/2) mod seg.
    const std::size_t k = (j + seg - seg / 2) % seg;
    const double bin = static_cast<double>(j) - static_cast<double>(seg / 2);
    out.frequency_hz[j] = center_hz + bin * rate_hz / static_cast<double>(seg);
    out.power_db[j] = 10.0 * std::log10(std::max(acc[k] * scale, 1e-300));
  }
  return out;
}

}  // namespace fdlink
