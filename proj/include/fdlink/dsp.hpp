#pragma once

#include <span>

#include "fdlink/types.hpp"

namespace fdlink {

/// Root-raised-cosine taps, span*sps + 1 long, unit energy, centred.
///
/// Time is measured in symbol periods t = (n - span*sps/2) / sps. The two
/// removable singularities (t = 0 and |t| = 1/(4*rolloff)) use their
/// analytic limits.
FirTaps design_rrc(double rolloff, int span_symbols, int samples_per_symbol);

/// Upsample, RRC pulse-shape and mix to the carrier:
///   s(n) = Re{ x(n) exp(j 2 pi f_c n / f_s) },  x = RRC * upsample(symbols).
/// Output length is symbols * sps + taps - 1.
RealPassband shape_and_upconvert(std::span<const cplx> symbols, const LinkConfig& cfg);

/// Complex demodulation: mix down, RRC matched filter, pick one sample per
/// symbol. Group delay of the transmit+receive pair is removed so that a
/// symbol transmitted at index k appears at output index k. The factor 2
/// lost in taking the real part at the transmitter is restored.
ComplexBaseband complex_demodulate(const RealPassband& passband, const LinkConfig& cfg);

/// Linear convolution y(i) = sum_l taps[l] x(i - l), truncated to len(x).
ComplexBaseband fir_filter(const ComplexBaseband& x, std::span<const cplx> taps);

/// Shape + demodulate in one go, i.e. the baseband version of a symbol
/// stream as seen after a transmit/receive RRC pair.
CVec loopback(std::span<const cplx> symbols, const LinkConfig& cfg);

}  // namespace fdlink
