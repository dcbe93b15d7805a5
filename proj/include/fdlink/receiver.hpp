#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fdlink/adaptive.hpp"
#include "fdlink/channel.hpp"
#include "fdlink/coding.hpp"
#include "fdlink/types.hpp"

namespace fdlink {

enum class Combiner { rake, rake_ic };
enum class EstimatorKind { srls, srlsd, srls_l, hsrls_l_dcd };

/// How one channel (SI or far-end) is estimated in each turbo iteration.
struct ChannelEstimatorConfig {
  EstimatorKind kind = EstimatorKind::srlsd;
  std::size_t filter_length = 20;
  // Window length per iteration; the last entry repeats.
  std::vector<std::size_t> window_schedule{1001};
  std::size_t order = 2;  // basis order for the BEM estimators
  WindowShape window = WindowShape::hann;
  double regularization = 0.0;
  std::size_t solve_stride = 1;
  HomotopyConfig homotopy;

  std::size_t window_for(std::size_t iteration) const;  // iteration counts from 1
  void validate(const char* which) const;
};

EstimatorOutput estimate_channel(std::span<const cplx> desired, std::span<const cplx> regressor,
                                 const ChannelEstimatorConfig& cfg, std::size_t iteration);

struct ReceiverConfig {
  std::size_t iterations = 3;
  ChannelEstimatorConfig si;
  ChannelEstimatorConfig far;
  Combiner combiner = Combiner::rake_ic;
  FrameLayout layout;
  std::uint64_t pilot_seed = 1;
  bool keep_channels = true;  // store per-iteration channel estimates in the trace

  void validate() const;
};

/// Optional ground truth for scoring a run (all fields may be empty).
struct ReceiverTruth {
  const TimeVaryingChannel* si = nullptr;   // effective SI channel seen by the receiver
  const TimeVaryingChannel* far = nullptr;  // effective far-end channel
  const Bits* message = nullptr;
  const RVec* data = nullptr;               // transmitted d(i), frame order
};

struct IterationTrace {
  std::size_t iteration = 0;
  std::size_t si_window = 0, far_window = 0;
  std::optional<TimeVaryingChannel> si_estimate, far_estimate;
  CVec residual;  // e = r - r_SI
  CVec combined;  // combiner output y
  RVec soft;      // Im{y} in frame order, warm-up entries zeroed
  Bits decoded;
  bool sic_applied = false;
  double sic_depth_db = 0.0;  // 10 log10(P_r / P_e), meaningful only when sic_applied
  double si_residual_power = 0.0;
  double far_residual_power = 0.0;
  // Filled when truth is supplied.
  std::optional<double> ber_pre, ber_post, si_nmse_db, far_nmse_db;
  std::size_t bits_counted = 0;
};

struct SicOutput {
  CVec residual;      // e
  CVec cancelled;     // r_SI estimate
  double depth_db = 0.0;
};

/// e(i) = r(i) - sum_l h_SI(i, l) s(i - l); r == cancelled + residual exactly.
SicOutput si_cancel(std::span<const cplx> received, std::span<const cplx> regressor,
                    const TimeVaryingChannel& h_si);

/// Matched-filter combining aligned on the symbol: y(i) = sum_l conj(h(i+l, l)) e(i+l).
/// Terms beyond the end of the record are zero.
CVec rake_combine(std::span<const cplx> e, const TimeVaryingChannel& h_f);

/// Rake combining after removing every path but the one being combined:
///   e_l(j) = e(j) - f(j) + a(j-l) h(j, l),  y(i) = sum_l conj(h(i+l, l)) e_l(i+l).
CVec rake_ic_combine(std::span<const cplx> e, std::span<const cplx> a_hat,
                     const TimeVaryingChannel& h_f, std::span<const cplx> f_hat);

/// Time-varying convolution of the symbol estimate with the channel estimate.
CVec reconstruct_far(std::span<const cplx> a_hat, const TimeVaryingChannel& h_f);

struct Demodulated {
  Bits message;
  RVec soft;        // Im{y}
  SymbolFrame frame;  // re-encoded far-end frame
};

/// Soft values Im{y} -> deinterleave -> Viterbi -> re-encode.
/// `erase_tail` zeroes the last symbols, which have incomplete combining.
Demodulated demodulate(std::span<const cplx> y, const FrameLayout& layout, std::uint64_t pilot_seed,
                       std::size_t erase_tail = 0);

/// Turbo receiver: SI cancellation, far-end estimation, combining and
/// decoding, repeated with the re-encoded decisions fed back.
std::vector<IterationTrace> turbo_receive(std::span<const cplx> received, std::span<const cplx> si_regressor,
                                          const ReceiverConfig& cfg, const ReceiverTruth& truth = {});

}  // namespace fdlink
