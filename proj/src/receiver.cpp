#include "fdlink/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fdlink {

std::size_t ChannelEstimatorConfig::window_for(std::size_t iteration) const {
  if (window_schedule.empty()) throw ConfigError("empty window schedule");
  const std::size_t k = std::min(iteration == 0 ? 0 : iteration - 1, window_schedule.size() - 1);
  return window_schedule[k];
}

void ChannelEstimatorConfig::validate(const char* which) const {
  const std::string name(which);
  if (filter_length == 0) throw ConfigError(name + " filter length must be positive");
  if (window_schedule.empty()) throw ConfigError(name + " window schedule is empty");
  for (std::size_t k = 0; k < window_schedule.size(); ++k) {
    if (window_schedule[k] % 2 == 0) throw ConfigError(name + " window lengths must be odd");
    if (k > 0 && window_schedule[k] > window_schedule[k - 1]) {
      throw ConfigError(name + " window schedule must not grow after the first iteration");
    }
  }
  if (solve_stride == 0) throw ConfigError(name + " solve stride must be positive");
  if (regularization < 0.0) throw ConfigError(name + " regularization must be non-negative");
  if (kind == EstimatorKind::hsrls_l_dcd) homotopy.validate();
}

EstimatorOutput estimate_channel(std::span<const cplx> desired, std::span<const cplx> regressor,
                                 const ChannelEstimatorConfig& cfg, std::size_t iteration) {
  const std::size_t M = cfg.window_for(iteration);
  switch (cfg.kind) {
    case EstimatorKind::srls:
    case EstimatorKind::srlsd: {
      SlidingWindowConfig sw;
      sw.filter_length = cfg.filter_length;
      sw.window_length = M;
      sw.delay = cfg.kind == EstimatorKind::srlsd ? M / 2 : 0;
      sw.regularization = cfg.regularization;
      sw.solve_stride = cfg.solve_stride;
      return cfg.kind == EstimatorKind::srlsd ? srlsd_estimate(desired, regressor, sw)
                                              : srls_estimate(desired, regressor, sw);
    }
    case EstimatorKind::srls_l:
    case EstimatorKind::hsrls_l_dcd: {
      BemConfig bem;
      bem.filter_length = cfg.filter_length;
      bem.order = cfg.order;
      bem.window_length = M;
      bem.window = cfg.window;
      bem.solve_stride = cfg.solve_stride;
      return cfg.kind == EstimatorKind::srls_l
                 ? srls_l_estimate(desired, regressor, bem, cfg.regularization)
                 : hsrls_l_dcd_estimate(desired, regressor, bem, cfg.homotopy, cfg.regularization);
    }
  }
  throw ConfigError("unknown estimator");
}

void ReceiverConfig::validate() const {
  if (iterations == 0) throw ConfigError("at least one receiver iteration is required");
  si.validate("SI");
  far.validate("far-end");
  if (layout.frame_symbols == 0) throw ConfigError("receiver frame layout is empty");
}

SicOutput si_cancel(std::span<const cplx> received, std::span<const cplx> regressor,
                    const TimeVaryingChannel& h_si) {
  if (received.size() != regressor.size()) throw ParameterError("received and regressor lengths differ");
  SicOutput out;
  out.cancelled = apply_channel(regressor, h_si);
  out.residual.resize(received.size());
  for (std::size_t i = 0; i < received.size(); ++i) out.residual[i] = received[i] - out.cancelled[i];
  const double pe = mean_power(out.residual);
  const double pr = mean_power(CVec(received.begin(), received.end()));
  if (pr <= 0.0) {
    out.depth_db = 0.0;
  } else {
    out.depth_db = pe > 0.0 ? to_db(pr / pe) : std::numeric_limits<double>::infinity();
  }
  return out;
}

CVec reconstruct_far(std::span<const cplx> a_hat, const TimeVaryingChannel& h_f) {
  return apply_channel(a_hat, h_f);
}

CVec rake_combine(std::span<const cplx> e, const TimeVaryingChannel& h_f) {
  const std::size_t n = e.size();
  const std::size_t L = h_f.length();
  CVec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc{};
    const std::size_t lmax = std::min(L, n - i);
    for (std::size_t l = 0; l < lmax; ++l) acc += std::conj(h_f.at(i + l, l)) * e[i + l];
    y[i] = acc;
  }
  return y;
}

CVec rake_ic_combine(std::span<const cplx> e, std::span<const cplx> a_hat, const TimeVaryingChannel& h_f,
                     std::span<const cplx> f_hat) {
  const std::size_t n = e.size();
  if (a_hat.size() != n || f_hat.size() != n) throw ParameterError("Rake-IC inputs differ in length");
  const std::size_t L = h_f.length();
  CVec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc{};
    const std::size_t lmax = std::min(L, n - i);
    for (std::size_t l = 0; l < lmax; ++l) {
      const std::size_t j = i + l;
      const cplx h = h_f.at(j, l);
      acc += std::conj(h) * (e[j] - f_hat[j] + a_hat[i] * h);
    }
    y[i] = acc;
  }
  return y;
}

Demodulated demodulate(std::span<const cplx> y, const FrameLayout& layout, std::uint64_t pilot_seed,
                       std::size_t erase_tail) {
  if (y.size() != layout.frame_symbols) throw ParameterError("combiner output does not match the frame");
  Demodulated out;
  out.soft.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.soft[i] = y[i].imag();
  const std::size_t keep = y.size() - std::min(erase_tail, y.size());
  std::fill(out.soft.begin() + static_cast<std::ptrdiff_t>(keep), out.soft.end(), 0.0);
  RVec coded = deinterleave<double>(out.soft, layout.interleaver_depth);
  coded.resize(layout.coded_bits);
  out.message = viterbi_decode(coded, layout.code);
  out.frame = remodulate(out.message, layout, pilot_seed);
  return out;
}

namespace {

double db_or_nan(double x) { return x > 0.0 ? to_db(x) : -std::numeric_limits<double>::infinity(); }

}  // namespace

std::vector<IterationTrace> turbo_receive(std::span<const cplx> received, std::span<const cplx> si_regressor,
                                          const ReceiverConfig& cfg, const ReceiverTruth& truth) {
  cfg.validate();
  const std::size_t n = received.size();
  if (n != cfg.layout.frame_symbols) throw ConfigError("received frame length does not match the layout");
  if (!si_regressor.empty() && si_regressor.size() != n) {
    throw ParameterError("SI regressor length differs from the received frame");
  }
  double reg_energy = 0.0;
  for (const auto& v : si_regressor) reg_energy += std::norm(v);
  const bool do_sic = reg_energy > 0.0;
  const std::size_t warmup = cfg.far.filter_length - 1;

  const RVec pilot = prbs(cfg.pilot_seed, n);
  CVec a_hat(n);
  for (std::size_t i = 0; i < n; ++i) a_hat[i] = pilot[i];
  CVec f_hat;  // far-end reconstruction from the previous iteration

  std::vector<IterationTrace> traces;
  CVec desired(n);
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    IterationTrace tr;
    tr.iteration = it;
    tr.si_window = cfg.si.window_for(it);
    tr.far_window = cfg.far.window_for(it);

    if (do_sic) {
      // From the second pass on, the reconstructed far-end signal is taken
      // out of the desired signal before SI estimation.
      for (std::size_t i = 0; i < n; ++i) desired[i] = f_hat.empty() ? received[i] : received[i] - f_hat[i];
      EstimatorOutput si_est = estimate_channel(desired, si_regressor, cfg.si, it);
      SicOutput sic = si_cancel(received, si_regressor, si_est.estimate);
      tr.residual = std::move(sic.residual);
      tr.sic_applied = true;
      tr.sic_depth_db = sic.depth_db;
      tr.si_residual_power = si_est.residual_power;
      if (truth.si) tr.si_nmse_db = db_or_nan(channel_nmse(si_est.estimate, *truth.si));
      if (cfg.keep_channels) tr.si_estimate = std::move(si_est.estimate);
    } else {
      tr.residual.assign(received.begin(), received.end());
    }

    EstimatorOutput far_est = estimate_channel(tr.residual, a_hat, cfg.far, it);
    tr.far_residual_power = far_est.residual_power;
    if (truth.far) tr.far_nmse_db = db_or_nan(channel_nmse(far_est.estimate, *truth.far));
    const TimeVaryingChannel& hf = far_est.estimate;

    if (cfg.combiner == Combiner::rake) {
      tr.combined = rake_combine(tr.residual, hf);
    } else {
      const CVec f_comb = reconstruct_far(a_hat, hf);
      tr.combined = rake_ic_combine(tr.residual, a_hat, hf, f_comb);
    }

    Demodulated dem = demodulate(tr.combined, cfg.layout, cfg.pilot_seed, warmup);
    tr.soft = std::move(dem.soft);
    tr.decoded = std::move(dem.message);

    if (truth.data) {
      const std::size_t keep = n - std::min(warmup, n);
      std::size_t err = 0;
      for (std::size_t i = 0; i < keep; ++i) err += ((tr.soft[i] < 0.0) != ((*truth.data)[i] < 0.0));
      tr.ber_pre = keep ? static_cast<double>(err) / static_cast<double>(keep) : 0.0;
    }
    if (truth.message) {
      std::size_t err = 0;
      for (std::size_t i = 0; i < tr.decoded.size(); ++i) err += tr.decoded[i] != (*truth.message)[i];
      tr.bits_counted = tr.decoded.size();
      tr.ber_post = tr.bits_counted ? static_cast<double>(err) / static_cast<double>(tr.bits_counted) : 0.0;
    }

    a_hat = std::move(dem.frame.combined);
    f_hat = reconstruct_far(a_hat, hf);
    if (cfg.keep_channels) tr.far_estimate = std::move(far_est.estimate);
    traces.push_back(std::move(tr));
  }
  return traces;
}

}  // namespace fdlink
