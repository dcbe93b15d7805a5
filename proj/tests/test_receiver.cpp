#include <doctest.h>

#include <cmath>

#include "fdlink/receiver.hpp"
#include "support.hpp"

using namespace fdlink;

namespace {

struct HdLink {
  FrameLayout layout;
  Bits message;
  SymbolFrame frame;
  TimeVaryingChannel channel;
  CVec received;
};

HdLink make_hd_link(double snr_db, std::uint64_t seed, const std::string& rate = "1/3") {
  HdLink k;
  k.layout = FrameLayout::for_frame(code_by_rate(rate), 6000, 16);
  k.message = random_bits(seed, k.layout.message_bits);
  k.frame = build_far_frame(k.message, k.layout, 7);
  const CVec taps{cplx(0.8, 0.2), cplx(0.0), cplx(-0.3, 0.4), cplx(0.1, -0.1)};
  k.channel = TimeVaryingChannel::make_static(taps, k.frame.size());
  k.received = apply_channel(k.frame.combined, k.channel);
  const double noise = mean_power(k.received) / from_db(snr_db);
  const CVec n = complex_noise(k.received.size(), noise, seed + 100);
  for (std::size_t i = 0; i < n.size(); ++i) k.received[i] += n[i];
  return k;
}

ReceiverConfig hd_config(const FrameLayout& layout, std::size_t iterations) {
  ReceiverConfig cfg;
  cfg.iterations = iterations;
  cfg.layout = layout;
  cfg.pilot_seed = 7;
  cfg.far.filter_length = 4;
  cfg.far.window_schedule = {401, 301};
  cfg.far.solve_stride = 5;
  cfg.si = cfg.far;
  return cfg;
}

}  // namespace

TEST_CASE("si_cancel: exact estimate, zero estimate, conservation") {
  const std::size_t n = 500;
  const CVec s = testing::gaussian(n, 1);
  TimeVaryingChannel h(n, 3);
  const CVec taps = testing::gaussian(3 * n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < 3; ++l) h.at(i, l) = taps[3 * i + l];
  }
  const CVec r = apply_channel(s, h);
  const SicOutput exact = si_cancel(r, s, h);
  for (const auto& v : exact.residual) CHECK(std::abs(v) < 1e-12);
  CHECK(exact.depth_db > 200.0);

  const SicOutput none = si_cancel(r, s, TimeVaryingChannel(n, 3));
  CHECK(none.residual == r);
  CHECK(none.depth_db == doctest::Approx(0.0));

  const CVec noisy = testing::gaussian(n, 3);
  CVec rn(n);
  for (std::size_t i = 0; i < n; ++i) rn[i] = r[i] + noisy[i];
  const SicOutput part = si_cancel(rn, s, h);
  for (std::size_t i = 0; i < n; ++i) CHECK(part.cancelled[i] + part.residual[i] == rn[i]);
  CHECK_THROWS(si_cancel(rn, CVec(n - 1), h));
}

TEST_CASE("si_cancel: static SI at 60 dB over noise is cancelled to within 1 dB of the floor") {
  const std::size_t n = 8000;
  const CVec s = testing::gaussian(n, 4);
  const CVec taps{cplx(1.0), cplx(0.0, -0.5), cplx(0.3, 0.3), cplx(0.0), cplx(0.0), cplx(-0.1)};
  const CVec si = apply_channel(s, TimeVaryingChannel::make_static(taps, n));
  const double noise = mean_power(si) * 1e-6;
  const CVec nz = complex_noise(n, noise, 5);
  CVec r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = si[i] + nz[i];
  ChannelEstimatorConfig cfg;
  cfg.kind = EstimatorKind::srlsd;
  cfg.filter_length = 10;
  cfg.window_schedule = {1001};
  cfg.solve_stride = 5;
  const auto est = estimate_channel(r, s, cfg, 1);
  const SicOutput out = si_cancel(r, s, est.estimate);
  const double floor_db = to_db(noise);
  CHECK(std::abs(to_db(mean_power(out.residual)) - floor_db) < 1.0);
  CHECK(out.depth_db == doctest::Approx(60.0).epsilon(0.02));
}

TEST_CASE("rake_combine: single tap is a matched scalar; two-tap oracle; phase") {
  const std::size_t n = 50;
  const CVec e = testing::gaussian(n, 6);
  const cplx g(0.6, -0.8);
  const CVec y1 = rake_combine(e, TimeVaryingChannel::make_static(CVec{g}, n));
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - std::conj(g) * e[i]) < 1e-15);

  const CVec h2{cplx(1.0, 0.5), cplx(-0.25, 0.75)};
  const CVec y2 = rake_combine(e, TimeVaryingChannel::make_static(h2, n));
  for (std::size_t i = 0; i < n; ++i) {
    cplx want = std::conj(h2[0]) * e[i];
    if (i + 1 < n) want += std::conj(h2[1]) * e[i + 1];
    CHECK(std::abs(y2[i] - want) < 1e-14);
  }

  const CVec yp = rake_combine(e, TimeVaryingChannel::make_static(CVec{cplx(2.5)}, n));
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(std::arg(yp[i]) - std::arg(e[i])) < 1e-12);
}

TEST_CASE("rake_combine: time-varying taps are read at the arrival instant") {
  const std::size_t n = 30;
  const CVec e = testing::gaussian(n, 7);
  TimeVaryingChannel h(n, 3);
  const CVec taps = testing::gaussian(3 * n, 8);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < 3; ++l) h.at(i, l) = taps[3 * i + l];
  }
  const CVec y = rake_combine(e, h);
  for (std::size_t i = 0; i < n; ++i) {
    cplx want{};
    for (std::size_t l = 0; l < 3 && i + l < n; ++l) want += std::conj(h.at(i + l, l)) * e[i + l];
    CHECK(std::abs(y[i] - want) < 1e-13);
  }
}

TEST_CASE("rake_ic_combine: single path equals rake; zero reconstruction degenerates to rake") {
  const std::size_t n = 200;
  const CVec e = testing::gaussian(n, 9);
  const CVec a = testing::qpsk(n, 10);
  const auto h1 = TimeVaryingChannel::make_static(CVec{cplx(0.3, 0.9)}, n);
  const CVec f1 = reconstruct_far(a, h1);
  const CVec r1 = rake_combine(e, h1), ric1 = rake_ic_combine(e, a, h1, f1);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r1[i] - ric1[i]) < 1e-14);

  const auto h3 = TimeVaryingChannel::make_static(CVec{cplx(1.0), cplx(0.5, 0.5), cplx(-0.2)}, n);
  const CVec zero(n);
  CHECK(rake_ic_combine(e, zero, h3, zero) == rake_combine(e, h3));
}

TEST_CASE("rake_ic_combine: perfect knowledge gives pure maximal-ratio combining") {
  const std::size_t n = 3;
  const CVec a{cplx(1.0, 1.0), cplx(-1.0, 1.0), cplx(1.0, -1.0)};
  const CVec h{cplx(1.0), cplx(0.0, 0.5)};
  const auto ch = TimeVaryingChannel::make_static(h, n);
  const CVec e = apply_channel(a, ch);
  const CVec f = reconstruct_far(a, ch);
  const CVec y = rake_ic_combine(e, a, ch, f);
  const CVec yr = rake_combine(e, ch);
  const double g = 1.25;
  for (std::size_t i = 0; i + 1 < n; ++i) CHECK(std::abs(y[i] - g * a[i]) < 1e-14);
  // The plain Rake sees the neighbouring symbols.
  double isi = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) isi += std::abs(yr[i] - g * a[i]);
  CHECK(isi > 0.1);

  // Time-varying channel: y / a = sum_l |h(i + l, l)|^2, real and positive.
  const std::size_t m = 300;
  const CVec av = testing::qpsk(m, 11);
  TimeVaryingChannel hv(m, 4);
  const CVec taps = testing::gaussian(4 * m, 12);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < 4; ++l) hv.at(i, l) = taps[4 * i + l];
  }
  const CVec ev = apply_channel(av, hv);
  const CVec yv = rake_ic_combine(ev, av, hv, reconstruct_far(av, hv));
  for (std::size_t i = 0; i + 3 < m; ++i) {
    double want = 0.0;
    for (std::size_t l = 0; l < 4; ++l) want += std::norm(hv.at(i + l, l));
    const cplx ratio = yv[i] / av[i];
    CHECK(std::abs(ratio - want) < 1e-12 * want);
  }
}

TEST_CASE("reconstruct_far: unit tap, channel oracle, zero input") {
  const std::size_t n = 100;
  const CVec a = testing::qpsk(n, 13);
  CHECK(reconstruct_far(a, TimeVaryingChannel::make_static(CVec{cplx(1.0)}, n)) == a);
  const auto h = TimeVaryingChannel::make_static(CVec{cplx(0.5), cplx(0.0, 0.3), cplx(0.2)}, n);
  CHECK(testing::rel_err(reconstruct_far(a, h), apply_channel(a, h)) < 1e-15);
  for (const auto& v : reconstruct_far(CVec(n), h)) CHECK(v == cplx{});
}

TEST_CASE("demodulate: positive scaling is exact; 8 dB soft SNR decodes cleanly; zeros carry nothing") {
  const FrameLayout layout = FrameLayout::for_frame(code_by_rate("1/3"), 15024, 16);
  const Bits msg = random_bits(21, layout.message_bits);
  const SymbolFrame f = build_far_frame(msg, layout, 3);
  CVec y(f.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 4.2 * f.combined[i];
  const Demodulated d = demodulate(y, layout, 3);
  CHECK(d.message == msg);
  CHECK(d.frame.combined == f.combined);
  CHECK(d.soft[10] == doctest::Approx(4.2 * f.data[10]));

  const double sigma = std::sqrt(from_db(-8.0));
  std::size_t errors = 0, bits = 0;
  std::mt19937_64 g(5);
  std::normal_distribution<double> nd(0.0, sigma);
  while (bits < 100000) {
    const Bits m = random_bits(1000 + bits, layout.message_bits);
    const SymbolFrame fr = build_far_frame(m, layout, 3);
    CVec yn(fr.size());
    for (std::size_t i = 0; i < yn.size(); ++i) yn[i] = cplx(fr.pilot[i] + nd(g), fr.data[i] + nd(g));
    const Demodulated dn = demodulate(yn, layout, 3);
    for (std::size_t k = 0; k < m.size(); ++k) errors += dn.message[k] != m[k];
    bits += m.size();
  }
  CHECK(static_cast<double>(errors) / static_cast<double>(bits) < 1e-4);

  const Demodulated z = demodulate(CVec(f.size()), layout, 3);
  std::size_t diff = 0;
  for (std::size_t k = 0; k < msg.size(); ++k) diff += z.message[k] != msg[k];
  CHECK(static_cast<double>(diff) / static_cast<double>(msg.size()) == doctest::Approx(0.5).epsilon(0.1));

  const Demodulated erased = demodulate(y, layout, 3, 100);
  for (std::size_t i = y.size() - 100; i < y.size(); ++i) CHECK(erased.soft[i] == 0.0);
}

TEST_CASE("turbo_receive: half-duplex input matches the standalone far-end receiver") {
  const HdLink k = make_hd_link(12.0, 31);
  const ReceiverConfig cfg = hd_config(k.layout, 2);
  const RVec data = k.frame.data;
  ReceiverTruth truth;
  truth.message = &k.message;
  truth.data = &data;
  truth.far = &k.channel;
  const auto traces = turbo_receive(k.received, CVec(k.received.size()), cfg, truth);
  REQUIRE(traces.size() == 2);
  const auto& t = traces[0];
  CHECK_FALSE(t.sic_applied);
  CHECK(t.residual == k.received);

  CVec pilot(k.received.size());
  for (std::size_t i = 0; i < pilot.size(); ++i) pilot[i] = k.frame.pilot[i];
  const auto h = estimate_channel(k.received, pilot, cfg.far, 1).estimate;
  const CVec y = rake_ic_combine(k.received, pilot, h, reconstruct_far(pilot, h));
  const Demodulated d = demodulate(y, k.layout, 7, cfg.far.filter_length - 1);
  CHECK(t.decoded == d.message);
  CHECK(t.combined == y);

  CHECK(*t.ber_post == 0.0);
  CHECK(t.bits_counted == k.message.size());
  CHECK(*t.ber_pre < 0.05);
  CHECK(*traces[1].far_nmse_db < *t.far_nmse_db);
  CHECK(traces[1].far_window == 301);
  CHECK(t.far_estimate.has_value());
  CHECK_FALSE(t.si_estimate.has_value());
}

TEST_CASE("turbo_receive: scaling the received signal leaves the decisions unchanged") {
  const HdLink k = make_hd_link(2.0, 32);
  const ReceiverConfig cfg = hd_config(k.layout, 2);
  CVec scaled = k.received;
  for (auto& v : scaled) v *= 3.7;
  const auto a = turbo_receive(k.received, {}, cfg);
  const auto b = turbo_receive(scaled, {}, cfg);
  for (std::size_t it = 0; it < 2; ++it) CHECK(a[it].decoded == b[it].decoded);
}

TEST_CASE("turbo_receive: full-duplex frame is cleaned and decoded; iteration helps") {
  const HdLink k = make_hd_link(10.0, 33);
  const std::size_t n = k.received.size();
  const CVec s = testing::gaussian(n, 34);
  const CVec taps{cplx(1.0), cplx(0.0), cplx(0.4, -0.3), cplx(0.0), cplx(0.0), cplx(0.1)};
  const auto hsi = TimeVaryingChannel::make_static(taps, n);
  const CVec si = apply_channel(s, hsi);
  // SI 40 dB above the far-end signal.
  const double g = std::sqrt(mean_power(k.received) * 1e4 / mean_power(si));
  CVec r = k.received;
  for (std::size_t i = 0; i < n; ++i) r[i] += g * si[i];
  TimeVaryingChannel hsi_eff = hsi;
  hsi_eff.scale(g);

  ReceiverConfig cfg = hd_config(k.layout, 2);
  cfg.si.filter_length = 6;
  cfg.si.window_schedule = {1001, 801};
  const RVec data = k.frame.data;
  ReceiverTruth truth;
  truth.si = &hsi_eff;
  truth.message = &k.message;
  truth.data = &data;
  const auto traces = turbo_receive(r, s, cfg, truth);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].sic_applied);
  CHECK(traces[0].sic_depth_db > 35.0);
  CHECK(*traces[1].si_nmse_db < *traces[0].si_nmse_db);
  CHECK(*traces[1].ber_post <= *traces[0].ber_post);
  CHECK(*traces[1].ber_post < 1e-3);
  for (const auto& t : traces) {
    CHECK(t.residual.size() == n);
    CHECK(t.soft.size() == n);
    CHECK(t.decoded.size() == k.message.size());
  }
}

TEST_CASE("receiver configuration is validated") {
  ReceiverConfig cfg;
  cfg.layout = FrameLayout::for_frame(code_by_rate("1/2"), 2000, 16);
  cfg.validate();
  ReceiverConfig bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.far.window_schedule = {1001, 1201};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.si.window_schedule = {1000};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(cfg.far.window_for(1) == 1001);
  CHECK(cfg.far.window_for(5) == 1001);
  CHECK_THROWS_AS(turbo_receive(CVec(10), {}, cfg), ConfigError);
}
