#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "fdlink/dsp.hpp"
#include "fdlink/harness.hpp"

namespace fdlink {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return splitmix(splitmix(seed) ^ stream); }

std::string format_snr(std::optional<double> snr) {
  if (!snr) return "intrinsic";
  std::ostringstream os;
  os << *snr << " dB";
  return os.str();
}

}  // namespace

Scenario make_scenario(const ExperimentSpec& spec, std::uint64_t seed, std::optional<double> snr_db) {
  const FrameLayout& layout = spec.receiver.layout;
  if (layout.frame_symbols == 0) throw ConfigError("experiment spec is not finalized");
  const std::size_t n = layout.frame_symbols;

  Scenario sc;
  sc.message = random_bits(derive(seed, 1), layout.message_bits);
  sc.far_frame = build_far_frame(sc.message, layout, spec.receiver.pilot_seed);
  const CVec far_tx = spec.passband ? loopback(sc.far_frame.combined, spec.link) : sc.far_frame.combined;

  ChannelModelSpec far_model = spec.far_channel;
  far_model.seed = derive(spec.far_channel.seed, seed);
  TimeVaryingChannel far_ch = synthesize_channel(far_model, n).channel;
  const CVec far_sig = apply_channel(far_tx, far_ch);

  MixSpec ms = spec.mix;
  TimeVaryingChannel si_ch;
  CVec si_sig;
  if (spec.mode == DuplexMode::fd) {
    sc.near_symbols = build_near_frame(derive(seed, 2), n).combined;
    sc.si_regressor = spec.passband ? loopback(sc.near_symbols, spec.link) : sc.near_symbols;
    ChannelModelSpec si_model = spec.si_channel;
    si_model.seed = derive(spec.si_channel.seed, seed);
    si_ch = synthesize_channel(si_model, n).channel;
    si_sig = apply_channel(sc.si_regressor, si_ch);
  } else {
    ms.si_to_noise_db.reset();
  }

  sc.mix = mix(si_sig, far_sig, ms, derive(seed, 3), spec.link.symbol_rate_hz);
  if (spec.mode == DuplexMode::fd) {
    si_ch.scale(sc.mix.si_gain);
    sc.si_truth = std::move(si_ch);
  }
  far_ch.scale(sc.mix.far_gain);
  sc.far_truth = std::move(far_ch);
  sc.received = sc.mix.received.samples;

  const double p_far = mean_power(sc.mix.far);
  const double p_n = sc.mix.noise_variance;
  sc.snr_db = p_n > 0.0 ? to_db(p_far / p_n) : std::numeric_limits<double>::infinity();
  if (snr_db) {
    sc.extra_noise_variance = noise_variance_for_snr(p_far + p_n, p_n, from_db(*snr_db));
    const std::uint64_t noise_seed = derive(seed, 4 + static_cast<std::uint64_t>(std::llround(*snr_db * 1000.0)));
    const CVec extra = complex_noise(n, sc.extra_noise_variance, noise_seed);
    for (std::size_t i = 0; i < n; ++i) sc.received[i] += extra[i];
    sc.snr_db = *snr_db;
  }
  return sc;
}

std::vector<ResultRow> rows_from_traces(const ExperimentSpec& spec, const std::vector<IterationTrace>& traces,
                                        double snr_db, std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (const auto& t : traces) {
    ResultRow r;
    r.mode = to_string(spec.mode);
    r.combiner = to_string(spec.receiver.combiner);
    r.code_rate = spec.code_rate;
    r.iteration = t.iteration;
    r.snr_db = snr_db;
    r.ber = t.ber_post.value_or(std::numeric_limits<double>::quiet_NaN());
    r.bits_counted = t.bits_counted;
    if (t.sic_applied) r.sic_depth_db = t.sic_depth_db;
    r.si_nmse_db = t.si_nmse_db;
    r.far_nmse_db = t.far_nmse_db;
    r.seed = seed;
    rows.push_back(r);
  }
  return rows;
}

namespace {

struct Job {
  std::optional<double> snr;
  std::uint64_t seed;
};

struct JobResult {
  std::vector<ResultRow> rows;
  std::optional<std::string> skipped;
  std::vector<IterationTrace> traces;
  CVec received;
};

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.snr_db, a.seed, a.iteration) < std::tie(b.snr_db, b.seed, b.iteration);
  });
}

template <typename Fn>
void run_jobs(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec_in, bool keep_first_traces) {
  ExperimentSpec spec = spec_in;
  spec.finalize();

  std::vector<Job> jobs;
  if (spec.snr_db.empty()) {
    for (auto s : spec.seeds) jobs.push_back({std::nullopt, s});
  } else {
    for (double snr : spec.snr_db) {
      for (auto s : spec.seeds) jobs.push_back({snr, s});
    }
  }

  std::vector<JobResult> results(jobs.size());
  run_jobs(jobs.size(), spec.threads, [&](std::size_t k) {
    const Job& job = jobs[k];
    JobResult& out = results[k];
    Scenario sc;
    try {
      sc = make_scenario(spec, job.seed, job.snr);
    } catch (const ParameterError& e) {
      out.skipped = "SNR " + format_snr(job.snr) + ", seed " + std::to_string(job.seed) + ": " + e.what();
      return;
    }
    ReceiverConfig rc = spec.receiver;
    const bool keep = keep_first_traces && k == 0;
    rc.keep_channels = keep;
    ReceiverTruth truth;
    truth.far = &sc.far_truth;
    if (spec.mode == DuplexMode::fd) truth.si = &sc.si_truth;
    truth.message = &sc.message;
    truth.data = &sc.far_frame.data;
    auto traces = turbo_receive(sc.received, sc.si_regressor, rc, truth);
    out.rows = rows_from_traces(spec, traces, sc.snr_db, job.seed);
    if (keep) {
      out.traces = std::move(traces);
      out.received = std::move(sc.received);
    }
  });

  ExperimentResult res;
  res.requested_points = jobs.size();
  for (std::size_t k = 0; k < results.size(); ++k) {
    auto& r = results[k];
    if (r.skipped) {
      std::clog << "skipped " << *r.skipped << "\n";
      res.skipped.push_back(*r.skipped);
      continue;
    }
    res.rows.insert(res.rows.end(), r.rows.begin(), r.rows.end());
    if (k == 0 && keep_first_traces) {
      res.first_traces = std::move(r.traces);
      res.first_received = std::move(r.received);
    }
  }
  sort_rows(res.rows);
  return res;
}

ExperimentResult run_recording(const ExperimentSpec& spec_in, const RealPassband& recording, double offset_seconds,
                               double silence_seconds) {
  ExperimentSpec spec = spec_in;
  spec.finalize();
  const std::size_t n = spec.receiver.layout.frame_symbols;

  const ComplexBaseband bb = complex_demodulate(recording, spec.link);
  const auto offset = static_cast<std::size_t>(std::llround(offset_seconds * spec.link.symbol_rate_hz));
  if (bb.size() < offset + n) throw IoError("recording is shorter than offset plus one frame");
  const CVec frame(bb.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                   bb.samples.begin() + static_cast<std::ptrdiff_t>(offset + n));

  // Baseband noise power from the silence period, skipping the filter edge.
  const auto edge = static_cast<std::size_t>(spec.link.rrc_span_symbols);
  const auto silent = static_cast<std::size_t>(std::floor(silence_seconds * spec.link.symbol_rate_hz));
  double p_n = 0.0;
  if (silent > 2 * edge) {
    p_n = mean_power(CVec(bb.samples.begin(), bb.samples.begin() + static_cast<std::ptrdiff_t>(silent - edge)));
  }
  const double p_sig = mean_power(frame);

  const std::uint64_t seed = spec.seeds.front();
  const Scenario ref = make_scenario(spec, seed, std::nullopt);
  ReceiverConfig rc = spec.receiver;
  rc.keep_channels = true;
  ReceiverTruth truth;
  truth.message = &ref.message;
  truth.data = &ref.far_frame.data;

  ExperimentResult res;
  std::vector<std::optional<double>> grid;
  if (spec.snr_db.empty()) {
    grid.push_back(std::nullopt);
  } else {
    grid.assign(spec.snr_db.begin(), spec.snr_db.end());
  }
  res.requested_points = grid.size();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CVec r = frame;
    double snr = p_n > 0.0 ? to_db((p_sig - p_n) / p_n) : std::numeric_limits<double>::infinity();
    if (grid[k]) {
      double var = 0.0;
      try {
        var = noise_variance_for_snr(p_sig, p_n, from_db(*grid[k]));
      } catch (const ParameterError& e) {
        res.skipped.push_back("SNR " + format_snr(grid[k]) + ": " + e.what());
        std::clog << "skipped " << res.skipped.back() << "\n";
        continue;
      }
      const CVec extra = complex_noise(n, var, derive(seed, 4 + k));
      for (std::size_t i = 0; i < n; ++i) r[i] += extra[i];
      snr = *grid[k];
    }
    auto traces = turbo_receive(r, ref.si_regressor, rc, truth);
    auto rows = rows_from_traces(spec, traces, snr, seed);
    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    if (res.first_traces.empty()) {
      res.first_traces = std::move(traces);
      res.first_received = r;
    }
  }
  sort_rows(res.rows);
  return res;
}

}  // namespace fdlink
