#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fdlink/channel.hpp"
#include "fdlink/receiver.hpp"
#include "fdlink/types.hpp"

namespace fdlink {

enum class DuplexMode { hd, fd };

std::string to_string(DuplexMode m);
std::string to_string(Combiner c);
std::string to_string(EstimatorKind k);
DuplexMode parse_mode(const std::string& s);
Combiner parse_combiner(const std::string& s);
EstimatorKind parse_estimator(const std::string& s);

/// One complete simulated (or recorded) experiment.
struct ExperimentSpec {
  std::string name = "custom";
  LinkConfig link;
  ChannelModelSpec si_channel;
  ChannelModelSpec far_channel;
  MixSpec mix;
  ReceiverConfig receiver;
  std::string code_rate = "1/3";
  std::size_t interleaver_depth = 16;
  double frame_seconds = 60.0;
  double desk_scale = 0.1;
  std::vector<double> snr_db;  // empty: run at the intrinsic far-end SNR only
  std::vector<std::uint64_t> seeds{1};
  DuplexMode mode = DuplexMode::fd;
  bool passband = true;  // regressors pass through the RRC/carrier chain
  unsigned threads = 1;

  std::size_t frame_symbols() const;
  /// Fills receiver.layout from the code rate and frame length and checks
  /// the whole spec; throws ConfigError.
  void finalize();
};

/// Built-in presets "site1" and "site2".
ExperimentSpec preset(const std::string& name);
const std::vector<std::string>& preset_names();
/// Default turbo iteration count for a code rate.
std::size_t default_iterations(const std::string& code_rate);

/// JSON round trip. Loading starts from the preset named in "preset" (if
/// any) and applies the remaining keys on top.
ExperimentSpec load_experiment(const std::filesystem::path& path);
ExperimentSpec experiment_from_json_text(const std::string& text);
std::string experiment_to_json_text(const ExperimentSpec& spec);

struct ResultRow {
  std::string mode;
  std::string combiner;
  std::string code_rate;
  std::size_t iteration = 0;
  double snr_db = 0.0;
  double ber = 0.0;
  std::size_t bits_counted = 0;
  std::optional<double> sic_depth_db;  // empty in HD mode
  std::optional<double> si_nmse_db;
  std::optional<double> far_nmse_db;
  std::uint64_t seed = 0;
};

/// Everything generated for one (SNR, seed) grid point.
struct Scenario {
  SymbolFrame far_frame;
  Bits message;
  CVec near_symbols;
  CVec si_regressor;  // s~ seen by the canceller (empty in HD)
  TimeVaryingChannel si_truth;   // includes the mix gain
  TimeVaryingChannel far_truth;  // includes the mix gain
  MixResult mix;
  CVec received;  // after sweep noise
  double snr_db = 0.0;
  double extra_noise_variance = 0.0;
};

/// Synthesises frames, channels and the mixed signal for one grid point.
/// `snr_db` empty keeps the intrinsic noise. Throws ParameterError when the
/// requested SNR is above the intrinsic one.
Scenario make_scenario(const ExperimentSpec& spec, std::uint64_t seed, std::optional<double> snr_db);

struct ExperimentResult {
  std::vector<ResultRow> rows;             // sorted by (snr, seed, iteration)
  std::vector<std::string> skipped;        // reason per skipped grid point
  std::vector<IterationTrace> first_traces;  // traces of the first grid point
  CVec first_received;
  std::size_t requested_points = 0;
};

ExperimentResult run_experiment(const ExperimentSpec& spec, bool keep_first_traces = false);

std::vector<ResultRow> rows_from_traces(const ExperimentSpec& spec, const std::vector<IterationTrace>& traces,
                                        double snr_db, std::uint64_t seed);

// Recording ingestion.
enum class RecordingFormat { wav24, raw_float };
RecordingFormat parse_recording_format(const std::string& s);

/// Reads a mono (first channel used) recording; samples are scaled to [-1, 1].
/// Throws IoError on unsupported formats, truncated files or a sample-rate
/// mismatch with the link (no resampling).
RealPassband ingest_recording(const std::filesystem::path& path, RecordingFormat format,
                              const LinkConfig& link);
void write_wav24(const std::filesystem::path& path, const RealPassband& x);
void write_raw_float(const std::filesystem::path& path, const RealPassband& x);
/// Mean power of the leading silence segment.
double estimate_noise_power(const RealPassband& x, double silence_seconds);

/// Runs the receiver on a recorded frame that starts after `offset_seconds`.
/// Transmitted frames are regenerated from the spec's first seed.
ExperimentResult run_recording(const ExperimentSpec& spec, const RealPassband& recording,
                               double offset_seconds, double silence_seconds);

// Spectra and outputs.
struct Spectrum {
  RVec frequency_hz;
  RVec power_db;
};

/// Welch estimate (Hann, 50% overlap). Frequencies are fftshifted and offset
/// by `center_hz`, so a baseband signal is reported at its carrier.
Spectrum welch_spectrum(std::span<const cplx> x, double rate_hz, std::size_t segment = 1024,
                        double center_hz = 0.0);

std::string csv_escape(const std::string& field);
std::string results_csv(const std::vector<ResultRow>& rows);
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// spectrum_<tag>.csv: received and residual spectra, absolute and
/// normalised to the peak of the received spectrum.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& received, const Spectrum& residual);
/// channel_<tag>.csv: |h| in dB relative to the largest tap magnitude.
void write_channel_csv(const std::filesystem::path& path, const TimeVaryingChannel& h, double rate_hz,
                       std::size_t max_time_rows = 400);

/// results.csv plus per-iteration spectrum/channel files of the traces.
void emit_outputs(const std::vector<ResultRow>& rows, const std::vector<IterationTrace>& traces,
                  std::span<const cplx> received, const ExperimentSpec& spec,
                  const std::filesystem::path& outdir);

}  // namespace fdlink
