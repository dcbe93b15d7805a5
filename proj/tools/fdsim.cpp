// fdsim: full-duplex link simulator front end.
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "fdlink/harness.hpp"

using namespace fdlink;

namespace {

struct Options {
  std::string config;
  std::string preset = "site1";
  std::string mode;
  std::string combiner;
  std::string code;
  std::vector<std::string> snr;
  std::vector<std::string> seeds;
  std::size_t iterations = 0;
  double desk_scale = 0.0;
  std::string out = "out";
  unsigned threads = 0;
  // ingest
  std::string input;
  std::string format = "wav24";
  double offset = 5.0;
  double silence = 5.0;
};

// "a,b,c" items or "first:last" / "first:step:last" ranges.
std::vector<double> expand(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::vector<double> parts;
    std::stringstream ss(item);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(std::stod(p));
    if (parts.size() == 1) {
      out.push_back(parts[0]);
    } else if (parts.size() == 2 || parts.size() == 3) {
      const double first = parts[0];
      const double last = parts.back();
      const double step = parts.size() == 3 ? parts[1] : 1.0;
      if (!(step > 0.0) || last < first) throw ConfigError("bad range '" + item + "'");
      const auto count = static_cast<long>(std::floor((last - first) / step + 1e-9));
      for (long k = 0; k <= count; ++k) out.push_back(first + static_cast<double>(k) * step);
    } else {
      throw ConfigError("bad list item '" + item + "'");
    }
  }
  return out;
}

ExperimentSpec build_spec(const Options& o) {
  ExperimentSpec s = o.config.empty() ? preset(o.preset) : load_experiment(o.config);
  if (!o.mode.empty()) s.mode = parse_mode(o.mode);
  if (!o.combiner.empty()) s.receiver.combiner = parse_combiner(o.combiner);
  if (!o.code.empty()) {
    code_by_rate(o.code);
    s.code_rate = o.code;
    s.receiver.iterations = default_iterations(o.code);
  }
  if (o.iterations > 0) s.receiver.iterations = o.iterations;
  if (o.desk_scale > 0.0) s.desk_scale = o.desk_scale;
  if (!o.snr.empty()) s.snr_db = expand(o.snr);
  if (!o.seeds.empty()) {
    s.seeds.clear();
    for (double v : expand(o.seeds)) {
      if (v < 0.0 || v != std::floor(v)) throw ConfigError("seeds must be non-negative integers");
      s.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (o.threads > 0) s.threads = o.threads;
  s.finalize();
  return s;
}

int finish(const ExperimentResult& r) {
  std::cout << r.rows.size() << " rows from " << r.requested_points - r.skipped.size() << "/"
            << r.requested_points << " grid points\n";
  return r.skipped.empty() ? 0 : 2;
}

int cmd_simulate(const Options& o) {
  const ExperimentSpec s = build_spec(o);
  const ExperimentResult r = run_experiment(s, true);
  emit_outputs(r.rows, r.first_traces, r.first_received, s, o.out);
  return finish(r);
}

int cmd_sweep(const Options& o) {
  const ExperimentSpec s = build_spec(o);
  if (s.snr_db.empty()) throw ConfigError("sweep needs an SNR grid (--snr or snr_db in the config)");
  const ExperimentResult r = run_experiment(s, false);
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create output directory " + o.out);
  write_results_csv(std::filesystem::path(o.out) / "results.csv", r.rows);
  return finish(r);
}

int cmd_ingest(const Options& o) {
  if (o.input.empty()) throw ConfigError("ingest needs --input");
  const ExperimentSpec s = build_spec(o);
  const RealPassband rec = ingest_recording(o.input, parse_recording_format(o.format), s.link);
  std::cout << "read " << rec.samples.size() << " samples, silence power "
            << to_db(estimate_noise_power(rec, o.silence)) << " dBFS\n";
  const ExperimentResult r = run_recording(s, rec, o.offset, o.silence);
  emit_outputs(r.rows, r.first_traces, r.first_received, s, o.out);
  return finish(r);
}

int cmd_report(const Options& o) {
  const auto path = std::filesystem::path(o.out) / "results.csv";
  const auto rows = read_results_csv(path);
  // Aggregate over seeds: errors are weighted by the bits counted.
  using Key = std::tuple<std::string, std::string, std::string, double, std::size_t>;
  std::map<Key, std::pair<double, std::size_t>> agg;
  for (const auto& r : rows) {
    auto& a = agg[{r.mode, r.combiner, r.code_rate, r.snr_db, r.iteration}];
    a.first += r.ber * static_cast<double>(r.bits_counted);
    a.second += r.bits_counted;
  }
  std::ostringstream csv;
  csv << "mode,combiner,code_rate,snr_db,iteration,ber,bits_counted\r\n";
  std::cout << std::left << std::setw(5) << "mode" << std::setw(9) << "comb" << std::setw(6) << "code"
            << std::setw(9) << "snr_db" << std::setw(5) << "it" << std::setw(14) << "ber"
            << "bits\n";
  for (const auto& [k, v] : agg) {
    const double ber = v.second ? v.first / static_cast<double>(v.second) : 0.0;
    const auto& [mode, comb, code, snr, it] = k;
    std::cout << std::left << std::setw(5) << mode << std::setw(9) << comb << std::setw(6) << code
              << std::setw(9) << snr << std::setw(5) << it << std::setw(14) << ber << v.second << "\n";
    csv << mode << ',' << comb << ',' << csv_escape(code) << ',' << snr << ',' << it << ','
        << std::setprecision(10) << ber << ',' << v.second << "\r\n";
  }
  std::ofstream out(std::filesystem::path(o.out) / "summary.csv", std::ios::binary);
  if (!out) throw IoError("cannot write summary.csv");
  out << csv.str();
  return 0;
}

void add_common(CLI::App* c, Options& o) {
  c->add_option("--config", o.config, "JSON experiment file")->check(CLI::ExistingFile);
  c->add_option("--preset", o.preset, "Built-in preset (site1, site2)")->check(CLI::IsMember({"site1", "site2"}));
  c->add_option("--mode", o.mode, "hd or fd")->check(CLI::IsMember({"hd", "fd"}));
  c->add_option("--combiner", o.combiner, "rake or rake-ic")->check(CLI::IsMember({"rake", "rake-ic"}));
  c->add_option("--code", o.code, "Code rate: 1/4, 1/3, 1/2, 2/3")
      ->check(CLI::IsMember({"1/4", "1/3", "1/2", "2/3"}));
  c->add_option("--snr", o.snr, "Far-end SNR list in dB, e.g. --snr=-2,0,2 or --snr=-4:2:8")->delimiter(',');
  c->add_option("--seeds", o.seeds, "Seed list, e.g. 1,2,3 or 1:10")->delimiter(',');
  c->add_option("--iterations", o.iterations, "Turbo iterations (default by code rate)");
  c->add_option("--desk-scale", o.desk_scale, "Frame length scale relative to 60 s (default 0.1)");
  c->add_option("--out", o.out, "Output directory");
  c->add_option("--threads", o.threads, "Worker threads for the grid");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fdsim: full-duplex underwater acoustic link simulator"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Run the receiver on simulated frames and write all outputs");
  auto* sweep = app.add_subcommand("sweep", "BER/SNR sweep; writes results.csv");
  auto* ingest = app.add_subcommand("ingest", "Run the receiver on a recorded passband signal");
  auto* report = app.add_subcommand("report", "Summarise results.csv in --out over seeds");
  for (auto* c : {sim, sweep, ingest}) add_common(c, o);
  ingest->add_option("--input", o.input, "Recording file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", o.format, "wav24 or raw-float")->check(CLI::IsMember({"wav24", "raw-float"}));
  ingest->add_option("--offset", o.offset, "Frame start in seconds");
  ingest->add_option("--silence", o.silence, "Leading silence in seconds used for the noise estimate");
  report->add_option("--out", o.out, "Directory holding results.csv");

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (ingest->parsed()) return cmd_ingest(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "fdsim: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
