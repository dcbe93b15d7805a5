#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fdlink/harness.hpp"

namespace fdlink {

namespace {

const char* kHeader =
    "mode,combiner,code_rate,iteration,snr_db,ber,bits_counted,sic_depth_db,si_nmse_db,far_nmse_db,seed";

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

std::optional<double> parse_opt(const std::string& s) {
  if (s == "NA" || s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << kHeader << "\r\n";
  for (const auto& r : rows) {
    os << csv_escape(r.mode) << ',' << csv_escape(r.combiner) << ',' << csv_escape(r.code_rate) << ','
       << r.iteration << ',' << num(r.snr_db) << ',' << num(r.ber) << ',' << r.bits_counted << ','
       << opt(r.sic_depth_db) << ',' << opt(r.si_nmse_db) << ',' << opt(r.far_nmse_db) << ',' << r.seed << "\r\n";
  }
  return os.str();
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  auto out = open_out(path);
  out << results_csv(rows);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty results file " + path.string());
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw IoError("malformed results row: " + line);
    ResultRow r;
    try {
      r.mode = f[0];
      r.combiner = f[1];
      r.code_rate = f[2];
      r.iteration = std::stoul(f[3]);
      r.snr_db = std::stod(f[4]);
      r.ber = f[5] == "NA" ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[5]);
      r.bits_counted = std::stoul(f[6]);
      r.sic_depth_db = parse_opt(f[7]);
      r.si_nmse_db = parse_opt(f[8]);
      r.far_nmse_db = parse_opt(f[9]);
      r.seed = std::stoull(f[10]);
    } catch (const std::exception&) {
      throw IoError("malformed results row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& received, const Spectrum& residual) {
  if (received.power_db.size() != residual.power_db.size()) throw ParameterError("spectra differ in length");
  double peak = -std::numeric_limits<double>::infinity();
  for (double p : received.power_db) peak = std::max(peak, p);
  auto out = open_out(path);
  out << "frequency_hz,received_db,residual_db,received_norm_db,residual_norm_db\r\n";
  for (std::size_t k = 0; k < received.power_db.size(); ++k) {
    out << num(received.frequency_hz[k]) << ',' << num(received.power_db[k]) << ',' << num(residual.power_db[k])
        << ',' << num(received.power_db[k] - peak) << ',' << num(residual.power_db[k] - peak) << "\r\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_channel_csv(const std::filesystem::path& path, const TimeVaryingChannel& h, double rate_hz,
                       std::size_t max_time_rows) {
  const std::size_t n = h.instants();
  const std::size_t step = std::max<std::size_t>(1, (n + max_time_rows - 1) / std::max<std::size_t>(max_time_rows, 1));
  double peak = 0.0;
  for (std::size_t i = 0; i < n; i += step) {
    for (std::size_t l = 0; l < h.length(); ++l) peak = std::max(peak, std::abs(h.at(i, l)));
  }
  auto out = open_out(path);
  out << "time_s,tap,delay_ms,magnitude_db\r\n";
  for (std::size_t i = 0; i < n; i += step) {
    for (std::size_t l = 0; l < h.length(); ++l) {
      const double a = std::abs(h.at(i, l));
      const double db = a > 0.0 && peak > 0.0 ? 20.0 * std::log10(a / peak) : -300.0;
      out << num(static_cast<double>(i) / rate_hz) << ',' << l << ',' << num(1e3 * static_cast<double>(l) / rate_hz)
          << ',' << num(std::max(db, -300.0)) << "\r\n";
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void emit_outputs(const std::vector<ResultRow>& rows, const std::vector<IterationTrace>& traces,
                  std::span<const cplx> received, const ExperimentSpec& spec, const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create output directory " + outdir.string() + ": " + ec.message());
  write_results_csv(outdir / "results.csv", rows);

  const double fd = spec.link.symbol_rate_hz;
  const double fc = spec.link.carrier_hz;
  for (const auto& t : traces) {
    const std::string tag = "it" + std::to_string(t.iteration);
    if (!received.empty() && t.residual.size() == received.size()) {
      write_spectrum_csv(outdir / ("spectrum_" + tag + ".csv"), welch_spectrum(received, fd, 1024, fc),
                         welch_spectrum(t.residual, fd, 1024, fc));
    }
    if (t.si_estimate) write_channel_csv(outdir / ("channel_si_" + tag + ".csv"), *t.si_estimate, fd);
    if (t.far_estimate) write_channel_csv(outdir / ("channel_far_" + tag + ".csv"), *t.far_estimate, fd);
  }
}

}  // namespace fdlink
