#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fdlink/harness.hpp"

namespace fdlink {

using nlohmann::json;

std::string to_string(DuplexMode m) { return m == DuplexMode::hd ? "hd" : "fd"; }
std::string to_string(Combiner c) { return c == Combiner::rake ? "rake" : "rake-ic"; }

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::srls: return "srls";
    case EstimatorKind::srlsd: return "srlsd";
    case EstimatorKind::srls_l: return "srls-l";
    case EstimatorKind::hsrls_l_dcd: return "hsrls-l-dcd";
  }
  return "srlsd";
}

DuplexMode parse_mode(const std::string& s) {
  if (s == "hd" || s == "HD") return DuplexMode::hd;
  if (s == "fd" || s == "FD") return DuplexMode::fd;
  throw ConfigError("unknown mode '" + s + "' (expected hd or fd)");
}

Combiner parse_combiner(const std::string& s) {
  if (s == "rake") return Combiner::rake;
  if (s == "rake-ic" || s == "rake_ic") return Combiner::rake_ic;
  throw ConfigError("unknown combiner '" + s + "' (expected rake or rake-ic)");
}

EstimatorKind parse_estimator(const std::string& s) {
  if (s == "srls") return EstimatorKind::srls;
  if (s == "srlsd") return EstimatorKind::srlsd;
  if (s == "srls-l" || s == "srls_l") return EstimatorKind::srls_l;
  if (s == "hsrls-l-dcd" || s == "hsrls_l_dcd") return EstimatorKind::hsrls_l_dcd;
  throw ConfigError("unknown estimator '" + s + "'");
}

std::size_t default_iterations(const std::string& code_rate) {
  if (code_rate == "1/2") return 4;
  if (code_rate == "2/3") return 5;
  return 3;
}

std::size_t ExperimentSpec::frame_symbols() const {
  const double n = std::round(frame_seconds * link.symbol_rate_hz * desk_scale);
  if (!(n >= 1.0)) throw ConfigError("frame length must be at least one symbol");
  return static_cast<std::size_t>(n);
}

void ExperimentSpec::finalize() {
  link.samples_per_symbol();
  if (!(desk_scale > 0.0)) throw ConfigError("desk scale must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (interleaver_depth == 0) throw ConfigError("interleaver depth must be positive");
  const CodeSpec code = code_by_rate(code_rate);
  receiver.layout = FrameLayout::for_frame(code, frame_symbols(), interleaver_depth);
  si_channel.sample_rate_hz = link.symbol_rate_hz;
  far_channel.sample_rate_hz = link.symbol_rate_hz;
  if (receiver.far.filter_length < 1) throw ConfigError("far-end filter length must be positive");
  const std::size_t n = receiver.layout.frame_symbols;
  for (const auto* e : {&receiver.si, &receiver.far}) {
    if (e->window_for(1) > n) throw ConfigError("estimation window longer than the frame");
  }
  if (!mix.far_snr_db) throw ConfigError("far-end SNR must be set");
  if (mode == DuplexMode::fd && !mix.si_to_noise_db) throw ConfigError("FD mode needs an SI-to-noise ratio");
  receiver.validate();
}

namespace {

ChannelEstimatorConfig estimator(EstimatorKind kind, std::size_t L, std::vector<std::size_t> windows,
                                 std::size_t stride) {
  ChannelEstimatorConfig e;
  e.kind = kind;
  e.filter_length = L;
  e.window_schedule = std::move(windows);
  e.solve_stride = stride;
  return e;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"site1", "site2"};
  return names;
}

ExperimentSpec preset(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.code_rate = "1/3";
  s.receiver.iterations = default_iterations(s.code_rate);
  s.receiver.combiner = Combiner::rake_ic;
  s.receiver.pilot_seed = 7;
  if (name == "site1") {
    s.link = {36e3, 192e3, 4e3, 0.2, 16};
    s.mix.si_to_noise_db = 67.0;
    s.mix.far_snr_db = 16.0;

    // Sparse near-end response with parabolic drift over the frame.
    s.si_channel.length = 100;
    s.si_channel.delays = {0, 3, 11, 26, 47, 73};
    s.si_channel.gains_db = {0, -6, -11, -16, -21, -26};
    s.si_channel.variation = Variation::polynomial;
    s.si_channel.poly_linear_max = 0.5;
    s.si_channel.poly_quadratic_max = 0.5;
    s.si_channel.seed = 101;

    s.far_channel.length = 20;
    s.far_channel.delays = {0, 2, 5, 9, 14};
    s.far_channel.gains_db = {0, -2, -5, -8, -11};
    s.far_channel.variation = Variation::sinusoidal;
    s.far_channel.sin_rate_hz = 0.1;
    s.far_channel.sin_depth = 0.2;
    s.far_channel.seed = 202;

    s.receiver.si = estimator(EstimatorKind::hsrls_l_dcd, 100, {1401, 1001}, 50);
    s.receiver.si.order = 2;
    s.receiver.far = estimator(EstimatorKind::srlsd, 20, {1401, 1001}, 10);
  } else if (name == "site2") {
    s.link = {12e3, 96e3, 1e3, 0.2, 16};
    s.mix.si_to_noise_db = 60.0;
    s.mix.far_snr_db = 19.0;

    s.si_channel.length = 50;
    s.si_channel.delays = {0, 2, 6, 13, 24, 38};
    s.si_channel.gains_db = {0, -5, -9, -13, -17, -21};
    s.si_channel.variation = Variation::polynomial;
    // SRLSd cannot follow much drift at 60 dB SI-to-noise.
    s.si_channel.poly_linear_max = 0.02;
    s.si_channel.poly_quadratic_max = 0.02;
    s.si_channel.seed = 303;

    // Rich multipath: six significant arrivals within 30 taps.
    s.far_channel.length = 30;
    s.far_channel.delays = {0, 4, 9, 15, 21, 27};
    s.far_channel.gains_db = {0, -1, -2, -3, -4, -5};
    s.far_channel.variation = Variation::sinusoidal;
    s.far_channel.sin_rate_hz = 0.05;
    s.far_channel.sin_depth = 0.2;
    s.far_channel.seed = 404;

    s.receiver.si = estimator(EstimatorKind::srlsd, 50, {1201, 1001}, 5);
    s.receiver.far = estimator(EstimatorKind::srlsd, 30, {1001, 801}, 5);
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected site1 or site2)");
  }
  s.si_channel.sample_rate_hz = s.link.symbol_rate_hz;
  s.far_channel.sample_rate_hz = s.link.symbol_rate_hz;
  return s;
}

namespace {

std::string variation_name(Variation v) {
  switch (v) {
    case Variation::static_taps: return "static";
    case Variation::polynomial: return "polynomial";
    case Variation::sinusoidal: return "sinusoidal";
  }
  return "static";
}

Variation parse_variation(const std::string& s) {
  if (s == "static") return Variation::static_taps;
  if (s == "polynomial" || s == "parabolic") return Variation::polynomial;
  if (s == "sinusoidal") return Variation::sinusoidal;
  throw ConfigError("unknown channel variation '" + s + "'");
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void get_opt(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<double>();
  }
}

void read_channel(const json& j, ChannelModelSpec& c) {
  get(j, "length", c.length);
  get(j, "delays", c.delays);
  get(j, "gains_db", c.gains_db);
  if (j.contains("variation")) c.variation = parse_variation(j.at("variation").get<std::string>());
  get(j, "poly_order", c.poly_order);
  if (j.contains("poly_linear")) {
    const auto r = j.at("poly_linear").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("poly_linear needs [min, max]");
    c.poly_linear_min = r[0];
    c.poly_linear_max = r[1];
  }
  if (j.contains("poly_quadratic")) {
    const auto r = j.at("poly_quadratic").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("poly_quadratic needs [min, max]");
    c.poly_quadratic_min = r[0];
    c.poly_quadratic_max = r[1];
  }
  get(j, "sin_rate_hz", c.sin_rate_hz);
  get(j, "sin_depth", c.sin_depth);
  get(j, "seed", c.seed);
}

json write_channel(const ChannelModelSpec& c) {
  return {{"length", c.length},
          {"delays", c.delays},
          {"gains_db", c.gains_db},
          {"variation", variation_name(c.variation)},
          {"poly_order", c.poly_order},
          {"poly_linear", {c.poly_linear_min, c.poly_linear_max}},
          {"poly_quadratic", {c.poly_quadratic_min, c.poly_quadratic_max}},
          {"sin_rate_hz", c.sin_rate_hz},
          {"sin_depth", c.sin_depth},
          {"seed", c.seed}};
}

void read_estimator(const json& j, ChannelEstimatorConfig& e) {
  if (j.contains("kind")) e.kind = parse_estimator(j.at("kind").get<std::string>());
  get(j, "filter_length", e.filter_length);
  get(j, "windows", e.window_schedule);
  get(j, "order", e.order);
  if (j.contains("window")) {
    const auto w = j.at("window").get<std::string>();
    if (w == "hann") {
      e.window = WindowShape::hann;
    } else if (w == "rectangular") {
      e.window = WindowShape::rectangular;
    } else {
      throw ConfigError("unknown window '" + w + "'");
    }
  }
  get(j, "regularization", e.regularization);
  get(j, "solve_stride", e.solve_stride);
  if (j.contains("homotopy")) {
    const json& h = j.at("homotopy");
    get(h, "gamma", e.homotopy.gamma);
    get(h, "mu_d", e.homotopy.mu_d);
    get(h, "mu_w", e.homotopy.mu_w);
    get(h, "max_stages", e.homotopy.max_stages);
    get(h, "max_updates", e.homotopy.max_updates);
    get(h, "ladder_levels", e.homotopy.ladder_levels);
    get(h, "kappa", e.homotopy.kappa);
    get(h, "noise_variance", e.homotopy.noise_variance);
    get(h, "support_weight", e.homotopy.support_weight);
  }
}

json write_estimator(const ChannelEstimatorConfig& e) {
  const auto& h = e.homotopy;
  return {{"kind", to_string(e.kind)},
          {"filter_length", e.filter_length},
          {"windows", e.window_schedule},
          {"order", e.order},
          {"window", e.window == WindowShape::hann ? "hann" : "rectangular"},
          {"regularization", e.regularization},
          {"solve_stride", e.solve_stride},
          {"homotopy",
           {{"gamma", h.gamma},
            {"mu_d", h.mu_d},
            {"mu_w", h.mu_w},
            {"max_stages", h.max_stages},
            {"max_updates", h.max_updates},
            {"ladder_levels", h.ladder_levels},
            {"kappa", h.kappa},
            {"noise_variance", h.noise_variance},
            {"support_weight", h.support_weight}}}};
}

ExperimentSpec from_json(const json& j) {
  ExperimentSpec s;
  if (j.contains("preset")) s = preset(j.at("preset").get<std::string>());
  bool iterations_set = false;
  get(j, "name", s.name);
  if (j.contains("link")) {
    const json& l = j.at("link");
    get(l, "carrier_hz", s.link.carrier_hz);
    get(l, "sample_rate_hz", s.link.sample_rate_hz);
    get(l, "symbol_rate_hz", s.link.symbol_rate_hz);
    get(l, "rolloff", s.link.rolloff);
    get(l, "rrc_span_symbols", s.link.rrc_span_symbols);
  }
  if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("code")) s.code_rate = j.at("code").get<std::string>();
  get(j, "interleaver_depth", s.interleaver_depth);
  get(j, "frame_seconds", s.frame_seconds);
  get(j, "desk_scale", s.desk_scale);
  get(j, "snr_db", s.snr_db);
  get(j, "seeds", s.seeds);
  get(j, "passband", s.passband);
  get(j, "threads", s.threads);
  if (j.contains("mix")) {
    const json& m = j.at("mix");
    get_opt(m, "si_to_noise_db", s.mix.si_to_noise_db);
    get_opt(m, "far_snr_db", s.mix.far_snr_db);
    get(m, "noise_power", s.mix.noise_power);
  }
  if (j.contains("channels")) {
    const json& c = j.at("channels");
    if (c.contains("si")) read_channel(c.at("si"), s.si_channel);
    if (c.contains("far")) read_channel(c.at("far"), s.far_channel);
  }
  if (j.contains("receiver")) {
    const json& r = j.at("receiver");
    if (r.contains("iterations")) {
      s.receiver.iterations = r.at("iterations").get<std::size_t>();
      iterations_set = true;
    }
    if (r.contains("combiner")) s.receiver.combiner = parse_combiner(r.at("combiner").get<std::string>());
    get(r, "pilot_seed", s.receiver.pilot_seed);
    if (r.contains("si")) read_estimator(r.at("si"), s.receiver.si);
    if (r.contains("far")) read_estimator(r.at("far"), s.receiver.far);
  }
  if (!iterations_set && j.contains("code")) s.receiver.iterations = default_iterations(s.code_rate);
  return s;
}

}  // namespace

ExperimentSpec experiment_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment JSON: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment field: ") + e.what());
  }
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return experiment_from_json_text(ss.str());
}

std::string experiment_to_json_text(const ExperimentSpec& s) {
  json mix = {{"noise_power", s.mix.noise_power}};
  mix["si_to_noise_db"] = s.mix.si_to_noise_db ? json(*s.mix.si_to_noise_db) : json(nullptr);
  mix["far_snr_db"] = s.mix.far_snr_db ? json(*s.mix.far_snr_db) : json(nullptr);
  json j = {{"name", s.name},
            {"link",
             {{"carrier_hz", s.link.carrier_hz},
              {"sample_rate_hz", s.link.sample_rate_hz},
              {"symbol_rate_hz", s.link.symbol_rate_hz},
              {"rolloff", s.link.rolloff},
              {"rrc_span_symbols", s.link.rrc_span_symbols}}},
            {"mode", to_string(s.mode)},
            {"code", s.code_rate},
            {"interleaver_depth", s.interleaver_depth},
            {"frame_seconds", s.frame_seconds},
            {"desk_scale", s.desk_scale},
            {"snr_db", s.snr_db},
            {"seeds", s.seeds},
            {"passband", s.passband},
            {"threads", s.threads},
            {"mix", mix},
            {"channels", {{"si", write_channel(s.si_channel)}, {"far", write_channel(s.far_channel)}}},
            {"receiver",
             {{"iterations", s.receiver.iterations},
              {"combiner", to_string(s.receiver.combiner)},
              {"pilot_seed", s.receiver.pilot_seed},
              {"si", write_estimator(s.receiver.si)},
              {"far", write_estimator(s.receiver.far)}}}};
  return j.dump(2) + "\n";
}

}  // namespace fdlink
