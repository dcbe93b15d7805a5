#include "fdlink/coding.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <random>

namespace fdlink {

namespace {

// Transition tables of a feed-forward code, indexed [state][input word].
struct Trellis {
  int states = 0;
  int words = 0;
  int outputs = 0;
  std::vector<std::uint16_t> next;
  std::vector<std::uint16_t> out;  // output bits, bit j = output j

  explicit Trellis(const CodeSpec& code) {
    const int k = code.inputs;
    const int nu = code.memory();
    states = 1 << nu;
    words = 1 << k;
    outputs = code.outputs;
    next.resize(static_cast<std::size_t>(states) * words);
    out.resize(next.size());

    std::vector<int> mem(k), offset(k);
    int acc = 0;
    for (int i = 0; i < k; ++i) {
      mem[i] = code.constraint_lengths[i] - 1;
      offset[i] = acc;
      acc += mem[i];
    }
    for (int s = 0; s < states; ++s) {
      for (int u = 0; u < words; ++u) {
        int ns = 0;
        unsigned o = 0;
        std::vector<unsigned> reg(k);
        for (int i = 0; i < k; ++i) {
          const unsigned si = (static_cast<unsigned>(s) >> offset[i]) & ((1u << mem[i]) - 1u);
          const unsigned ui = (static_cast<unsigned>(u) >> i) & 1u;
          reg[i] = (ui << mem[i]) | si;
          ns |= static_cast<int>(reg[i] >> 1) << offset[i];
        }
        for (int j = 0; j < outputs; ++j) {
          unsigned bit = 0;
          for (int i = 0; i < k; ++i) bit ^= std::popcount(reg[i] & code.generators[i][j]) & 1u;
          o |= bit << j;
        }
        next[static_cast<std::size_t>(s) * words + u] = static_cast<std::uint16_t>(ns);
        out[static_cast<std::size_t>(s) * words + u] = static_cast<std::uint16_t>(o);
      }
    }
  }
};

void validate(const CodeSpec& code) {
  if (code.inputs < 1 || code.outputs <= code.inputs ||
      static_cast<int>(code.constraint_lengths.size()) != code.inputs ||
      static_cast<int>(code.generators.size()) != code.inputs) {
    throw ParameterError("unsupported convolutional code '" + code.name + "'");
  }
  for (int i = 0; i < code.inputs; ++i) {
    if (code.constraint_lengths[i] < 1 || static_cast<int>(code.generators[i].size()) != code.outputs) {
      throw ParameterError("malformed generator matrix for code '" + code.name + "'");
    }
    for (unsigned g : code.generators[i]) {
      if (g >> code.constraint_lengths[i]) {
        throw ParameterError("generator exceeds constraint length in code '" + code.name + "'");
      }
    }
  }
  if (code.memory() > 12) throw ParameterError("code memory too large");
}

// SplitMix64 finaliser, used to derive independent streams from one seed.
std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

int CodeSpec::memory() const {
  int m = 0;
  for (int k : constraint_lengths) m += k - 1;
  return m;
}

int CodeSpec::tail_steps() const {
  int m = 0;
  for (int k : constraint_lengths) m = std::max(m, k - 1);
  return m;
}

std::size_t CodeSpec::encoded_length(std::size_t message_bits) const {
  const std::size_t steps = message_bits / inputs + tail_steps();
  return steps * outputs;
}

const std::vector<std::string>& supported_code_rates() {
  static const std::vector<std::string> rates{"1/4", "1/3", "1/2", "2/3"};
  return rates;
}

CodeSpec code_by_rate(const std::string& rate) {
  // Octal literals are written as they appear in the code tables.
  static const std::map<std::string, CodeSpec> table{
      {"1/4", {"1/4", 1, 4, {8}, {{0235, 0275, 0313, 0357}}}},
      {"1/3", {"1/3", 1, 3, {8}, {{0225, 0331, 0367}}}},
      {"1/2", {"1/2", 1, 2, {6}, {{053, 075}}}},
      {"2/3", {"2/3", 2, 3, {5, 4}, {{023, 035, 0}, {0, 05, 013}}}},
  };
  const auto it = table.find(rate);
  if (it == table.end()) throw ParameterError("unsupported code rate '" + rate + "'");
  return it->second;
}

RVec prbs(std::uint64_t seed, std::size_t length) {
  if (length == 0) throw ParameterError("prbs length must be positive");
  std::mt19937_64 gen(mix_seed(seed));
  RVec out(length);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (i % 64 == 0) word = gen();
    out[i] = (word >> (i % 64)) & 1u ? -1.0 : 1.0;
  }
  return out;
}

Bits random_bits(std::uint64_t seed, std::size_t length) {
  std::mt19937_64 gen(mix_seed(seed ^ 0x5bd1e995ULL));
  Bits out(length);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (i % 64 == 0) word = gen();
    out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return out;
}

Bits conv_encode(std::span<const std::uint8_t> bits, const CodeSpec& code) {
  validate(code);
  const int k = code.inputs;
  if (bits.size() % k != 0) {
    throw ParameterError("message length must be a multiple of the code's input count");
  }
  const Trellis tr(code);
  const std::size_t steps = bits.size() / k + code.tail_steps();
  Bits out;
  out.reserve(steps * code.outputs);
  int state = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    int u = 0;
    if (t < bits.size() / k) {
      for (int i = 0; i < k; ++i) u |= (bits[t * k + i] & 1) << i;
    }
    const std::size_t idx = static_cast<std::size_t>(state) * tr.words + u;
    for (int j = 0; j < code.outputs; ++j) out.push_back(static_cast<std::uint8_t>((tr.out[idx] >> j) & 1u));
    state = tr.next[idx];
  }
  return out;
}

template <typename T>
std::vector<T> interleave(std::span<const T> x, std::size_t depth, std::size_t* pad_count) {
  if (depth == 0) throw ParameterError("interleaver depth must be positive");
  const std::size_t cols = (x.size() + depth - 1) / depth;
  const std::size_t padded = cols * depth;
  if (pad_count) *pad_count = padded - x.size();
  std::vector<T> y(padded, T{});
  for (std::size_t r = 0; r < depth; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t src = r * cols + c;
      if (src < x.size()) y[c * depth + r] = x[src];
    }
  }
  return y;
}

template <typename T>
std::vector<T> deinterleave(std::span<const T> y, std::size_t depth) {
  if (depth == 0 || y.size() % depth != 0) {
    throw ParameterError("deinterleave length must be a multiple of the depth");
  }
  const std::size_t cols = y.size() / depth;
  std::vector<T> x(y.size());
  for (std::size_t r = 0; r < depth; ++r) {
    for (std::size_t c = 0; c < cols; ++c) x[r * cols + c] = y[c * depth + r];
  }
  return x;
}

template std::vector<std::uint8_t> interleave(std::span<const std::uint8_t>, std::size_t, std::size_t*);
template std::vector<double> interleave(std::span<const double>, std::size_t, std::size_t*);
template std::vector<cplx> interleave(std::span<const cplx>, std::size_t, std::size_t*);
template std::vector<std::uint8_t> deinterleave(std::span<const std::uint8_t>, std::size_t);
template std::vector<double> deinterleave(std::span<const double>, std::size_t);
template std::vector<cplx> deinterleave(std::span<const cplx>, std::size_t);

Bits viterbi_decode(std::span<const double> soft, const CodeSpec& code) {
  validate(code);
  const int n = code.outputs;
  if (soft.size() % n != 0) throw ParameterError("soft input length is not a multiple of the codeword size");
  const std::size_t steps = soft.size() / n;
  if (steps < static_cast<std::size_t>(code.tail_steps())) {
    throw ParameterError("soft input shorter than the code tail");
  }
  const Trellis tr(code);
  const int S = tr.states;
  const int W = tr.words;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Branch metric for every output pattern: correlation with +/-1 symbols.
  std::vector<double> pattern_metric(1u << n);
  std::vector<double> metric(S, kNegInf), next_metric(S);
  metric[0] = 0.0;
  std::vector<std::uint16_t> prev_state(steps * S);
  std::vector<std::uint8_t> prev_word(steps * S);

  for (std::size_t t = 0; t < steps; ++t) {
    const double* sv = soft.data() + t * n;
    for (unsigned pat = 0; pat < pattern_metric.size(); ++pat) {
      double m = 0.0;
      for (int j = 0; j < n; ++j) m += (pat >> j) & 1u ? -sv[j] : sv[j];
      pattern_metric[pat] = m;
    }
    std::fill(next_metric.begin(), next_metric.end(), kNegInf);
    std::uint16_t* ps = prev_state.data() + t * S;
    std::uint8_t* pw = prev_word.data() + t * S;
    for (int s = 0; s < S; ++s) {
      const double base = metric[s];
      if (base == kNegInf) continue;
      for (int u = 0; u < W; ++u) {
        const std::size_t idx = static_cast<std::size_t>(s) * W + u;
        const int ns = tr.next[idx];
        const double cand = base + pattern_metric[tr.out[idx]];
        if (cand > next_metric[ns]) {
          next_metric[ns] = cand;
          ps[ns] = static_cast<std::uint16_t>(s);
          pw[ns] = static_cast<std::uint8_t>(u);
        }
      }
    }
    metric.swap(next_metric);
  }

  const int k = code.inputs;
  const std::size_t msg_steps = steps - code.tail_steps();
  Bits decoded(msg_steps * k);
  int state = 0;  // zero-terminated trellis
  for (std::size_t t = steps; t-- > 0;) {
    const int u = prev_word[t * S + state];
    if (t < msg_steps) {
      for (int i = 0; i < k; ++i) decoded[t * k + i] = static_cast<std::uint8_t>((u >> i) & 1);
    }
    state = prev_state[t * S + state];
  }
  return decoded;
}

FrameLayout FrameLayout::for_frame(const CodeSpec& code, std::size_t frame_symbols,
                                   std::size_t interleaver_depth) {
  validate(code);
  if (interleaver_depth == 0) throw ParameterError("interleaver depth must be positive");
  FrameLayout layout;
  layout.code = code;
  layout.interleaver_depth = interleaver_depth;
  layout.frame_symbols = (frame_symbols + interleaver_depth - 1) / interleaver_depth * interleaver_depth;
  const std::size_t tail_coded = code.encoded_length(0);
  if (layout.frame_symbols < tail_coded) throw ParameterError("frame too short for the code tail");
  const std::size_t steps = layout.frame_symbols / code.outputs - code.tail_steps();
  layout.message_bits = steps * code.inputs;
  layout.coded_bits = code.encoded_length(layout.message_bits);
  return layout;
}

FrameLayout FrameLayout::for_message(const CodeSpec& code, std::size_t message_bits,
                                     std::size_t interleaver_depth) {
  validate(code);
  if (interleaver_depth == 0) throw ParameterError("interleaver depth must be positive");
  if (message_bits % code.inputs != 0) {
    throw ParameterError("message length must be a multiple of the code's input count");
  }
  FrameLayout layout;
  layout.code = code;
  layout.interleaver_depth = interleaver_depth;
  layout.message_bits = message_bits;
  layout.coded_bits = code.encoded_length(message_bits);
  layout.frame_symbols = (layout.coded_bits + interleaver_depth - 1) / interleaver_depth * interleaver_depth;
  return layout;
}

SymbolFrame build_near_frame(std::uint64_t seed, std::size_t length) {
  SymbolFrame f;
  f.seed = seed;
  const RVec a = prbs(seed, length);
  f.combined.assign(a.begin(), a.end());
  return f;
}

SymbolFrame build_far_frame(std::span<const std::uint8_t> message, const FrameLayout& layout,
                            std::uint64_t pilot_seed) {
  if (message.size() != layout.message_bits) {
    throw ParameterError("message length does not match the frame layout");
  }
  Bits coded = conv_encode(message, layout.code);
  coded.resize(layout.frame_symbols, 0);  // zero fill up to the frame length
  const Bits shuffled = interleave<std::uint8_t>(coded, layout.interleaver_depth);

  SymbolFrame f;
  f.seed = pilot_seed;
  f.layout = layout;
  f.pilot = prbs(pilot_seed, layout.frame_symbols);
  f.data.resize(layout.frame_symbols);
  f.combined.resize(layout.frame_symbols);
  for (std::size_t i = 0; i < layout.frame_symbols; ++i) {
    f.data[i] = bit_to_symbol(shuffled[i]);
    f.combined[i] = cplx(f.pilot[i], f.data[i]);
  }
  return f;
}

SymbolFrame build_far_frame(std::span<const std::uint8_t> message, const CodeSpec& code,
                            std::uint64_t pilot_seed, std::size_t interleaver_depth) {
  return build_far_frame(message, FrameLayout::for_message(code, message.size(), interleaver_depth),
                         pilot_seed);
}

SymbolFrame remodulate(std::span<const std::uint8_t> decoded, const FrameLayout& layout,
                       std::uint64_t pilot_seed) {
  return build_far_frame(decoded, layout, pilot_seed);
}

}  // namespace fdlink
