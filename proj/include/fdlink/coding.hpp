#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdlink/types.hpp"

namespace fdlink {

using Bits = std::vector<std::uint8_t>;

/// Feed-forward convolutional code with k inputs and n outputs.
///
/// generators[i][j] is the octal polynomial linking input i to output j; the
/// most significant of its constraint_lengths[i] bits multiplies the current
/// input bit (the usual poly2trellis convention).
struct CodeSpec {
  std::string name;
  int inputs = 1;
  int outputs = 2;
  std::vector<int> constraint_lengths;
  std::vector<std::vector<unsigned>> generators;

  double rate() const { return static_cast<double>(inputs) / outputs; }
  int memory() const;         // total number of delay elements (log2 of state count)
  int tail_steps() const;     // zero input steps needed to return to state 0
  std::size_t tail_bits() const { return static_cast<std::size_t>(tail_steps()) * inputs; }
  std::size_t encoded_length(std::size_t message_bits) const;
};

/// The four codes used in the experiments: "1/4", "1/3", "1/2", "2/3".
CodeSpec code_by_rate(const std::string& rate);
const std::vector<std::string>& supported_code_rates();

/// Pseudo-random +/-1 sequence, reproducible from the seed.
RVec prbs(std::uint64_t seed, std::size_t length);

/// Random 0/1 message bits.
Bits random_bits(std::uint64_t seed, std::size_t length);

/// Zero-terminated encoding; message length must be a multiple of code.inputs.
Bits conv_encode(std::span<const std::uint8_t> bits, const CodeSpec& code);

/// Block interleaver with `depth` rows: written row by row, read column by
/// column, y[c*depth + r] = x[r*cols + c]. Inputs whose length is not a
/// multiple of depth are zero padded; pad_count reports the padding.
template <typename T>
std::vector<T> interleave(std::span<const T> x, std::size_t depth, std::size_t* pad_count = nullptr);
template <typename T>
std::vector<T> deinterleave(std::span<const T> y, std::size_t depth);

/// Soft-decision Viterbi decoder; positive soft values favour bit 0.
/// Returns the message with the tail removed.
Bits viterbi_decode(std::span<const double> soft, const CodeSpec& code);

/// Layout of a far-end frame: message -> code -> zero fill -> interleaver.
struct FrameLayout {
  CodeSpec code;
  std::size_t message_bits = 0;
  std::size_t coded_bits = 0;
  std::size_t frame_symbols = 0;
  std::size_t interleaver_depth = 1;

  /// Largest layout that fits in `frame_symbols` (rounded up to the depth).
  static FrameLayout for_frame(const CodeSpec& code, std::size_t frame_symbols,
                               std::size_t interleaver_depth);
  /// Smallest layout holding `message_bits`.
  static FrameLayout for_message(const CodeSpec& code, std::size_t message_bits,
                                 std::size_t interleaver_depth);
};

/// Pilot, data and superimposed symbols of one frame: a_f = p + j d.
struct SymbolFrame {
  RVec pilot;
  RVec data;
  CVec combined;
  std::uint64_t seed = 0;
  FrameLayout layout;

  std::size_t size() const { return combined.size(); }
};

/// Near-end BPSK frame (pilot/data unused, combined = +/-1).
SymbolFrame build_near_frame(std::uint64_t seed, std::size_t length);

SymbolFrame build_far_frame(std::span<const std::uint8_t> message, const FrameLayout& layout,
                            std::uint64_t pilot_seed);
SymbolFrame build_far_frame(std::span<const std::uint8_t> message, const CodeSpec& code,
                            std::uint64_t pilot_seed, std::size_t interleaver_depth = 16);

/// Re-encode decoded bits exactly as the transmitter does.
SymbolFrame remodulate(std::span<const std::uint8_t> decoded, const FrameLayout& layout,
                       std::uint64_t pilot_seed);

/// Data-symbol mapping 0 -> +1, 1 -> -1.
inline double bit_to_symbol(std::uint8_t b) { return b ? -1.0 : 1.0; }

}  // namespace fdlink
