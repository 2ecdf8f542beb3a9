#pragma once

#include <cstdint>
#include <vector>

#include "semeq/rng.hpp"
#include "semeq/types.hpp"

namespace semeq::channel {

struct ChannelConfig {
  double snr_db = 0.0;     // symbol-energy to noise-power ratio, dB
  bool noiseless = false;  // error-free syntactic channel
  uint64_t seed = 0;
};

// Total complex noise variance per coordinate under unit average symbol power.
double noise_variance(const ChannelConfig& cfg);

double mean_symbol_power(const CMat& batch);  // per complex coordinate

// Scales the batch so mean per-coordinate power is 1. Throws on all-zero input.
CMat normalize_power(const CMat& batch);

// Circularly-symmetric complex AWGN, per-coordinate variance sigma2
// (sigma2/2 per quadrature). Deterministic given the stream/seed.
CVec awgn_with_stream(const CVec& x, double sigma2, RngStream& stream);
CVec awgn(const CVec& x, const ChannelConfig& cfg);

struct ModemConfig {
  int qam_order = 256;     // perfect square power of 4
  int bits_per_value = 8;  // fixed-point width per feature coordinate, [1, 16]
  double clip_lo = -1.5;
  double clip_hi = 1.5;

  void validate() const;
  int bits_per_symbol() const;
  // QAM symbols needed for one feature vector of the given length
  int symbols_per_message(int feature_dim) const;
};

using BitVec = std::vector<uint8_t>;  // one bit per element, 0/1

// Gray-mapped square QAM with unit average constellation power. The
// modulator zero-pads to a symbol boundary; pad_bits reports the padding.
std::vector<Complex> qam_modulate(const BitVec& bits, int qam_order,
                                  int* pad_bits = nullptr);
// Minimum-distance demapping; returns the first total_bits bits.
BitVec qam_demodulate(const std::vector<Complex>& symbols, int qam_order,
                      size_t total_bits);
// Constellation points indexed by the Gray-coded bit pattern (tests).
std::vector<Complex> qam_constellation(int qam_order);

// Mid-rise uniform quantizer: 2^b cells over [clip_lo, clip_hi], values
// reconstructed at cell centers, so round-trip error <= range / 2^(b+1).
BitVec quantize_features(const RVec& values, const ModemConfig& cfg);
RVec dequantize_features(const BitVec& bits, int count, const ModemConfig& cfg);

}  // namespace semeq::channel
