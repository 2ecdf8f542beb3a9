#include "semeq/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace semeq::channel {

namespace {

const uint64_t kTagAwgn = hash_tag("channel.awgn");

bool is_power_of_four(int x) {
  if (x < 4) return false;
  while (x > 1) {
    if (x % 4 != 0) return false;
    x /= 4;
  }
  return true;
}

int int_sqrt(int x) {
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(x))));
  while (r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

uint32_t binary_to_gray(uint32_t b) { return b ^ (b >> 1); }

uint32_t gray_to_binary(uint32_t g) {
  uint32_t b = 0;
  for (; g; g >>= 1) b ^= g;
  return b;
}

}  // namespace

double noise_variance(const ChannelConfig& cfg) {
  if (cfg.noiseless) return 0.0;
  return std::pow(10.0, -cfg.snr_db / 10.0);
}

double mean_symbol_power(const CMat& batch) {
  if (batch.rows() < 1 || batch.cols() < 1)
    throw std::invalid_argument("mean_symbol_power: empty batch");
  return batch.squaredNorm() /
         static_cast<double>(batch.rows() * batch.cols());
}

CMat normalize_power(const CMat& batch) {
  const double p = mean_symbol_power(batch);
  if (p <= 0.0) throw std::invalid_argument("normalize_power: all-zero batch");
  return batch / std::sqrt(p);
}

CVec awgn_with_stream(const CVec& x, double sigma2, RngStream& stream) {
  if (sigma2 < 0.0) throw std::invalid_argument("awgn: negative noise variance");
  if (sigma2 == 0.0) return x;
  const double s = std::sqrt(sigma2 / 2.0);  // per quadrature
  CVec out(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double re = stream.next_gaussian() * s;
    const double im = stream.next_gaussian() * s;
    out[d] = x[d] + Complex(re, im);
  }
  return out;
}

CVec awgn(const CVec& x, const ChannelConfig& cfg) {
  if (cfg.noiseless) return x;
  RngStream stream(mix_seed(cfg.seed, {kTagAwgn}));
  return awgn_with_stream(x, noise_variance(cfg), stream);
}

void ModemConfig::validate() const {
  if (!is_power_of_four(qam_order))
    throw std::invalid_argument("ModemConfig: qam_order must be a perfect square power of 4");
  if (bits_per_value < 1 || bits_per_value > 16)
    throw std::invalid_argument("ModemConfig: bits_per_value must be in [1, 16]");
  if (!(clip_hi > clip_lo))
    throw std::invalid_argument("ModemConfig: empty clip range");
}

int ModemConfig::bits_per_symbol() const {
  int bits = 0;
  for (int m = qam_order; m > 1; m /= 2) ++bits;
  return bits;
}

int ModemConfig::symbols_per_message(int feature_dim) const {
  const int total_bits = feature_dim * bits_per_value;
  const int bps = bits_per_symbol();
  return (total_bits + bps - 1) / bps;
}

std::vector<Complex> qam_constellation(int qam_order) {
  if (!is_power_of_four(qam_order))
    throw std::invalid_argument("qam_constellation: order must be a perfect square power of 4");
  const int m = int_sqrt(qam_order);
  // PAM levels +-1, +-3, ..., +-(m-1) on each axis, scaled to unit average power
  const double energy = 2.0 * (static_cast<double>(m) * m - 1.0) / 3.0;
  const double scale = 1.0 / std::sqrt(energy);
  const int bits_axis = [m] {
    int b = 0;
    for (int x = m; x > 1; x /= 2) ++b;
    return b;
  }();

  std::vector<Complex> points(static_cast<size_t>(qam_order));
  for (int li = 0; li < m; ++li) {
    for (int lq = 0; lq < m; ++lq) {
      // index by the transmitted bit pattern: I bits then Q bits, each Gray-coded
      const uint32_t pattern =
          (binary_to_gray(static_cast<uint32_t>(li)) << bits_axis) |
          binary_to_gray(static_cast<uint32_t>(lq));
      const double vi = (2.0 * li - (m - 1)) * scale;
      const double vq = (2.0 * lq - (m - 1)) * scale;
      points[pattern] = Complex(vi, vq);
    }
  }
  return points;
}

std::vector<Complex> qam_modulate(const BitVec& bits, int qam_order, int* pad_bits) {
  if (!is_power_of_four(qam_order))
    throw std::invalid_argument("qam_modulate: order must be a perfect square power of 4");
  const int m = int_sqrt(qam_order);
  int bits_axis = 0;
  for (int x = m; x > 1; x /= 2) ++bits_axis;
  const int bps = 2 * bits_axis;
  const double energy = 2.0 * (static_cast<double>(m) * m - 1.0) / 3.0;
  const double scale = 1.0 / std::sqrt(energy);

  const size_t nsym = (bits.size() + static_cast<size_t>(bps) - 1) / static_cast<size_t>(bps);
  if (pad_bits) *pad_bits = static_cast<int>(nsym * static_cast<size_t>(bps) - bits.size());

  std::vector<Complex> out(nsym);
  for (size_t s = 0; s < nsym; ++s) {
    uint32_t gi = 0, gq = 0;
    for (int b = 0; b < bits_axis; ++b) {
      const size_t idx = s * static_cast<size_t>(bps) + static_cast<size_t>(b);
      const uint32_t bit = idx < bits.size() ? (bits[idx] ? 1u : 0u) : 0u;
      gi = (gi << 1) | bit;
    }
    for (int b = 0; b < bits_axis; ++b) {
      const size_t idx = s * static_cast<size_t>(bps) + static_cast<size_t>(bits_axis + b);
      const uint32_t bit = idx < bits.size() ? (bits[idx] ? 1u : 0u) : 0u;
      gq = (gq << 1) | bit;
    }
    const int li = static_cast<int>(gray_to_binary(gi));
    const int lq = static_cast<int>(gray_to_binary(gq));
    out[s] = Complex((2.0 * li - (m - 1)) * scale, (2.0 * lq - (m - 1)) * scale);
  }
  return out;
}

BitVec qam_demodulate(const std::vector<Complex>& symbols, int qam_order,
                      size_t total_bits) {
  if (!is_power_of_four(qam_order))
    throw std::invalid_argument("qam_demodulate: order must be a perfect square power of 4");
  const int m = int_sqrt(qam_order);
  int bits_axis = 0;
  for (int x = m; x > 1; x /= 2) ++bits_axis;
  const int bps = 2 * bits_axis;
  const double energy = 2.0 * (static_cast<double>(m) * m - 1.0) / 3.0;
  const double scale = 1.0 / std::sqrt(energy);

  if (total_bits > symbols.size() * static_cast<size_t>(bps))
    throw std::invalid_argument("qam_demodulate: fewer symbols than requested bits");

  auto nearest_level = [&](double v) {
    // minimum-distance over PAM levels: round to the level grid and clamp
    int l = static_cast<int>(std::lround((v / scale + (m - 1)) / 2.0));
    return std::min(std::max(l, 0), m - 1);
  };

  BitVec bits;
  bits.reserve(symbols.size() * static_cast<size_t>(bps));
  for (const Complex& z : symbols) {
    const uint32_t gi = binary_to_gray(static_cast<uint32_t>(nearest_level(z.real())));
    const uint32_t gq = binary_to_gray(static_cast<uint32_t>(nearest_level(z.imag())));
    for (int b = bits_axis - 1; b >= 0; --b) bits.push_back((gi >> b) & 1u);
    for (int b = bits_axis - 1; b >= 0; --b) bits.push_back((gq >> b) & 1u);
  }
  bits.resize(total_bits);
  return bits;
}

BitVec quantize_features(const RVec& values, const ModemConfig& cfg) {
  cfg.validate();
  const int levels = 1 << cfg.bits_per_value;
  const double step = (cfg.clip_hi - cfg.clip_lo) / levels;
  BitVec bits;
  bits.reserve(static_cast<size_t>(values.size()) * static_cast<size_t>(cfg.bits_per_value));
  for (Eigen::Index d = 0; d < values.size(); ++d) {
    const double v = std::min(std::max(values[d], cfg.clip_lo), cfg.clip_hi);
    int q = static_cast<int>(std::floor((v - cfg.clip_lo) / step));
    q = std::min(std::max(q, 0), levels - 1);
    for (int b = cfg.bits_per_value - 1; b >= 0; --b)
      bits.push_back(static_cast<uint8_t>((q >> b) & 1));
  }
  return bits;
}

RVec dequantize_features(const BitVec& bits, int count, const ModemConfig& cfg) {
  cfg.validate();
  if (bits.size() < static_cast<size_t>(count) * static_cast<size_t>(cfg.bits_per_value))
    throw std::invalid_argument("dequantize_features: not enough bits");
  const int levels = 1 << cfg.bits_per_value;
  const double step = (cfg.clip_hi - cfg.clip_lo) / levels;
  RVec out(count);
  size_t idx = 0;
  for (int d = 0; d < count; ++d) {
    int q = 0;
    for (int b = 0; b < cfg.bits_per_value; ++b)
      q = (q << 1) | (bits[idx++] ? 1 : 0);
    out[d] = cfg.clip_lo + (q + 0.5) * step;
  }
  return out;
}

}  // namespace semeq::channel
