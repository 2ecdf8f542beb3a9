#include "semeq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace semeq::baselines {

namespace {

// Intrinsic classifier imperfection: correct w.p. accuracy, otherwise uniform
// over the other labels.
int apply_confusion(int label, int num_labels, double accuracy, RngStream& rng) {
  if (accuracy >= 1.0 || num_labels < 2) return label;
  if (rng.next_unit() < accuracy) return label;
  const int other = rng.next_int(num_labels - 1);
  return other >= label ? other + 1 : other;
}

}  // namespace

int run_classcom(ClassComVariant variant, const Message& m,
                 const semlang::MessageSource& source, const semlang::LabelMap& kmap,
                 const ClassComConfig& cfg, double noise_sigma2,
                 RngStream& noise_stream, RngStream& confusion_stream) {
  cfg.modem.validate();
  if (m.feature.size() != source.feature_dim())
    throw std::invalid_argument("run_classcom: feature dimension mismatch");

  // quantize -> QAM -> AWGN -> demap -> dequantize
  const channel::BitVec tx_bits = channel::quantize_features(m.feature, cfg.modem);
  std::vector<Complex> symbols = channel::qam_modulate(tx_bits, cfg.modem.qam_order);
  if (noise_sigma2 > 0.0) {
    CVec batch(static_cast<Eigen::Index>(symbols.size()));
    for (size_t s = 0; s < symbols.size(); ++s)
      batch[static_cast<Eigen::Index>(s)] = symbols[s];
    const CVec noisy = channel::awgn_with_stream(batch, noise_sigma2, noise_stream);
    for (size_t s = 0; s < symbols.size(); ++s)
      symbols[s] = noisy[static_cast<Eigen::Index>(s)];
  }
  const channel::BitVec rx_bits =
      channel::qam_demodulate(symbols, cfg.modem.qam_order, tx_bits.size());
  const RVec feature =
      channel::dequantize_features(rx_bits, source.feature_dim(), cfg.modem);

  if (variant == ClassComVariant::A) {
    // infer the source class, then decode the target label through kappa
    int digit = source.classify(feature);
    digit = apply_confusion(digit, source.num_classes(), cfg.digit_accuracy,
                            confusion_stream);
    return kmap(digit);
  }
  // variant B: infer the target label directly
  int target = kmap(source.classify(feature));
  target = apply_confusion(target, kmap.target_count, cfg.target_accuracy,
                           confusion_stream);
  return target;
}

int run_semcom_noeq(const Message& m, const semlang::Language& source_lang,
                    const semlang::Language& target_lang, uint64_t gen_seed,
                    double noise_sigma2, RngStream& noise_stream) {
  const SemanticSymbol x = semlang::generate(source_lang, m, gen_seed);
  const SemanticSymbol y = channel::awgn_with_stream(x, noise_sigma2, noise_stream);
  return semlang::interpret(target_lang, y);
}

void LinearEqConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("LinearEqConfig: learning rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("LinearEqConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("LinearEqConfig: batch_size must be >= 1");
  if (hidden_width < 0) throw std::invalid_argument("LinearEqConfig: hidden_width must be >= 0");
  if (!(divergence_factor > 1.0))
    throw std::invalid_argument("LinearEqConfig: divergence_factor must be > 1");
}

double linear_eq_loss(const LinearMap& T, const CMat& X,
                      const std::vector<int>& target_labels,
                      const semlang::Language& target_lang, CMat* grad_A,
                      CVec* grad_b) {
  const int batch = static_cast<int>(X.rows());
  const int n = static_cast<int>(X.cols());
  const int nq = target_lang.num_atoms();
  if (batch < 1) throw std::invalid_argument("linear_eq_loss: empty batch");
  if (static_cast<int>(target_labels.size()) != batch)
    throw std::invalid_argument("linear_eq_loss: label/batch size mismatch");

  if (grad_A) grad_A->setZero(n, n);
  if (grad_b) grad_b->setZero(n);

  const CMat Y = T.apply_rows(X);
  double loss = 0.0;
  RVec logits(nq), p(nq);
  for (int k = 0; k < batch; ++k) {
    const CVec y = Y.row(k).transpose();
    for (int j = 0; j < nq; ++j)
      logits[j] = -(y - target_lang.atoms[static_cast<size_t>(j)].centroid).squaredNorm();
    const double mx = logits.maxCoeff();
    p = (logits.array() - mx).exp();
    const double z = p.sum();
    p /= z;
    const int lab = target_labels[static_cast<size_t>(k)];
    if (lab < 0 || lab >= nq)
      throw std::invalid_argument("linear_eq_loss: target label out of range");
    loss += -(logits[lab] - mx - std::log(z));

    if (grad_A || grad_b) {
      // dL/dy in the real-pair encoding: sum_j (p_j - 1[j=lab]) * d logits_j / dy
      CVec gy = CVec::Zero(n);
      for (int j = 0; j < nq; ++j) {
        const double w = p[j] - (j == lab ? 1.0 : 0.0);
        gy += w * (-2.0) * (y - target_lang.atoms[static_cast<size_t>(j)].centroid);
      }
      if (grad_A) *grad_A += gy * X.row(k).conjugate();
      if (grad_b) *grad_b += gy;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch);
  if (grad_A) *grad_A *= inv;
  if (grad_b) *grad_b *= inv;
  return loss * inv;
}

namespace {

std::vector<int> targets_through_kmap(const semlang::LabelMap& kmap,
                                      const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (size_t k = 0; k < labels.size(); ++k) out[k] = kmap(labels[k]);
  return out;
}

const uint64_t kTagShuffle = hash_tag("baselines.train.shuffle");

std::vector<int> epoch_order(int count, int epoch, uint64_t seed) {
  std::vector<int> order(static_cast<size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(mix_seed(seed, {kTagShuffle, static_cast<uint64_t>(epoch)}));
  for (int i = count - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)],
              order[static_cast<size_t>(rng.next_int(i + 1))]);
  return order;
}

}  // namespace

LinearEqResult train_linear_eq(const semlang::Language& target_lang,
                               const semlang::LabelMap& kmap, const CMat& samples,
                               const std::vector<int>& labels,
                               const LinearEqConfig& cfg) {
  cfg.validate();
  if (cfg.hidden_width != 0)
    throw std::invalid_argument("train_linear_eq: use train_two_layer_eq for hidden_width > 0");
  const int count = static_cast<int>(samples.rows());
  const int n = static_cast<int>(samples.cols());
  if (count < 1) throw std::invalid_argument("train_linear_eq: no samples");
  const std::vector<int> targets = targets_through_kmap(kmap, labels);
  {
    std::vector<bool> seen(static_cast<size_t>(kmap.source_count()), false);
    for (int lab : labels) seen[static_cast<size_t>(lab)] = true;
    for (size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        throw std::invalid_argument("train_linear_eq: no samples for source atom " +
                                    std::to_string(i));
  }

  LinearEqResult result;
  result.map = LinearMap::identity(n);

  double initial_loss = linear_eq_loss(result.map, samples, targets, target_lang);
  result.loss_trace.push_back(initial_loss);

  CMat grad_A(n, n);
  CVec grad_b(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(count, epoch, cfg.seed);
    for (int start = 0; start < count; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, count - start);
      CMat bx(len, n);
      std::vector<int> bt(static_cast<size_t>(len));
      for (int k = 0; k < len; ++k) {
        const int idx = order[static_cast<size_t>(start + k)];
        bx.row(k) = samples.row(idx);
        bt[static_cast<size_t>(k)] = targets[static_cast<size_t>(idx)];
      }
      linear_eq_loss(result.map, bx, bt, target_lang, &grad_A, &grad_b);
      result.map.A -= cfg.learning_rate * grad_A;
      result.map.b -= cfg.learning_rate * grad_b;
    }
    const double epoch_loss = linear_eq_loss(result.map, samples, targets, target_lang);
    result.loss_trace.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss) ||
        epoch_loss > cfg.divergence_factor * std::max(initial_loss, 1e-12))
      throw std::runtime_error("train_linear_eq: training diverged at epoch " +
                               std::to_string(epoch));
  }
  return result;
}

// --------------------------------------------------------------------------
// Two-layer capacity-ablation variant
// --------------------------------------------------------------------------

namespace {

CMat crelu_rows(const CMat& z) {
  CMat out(z.rows(), z.cols());
  out.real() = z.real().cwiseMax(0.0);
  out.imag() = z.imag().cwiseMax(0.0);
  return out;
}

}  // namespace

CVec TwoLayerEq::apply(const CVec& x) const {
  CVec h = W1 * x + b1;
  for (Eigen::Index i = 0; i < h.size(); ++i)
    h[i] = Complex(std::max(h[i].real(), 0.0), std::max(h[i].imag(), 0.0));
  return W2 * h + b2;
}

CMat TwoLayerEq::apply_rows(const CMat& X) const {
  CMat h = X * W1.transpose();
  h.rowwise() += b1.transpose();
  h = crelu_rows(h);
  CMat out = h * W2.transpose();
  out.rowwise() += b2.transpose();
  return out;
}

TwoLayerResult train_two_layer_eq(const semlang::Language& target_lang,
                                  const semlang::LabelMap& kmap, const CMat& samples,
                                  const std::vector<int>& labels,
                                  const LinearEqConfig& cfg) {
  cfg.validate();
  if (cfg.hidden_width < 1)
    throw std::invalid_argument("train_two_layer_eq: hidden_width must be >= 1");
  const int count = static_cast<int>(samples.rows());
  const int n = static_cast<int>(samples.cols());
  const int h = cfg.hidden_width;
  const int nq = target_lang.num_atoms();
  const std::vector<int> targets = targets_through_kmap(kmap, labels);

  RngStream init(mix_seed(cfg.seed, {hash_tag("baselines.two_layer.init")}));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(n));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  TwoLayerEq net;
  net.W1.resize(h, n);
  net.W2.resize(n, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < n; ++c)
      net.W1(r, c) = Complex(init.next_gaussian() * s1, init.next_gaussian() * s1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < h; ++c)
      net.W2(r, c) = Complex(init.next_gaussian() * s2, init.next_gaussian() * s2);
  net.b1 = CVec::Zero(h);
  net.b2 = CVec::Zero(n);

  auto batch_loss = [&](const CMat& bx, const std::vector<int>& bt, bool with_grad,
                        CMat* gW1, CVec* gb1, CMat* gW2, CVec* gb2) {
    const int len = static_cast<int>(bx.rows());
    CMat pre = bx * net.W1.transpose();
    pre.rowwise() += net.b1.transpose();
    const CMat hid = crelu_rows(pre);
    CMat y = hid * net.W2.transpose();
    y.rowwise() += net.b2.transpose();

    if (with_grad) {
      gW1->setZero(h, n);
      gb1->setZero(h);
      gW2->setZero(n, h);
      gb2->setZero(n);
    }
    double loss = 0.0;
    RVec logits(nq), p(nq);
    for (int k = 0; k < len; ++k) {
      const CVec yk = y.row(k).transpose();
      for (int j = 0; j < nq; ++j)
        logits[j] =
            -(yk - target_lang.atoms[static_cast<size_t>(j)].centroid).squaredNorm();
      const double mx = logits.maxCoeff();
      p = (logits.array() - mx).exp();
      const double z = p.sum();
      p /= z;
      const int lab = bt[static_cast<size_t>(k)];
      loss += -(logits[lab] - mx - std::log(z));
      if (with_grad) {
        CVec gy = CVec::Zero(n);
        for (int j = 0; j < nq; ++j) {
          const double w = p[j] - (j == lab ? 1.0 : 0.0);
          gy += w * (-2.0) * (yk - target_lang.atoms[static_cast<size_t>(j)].centroid);
        }
        const CVec hk = hid.row(k).transpose();
        *gW2 += gy * hk.adjoint();
        *gb2 += gy;
        CVec gh = net.W2.adjoint() * gy;
        // rectifier gate acts on Re and Im independently
        CVec gpre(h);
        for (int i = 0; i < h; ++i) {
          const Complex preval = pre(k, i);
          gpre[i] = Complex(preval.real() > 0 ? gh[i].real() : 0.0,
                            preval.imag() > 0 ? gh[i].imag() : 0.0);
        }
        *gW1 += gpre * bx.row(k).conjugate();
        *gb1 += gpre;
      }
    }
    const double inv = 1.0 / static_cast<double>(len);
    if (with_grad) {
      *gW1 *= inv;
      *gb1 *= inv;
      *gW2 *= inv;
      *gb2 *= inv;
    }
    return loss * inv;
  };

  TwoLayerResult result;
  result.net = net;
  CMat gW1, gW2;
  CVec gb1, gb2;
  const double initial_loss =
      batch_loss(samples, targets, false, nullptr, nullptr, nullptr, nullptr);
  result.loss_trace.push_back(initial_loss);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(count, epoch, cfg.seed);
    for (int start = 0; start < count; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, count - start);
      CMat bx(len, n);
      std::vector<int> bt(static_cast<size_t>(len));
      for (int k = 0; k < len; ++k) {
        const int idx = order[static_cast<size_t>(start + k)];
        bx.row(k) = samples.row(idx);
        bt[static_cast<size_t>(k)] = targets[static_cast<size_t>(idx)];
      }
      batch_loss(bx, bt, true, &gW1, &gb1, &gW2, &gb2);
      net.W1 -= cfg.learning_rate * gW1;
      net.b1 -= cfg.learning_rate * gb1;
      net.W2 -= cfg.learning_rate * gW2;
      net.b2 -= cfg.learning_rate * gb2;
    }
    const double epoch_loss =
        batch_loss(samples, targets, false, nullptr, nullptr, nullptr, nullptr);
    result.loss_trace.push_back(epoch_loss);
    if (!std::isfinite(epoch_loss) ||
        epoch_loss > cfg.divergence_factor * std::max(initial_loss, 1e-12))
      throw std::runtime_error("train_two_layer_eq: training diverged at epoch " +
                               std::to_string(epoch));
  }
  result.net = net;
  return result;
}

}  // namespace semeq::baselines
