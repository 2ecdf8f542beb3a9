#pragma once

#include <cstdint>
#include <vector>

#include "semeq/channel.hpp"
#include "semeq/semlang.hpp"
#include "semeq/types.hpp"

namespace semeq::baselines {

enum class ClassComVariant { A, B };

// Classical pipeline: the message's feature vector is fixed-point quantized,
// QAM modulated, sent over AWGN, demapped and dequantized; the RX then
// classifies the reconstructed features. The intrinsic-accuracy stage models
// the imperfect trained classifiers (correct w.p. a, else uniform over the
// other labels).
struct ClassComConfig {
  channel::ModemConfig modem;
  double digit_accuracy = 0.784;   // source-task classifier (method A)
  double target_accuracy = 0.944;  // target-task classifier (method B)
};

// Returns the predicted target label. Variant A: classify the source class
// then map through kappa; variant B: classify the target class directly.
int run_classcom(ClassComVariant variant, const Message& m,
                 const semlang::MessageSource& source, const semlang::LabelMap& kmap,
                 const ClassComConfig& cfg, double noise_sigma2,
                 RngStream& noise_stream, RngStream& confusion_stream);

// Semantic pipeline with the identity codebook: generate -> AWGN -> target
// interpret. (The harness uses the batched pipeline; this single-shot form
// keeps the operation independently testable.)
int run_semcom_noeq(const Message& m, const semlang::Language& source_lang,
                    const semlang::Language& target_lang, uint64_t gen_seed,
                    double noise_sigma2, RngStream& noise_stream);

struct LinearEqConfig {
  double learning_rate = 0.05;
  int epochs = 60;
  int batch_size = 64;
  uint64_t seed = 0;
  int hidden_width = 0;  // 0: single linear map; >0: two-layer rectifier variant
  double divergence_factor = 10.0;

  void validate() const;
};

struct LinearEqResult {
  LinearMap map;
  std::vector<double> loss_trace;  // mean loss per epoch
};

// Single affine map trained by mini-batch gradient descent on the
// cross-entropy of softmax(-|T(x) - c_j|^2) against kappa(label).
// Throws on divergence (loss > divergence_factor x initial).
LinearEqResult train_linear_eq(const semlang::Language& target_lang,
                               const semlang::LabelMap& kmap, const CMat& samples,
                               const std::vector<int>& labels,
                               const LinearEqConfig& cfg);

// Mean loss over the batch; optional analytic gradients in the real-pair
// encoding (Re, Im packed as a complex matrix). Used by the FD checks.
double linear_eq_loss(const LinearMap& T, const CMat& X,
                      const std::vector<int>& target_labels,
                      const semlang::Language& target_lang, CMat* grad_A = nullptr,
                      CVec* grad_b = nullptr);

// Capacity-ablation variant: y = W2 relu(W1 x + b1) + b2 with the rectifier
// applied to real and imaginary parts separately.
struct TwoLayerEq {
  CMat W1;
  CVec b1;
  CMat W2;
  CVec b2;

  CVec apply(const CVec& x) const;
  CMat apply_rows(const CMat& X) const;
};

struct TwoLayerResult {
  TwoLayerEq net;
  std::vector<double> loss_trace;
};

TwoLayerResult train_two_layer_eq(const semlang::Language& target_lang,
                                  const semlang::LabelMap& kmap, const CMat& samples,
                                  const std::vector<int>& labels,
                                  const LinearEqConfig& cfg);

}  // namespace semeq::baselines
