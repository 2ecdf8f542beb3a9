#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semeq/ot.hpp"
#include "semeq/semlang.hpp"
#include "semeq/types.hpp"

namespace semeq::codebook {

using semlang::LabelMap;
using semlang::Language;

struct BuildMetadata {
  double radius = 1.0;
  double alpha = 0.0;  // recorded per-build; 0 with auto_alpha=true means per-pair
  double beta = 0.0;
  bool auto_alpha = true;
  int samples_per_source_atom = 0;
  int samples_per_target_atom = 0;
  double tol = 1e-6;
  int max_outer_iters = 50;
  int max_fw_iters = 20;
  uint64_t seed = 0;
};

// One LinearMap per source atom (|maps| = N_P), built by solving P1 for each
// (i, kappa(i)) pair.
struct Codebook {
  int n = 0;
  std::vector<LinearMap> maps;
  LabelMap kmap;
  BuildMetadata meta;

  int size() const { return static_cast<int>(maps.size()); }
  void validate() const;
};

// rho(i, k) = rho_i(T_k) = fraction of atom P_i's mass that T_k lands in
// Q_kappa(i). Entries in [0, 1]; rows are not stochastic.
struct InfoTransferMatrix {
  RMat rho;
  void validate() const;
};

// Monte-Carlo estimate of rho_{P_i -> Q_j}(T): fraction of samples x with
// interpret(target_lang, T(x)) == target_atom.
double info_transfer(const LinearMap& T, const CMat& source_samples,
                     const Language& target_lang, int target_atom);

// rho_0(T) = sum_i rho_{P_i -> Q_kappa(i)}(T); samples_per_atom[i] holds the
// evaluation samples for source atom i.
double language_mismatch(const LinearMap& T, const Language& source_lang,
                         const Language& target_lang, const LabelMap& kmap,
                         const std::vector<CMat>& samples_per_atom);

struct BuildOptions {
  ot::P1Config p1;         // alpha <= 0 selects the per-pair reference default
  bool auto_alpha = true;  // alpha = 0.1 n N_X / max(D) per atom pair
  int samples_per_source_atom = 200;
  int samples_per_target_atom = 1000;
  int threads = 0;  // 0 = hardware concurrency; atom pairs solve concurrently
};

// Deterministic given seed; atom-pair solves fan out across threads and merge
// by atom index. Build errors are annotated with the (i, kappa(i)) pair.
Codebook build_codebook(const Language& source_lang, const Language& target_lang,
                        const LabelMap& kmap, const BuildOptions& opt, uint64_t seed,
                        std::vector<ot::P1Trace>* traces = nullptr);

// rho estimated on held-out samples (independent substream of `seed`).
InfoTransferMatrix estimate_rho_matrix(const Codebook& cb, const Language& source_lang,
                                       const Language& target_lang,
                                       int eval_samples_per_atom, uint64_t seed,
                                       int threads = 0);

// rho_i(identity) per source atom (the no-equalization transfer profile).
RVec estimate_identity_transfer(const Language& source_lang, const Language& target_lang,
                                const LabelMap& kmap, int eval_samples_per_atom,
                                uint64_t seed);

enum class LogBase { Natural, Two };

// H_mu = -(1/N_P) sum_i [rho_ii log rho_ii + (1 - rho_ii) log(1 - rho_ii)],
// with 0 log 0 = 0.
double codebook_entropy(const InfoTransferMatrix& rho, LogBase base = LogBase::Natural);

// JSON schema: { version, n, N_P, kmap, build_metadata, maps: [...], rho }.
// Round-trips all matrices bit-exactly (shortest round-trip decimals).
void save_codebook(const Codebook& cb, const std::string& path,
                   const InfoTransferMatrix* rho = nullptr);
Codebook load_codebook(const std::string& path, InfoTransferMatrix* rho_out = nullptr,
                       int expected_n = -1);

}  // namespace semeq::codebook
