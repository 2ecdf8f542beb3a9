#pragma once

#include <utility>

#include "semeq/codebook.hpp"
#include "semeq/semlang.hpp"
#include "semeq/types.hpp"

namespace semeq::equalizer {

enum class PolicyMode { BayesArgmax, Fixed, Identity };

// Deterministic selection policies over a codebook (stochastic policies are
// out of scope). Identity carries rho_i(identity) so its risk is computable.
struct SelectionPolicy {
  PolicyMode mode = PolicyMode::BayesArgmax;
  int fixed_index = -1;
  RMat rho;
  RVec identity_transfer;

  void validate() const;

  static SelectionPolicy bayes(RMat rho_matrix);
  static SelectionPolicy fixed(int k, RMat rho_matrix);
  static SelectionPolicy identity(RVec rho_identity);
};

// k* = argmax_k (rho^T u)_k, ties broken by lowest index. Minimizes Eq.-11
// risk over deterministic policies.
int select_transformation(const RMat& rho, const RVec& u);

// R = 1 - sum_i u_i rho(i, k) for the deterministic policy selecting T_k.
double risk(const RMat& rho, const RVec& u, int k);
double risk(const SelectionPolicy& policy, const RVec& u);

// TX side: select on atom_posterior(m), apply T_{k*} to x. Returns the
// transformed symbol and the selected index (-1 for the identity policy).
// renormalize projects the single symbol to unit average power; the batch
// power constraint is normally applied by the pipeline instead.
std::pair<SemanticSymbol, int> pre_equalize(const codebook::Codebook& cb,
                                            const SelectionPolicy& policy,
                                            const semlang::Language& source_lang,
                                            const Message& m, const SemanticSymbol& x,
                                            bool renormalize = false);

// RX side: posterior from the received symbol under the source language's
// atom models, then select and apply.
SemanticSymbol post_equalize(const codebook::Codebook& cb, const RMat& rho,
                             const SemanticSymbol& received,
                             const semlang::Language& source_lang);

}  // namespace semeq::equalizer
