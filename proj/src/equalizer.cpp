#include "semeq/equalizer.hpp"

#include <cmath>
#include <stdexcept>

namespace semeq::equalizer {

void SelectionPolicy::validate() const {
  switch (mode) {
    case PolicyMode::BayesArgmax:
      if (rho.rows() != rho.cols() || rho.rows() < 1)
        throw std::invalid_argument("SelectionPolicy: bayes-argmax needs a square rho");
      break;
    case PolicyMode::Fixed:
      if (fixed_index < 0 || fixed_index >= rho.cols())
        throw std::invalid_argument("SelectionPolicy: fixed index out of range");
      break;
    case PolicyMode::Identity:
      if (identity_transfer.size() < 1)
        throw std::invalid_argument("SelectionPolicy: identity needs rho_i(identity)");
      break;
  }
}

SelectionPolicy SelectionPolicy::bayes(RMat rho_matrix) {
  SelectionPolicy p;
  p.mode = PolicyMode::BayesArgmax;
  p.rho = std::move(rho_matrix);
  p.validate();
  return p;
}

SelectionPolicy SelectionPolicy::fixed(int k, RMat rho_matrix) {
  SelectionPolicy p;
  p.mode = PolicyMode::Fixed;
  p.fixed_index = k;
  p.rho = std::move(rho_matrix);
  p.validate();
  return p;
}

SelectionPolicy SelectionPolicy::identity(RVec rho_identity) {
  SelectionPolicy p;
  p.mode = PolicyMode::Identity;
  p.identity_transfer = std::move(rho_identity);
  p.validate();
  return p;
}

int select_transformation(const RMat& rho, const RVec& u) {
  if (rho.rows() != u.size())
    throw std::invalid_argument("select_transformation: rho/posterior shape mismatch");
  const RVec scores = rho.transpose() * u;
  int best = 0;
  for (int k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = k;  // ties keep the lowest index
  return best;
}

double risk(const RMat& rho, const RVec& u, int k) {
  if (rho.rows() != u.size())
    throw std::invalid_argument("risk: rho/posterior shape mismatch");
  if (k < 0 || k >= rho.cols()) throw std::invalid_argument("risk: index out of range");
  return 1.0 - u.dot(rho.col(k));
}

double risk(const SelectionPolicy& policy, const RVec& u) {
  policy.validate();
  switch (policy.mode) {
    case PolicyMode::BayesArgmax:
      return risk(policy.rho, u, select_transformation(policy.rho, u));
    case PolicyMode::Fixed:
      return risk(policy.rho, u, policy.fixed_index);
    case PolicyMode::Identity: {
      if (policy.identity_transfer.size() != u.size())
        throw std::invalid_argument("risk: identity-transfer/posterior shape mismatch");
      return 1.0 - u.dot(policy.identity_transfer);
    }
  }
  throw std::logic_error("risk: unknown policy mode");
}

std::pair<SemanticSymbol, int> pre_equalize(const codebook::Codebook& cb,
                                            const SelectionPolicy& policy,
                                            const semlang::Language& source_lang,
                                            const Message& m, const SemanticSymbol& x,
                                            bool renormalize) {
  policy.validate();
  if (policy.mode == PolicyMode::Identity) return {x, -1};

  int k = policy.fixed_index;
  if (policy.mode == PolicyMode::BayesArgmax) {
    const RVec u = semlang::atom_posterior(source_lang, m);
    k = select_transformation(policy.rho, u);
  }
  SemanticSymbol y = cb.maps[static_cast<size_t>(k)].apply(x);
  if (renormalize) {
    const double p = y.squaredNorm() / static_cast<double>(y.size());
    if (p > 0.0) y /= std::sqrt(p);
  }
  return {std::move(y), k};
}

SemanticSymbol post_equalize(const codebook::Codebook& cb, const RMat& rho,
                             const SemanticSymbol& received,
                             const semlang::Language& source_lang) {
  const RVec u = semlang::atom_posterior_at(source_lang, received);
  const int k = select_transformation(rho, u);
  return cb.maps[static_cast<size_t>(k)].apply(received);
}

}  // namespace semeq::equalizer
