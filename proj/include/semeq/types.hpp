#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

namespace semeq {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;  // one semantic symbol: n complex coordinates
using CMat = Eigen::MatrixXcd;  // symbol batches, one row per symbol
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// A semantic symbol x in C^n. Alias rather than wrapper so Eigen expressions
// stay frictionless; validation lives in the operations that consume symbols.
using SemanticSymbol = CVec;

struct Message {
  int class_label = 0;
  RVec feature;  // source-observation coordinates, arbitrary units
  long id = 0;
};

// Affine transformation T(x) = A x + b on the complex semantic space.
struct LinearMap {
  CMat A;
  CVec b;

  int dim() const { return static_cast<int>(b.size()); }

  CVec apply(const CVec& x) const { return A * x + b; }

  // Row-wise application to a batch (row k = T(x_k)^T).
  CMat apply_rows(const CMat& X) const {
    CMat out = X * A.transpose();
    out.rowwise() += b.transpose();
    return out;
  }

  bool is_finite() const;

  static LinearMap identity(int n) {
    return LinearMap{CMat::Identity(n, n), CVec::Zero(n)};
  }
};

bool all_finite(const CVec& x);
bool all_finite(const CMat& x);
bool all_finite(const RVec& x);
bool all_finite(const RMat& x);

// Shortest round-trip decimal formatting (used for CSV determinism).
std::string fmt_double(double v);

}  // namespace semeq
