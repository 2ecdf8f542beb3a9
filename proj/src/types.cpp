#include "semeq/types.hpp"

#include <charconv>
#include <cmath>

namespace semeq {

bool all_finite(const CVec& x) { return x.allFinite(); }
bool all_finite(const CMat& x) { return x.allFinite(); }
bool all_finite(const RVec& x) { return x.allFinite(); }
bool all_finite(const RMat& x) { return x.allFinite(); }

bool LinearMap::is_finite() const { return A.allFinite() && b.allFinite(); }

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace semeq
