#include "rifs/poly.hpp"

#include <functional>

#include "rifs/error.hpp"

namespace rifs {

std::vector<std::vector<int>> monomial_exponents(int nvars, int degree) {
  if (nvars < 1 || degree < 0) fail(ErrorCode::InvalidArgument, "monomial basis: need nvars >= 1, degree >= 0");
  std::vector<std::vector<int>> out;
  std::vector<int> e(static_cast<std::size_t>(nvars), 0);
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == nvars - 1) {
      e[static_cast<std::size_t>(var)] = left;
      out.push_back(e);
      return;
    }
    for (int a = left; a >= 0; --a) {
      e[static_cast<std::size_t>(var)] = a;
      rec(var + 1, left - a);
    }
  };
  for (int d = 0; d <= degree; ++d) rec(0, d);
  return out;
}

void eval_monomials(const std::vector<std::vector<int>>& exps, const double* x, double* out) {
  for (std::size_t t = 0; t < exps.size(); ++t) {
    double v = 1.0;
    const auto& e = exps[t];
    for (std::size_t j = 0; j < e.size(); ++j)
      for (int p = 0; p < e[j]; ++p) v *= x[j];
    out[t] = v;
  }
}

}  // namespace rifs
