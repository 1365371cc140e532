#pragma once

#include <vector>

namespace rifs {

// Exponent vectors of every monomial in `nvars` variables with total degree
// <= degree, in graded lexicographic order: by total degree, then
// lexicographically descending in the exponent of the first variable.
// nvars=2, degree=2 gives 1, x, y, x^2, xy, y^2.
std::vector<std::vector<int>> monomial_exponents(int nvars, int degree);

// Evaluates every monomial of `exps` at x into out (size exps.size()).
void eval_monomials(const std::vector<std::vector<int>>& exps, const double* x, double* out);

}  // namespace rifs
