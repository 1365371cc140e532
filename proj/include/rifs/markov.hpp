#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rifs {

// Row-stochastic k x k matrix. Indices are 0-based in code; files and symbol
// sequences use 1-based states.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;

  // Rows must sum to 1 within `tol` and entries lie in [0, 1]; rows are then
  // rescaled so they sum to 1 to working precision.
  static TransitionMatrix from_rows(const std::vector<std::vector<double>>& rows, double tol = 1e-9);
  static TransitionMatrix uniform(int k);

  int k() const { return k_; }
  double operator()(int a, int b) const { return p_[static_cast<std::size_t>(a * k_ + b)]; }
  std::vector<std::vector<double>> rows() const;

 private:
  int k_ = 0;
  std::vector<double> p_;
};

// Symbols are 1..k. The value kGap marks a position with no symbol (an
// ambiguous clustering label); transitions into or out of a gap are ignored.
inline constexpr int kGap = 0;

struct SymbolSequence {
  int k = 0;
  std::vector<int> symbols;

  std::size_t size() const { return symbols.size(); }
  int operator[](std::size_t i) const { return symbols[i]; }
};

void validate(const SymbolSequence& seq, bool allow_gaps = false);

// Sampler: MT19937-64 seeded with `seed`; each step draws one 53-bit uniform
// and walks the cumulative row. With no initial state, the first state is
// drawn uniformly from 1..k the same way.
SymbolSequence sample_chain(const TransitionMatrix& P, std::size_t n, std::uint64_t seed,
                            std::optional<int> initial = std::nullopt);

bool is_irreducible(const TransitionMatrix& P);

struct TransitionEstimate {
  TransitionMatrix P;
  std::vector<std::vector<std::int64_t>> counts;
  std::vector<std::string> warnings;
};

// Maximum-likelihood estimate from consecutive pairs; pairs touching a gap
// are skipped. Rows with no outgoing pair are set uniform and reported.
TransitionEstimate estimate_transition_matrix(const SymbolSequence& seq, int k);

void write_matrix(std::ostream& os, const TransitionMatrix& P);
TransitionMatrix read_matrix(std::istream& is);
void write_sequence(std::ostream& os, const SymbolSequence& seq);
SymbolSequence read_sequence(std::istream& is, int k = 0);

}  // namespace rifs
