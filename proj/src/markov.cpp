#include "rifs/markov.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "graph_util.hpp"
#include "rifs/error.hpp"
#include "rifs/rng.hpp"

namespace rifs {

TransitionMatrix TransitionMatrix::from_rows(const std::vector<std::vector<double>>& rows, double tol) {
  const int k = static_cast<int>(rows.size());
  if (k == 0) fail(ErrorCode::InvalidArgument, "transition matrix: empty");
  TransitionMatrix P;
  P.k_ = k;
  P.p_.reserve(static_cast<std::size_t>(k * k));
  for (int a = 0; a < k; ++a) {
    const auto& r = rows[static_cast<std::size_t>(a)];
    if (static_cast<int>(r.size()) != k)
      fail(ErrorCode::InvalidArgument, "transition matrix: row " + std::to_string(a + 1) + " has " +
                                           std::to_string(r.size()) + " entries, expected " + std::to_string(k));
    double sum = 0.0;
    for (double x : r) {
      if (!(x >= 0.0 && x <= 1.0))
        fail(ErrorCode::InvalidArgument, "transition matrix: entry outside [0,1] in row " + std::to_string(a + 1));
      sum += x;
    }
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "transition matrix: row " << a + 1 << " sums to " << sum;
      fail(ErrorCode::InvalidArgument, msg.str());
    }
    for (double x : r) P.p_.push_back(sum == 1.0 ? x : x / sum);
  }
  return P;
}

TransitionMatrix TransitionMatrix::uniform(int k) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "transition matrix: k must be positive");
  return from_rows(std::vector<std::vector<double>>(static_cast<std::size_t>(k),
                                                    std::vector<double>(static_cast<std::size_t>(k), 1.0 / k)));
}

std::vector<std::vector<double>> TransitionMatrix::rows() const {
  std::vector<std::vector<double>> r(static_cast<std::size_t>(k_));
  for (int a = 0; a < k_; ++a)
    r[static_cast<std::size_t>(a)].assign(p_.begin() + a * k_, p_.begin() + (a + 1) * k_);
  return r;
}

void validate(const SymbolSequence& seq, bool allow_gaps) {
  if (seq.k < 1) fail(ErrorCode::InvalidArgument, "symbol sequence: alphabet size must be positive");
  for (std::size_t i = 0; i < seq.symbols.size(); ++i) {
    int s = seq.symbols[i];
    if (allow_gaps && s == kGap) continue;
    if (s < 1 || s > seq.k)
      fail(ErrorCode::InvalidArgument, "symbol sequence: symbol " + std::to_string(s) + " at position " +
                                           std::to_string(i) + " outside 1.." + std::to_string(seq.k));
  }
}

namespace {

int draw_row(const TransitionMatrix& P, int a, double u) {
  double acc = 0.0;
  int last_positive = -1;
  for (int b = 0; b < P.k(); ++b) {
    double p = P(a, b);
    if (p <= 0.0) continue;
    acc += p;
    last_positive = b;
    if (u < acc) return b;
  }
  return last_positive;  // u fell into rounding slack at the top of the row
}

}  // namespace

SymbolSequence sample_chain(const TransitionMatrix& P, std::size_t n, std::uint64_t seed, std::optional<int> initial) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "sample_chain: length must be at least 1");
  const int k = P.k();
  if (k < 1) fail(ErrorCode::InvalidArgument, "sample_chain: empty transition matrix");
  Rng rng(seed);
  int state;
  if (initial) {
    if (*initial < 1 || *initial > k)
      fail(ErrorCode::InvalidArgument, "sample_chain: initial state " + std::to_string(*initial) + " outside 1.." +
                                           std::to_string(k));
    state = *initial - 1;
  } else {
    state = static_cast<int>(rng.uniform() * k);
    if (state >= k) state = k - 1;
  }
  SymbolSequence out{k, {}};
  out.symbols.reserve(n);
  out.symbols.push_back(state + 1);
  for (std::size_t i = 1; i < n; ++i) {
    state = draw_row(P, state, rng.uniform());
    out.symbols.push_back(state + 1);
  }
  return out;
}

bool is_irreducible(const TransitionMatrix& P) {
  const int k = P.k();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (P(a, b) > 0.0) adj[static_cast<std::size_t>(a)].push_back(b);
  return detail::strongly_connected(adj);
}

TransitionEstimate estimate_transition_matrix(const SymbolSequence& seq, int k) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "estimate_transition_matrix: k must be positive");
  if (seq.size() < 2) fail(ErrorCode::InvalidArgument, "estimate_transition_matrix: need at least 2 symbols");
  SymbolSequence s = seq;
  s.k = k;
  validate(s, true);
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  for (int x : seq.symbols)
    if (x != kGap) seen[static_cast<std::size_t>(x - 1)] = 1;
  for (int a = 0; a < k; ++a)
    if (!seen[static_cast<std::size_t>(a)])
      fail(ErrorCode::InvalidArgument,
           "estimate_transition_matrix: state " + std::to_string(a + 1) + " never observed (insufficient data)");

  TransitionEstimate est;
  est.counts.assign(static_cast<std::size_t>(k), std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    int a = seq[i], b = seq[i + 1];
    if (a == kGap || b == kGap) continue;
    ++est.counts[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)];
  }
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    const auto& c = est.counts[static_cast<std::size_t>(a)];
    std::int64_t total = 0;
    for (auto x : c) total += x;
    auto& r = rows[static_cast<std::size_t>(a)];
    if (total == 0) {
      r.assign(static_cast<std::size_t>(k), 1.0 / k);
      est.warnings.push_back("state " + std::to_string(a + 1) + " has no observed successor; row set uniform");
    } else {
      for (auto x : c) r.push_back(static_cast<double>(x) / static_cast<double>(total));
    }
  }
  est.P = TransitionMatrix::from_rows(rows);
  return est;
}

void write_matrix(std::ostream& os, const TransitionMatrix& P) {
  const auto old = os.precision(17);
  os << P.k() << '\n';
  for (int a = 0; a < P.k(); ++a) {
    for (int b = 0; b < P.k(); ++b) os << (b ? " " : "") << P(a, b);
    os << '\n';
  }
  os.precision(old);
}

TransitionMatrix read_matrix(std::istream& is) {
  int k = 0;
  if (!(is >> k) || k < 1) fail(ErrorCode::Io, "matrix file: missing or invalid size line");
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k)));
  for (auto& r : rows)
    for (auto& x : r)
      if (!(is >> x)) fail(ErrorCode::Io, "matrix file: expected " + std::to_string(k * k) + " entries");
  return TransitionMatrix::from_rows(rows);
}

void write_sequence(std::ostream& os, const SymbolSequence& seq) {
  for (int s : seq.symbols) os << s << '\n';
}

SymbolSequence read_sequence(std::istream& is, int k) {
  SymbolSequence seq;
  long long x;
  int maxs = 0;
  while (is >> x) {
    if (x < 0 || x > 1'000'000) fail(ErrorCode::Io, "sequence file: bad symbol " + std::to_string(x));
    seq.symbols.push_back(static_cast<int>(x));
    maxs = std::max(maxs, static_cast<int>(x));
  }
  if (!is.eof()) fail(ErrorCode::Io, "sequence file: non-integer entry");
  seq.k = k > 0 ? k : maxs;
  validate(seq, true);
  return seq;
}

}  // namespace rifs
