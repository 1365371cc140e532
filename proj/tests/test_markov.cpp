#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "rifs/error.hpp"
#include "rifs/markov.hpp"

using namespace rifs;

TEST_CASE("single-state chain repeats its state") {
  auto P = TransitionMatrix::from_rows({{1.0}});
  CHECK(sample_chain(P, 5, 7).symbols == std::vector<int>{1, 1, 1, 1, 1});
}

TEST_CASE("deterministic alternation from a given start") {
  auto P = TransitionMatrix::from_rows({{0, 1}, {1, 0}});
  CHECK(sample_chain(P, 4, 3, 1).symbols == std::vector<int>{1, 2, 1, 2});
}

TEST_CASE("uniform 3-state chain of 2200 steps has pair frequencies near 1/3") {
  auto P = TransitionMatrix::uniform(3);
  auto est = estimate_transition_matrix(sample_chain(P, 2200, 11), 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(std::abs(est.P(a, b) - 1.0 / 3.0) <= 0.05);
}

TEST_CASE("sampled transitions only follow positive entries") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto P = oracle::random_irreducible(2 + trial % 4, rng);
    auto s = sample_chain(P, 500, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(P(s[i] - 1, s[i + 1] - 1) > 0.0);
  }
}

TEST_CASE("invalid chains and lengths are rejected") {
  CHECK_THROWS_AS(TransitionMatrix::from_rows({{0.5, 0.4}, {0.5, 0.5}}), Error);
  CHECK_THROWS_AS(TransitionMatrix::from_rows({{1.0 + 1e-8, -1e-8}, {0.5, 0.5}}), Error);
  CHECK_NOTHROW(TransitionMatrix::from_rows({{0.5 + 1e-10, 0.5}, {0.5, 0.5}}));
  CHECK_THROWS_AS(sample_chain(TransitionMatrix::uniform(2), 0, 1), Error);
  CHECK_THROWS_AS(sample_chain(TransitionMatrix::uniform(2), 3, 1, 3), Error);
}

TEST_CASE("sampling is reproducible for a fixed seed") {
  auto P = TransitionMatrix::from_rows({{0.2, 0.8, 0.0}, {0.0, 0.3, 0.7}, {0.6, 0.0, 0.4}});
  CHECK(sample_chain(P, 1000, 42).symbols == sample_chain(P, 1000, 42).symbols);
  CHECK(sample_chain(P, 1000, 42, 2).symbols == sample_chain(P, 1000, 42, 2).symbols);
  CHECK(sample_chain(P, 1000, 42).symbols != sample_chain(P, 1000, 43).symbols);
}

TEST_CASE("irreducibility examples") {
  CHECK(is_irreducible(TransitionMatrix::from_rows({{0, 1}, {1, 0}})));
  CHECK_FALSE(is_irreducible(TransitionMatrix::from_rows({{1, 0}, {0.5, 0.5}})));
  CHECK(is_irreducible(TransitionMatrix::from_rows({{1.0}})));
}

TEST_CASE("irreducibility agrees with transitive closure on every pattern with k <= 4") {
  Rng rng(9);
  int checked = 0;
  for (int k = 1; k <= 4; ++k) {
    const int bits = k * k;
    for (long mask = 0; mask < (1L << bits); ++mask) {
      std::vector<std::vector<bool>> pat(static_cast<std::size_t>(k), std::vector<bool>(static_cast<std::size_t>(k)));
      bool rows_ok = true;
      for (int i = 0; i < k; ++i) {
        bool any = false;
        for (int j = 0; j < k; ++j) {
          pat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = (mask >> (i * k + j)) & 1;
          any = any || pat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        rows_ok = rows_ok && any;
      }
      if (!rows_ok) continue;
      auto P = oracle::random_on_pattern(pat, rng);
      REQUIRE(is_irreducible(P) == oracle::strongly_connected(pat));
      ++checked;
    }
  }
  CHECK(checked > 40000);
}

TEST_CASE("irreducibility agrees with transitive closure on random k = 5 chains") {
  Rng rng(10);
  for (int t = 0; t < 500; ++t) {
    auto pat = oracle::random_pattern(5, 0.1 + 0.4 * rng.uniform(), false, rng);
    auto P = oracle::random_on_pattern(pat, rng);
    REQUIRE(is_irreducible(P) == oracle::strongly_connected(pat));
  }
}

TEST_CASE("estimation examples") {
  auto est = estimate_transition_matrix(SymbolSequence{2, {1, 2, 1, 2, 1}}, 2);
  CHECK(est.P(0, 0) == 0.0);
  CHECK(est.P(0, 1) == 1.0);
  CHECK(est.P(1, 0) == 1.0);
  CHECK(est.P(1, 1) == 0.0);
  CHECK(est.counts[0][1] == 2);
  auto one = estimate_transition_matrix(SymbolSequence{1, {1, 1, 1}}, 1);
  CHECK(one.P(0, 0) == 1.0);
}

TEST_CASE("estimation rejects missing states and reports rows without successors") {
  CHECK_THROWS_AS(estimate_transition_matrix(SymbolSequence{3, {1, 2, 1, 2}}, 3), Error);
  CHECK_THROWS_AS(estimate_transition_matrix(SymbolSequence{1, {1}}, 1), Error);
  // state 3 only appears last
  auto est = estimate_transition_matrix(SymbolSequence{3, {1, 2, 1, 3}}, 3);
  CHECK(est.warnings.size() == 1);
  CHECK(est.P(2, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("estimation skips pairs touching a gap") {
  auto est = estimate_transition_matrix(SymbolSequence{2, {1, 1, kGap, 2, 1, 2}}, 2);
  CHECK(est.counts[0][0] == 1);
  CHECK(est.counts[0][1] == 1);
  CHECK(est.counts[1][0] == 1);
}

TEST_CASE("estimates converge to the generating matrix at n = 1e5") {
  Rng rng(21);
  for (int k = 2; k <= 4; ++k)
    for (int t = 0; t < 3; ++t) {
      auto P = oracle::random_irreducible(k, rng);
      auto est = estimate_transition_matrix(sample_chain(P, 100000, rng.next()), k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) CHECK(std::abs(est.P(a, b) - P(a, b)) <= 0.02);
    }
}

TEST_CASE("matrix and sequence files round trip") {
  Rng rng(3);
  auto P = oracle::random_irreducible(4, rng);
  std::stringstream ss;
  write_matrix(ss, P);
  auto Q = read_matrix(ss);
  REQUIRE(Q.k() == 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) CHECK(Q(a, b) == P(a, b));

  SymbolSequence s{3, {1, 3, kGap, 2, 2}};
  std::stringstream ts;
  write_sequence(ts, s);
  auto r = read_sequence(ts, 3);
  CHECK(r.symbols == s.symbols);
  CHECK(r.k == 3);
}
