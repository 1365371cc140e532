#include <doctest.h>

#include <sstream>

#include "rifs/delay.hpp"
#include "rifs/delay_search.hpp"
#include "rifs/error.hpp"
#include "rifs/ifs.hpp"
#include "rifs/rng.hpp"

using namespace rifs;

namespace {

ObservationSeries series(std::vector<double> v, int channels = 1) { return ObservationSeries{channels, std::move(v), "test"}; }

ObservationSeries logistic_obs(std::uint64_t seed) {
  auto lg = logistic_family();
  auto tr = simulate(lg, sample_chain(TransitionMatrix::uniform(3), 2299, seed), std::vector<double>{0.3}, 100);
  return observe(tr, Observable::parse("identity"));
}

}  // namespace

TEST_CASE("constant series embeds to constant vectors") {
  auto d = embed(series(std::vector<double>(10, 2.5)), 3);
  REQUIRE(d.size() == 8);
  for (std::size_t n = 0; n < d.size(); ++n)
    for (double x : d.vec(n)) CHECK(x == 2.5);
  for (int lab : d.labels) CHECK(lab == -1);
}

TEST_CASE("lag-2 vectors of a short ramp") {
  auto d = embed(series({1, 2, 3, 4}), 2);
  REQUIRE(d.size() == 3);
  CHECK(d.data == std::vector<double>{1, 2, 2, 3, 3, 4});
}

TEST_CASE("vector count and overlap and invertibility on random series") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const int channels = 1 + t % 2;
    const int l = 2 + t % 5;
    std::vector<double> v(static_cast<std::size_t>(channels) * (static_cast<std::size_t>(l) + rng.below(200)));
    for (double& x : v) x = rng.normal();
    auto obs = series(v, channels);
    auto d = embed(obs, l);
    REQUIRE(d.size() == obs.size() - static_cast<std::size_t>(l) + 1);
    const std::size_t c = static_cast<std::size_t>(channels);
    for (std::size_t n = 0; n + 1 < d.size(); ++n)
      for (std::size_t j = c; j < static_cast<std::size_t>(d.dim()); ++j) REQUIRE(d.vec(n)[j] == d.vec(n + 1)[j - c]);
    auto back = recover_series(d);
    CHECK(back.channels == channels);
    CHECK(back.values == obs.values);
  }
}

TEST_CASE("embedding rejects short series and l < 2") {
  CHECK_THROWS_AS(embed(series({1, 2}), 3), Error);
  CHECK_THROWS_AS(embed(series({1, 2, 3}), 1), Error);
}

TEST_CASE("delay CSV round trip") {
  auto d = embed(series({0.1, 0.2, 0.30000000000000004, 1e-17, -3}), 3);
  d.labels = {1, -1, 2};
  std::stringstream ss;
  write_delay_csv(ss, d);
  CHECK(ss.str().rfind("n,v_1,v_2,v_3,label\n", 0) == 0);
  auto r = read_delay_csv(ss);
  CHECK(r.l == 3);
  CHECK(r.data == d.data);
  CHECK(r.labels == d.labels);
}

TEST_CASE("delay search picks lag-1 vectors for the identity-observed logistic family") {
  auto res = search_delay(logistic_obs(1), 4);
  REQUIRE(res.l.has_value());
  CHECK(*res.l == 2);
  REQUIRE(res.model.has_value());
  CHECK(res.model->num_clusters == 3);
  CHECK(res.candidates.size() == 1);
}

TEST_CASE("delay search reports failure when nothing qualifies") {
  Rng rng(3);
  std::vector<double> noise(3000);
  for (double& x : noise) x = rng.uniform();
  auto res = search_delay(series(noise), 3);
  CHECK_FALSE(res.l.has_value());
  CHECK(res.candidates.size() == 2);
  for (const auto& c : res.candidates) CHECK_FALSE(c.qualifies);
}

TEST_CASE("delay search validates its bound") { CHECK_THROWS_AS(search_delay(logistic_obs(1), 1), Error); }
