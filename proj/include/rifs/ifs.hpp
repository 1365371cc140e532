#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rifs/markov.hpp"

namespace rifs {

struct Domain {
  enum class Kind { Interval, Box, Disk, Unbounded };
  Kind kind = Kind::Unbounded;
  std::vector<double> lo, hi;  // Interval/Box bounds per coordinate
  double radius = 1.0;         // Disk, centred at the origin of R^2

  // Returns the 1-based index of an offending coordinate, 0 when inside.
  // For a disk the reported coordinate is the one with larger magnitude.
  int violation(std::span<const double> x, double tol) const;
  std::string describe() const;
};

// A single generator writes f(x) into y; both have length dim.
using GeneratorMap = std::function<void(const double* x, double* y)>;

struct GeneratorSet {
  std::string name;
  int dim = 0;
  Domain domain;
  std::vector<GeneratorMap> maps;

  int k() const { return static_cast<int>(maps.size()); }
};

inline constexpr double kDomainTol = 1e-9;

// x -> r x (1 - x) on [0,1], one generator per r.
GeneratorSet logistic_family(const std::vector<double>& r = {3.0, 3.5, 4.0});
// f1(x,y) = (y + 1 - 1.2 x^2, 0.3 x), f2(x,y) = (y + 1 - 1.2 (x - 0.2)^2, -0.2 x) on [-2,2]^2.
GeneratorSet henon_family();
// f(z) = ((sqrt3 - 1) z + 1) / (-z + sqrt3 + 1) with generators f, R f, R^2 f,
// R = exp(2 pi i / 3), on the closed unit disk; z is stored as (Re z, Im z).
GeneratorSet mobius_sierpinski();
// "logistic3", "henon" or "sierpinski".
GeneratorSet builtin_generators(const std::string& name);

// Polynomial generator sets, one term per line:
//   dim 2
//   domain box -2 2 -2 2        (or: interval a b | disk r | none)
//   map
//   out 1  1.0  0 1             (output coordinate, coefficient, exponents)
//   out 1 -1.2  2 0
//   map
//   ...
GeneratorSet parse_generator_spec(std::istream& is, const std::string& name = "custom");

std::vector<double> evaluate_generator(const GeneratorSet& gs, int symbol, std::span<const double> x);

struct Trajectory {
  int dim = 0;
  std::vector<double> points;  // row-major, size() rows of dim values
  SymbolSequence driving;      // driving[n] maps point n to point n+1

  std::size_t size() const { return dim ? points.size() / static_cast<std::size_t>(dim) : 0; }
  std::span<const double> point(std::size_t n) const {
    return {points.data() + n * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

// The first burn_in symbols of `driving` advance x0 without being recorded.
Trajectory simulate(const GeneratorSet& gs, const SymbolSequence& driving, std::span<const double> x0,
                    std::size_t burn_in = 100);

struct Observable {
  enum class Kind { Coordinate, Imag, Identity };
  Kind kind = Kind::Coordinate;
  int index = 1;  // 1-based, Coordinate only

  // "coord:J", "x" (= coord:1), "im" or "identity".
  static Observable parse(const std::string& text);
  std::string id() const;
};

struct ObservationSeries {
  int channels = 1;
  std::vector<double> values;  // row-major, size() rows of channel values
  std::string observable_id;

  std::size_t size() const { return channels ? values.size() / static_cast<std::size_t>(channels) : 0; }
};

ObservationSeries observe(const Trajectory& traj, const Observable& obs);

// CSV with header n,x_1..x_d[,omega]; omega in row n is the symbol applied to
// point n (empty on the final row).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool with_omega);
void write_observation_csv(std::ostream& os, const ObservationSeries& obs, const SymbolSequence* omega = nullptr);
// Reads the x_* columns and ignores any omega column.
ObservationSeries read_observation_csv(std::istream& is);
// Reads the omega column (ground-truth exports only).
SymbolSequence read_omega_column(std::istream& is, int k = 0);

}  // namespace rifs
