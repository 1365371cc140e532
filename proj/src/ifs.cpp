#include "rifs/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rifs/error.hpp"
#include "rifs/io.hpp"

namespace rifs {

int Domain::violation(std::span<const double> x, double tol) const {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (!std::isfinite(x[j])) return static_cast<int>(j) + 1;
  switch (kind) {
    case Kind::Unbounded:
      return 0;
    case Kind::Interval:
    case Kind::Box:
      for (std::size_t j = 0; j < x.size() && j < lo.size(); ++j)
        if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return static_cast<int>(j) + 1;
      return 0;
    case Kind::Disk:
      if (std::hypot(x[0], x[1]) > radius + tol) return std::abs(x[0]) >= std::abs(x[1]) ? 1 : 2;
      return 0;
  }
  return 0;
}

std::string Domain::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Unbounded:
      os << "unbounded";
      break;
    case Kind::Interval:
    case Kind::Box:
      for (std::size_t j = 0; j < lo.size(); ++j) os << (j ? " x " : "") << '[' << lo[j] << ',' << hi[j] << ']';
      break;
    case Kind::Disk:
      os << "disk |z| <= " << radius;
      break;
  }
  return os.str();
}

GeneratorSet logistic_family(const std::vector<double>& r) {
  GeneratorSet gs;
  gs.name = "logistic";
  gs.dim = 1;
  gs.domain = {Domain::Kind::Interval, {0.0}, {1.0}, 1.0};
  for (double ri : r) gs.maps.push_back([ri](const double* x, double* y) { y[0] = ri * x[0] * (1.0 - x[0]); });
  return gs;
}

GeneratorSet henon_family() {
  GeneratorSet gs;
  gs.name = "henon";
  gs.dim = 2;
  gs.domain = {Domain::Kind::Box, {-2.0, -2.0}, {2.0, 2.0}, 1.0};
  gs.maps.push_back([](const double* x, double* y) {
    const double u = x[0], v = x[1];
    y[0] = v + 1.0 - 1.2 * u * u;
    y[1] = 0.3 * u;
  });
  gs.maps.push_back([](const double* x, double* y) {
    const double u = x[0] - 0.2, v = x[1];
    y[0] = v + 1.0 - 1.2 * u * u;
    y[1] = -0.2 * x[0];
  });
  return gs;
}

GeneratorSet mobius_sierpinski() {
  GeneratorSet gs;
  gs.name = "sierpinski";
  gs.dim = 2;
  gs.domain = {Domain::Kind::Disk, {}, {}, 1.0};
  const double s3 = std::numbers::sqrt3;
  const double c[3] = {1.0, -0.5, -0.5};
  const double s[3] = {0.0, 0.5 * s3, -0.5 * s3};
  for (int j = 0; j < 3; ++j) {
    gs.maps.push_back([s3, cj = c[j], sj = s[j], j](const double* x, double* y) {
      // w = ((s3-1) z + 1) / (-z + s3 + 1)
      const double nr = (s3 - 1.0) * x[0] + 1.0, ni = (s3 - 1.0) * x[1];
      const double dr = s3 + 1.0 - x[0], di = -x[1];
      const double den = dr * dr + di * di;
      const double wr = (nr * dr + ni * di) / den;
      const double wi = (ni * dr - nr * di) / den;
      if (j == 0) {
        y[0] = wr;
        y[1] = wi;
      } else {
        y[0] = cj * wr - sj * wi;
        y[1] = sj * wr + cj * wi;
      }
    });
  }
  return gs;
}

GeneratorSet builtin_generators(const std::string& name) {
  if (name == "logistic3" || name == "logistic") return logistic_family();
  if (name == "henon") return henon_family();
  if (name == "sierpinski") return mobius_sierpinski();
  fail(ErrorCode::InvalidArgument, "unknown generator family '" + name + "' (logistic3, henon, sierpinski)");
}

namespace {

struct Term {
  int out;
  double coef;
  std::vector<int> exps;
};

}  // namespace

GeneratorSet parse_generator_spec(std::istream& is, const std::string& name) {
  GeneratorSet gs;
  gs.name = name;
  std::vector<std::vector<Term>> maps;
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::InvalidArgument, "generator spec line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "dim") {
      if (!(ls >> gs.dim) || gs.dim < 1) bad("dim must be a positive integer");
    } else if (kw == "domain") {
      std::string kind;
      ls >> kind;
      if (kind == "none") {
        gs.domain.kind = Domain::Kind::Unbounded;
      } else if (kind == "disk") {
        gs.domain.kind = Domain::Kind::Disk;
        if (!(ls >> gs.domain.radius) || gs.domain.radius <= 0) bad("disk needs a positive radius");
      } else if (kind == "interval" || kind == "box") {
        gs.domain.kind = kind == "interval" ? Domain::Kind::Interval : Domain::Kind::Box;
        double a, b;
        while (ls >> a >> b) {
          if (!(a <= b)) bad("empty domain range");
          gs.domain.lo.push_back(a);
          gs.domain.hi.push_back(b);
        }
      } else {
        bad("unknown domain kind '" + kind + "'");
      }
    } else if (kw == "map") {
      maps.emplace_back();
    } else if (kw == "out") {
      if (gs.dim < 1) bad("dim must precede terms");
      if (maps.empty()) bad("term outside a map block");
      Term t;
      if (!(ls >> t.out >> t.coef) || t.out < 1 || t.out > gs.dim) bad("expected: out <coord> <coef> <exponents>");
      t.exps.resize(static_cast<std::size_t>(gs.dim));
      for (auto& e : t.exps)
        if (!(ls >> e) || e < 0) bad("expected " + std::to_string(gs.dim) + " non-negative exponents");
      maps.back().push_back(std::move(t));
    } else {
      bad("unknown keyword '" + kw + "'");
    }
  }
  if (gs.dim < 1) fail(ErrorCode::InvalidArgument, "generator spec: missing dim");
  if (maps.empty()) fail(ErrorCode::InvalidArgument, "generator spec: no maps");
  if (gs.domain.kind == Domain::Kind::Disk && gs.dim != 2)
    fail(ErrorCode::InvalidArgument, "generator spec: disk domain needs dim 2");
  if ((gs.domain.kind == Domain::Kind::Box || gs.domain.kind == Domain::Kind::Interval) &&
      static_cast<int>(gs.domain.lo.size()) != gs.dim)
    fail(ErrorCode::InvalidArgument, "generator spec: domain needs one range per coordinate");
  const int dim = gs.dim;
  for (auto& terms : maps) {
    gs.maps.push_back([terms, dim](const double* x, double* y) {
      std::fill(y, y + dim, 0.0);
      for (const auto& t : terms) {
        double v = t.coef;
        for (int j = 0; j < dim; ++j)
          for (int e = 0; e < t.exps[static_cast<std::size_t>(j)]; ++e) v *= x[j];
        y[t.out - 1] += v;
      }
    });
  }
  return gs;
}

namespace {

void check_domain(const GeneratorSet& gs, std::span<const double> x, const std::string& where) {
  if (int j = gs.domain.violation(x, kDomainTol)) {
    std::ostringstream os;
    os.precision(17);
    os << where << ": coordinate " << j << " = " << x[static_cast<std::size_t>(j - 1)] << " outside domain "
       << gs.domain.describe();
    fail(ErrorCode::Domain, os.str());
  }
}

}  // namespace

std::vector<double> evaluate_generator(const GeneratorSet& gs, int symbol, std::span<const double> x) {
  if (symbol < 1 || symbol > gs.k())
    fail(ErrorCode::InvalidArgument, "generator symbol " + std::to_string(symbol) + " outside 1.." +
                                         std::to_string(gs.k()));
  if (static_cast<int>(x.size()) != gs.dim)
    fail(ErrorCode::InvalidArgument, "state has " + std::to_string(x.size()) + " coordinates, expected " +
                                         std::to_string(gs.dim));
  check_domain(gs, x, "evaluate_generator");
  std::vector<double> y(static_cast<std::size_t>(gs.dim));
  gs.maps[static_cast<std::size_t>(symbol - 1)](x.data(), y.data());
  return y;
}

Trajectory simulate(const GeneratorSet& gs, const SymbolSequence& driving, std::span<const double> x0,
                    std::size_t burn_in) {
  if (static_cast<int>(x0.size()) != gs.dim)
    fail(ErrorCode::InvalidArgument, "initial state has " + std::to_string(x0.size()) + " coordinates, expected " +
                                         std::to_string(gs.dim));
  if (burn_in > driving.size())
    fail(ErrorCode::InvalidArgument, "burn-in " + std::to_string(burn_in) + " exceeds driving length " +
                                         std::to_string(driving.size()));
  SymbolSequence d = driving;
  d.k = gs.k();
  validate(d);
  const auto dim = static_cast<std::size_t>(gs.dim);
  std::vector<double> x(x0.begin(), x0.end()), y(dim);
  check_domain(gs, x, "simulate: initial state");
  Trajectory tr;
  tr.dim = gs.dim;
  tr.driving.k = gs.k();
  tr.points.reserve((driving.size() - burn_in + 1) * dim);
  for (std::size_t n = 0; n < driving.size(); ++n) {
    if (n >= burn_in) {
      tr.points.insert(tr.points.end(), x.begin(), x.end());
      tr.driving.symbols.push_back(driving[n]);
    }
    gs.maps[static_cast<std::size_t>(driving[n] - 1)](x.data(), y.data());
    std::swap(x, y);
    check_domain(gs, x, "simulate: step " + std::to_string(n + 1));
  }
  tr.points.insert(tr.points.end(), x.begin(), x.end());
  return tr;
}

Observable Observable::parse(const std::string& text) {
  Observable o;
  if (text == "im" || text == "imag") {
    o.kind = Kind::Imag;
  } else if (text == "identity") {
    o.kind = Kind::Identity;
  } else if (text == "x") {
    o.kind = Kind::Coordinate;
    o.index = 1;
  } else if (text.rfind("coord:", 0) == 0) {
    o.kind = Kind::Coordinate;
    o.index = static_cast<int>(parse_int(text.substr(6)));
    if (o.index < 1) fail(ErrorCode::InvalidArgument, "observable: coordinate index must be >= 1");
  } else {
    fail(ErrorCode::InvalidArgument, "unknown observable '" + text + "' (coord:J, x, im, identity)");
  }
  return o;
}

std::string Observable::id() const {
  switch (kind) {
    case Kind::Imag:
      return "im";
    case Kind::Identity:
      return "identity";
    case Kind::Coordinate:
      break;
  }
  return "coord:" + std::to_string(index);
}

ObservationSeries observe(const Trajectory& traj, const Observable& obs) {
  ObservationSeries out;
  out.observable_id = obs.id();
  const std::size_t n = traj.size();
  switch (obs.kind) {
    case Observable::Kind::Identity:
      out.channels = traj.dim;
      out.values = traj.points;
      return out;
    case Observable::Kind::Imag:
      if (traj.dim != 2) fail(ErrorCode::InvalidArgument, "observable im needs a 2-dimensional (complex) state");
      out.values.reserve(n);
      for (std::size_t i = 0; i < n; ++i) out.values.push_back(traj.point(i)[1]);
      return out;
    case Observable::Kind::Coordinate:
      if (obs.index < 1 || obs.index > traj.dim)
        fail(ErrorCode::InvalidArgument, "observable coordinate " + std::to_string(obs.index) + " outside 1.." +
                                             std::to_string(traj.dim));
      out.values.reserve(n);
      for (std::size_t i = 0; i < n; ++i) out.values.push_back(traj.point(i)[static_cast<std::size_t>(obs.index - 1)]);
      return out;
  }
  return out;
}

namespace {

void write_rows(std::ostream& os, const double* data, std::size_t rows, int cols, const SymbolSequence* omega) {
  os << 'n';
  for (int j = 1; j <= cols; ++j) os << ",x_" << j;
  if (omega) os << ",omega";
  os << '\n';
  for (std::size_t n = 0; n < rows; ++n) {
    os << n;
    for (int j = 0; j < cols; ++j) os << ',' << fmt(data[n * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)]);
    if (omega) {
      os << ',';
      if (n < omega->size()) os << (*omega)[n];
    }
    os << '\n';
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool with_omega) {
  write_rows(os, traj.points.data(), traj.size(), traj.dim, with_omega ? &traj.driving : nullptr);
}

void write_observation_csv(std::ostream& os, const ObservationSeries& obs, const SymbolSequence* omega) {
  write_rows(os, obs.values.data(), obs.size(), obs.channels, omega);
}

ObservationSeries read_observation_csv(std::istream& is) {
  CsvTable t = read_csv(is);
  std::vector<int> cols;
  for (int j = 1;; ++j) {
    int c = t.column("x_" + std::to_string(j));
    if (c < 0) break;
    cols.push_back(c);
  }
  if (cols.empty()) fail(ErrorCode::Io, "observation csv: no x_1 column");
  ObservationSeries obs;
  obs.channels = static_cast<int>(cols.size());
  obs.observable_id = "csv";
  obs.values.reserve(t.rows.size() * cols.size());
  for (const auto& r : t.rows)
    for (int c : cols) obs.values.push_back(parse_double(r[static_cast<std::size_t>(c)]));
  return obs;
}

SymbolSequence read_omega_column(std::istream& is, int k) {
  CsvTable t = read_csv(is);
  int c = t.column("omega");
  if (c < 0) fail(ErrorCode::Io, "csv has no omega column (ground truth missing)");
  SymbolSequence seq;
  int maxs = 0;
  for (const auto& r : t.rows) {
    const auto& cell = r[static_cast<std::size_t>(c)];
    if (cell.empty()) continue;
    int s = static_cast<int>(parse_int(cell));
    seq.symbols.push_back(s);
    maxs = std::max(maxs, s);
  }
  seq.k = k > 0 ? k : maxs;
  validate(seq);
  return seq;
}

}  // namespace rifs
