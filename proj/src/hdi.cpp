#include "rifs/hdi.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "parallel.hpp"
#include "rifs/error.hpp"
#include "rifs/io.hpp"
#include "rifs/poly.hpp"
#include "rifs/rng.hpp"

namespace rifs {

namespace {

// Monomials and their partial derivatives at one point. Each monomial of
// degree >= 1 is a lower one times a single variable, and each derivative is
// an exponent times a lower monomial, so both cost one multiply per entry.
class BasisEval {
 public:
  BasisEval(const std::vector<std::vector<int>>& exps, int nvars, int /*degree*/)
      : B_(exps.size()), nvars_(static_cast<std::size_t>(nvars)), parent_(B_), var_(B_), lower_(B_ * nvars_), expo_(B_ * nvars_) {
    auto find = [&](const std::vector<int>& e) {
      auto it = std::find(exps.begin(), exps.end(), e);
      return static_cast<std::size_t>(it - exps.begin());
    };
    for (std::size_t b = 0; b < B_; ++b) {
      const auto& e = exps[b];
      parent_[b] = B_;
      for (std::size_t j = 0; j < nvars_; ++j) {
        expo_[b * nvars_ + j] = e[j];
        lower_[b * nvars_ + j] = B_;
        if (e[j] == 0) continue;
        auto d = e;
        --d[j];
        lower_[b * nvars_ + j] = find(d);
        if (parent_[b] == B_) {
          parent_[b] = lower_[b * nvars_ + j];
          var_[b] = j;
        }
      }
    }
  }

  // dphi (B x nvars) receives derivatives for variables first_var.. only.
  void eval(const double* x, double* phi, double* dphi, std::size_t first_var = 0) const {
    for (std::size_t b = 0; b < B_; ++b) phi[b] = parent_[b] == B_ ? 1.0 : phi[parent_[b]] * x[var_[b]];
    if (!dphi) return;
    for (std::size_t b = 0; b < B_; ++b)
      for (std::size_t j = first_var; j < nvars_; ++j) {
        const std::size_t t = b * nvars_ + j;
        dphi[t] = expo_[t] ? expo_[t] * phi[lower_[t]] : 0.0;
      }
  }

 private:
  std::size_t B_, nvars_;
  std::vector<std::size_t> parent_, var_, lower_;
  std::vector<int> expo_;
};

void check_data(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega) {
  validate(model);
  if (z.size() < 2) fail(ErrorCode::InvalidArgument, "hdi: observed series needs at least 2 values");
  if (omega.size() + 1 != z.size())
    fail(ErrorCode::InvalidArgument, "hdi: symbol sequence must be one shorter than the observed series (" +
                                         std::to_string(omega.size()) + " vs " + std::to_string(z.size()) + ")");
  for (std::size_t n = 0; n < omega.size(); ++n)
    if (omega[n] < 1 || omega[n] > model.k)
      fail(ErrorCode::InvalidArgument, "hdi: symbol " + std::to_string(omega[n]) + " at step " + std::to_string(n) +
                                           " outside 1.." + std::to_string(model.k));
  for (std::size_t n = 0; n < z.size(); ++n)
    if (!std::isfinite(z[n])) fail(ErrorCode::InvalidArgument, "hdi: non-finite observation at step " + std::to_string(n));
}

[[noreturn]] void diverged(std::size_t step) {
  fail(ErrorCode::Numerical, "hdi: state diverged (|state| > 1e6) at step " + std::to_string(step));
}

// Forward pass; optionally keeps the basis values and their derivatives for
// the backward pass.
struct Forward {
  std::vector<double> phi, dphi, hidden, residuals;
  double loss = 0.0;
};

Forward forward(const HdiModel& m, const std::vector<double>& z, const SymbolSequence& omega, bool keep) {
  const std::size_t T = omega.size(), B = m.basis_size(), V = static_cast<std::size_t>(m.V), nv = V + 1;
  Forward f;
  f.hidden.assign((T + 1) * V, 0.0);
  std::copy(m.h0.begin(), m.h0.end(), f.hidden.begin());
  f.residuals.resize(T);
  if (keep) {
    f.phi.resize(T * B);
    f.dphi.resize(T * B * nv);
  }
  BasisEval be(m.basis, static_cast<int>(nv), m.degree);
  std::vector<double> x(nv), phi(B), dphi(B * nv);
  double sum = 0.0;
  for (std::size_t n = 0; n < T; ++n) {
    x[0] = z[n];
    for (std::size_t i = 0; i < V; ++i) x[i + 1] = f.hidden[n * V + i];
    be.eval(x.data(), keep ? &f.phi[n * B] : phi.data(), keep ? &f.dphi[n * B * nv] : nullptr, 1);
    const double* p = keep ? &f.phi[n * B] : phi.data();
    const int w = omega[n];
    for (std::size_t ch = 0; ch <= V; ++ch) {
      const double* c = &m.coef[m.offset(w, static_cast<int>(ch))];
      double y = 0.0;
      for (std::size_t b = 0; b < B; ++b) y += c[b] * p[b];
      if (ch == 0) {
        f.residuals[n] = y - z[n + 1];
        sum += f.residuals[n] * f.residuals[n];
      } else {
        if (!(std::abs(y) <= kDivergenceBound)) diverged(n + 1);
        f.hidden[(n + 1) * V + ch - 1] = y;
      }
    }
  }
  f.loss = sum / static_cast<double>(T);
  if (!std::isfinite(f.loss)) fail(ErrorCode::Numerical, "hdi: non-finite loss");
  return f;
}

}  // namespace

HdiModel make_hdi_model(int k, int V, int degree) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "hdi: need at least one symbol");
  if (V < 0) fail(ErrorCode::InvalidArgument, "hdi: hidden-variable count must be nonnegative");
  if (degree < 1) fail(ErrorCode::InvalidArgument, "hdi: polynomial degree must be at least 1");
  HdiModel m;
  m.k = k;
  m.V = V;
  m.degree = degree;
  m.basis = monomial_exponents(V + 1, degree);
  m.coef.assign(static_cast<std::size_t>(k) * m.channels() * m.basis_size(), 0.0);
  m.h0.assign(static_cast<std::size_t>(V), 0.0);
  return m;
}

void validate(const HdiModel& m) {
  if (m.k < 1 || m.V < 0 || m.degree < 1) fail(ErrorCode::InvalidArgument, "hdi: invalid model dimensions");
  if (m.basis != monomial_exponents(m.V + 1, m.degree)) fail(ErrorCode::InvalidArgument, "hdi: basis does not match degree");
  if (m.coef.size() != static_cast<std::size_t>(m.k) * m.channels() * m.basis_size())
    fail(ErrorCode::InvalidArgument, "hdi: coefficient tensor has the wrong shape");
  if (m.h0.size() != static_cast<std::size_t>(m.V)) fail(ErrorCode::InvalidArgument, "hdi: h0 has the wrong length");
  for (double c : m.coef)
    if (!std::isfinite(c)) fail(ErrorCode::InvalidArgument, "hdi: non-finite coefficient");
  for (double c : m.h0)
    if (!std::isfinite(c)) fail(ErrorCode::InvalidArgument, "hdi: non-finite h0");
}

RolloutResult rollout(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega) {
  check_data(model, z, omega);
  Forward f = forward(model, z, omega, false);
  RolloutResult r;
  r.prediction.resize(omega.size());
  for (std::size_t n = 0; n < omega.size(); ++n) r.prediction[n] = f.residuals[n] + z[n + 1];
  r.hidden = std::move(f.hidden);
  r.residuals = std::move(f.residuals);
  r.mse = f.loss;
  return r;
}

LossGradient loss_and_gradient(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega) {
  check_data(model, z, omega);
  const std::size_t T = omega.size(), B = model.basis_size(), V = static_cast<std::size_t>(model.V), nv = V + 1;
  Forward f = forward(model, z, omega, true);
  LossGradient g;
  g.loss = f.loss;
  g.coef.assign(model.coef.size(), 0.0);
  // lambda = dL/dh_{n+1}, carried backwards
  std::vector<double> lambda(V, 0.0), next(V), dL_dphi(B);
  const double scale = 2.0 / static_cast<double>(T);
  for (std::size_t n = T; n-- > 0;) {
    const int w = omega[n];
    const double* phi = &f.phi[n * B];
    const double r = scale * f.residuals[n];
    double* g0 = &g.coef[model.offset(w, 0)];
    const double* c0 = &model.coef[model.offset(w, 0)];
    for (std::size_t b = 0; b < B; ++b) {
      g0[b] += r * phi[b];
      dL_dphi[b] = r * c0[b];
    }
    for (std::size_t i = 0; i < V; ++i) {
      if (lambda[i] == 0.0) continue;
      double* gi = &g.coef[model.offset(w, static_cast<int>(i + 1))];
      const double* ci = &model.coef[model.offset(w, static_cast<int>(i + 1))];
      for (std::size_t b = 0; b < B; ++b) {
        gi[b] += lambda[i] * phi[b];
        dL_dphi[b] += lambda[i] * ci[b];
      }
    }
    const double* dphi = &f.dphi[n * B * nv];
    for (std::size_t i = 0; i < V; ++i) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += dL_dphi[b] * dphi[b * nv + i + 1];
      next[i] = s;
    }
    lambda.swap(next);
  }
  g.h0 = lambda;
  return g;
}

double gradient_check(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega, double step) {
  LossGradient g = loss_and_gradient(model, z, omega);
  HdiModel m = model;
  double num = 0.0, den = 0.0;
  auto probe = [&](double& p, double analytic) {
    const double keep = p;
    p = keep + step;
    const double up = forward(m, z, omega, false).loss;
    p = keep - step;
    const double dn = forward(m, z, omega, false).loss;
    p = keep;
    const double fd = (up - dn) / (2.0 * step);
    num = std::max(num, std::abs(fd - analytic));
    den = std::max({den, std::abs(fd), std::abs(analytic)});
  };
  for (std::size_t i = 0; i < m.coef.size(); ++i) probe(m.coef[i], g.coef[i]);
  for (std::size_t i = 0; i < m.h0.size(); ++i) probe(m.h0[i], g.h0[i]);
  return den > 0.0 ? num / den : num;
}

namespace {

// Restart 0: hidden variables as delay coordinates, h^i_n = z_{n-i}. The
// hidden maps become exact shifts and the observed map is a per-symbol
// least-squares fit on the delay monomials.
HdiModel delay_seed(const std::vector<double>& z, const SymbolSequence& omega, int k, int V, int degree) {
  HdiModel m = make_hdi_model(k, V, degree);
  const std::size_t B = m.basis_size(), nv = static_cast<std::size_t>(V) + 1;
  auto unit = [&](std::size_t var) {
    for (std::size_t b = 0; b < B; ++b) {
      int tot = 0;
      for (int e : m.basis[b]) tot += e;
      if (tot == 1 && m.basis[b][var] == 1) return b;
    }
    return B;
  };
  for (int w = 1; w <= k; ++w)
    for (int i = 1; i <= V; ++i) m.c(w, i, unit(static_cast<std::size_t>(i - 1))) = 1.0;
  std::fill(m.h0.begin(), m.h0.end(), z[0]);
  BasisEval be(m.basis, static_cast<int>(nv), degree);
  std::vector<Eigen::MatrixXd> A(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(B)));
  std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(B)));
  std::vector<double> x(nv), phi(B);
  for (std::size_t n = static_cast<std::size_t>(V); n < omega.size(); ++n) {
    for (std::size_t i = 0; i < nv; ++i) x[i] = z[n - i];
    be.eval(x.data(), phi.data(), nullptr);
    Eigen::Map<Eigen::VectorXd> p(phi.data(), static_cast<Eigen::Index>(B));
    const auto w = static_cast<std::size_t>(omega[n] - 1);
    A[w].noalias() += p * p.transpose();
    rhs[w] += z[n + 1] * p;
  }
  for (int w = 1; w <= k; ++w) {
    auto& a = A[static_cast<std::size_t>(w - 1)];
    const double tr = a.trace() / static_cast<double>(B);
    a.diagonal().array() += 1e-12 * (tr > 0 ? tr : 1.0);
    Eigen::VectorXd sol = a.ldlt().solve(rhs[static_cast<std::size_t>(w - 1)]);
    for (std::size_t b = 0; b < B; ++b)
      if (std::isfinite(sol(static_cast<Eigen::Index>(b)))) m.c(w, 0, b) = sol(static_cast<Eigen::Index>(b));
  }
  return m;
}

struct RestartOutcome {
  HdiModel start;
  HdiModel model;
  double loss = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::string note;
  std::vector<double> history;
};

RestartOutcome adam(HdiModel m, const std::vector<double>& z, const SymbolSequence& omega, const FitOptions& o) {
  const std::size_t nc = m.coef.size(), nh = o.freeze_h0 ? 0 : m.h0.size();
  std::vector<double> mom(nc + nh, 0.0), vel(nc + nh, 0.0);
  RestartOutcome out;
  out.model = m;
  std::vector<double> best_hist;  // best loss after each iteration
  double lr = o.learning_rate;
  int since_improve = 0;
  double b1t = 1.0, b2t = 1.0;
  for (int it = 1; it <= o.max_iterations; ++it) {
    LossGradient g;
    try {
      g = loss_and_gradient(m, z, omega);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Numerical) throw;
      // the step left the stable region: go back to the best point, smaller steps
      m = out.model;
      std::fill(mom.begin(), mom.end(), 0.0);
      std::fill(vel.begin(), vel.end(), 0.0);
      b1t = b2t = 1.0;
      lr *= o.lr_decay;
      best_hist.push_back(out.loss);
      out.iterations = it;
      continue;
    }
    if (g.loss < out.loss) {
      out.loss = g.loss;
      out.model = m;
      since_improve = 0;
    } else if (++since_improve >= o.decay_patience) {
      lr *= o.lr_decay;
      since_improve = 0;
    }
    best_hist.push_back(out.loss);
    out.iterations = it;
    if (out.loss == 0.0) {
      out.converged = true;
      break;
    }
    if (it > o.window) {
      const double past = best_hist[static_cast<std::size_t>(it - 1 - o.window)];
      if (past - out.loss <= o.tolerance * past) {
        out.converged = true;
        break;
      }
    }
    b1t *= o.beta1;
    b2t *= o.beta2;
    auto step = [&](double& p, double grad, std::size_t i) {
      mom[i] = o.beta1 * mom[i] + (1.0 - o.beta1) * grad;
      vel[i] = o.beta2 * vel[i] + (1.0 - o.beta2) * grad * grad;
      const double mh = mom[i] / (1.0 - b1t), vh = vel[i] / (1.0 - b2t);
      p -= lr * mh / (std::sqrt(vh) + o.epsilon);
    };
    for (std::size_t i = 0; i < nc; ++i) step(m.coef[i], g.coef[i], i);
    for (std::size_t i = 0; i < nh; ++i) step(m.h0[i], g.h0[i], nc + i);
  }
  out.history = std::move(best_hist);
  return out;
}

}  // namespace

FitResult fit_hdi(const std::vector<double>& z, const SymbolSequence& omega, int k, int V, int degree,
                  const FitOptions& opts, std::uint64_t seed) {
  if (opts.restarts < 1) fail(ErrorCode::InvalidArgument, "hdi fit: need at least one restart");
  if (opts.max_iterations < 1 || opts.window < 1) fail(ErrorCode::InvalidArgument, "hdi fit: invalid iteration settings");
  HdiModel shape = make_hdi_model(k, V, degree);
  check_data(shape, z, omega);
  FitReport report;
  if (z.size() < 10 * shape.parameter_count())
    report.warnings.push_back("series length " + std::to_string(z.size()) + " is below 10 x parameter count (" +
                              std::to_string(shape.parameter_count()) + ")");

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(opts.restarts));
  detail::parallel_for(
      outcomes.size(),
      [&](std::size_t r) {
        Rng rng(seed * 0x9E3779B97F4A7C15ULL + r + 1);
        HdiModel init;
        bool ok = false;
        if (r == 0 && opts.delay_seed) {
          init = delay_seed(z, omega, k, V, degree);
          try {
            forward(init, z, omega, false);
            ok = true;
          } catch (const Error&) {
          }
        }
        for (int attempt = 0; !ok && attempt < 100; ++attempt) {
          init = make_hdi_model(k, V, degree);
          for (double& c : init.coef) c = opts.init_scale * rng.normal();
          for (double& c : init.h0) c = opts.init_scale * rng.normal();
          try {
            forward(init, z, omega, false);
            ok = true;
          } catch (const Error&) {
          }
        }
        if (!ok) {
          outcomes[r].note = "restart " + std::to_string(r) + ": no stable initial model found";
          return;
        }
        outcomes[r] = adam(init, z, omega, opts);
        outcomes[r].start = std::move(init);
      },
      1);

  int best = -1;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    report.restart_losses.push_back(outcomes[r].loss);
    if (!outcomes[r].note.empty()) report.warnings.push_back(outcomes[r].note);
    if (std::isfinite(outcomes[r].loss) && (best < 0 || outcomes[r].loss < outcomes[static_cast<std::size_t>(best)].loss))
      best = static_cast<int>(r);
  }
  if (best < 0) fail(ErrorCode::Numerical, "hdi fit: no restart produced a finite loss");
  FitResult res;
  res.model = outcomes[static_cast<std::size_t>(best)].model;
  RolloutResult ro = rollout(res.model, z, omega);
  report.mse = ro.mse;
  report.residuals = std::move(ro.residuals);
  report.iterations = outcomes[static_cast<std::size_t>(best)].iterations;
  report.converged = outcomes[static_cast<std::size_t>(best)].converged;
  report.best_restart = best;
  report.best_loss_history = outcomes[static_cast<std::size_t>(best)].history;
  // At the optimum the gradient vanishes and the ratio is rounding noise, so
  // the check runs where the winning restart began.
  report.gradient_check = gradient_check(outcomes[static_cast<std::size_t>(best)].start, z, omega);
  res.report = std::move(report);
  return res;
}

std::vector<double> resimulate(const HdiModel& model, double z0, const std::vector<double>& h_init,
                               const SymbolSequence& omega) {
  validate(model);
  if (h_init.size() != static_cast<std::size_t>(model.V))
    fail(ErrorCode::InvalidArgument, "resimulate: initial hidden state has the wrong length");
  const std::size_t B = model.basis_size(), V = static_cast<std::size_t>(model.V), nv = V + 1;
  BasisEval be(model.basis, static_cast<int>(nv), model.degree);
  std::vector<double> x(nv), y(nv), phi(B), out{z0};
  x[0] = z0;
  std::copy(h_init.begin(), h_init.end(), x.begin() + 1);
  for (std::size_t n = 0; n < omega.size(); ++n) {
    const int w = omega[n];
    if (w < 1 || w > model.k)
      fail(ErrorCode::InvalidArgument, "resimulate: symbol " + std::to_string(w) + " at step " + std::to_string(n) + " out of range");
    be.eval(x.data(), phi.data(), nullptr);
    for (std::size_t ch = 0; ch < nv; ++ch) {
      const double* c = &model.coef[model.offset(w, static_cast<int>(ch))];
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += c[b] * phi[b];
      if (!(std::abs(s) <= kDivergenceBound)) diverged(n + 1);
      y[ch] = s;
    }
    x = y;
    out.push_back(x[0]);
  }
  return out;
}

namespace {

std::string monomial_name(const std::vector<int>& e) {
  std::string s;
  for (std::size_t j = 0; j < e.size(); ++j) {
    if (e[j] == 0) continue;
    if (!s.empty()) s += '*';
    s += j == 0 ? "z" : "h" + std::to_string(j);
    if (e[j] > 1) s += '^' + std::to_string(e[j]);
  }
  return s.empty() ? "1" : s;
}

}  // namespace

void write_model(std::ostream& os, const HdiModel& m) {
  validate(m);
  os << "hdi_model 1\n";
  os << "k " << m.k << "\nV " << m.V << "\ndegree " << m.degree << "\nbasis";
  for (const auto& e : m.basis) os << ' ' << monomial_name(e);
  os << "\nh0";
  for (double h : m.h0) os << ' ' << fmt(h);
  os << '\n';
  for (int w = 1; w <= m.k; ++w)
    for (int ch = 0; ch <= m.V; ++ch) {
      os << "coef " << w << ' ' << (ch == 0 ? std::string("z") : "h" + std::to_string(ch));
      for (std::size_t b = 0; b < m.basis_size(); ++b) os << ' ' << fmt(m.c(w, ch, b));
      os << '\n';
    }
}

HdiModel read_model(std::istream& is) {
  std::string line, key;
  auto next = [&](const std::string& want) {
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      if (ls >> key) {
        if (key != want) fail(ErrorCode::Io, "model file: expected '" + want + "', found '" + key + "'");
        return line.substr(line.find(key) + key.size());
      }
    }
    fail(ErrorCode::Io, "model file: missing '" + want + "'");
  };
  auto ints = [](const std::string& s) {
    std::istringstream ls(s);
    std::string t;
    std::vector<std::string> out;
    while (ls >> t) out.push_back(t);
    return out;
  };
  next("hdi_model");
  auto one = [&](const std::string& name) {
    auto v = ints(next(name));
    if (v.size() != 1) fail(ErrorCode::Io, "model file: '" + name + "' takes one value");
    return static_cast<int>(parse_int(v[0]));
  };
  const int k = one("k"), V = one("V"), degree = one("degree");
  HdiModel m = make_hdi_model(k, V, degree);
  auto names = ints(next("basis"));
  if (names.size() != m.basis_size()) fail(ErrorCode::Io, "model file: basis size mismatch");
  for (std::size_t b = 0; b < names.size(); ++b)
    if (names[b] != monomial_name(m.basis[b])) fail(ErrorCode::Io, "model file: unexpected basis order at '" + names[b] + "'");
  auto h0 = ints(next("h0"));
  if (h0.size() != m.h0.size()) fail(ErrorCode::Io, "model file: h0 length mismatch");
  for (std::size_t i = 0; i < h0.size(); ++i) m.h0[i] = parse_double(h0[i]);
  for (int w = 1; w <= k; ++w)
    for (int ch = 0; ch <= V; ++ch) {
      auto f = ints(next("coef"));
      const std::string chan = ch == 0 ? std::string("z") : "h" + std::to_string(ch);
      if (f.size() != m.basis_size() + 2 || parse_int(f[0]) != w || f[1] != chan)
        fail(ErrorCode::Io, "model file: expected coefficients for symbol " + std::to_string(w) + " channel " + chan);
      for (std::size_t b = 0; b < m.basis_size(); ++b) m.c(w, ch, b) = parse_double(f[b + 2]);
    }
  validate(m);
  return m;
}

void write_fit_report(std::ostream& os, const FitReport& r) {
  os << "mse " << fmt(r.mse) << '\n';
  os << "iterations " << r.iterations << '\n';
  os << "converged " << (r.converged ? 1 : 0) << '\n';
  os << "gradient_check " << fmt(r.gradient_check) << '\n';
  os << "best_restart " << r.best_restart << '\n';
  os << "restart_losses";
  for (double l : r.restart_losses) os << ' ' << fmt(l);
  os << '\n';
  for (const auto& w : r.warnings) os << "warning " << w << '\n';
  os << "residuals " << r.residuals.size() << '\n';
  for (double x : r.residuals) os << fmt(x) << '\n';
}

}  // namespace rifs
