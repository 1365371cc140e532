#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rifs/markov.hpp"

namespace rifs {

// Per-symbol polynomial dynamics with V hidden variables:
//   z_{n+1}   = g_w(z_n, h_n)     (channel 0)
//   h^i_{n+1} = g^i_w(z_n, h_n)   (channel i = 1..V)
// where w = omega_n and every g is a combination of the monomials of total
// degree <= degree in (z, h^1..h^V), ordered as in monomial_exponents().
struct HdiModel {
  int k = 0;
  int V = 0;
  int degree = 0;
  std::vector<std::vector<int>> basis;
  std::vector<double> coef;  // [symbol][channel][basis], row-major
  std::vector<double> h0;

  std::size_t basis_size() const { return basis.size(); }
  std::size_t channels() const { return static_cast<std::size_t>(V) + 1; }
  std::size_t offset(int symbol, int channel) const {  // symbol 1-based
    return (static_cast<std::size_t>(symbol - 1) * channels() + static_cast<std::size_t>(channel)) * basis_size();
  }
  double& c(int symbol, int channel, std::size_t b) { return coef[offset(symbol, channel) + b]; }
  double c(int symbol, int channel, std::size_t b) const { return coef[offset(symbol, channel) + b]; }
  std::size_t parameter_count() const { return coef.size() + h0.size(); }
};

HdiModel make_hdi_model(int k, int V, int degree);
void validate(const HdiModel& model);

struct RolloutResult {
  std::vector<double> prediction;  // prediction[n] estimates z[n+1]
  std::vector<double> hidden;      // (|z|) x V, hidden[n] is h_n
  std::vector<double> residuals;   // prediction - z[n+1]
  double mse = 0.0;
};

// Observed channel teacher-forced, hidden channels free-running from h0.
RolloutResult rollout(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> coef;  // same layout as HdiModel::coef
  std::vector<double> h0;
};

// MSE (mean over steps) and its exact gradient, back-propagated through the
// hidden recursion.
LossGradient loss_and_gradient(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega);

// Largest deviation between the analytic gradient and central differences
// with the given step, relative to the larger gradient's max-norm.
double gradient_check(const HdiModel& model, const std::vector<double>& z, const SymbolSequence& omega,
                      double step = 1e-6);

struct FitOptions {
  int restarts = 5;
  double init_scale = 0.1;
  int max_iterations = 20000;
  double tolerance = 1e-10;  // relative improvement of the best loss ...
  int window = 200;          // ... over this many iterations
  double learning_rate = 1e-2;
  double lr_decay = 0.5;     // multiply the step size when the loss stalls
  int decay_patience = 300;  // iterations without improvement before decaying
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-12;
  // Restart 0 starts from a least-squares fit with h_n = z_{n-1}.
  bool delay_seed = true;
  // Keep h0 fixed at its initial value instead of training it.
  bool freeze_h0 = false;
};

struct FitReport {
  double mse = 0.0;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
  double gradient_check = 0.0;  // at the winning restart's starting point
  int best_restart = 0;
  std::vector<double> restart_losses;
  std::vector<double> best_loss_history;  // winning restart, best loss after each iteration (not serialized)
  std::vector<std::string> warnings;
};

struct FitResult {
  HdiModel model;
  FitReport report;
};

FitResult fit_hdi(const std::vector<double>& z, const SymbolSequence& omega, int k, int V, int degree,
                  const FitOptions& opts, std::uint64_t seed);

// Closed-loop generation: z and h both fed back. Returns z_0..z_{|omega|}.
std::vector<double> resimulate(const HdiModel& model, double z0, const std::vector<double>& h_init,
                               const SymbolSequence& omega);

inline constexpr double kDivergenceBound = 1e6;

void write_model(std::ostream& os, const HdiModel& model);
HdiModel read_model(std::istream& is);
void write_fit_report(std::ostream& os, const FitReport& report);

}  // namespace rifs
