// Numerical verification bench for the tracking-error theory: gradient
// co-coercivity, the strong-convexity gradient inequality, the parameterized
// norm inequality, and the tracking bound
//     (1/T) sum_t E||e_t||^2 <= C (eta gamma^2 d + P_T^2 / (T eta))
// for the noisy update w <- w - eta grad L_t(w) + eta gamma eps on drifting
// objectives.
//
// Quadratic objectives satisfy smoothness and strong convexity exactly, so
// the lemma and bound checks isolate the update rule. For quadratics the
// tracking error is provably non-decreasing in the noise gain (the error
// recursion is linear and the noise is independent and zero-mean), so the
// forgetting-vs-memorization trade-off in gamma is exhibited on a separate
// plateau scenario whose gradient vanishes on a region around the previous
// optimum - the regime where local regularity breaks and noise genuinely
// restores progress.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/rng.hpp"

namespace abrlab {

class StepTooLarge : public std::invalid_argument {
 public:
  explicit StepTooLarge(double eta, double limit)
      : std::invalid_argument("eta " + std::to_string(eta) + " exceeds 1/L = " +
                              std::to_string(limit)) {}
};

class DriftingObjective {
 public:
  virtual ~DriftingObjective() = default;
  virtual int dim() const = 0;
  virtual void grad(std::span<const double> w, long t, std::span<double> out) const = 0;
  virtual std::vector<double> optimum_at(long t) const = 0;
  virtual double path_length(long T) const = 0;
  virtual double max_step() const = 0;  // 1/L
};

enum class DriftKind { linear, jump, sinusoid };
const char* to_string(DriftKind k);

// L_t(w) = 1/2 (w - w*_t)^T A (w - w*_t); A symmetric with eigenvalues in
// [mu, L], extremes attained.
class DriftingQuadratic : public DriftingObjective {
 public:
  DriftingQuadratic(int dim, double mu, double L, DriftKind drift, double target_path,
                    long horizon, std::uint64_t seed);

  int dim() const override { return dim_; }
  void grad(std::span<const double> w, long t, std::span<double> out) const override;
  std::vector<double> optimum_at(long t) const override;
  double path_length(long T) const override;
  double max_step() const override { return 1.0 / smoothness_; }
  double mu() const { return strong_convexity_; }
  double smoothness() const { return smoothness_; }
  const std::vector<double>& hessian() const { return hessian_; }

 private:
  int dim_;
  double strong_convexity_;
  double smoothness_;
  DriftKind kind_;
  double step_norm_ = 0.0;   // per-step drift magnitude (linear)
  double jump_norm_ = 0.0;   // jump magnitude (jump)
  long jump_period_ = 250;
  double sin_amp_ = 0.0;     // sinusoid amplitude
  double sin_period_ = 500.0;
  std::vector<double> direction_;  // unit drift direction
  std::vector<double> hessian_;    // dim x dim row-major
};

// Per-coordinate scenario for the noise-gain trade-off: regimes alternate the
// optimum between +offset and -offset every `period` steps, and the loss is
// flat (zero gradient) on a plateau of radius `plateau` around the opposite
// center, quadratic within `basin` of the active center. Gradient descent
// parks on the plateau after every switch; update noise is the only way off.
class PlateauDrift : public DriftingObjective {
 public:
  PlateauDrift(int dim, double offset, double plateau, long period);

  int dim() const override { return dim_; }
  void grad(std::span<const double> w, long t, std::span<double> out) const override;
  std::vector<double> optimum_at(long t) const override;
  double path_length(long T) const override;
  double max_step() const override { return 1.0; }  // unit curvature in the basin

 private:
  double center(long t) const { return (t / period_) % 2 == 0 ? offset_ : -offset_; }
  int dim_;
  double offset_;
  double plateau_;
  long period_;
};

// Max violation of ||dg||^2 <= L dg^T dw over random pairs (<= 0 is exact).
double check_cocoercivity(const DriftingQuadratic& objective, int trials, RngStream& rng);
// Max violation of dg^T dw >= mu ||dw||^2 over random pairs.
double check_strong_convexity(const DriftingQuadratic& objective, int trials, RngStream& rng);
// Max violation of ||a+b||^2 <= (1+alpha)||a||^2 + (1+1/alpha)||b||^2.
double check_norm_inequality(int trials, RngStream& rng);

struct TrackingResult {
  double avg_sq_error = 0.0;  // (1/T) sum_t E||e_t||^2, E over repeats
  double bound_term = 0.0;    // eta gamma^2 d + P_T^2 / (T eta)
  std::vector<double> per_step;  // E||e_t||^2 per step
};

// Noisy-GD tracking; starts at the initial optimum plus `initial_offset`
// (empty: zero offset). repeats >= 1 independent noise realizations,
// deterministic per (objective, eta, gamma, T, seed, offset).
TrackingResult run_tracking(const DriftingObjective& objective, double eta, double gamma,
                            long T, int repeats, std::uint64_t seed,
                            std::span<const double> initial_offset = {});

std::vector<std::pair<double, double>> sweep_gamma(const DriftingObjective& objective,
                                                   double eta, std::span<const double> gammas,
                                                   long T, int repeats, std::uint64_t seed);
std::vector<std::pair<double, double>> sweep_eta(const DriftingObjective& objective,
                                                 std::span<const double> etas, double gamma,
                                                 long T, int repeats, std::uint64_t seed);

struct BoundCell {
  std::string drift;
  double eta = 0.0;
  double gamma = 0.0;
  double measured = 0.0;
  double bound_term = 0.0;
  bool calibration = false;
  bool pass = true;  // measured <= fitted_C * bound_term (test cells)
};

struct BoundCheck {
  double fitted_c = 0.0;
  std::vector<BoundCell> cells;
  bool all_pass = true;
};

// Fits C on the calibration grid (least squares, raised to the observed
// envelope with a 10% margin) and requires the bound on the test grid.
BoundCheck calibrate_and_test(const DriftingQuadratic& objective, const std::string& label,
                              std::span<const double> cal_etas,
                              std::span<const double> cal_gammas,
                              std::span<const double> test_etas,
                              std::span<const double> test_gammas, long T, int repeats,
                              std::uint64_t seed);

}  // namespace abrlab
