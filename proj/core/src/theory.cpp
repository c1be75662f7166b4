#include "abrlab/theory.hpp"

#include <algorithm>
#include <cmath>

namespace abrlab {

const char* to_string(DriftKind k) {
  switch (k) {
    case DriftKind::linear: return "linear";
    case DriftKind::jump: return "jump";
    case DriftKind::sinusoid: return "sinusoid";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return dot(a, a); }

}  // namespace

DriftingQuadratic::DriftingQuadratic(int dim, double mu, double L, DriftKind drift,
                                     double target_path, long horizon, std::uint64_t seed)
    : dim_(dim), strong_convexity_(mu), smoothness_(L), kind_(drift) {
  if (dim < 1 || mu <= 0.0 || L < mu) {
    throw std::invalid_argument("DriftingQuadratic: need dim >= 1, 0 < mu <= L");
  }
  if (horizon < 2) throw std::invalid_argument("DriftingQuadratic: horizon >= 2");

  RngStream rng(seed, "quadratic");

  // Random orthogonal basis via Gram-Schmidt on Gaussian columns.
  std::vector<std::vector<double>> q(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    auto& col = q[static_cast<std::size_t>(j)];
    col.resize(static_cast<std::size_t>(dim));
    for (double& v : col) v = rng.normal();
    for (int k = 0; k < j; ++k) {
      const double proj = dot(col, q[static_cast<std::size_t>(k)]);
      for (int i = 0; i < dim; ++i) {
        col[static_cast<std::size_t>(i)] -= proj * q[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      }
    }
    const double nrm = std::sqrt(norm2(col));
    for (double& v : col) v /= nrm;
  }
  // Eigenvalues: extremes pinned to mu and L, interior log-uniform.
  std::vector<double> lambda(static_cast<std::size_t>(dim));
  lambda[0] = mu;
  if (dim > 1) lambda[static_cast<std::size_t>(dim - 1)] = L;
  for (int i = 1; i + 1 < dim; ++i) {
    lambda[static_cast<std::size_t>(i)] =
        std::exp(rng.uniform(std::log(mu), std::log(L)));
  }
  hessian_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int k = 0; k < dim; ++k) {
    const auto& col = q[static_cast<std::size_t>(k)];
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        hessian_[static_cast<std::size_t>(i) * dim + j] +=
            lambda[static_cast<std::size_t>(k)] * col[static_cast<std::size_t>(i)] *
            col[static_cast<std::size_t>(j)];
      }
    }
  }

  direction_.resize(static_cast<std::size_t>(dim));
  for (double& v : direction_) v = rng.normal();
  const double nrm = std::sqrt(norm2(direction_));
  for (double& v : direction_) v /= nrm;

  switch (kind_) {
    case DriftKind::linear:
      step_norm_ = target_path / static_cast<double>(horizon - 1);
      break;
    case DriftKind::jump: {
      const long jumps = (horizon - 1) / jump_period_;
      jump_norm_ = jumps > 0 ? target_path / static_cast<double>(jumps) : 0.0;
      break;
    }
    case DriftKind::sinusoid: {
      sin_amp_ = 1.0;
      // Scale the amplitude so the realized path length hits the target.
      const double unit_path = path_length(horizon);
      sin_amp_ = unit_path > 0.0 ? target_path / unit_path : 0.0;
      break;
    }
  }
}

std::vector<double> DriftingQuadratic::optimum_at(long t) const {
  double shift = 0.0;
  switch (kind_) {
    case DriftKind::linear:
      shift = step_norm_ * static_cast<double>(t);
      break;
    case DriftKind::jump:
      shift = jump_norm_ * static_cast<double>(t / jump_period_);
      break;
    case DriftKind::sinusoid:
      shift = sin_amp_ * std::sin(2.0 * M_PI * static_cast<double>(t) / sin_period_);
      break;
  }
  std::vector<double> w(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) w[static_cast<std::size_t>(i)] = shift * direction_[static_cast<std::size_t>(i)];
  return w;
}

double DriftingQuadratic::path_length(long T) const {
  double total = 0.0;
  auto prev = optimum_at(0);
  for (long t = 1; t < T; ++t) {
    auto cur = optimum_at(t);
    double d2 = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double d = cur[static_cast<std::size_t>(i)] - prev[static_cast<std::size_t>(i)];
      d2 += d * d;
    }
    total += std::sqrt(d2);
    prev = std::move(cur);
  }
  return total;
}

void DriftingQuadratic::grad(std::span<const double> w, long t, std::span<double> out) const {
  const auto opt = optimum_at(t);
  std::vector<double> diff(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) {
    diff[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] - opt[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    const double* row = hessian_.data() + static_cast<std::size_t>(i) * dim_;
    for (int j = 0; j < dim_; ++j) acc += row[j] * diff[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
}

PlateauDrift::PlateauDrift(int dim, double offset, double plateau, long period)
    : dim_(dim), offset_(offset), plateau_(plateau), period_(period) {
  if (dim < 1 || offset <= 0.0 || plateau <= 0.0 || period < 1) {
    throw std::invalid_argument("PlateauDrift: bad parameters");
  }
  if (plateau >= offset) throw std::invalid_argument("PlateauDrift: plateau must be < offset");
}

void PlateauDrift::grad(std::span<const double> w, long t, std::span<double> out) const {
  const double c = center(t);
  const double stale = -c;  // previous regime's center
  for (int i = 0; i < dim_; ++i) {
    const double x = w[static_cast<std::size_t>(i)];
    if (std::abs(x - stale) <= plateau_) {
      out[static_cast<std::size_t>(i)] = 0.0;  // flat around the stale optimum
    } else {
      out[static_cast<std::size_t>(i)] = x - c;  // unit-curvature pull to the center
    }
  }
}

std::vector<double> PlateauDrift::optimum_at(long t) const {
  return std::vector<double>(static_cast<std::size_t>(dim_), center(t));
}

double PlateauDrift::path_length(long T) const {
  const long switches = (T - 1) / period_;
  return static_cast<double>(switches) * 2.0 * offset_ * std::sqrt(static_cast<double>(dim_));
}

double check_cocoercivity(const DriftingQuadratic& objective, int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("trials >= 1");
  const int d = objective.dim();
  std::vector<double> w(static_cast<std::size_t>(d)), wp(static_cast<std::size_t>(d));
  std::vector<double> g(static_cast<std::size_t>(d)), gp(static_cast<std::size_t>(d));
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    for (double& v : w) v = rng.normal();
    for (double& v : wp) v = rng.normal();
    objective.grad(w, 0, g);
    objective.grad(wp, 0, gp);
    std::vector<double> dg(static_cast<std::size_t>(d)), dw(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      dg[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] - gp[static_cast<std::size_t>(i)];
      dw[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] - wp[static_cast<std::size_t>(i)];
    }
    worst = std::max(worst, norm2(dg) - objective.smoothness() * dot(dg, dw));
  }
  return worst;
}

double check_strong_convexity(const DriftingQuadratic& objective, int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("trials >= 1");
  const int d = objective.dim();
  std::vector<double> w(static_cast<std::size_t>(d)), wp(static_cast<std::size_t>(d));
  std::vector<double> g(static_cast<std::size_t>(d)), gp(static_cast<std::size_t>(d));
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    for (double& v : w) v = rng.normal();
    for (double& v : wp) v = rng.normal();
    objective.grad(w, 0, g);
    objective.grad(wp, 0, gp);
    std::vector<double> dg(static_cast<std::size_t>(d)), dw(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      dg[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] - gp[static_cast<std::size_t>(i)];
      dw[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] - wp[static_cast<std::size_t>(i)];
    }
    worst = std::max(worst, objective.mu() * norm2(dw) - dot(dg, dw));
  }
  return worst;
}

double check_norm_inequality(int trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("trials >= 1");
  double worst = -std::numeric_limits<double>::infinity();
  constexpr int d = 8;
  std::vector<double> a(d), b(d), s(d);
  for (int k = 0; k < trials; ++k) {
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    const double alpha = std::exp(rng.uniform(-4.0, 4.0));
    for (int i = 0; i < d; ++i) s[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];
    const double lhs = norm2(s);
    const double rhs = (1.0 + alpha) * norm2(a) + (1.0 + 1.0 / alpha) * norm2(b);
    worst = std::max(worst, lhs - rhs);
  }
  return worst;
}

TrackingResult run_tracking(const DriftingObjective& objective, double eta, double gamma,
                            long T, int repeats, std::uint64_t seed,
                            std::span<const double> initial_offset) {
  if (eta <= 0.0) throw std::invalid_argument("run_tracking: eta must be > 0");
  if (eta > objective.max_step()) throw StepTooLarge(eta, objective.max_step());
  if (T < 1 || repeats < 1) throw std::invalid_argument("run_tracking: T, repeats >= 1");
  const int d = objective.dim();
  if (!initial_offset.empty() && static_cast<int>(initial_offset.size()) != d) {
    throw std::invalid_argument("run_tracking: offset dimension mismatch");
  }

  TrackingResult result;
  result.per_step.assign(static_cast<std::size_t>(T), 0.0);

  std::vector<double> w(static_cast<std::size_t>(d)), g(static_cast<std::size_t>(d));
  for (int rep = 0; rep < repeats; ++rep) {
    RngStream noise(seed, "tracking_noise", static_cast<std::uint64_t>(rep));
    const auto w0 = objective.optimum_at(0);
    std::copy(w0.begin(), w0.end(), w.begin());
    for (std::size_t i = 0; i < initial_offset.size(); ++i) w[i] += initial_offset[i];
    for (long t = 0; t < T; ++t) {
      objective.grad(w, t, g);
      for (int i = 0; i < d; ++i) {
        w[static_cast<std::size_t>(i)] +=
            -eta * g[static_cast<std::size_t>(i)] + eta * gamma * noise.normal();
      }
      const auto opt = objective.optimum_at(t + 1);
      double e2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const double e = w[static_cast<std::size_t>(i)] - opt[static_cast<std::size_t>(i)];
        e2 += e * e;
      }
      result.per_step[static_cast<std::size_t>(t)] += e2;
    }
  }
  double total = 0.0;
  for (double& v : result.per_step) {
    v /= repeats;
    total += v;
  }
  result.avg_sq_error = total / static_cast<double>(T);
  const double path = objective.path_length(T);
  result.bound_term = eta * gamma * gamma * d + path * path / (static_cast<double>(T) * eta);
  return result;
}

std::vector<std::pair<double, double>> sweep_gamma(const DriftingObjective& objective,
                                                   double eta, std::span<const double> gammas,
                                                   long T, int repeats, std::uint64_t seed) {
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    if (gammas[i] <= gammas[i - 1]) {
      throw std::invalid_argument("sweep_gamma: gammas must ascend");
    }
  }
  if (gammas.empty() || gammas[0] != 0.0) {
    throw std::invalid_argument("sweep_gamma: list must start at 0");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(gammas.size());
  for (double g : gammas) {
    out.emplace_back(g, run_tracking(objective, eta, g, T, repeats, seed).avg_sq_error);
  }
  return out;
}

std::vector<std::pair<double, double>> sweep_eta(const DriftingObjective& objective,
                                                 std::span<const double> etas, double gamma,
                                                 long T, int repeats, std::uint64_t seed) {
  std::vector<std::pair<double, double>> out;
  out.reserve(etas.size());
  for (double e : etas) {
    out.emplace_back(e, run_tracking(objective, e, gamma, T, repeats, seed).avg_sq_error);
  }
  return out;
}

BoundCheck calibrate_and_test(const DriftingQuadratic& objective, const std::string& label,
                              std::span<const double> cal_etas,
                              std::span<const double> cal_gammas,
                              std::span<const double> test_etas,
                              std::span<const double> test_gammas, long T, int repeats,
                              std::uint64_t seed) {
  BoundCheck check;
  double num = 0.0, den = 0.0, envelope = 0.0;
  for (double eta : cal_etas) {
    for (double gamma : cal_gammas) {
      const auto r = run_tracking(objective, eta, gamma, T, repeats, seed);
      num += r.avg_sq_error * r.bound_term;
      den += r.bound_term * r.bound_term;
      envelope = std::max(envelope, r.avg_sq_error / r.bound_term);
      check.cells.push_back({label, eta, gamma, r.avg_sq_error, r.bound_term, true, true});
    }
  }
  // Least squares gives the scale; the constant must also dominate every
  // calibration ratio for the bound to be a bound. 10% headroom for the
  // held-out cells.
  check.fitted_c = std::max(num / den, envelope) * 1.10;
  for (double eta : test_etas) {
    for (double gamma : test_gammas) {
      const auto r = run_tracking(objective, eta, gamma, T, repeats, seed);
      BoundCell cell{label, eta, gamma, r.avg_sq_error, r.bound_term, false, true};
      cell.pass = r.avg_sq_error <= check.fitted_c * r.bound_term;
      check.all_pass = check.all_pass && cell.pass;
      check.cells.push_back(cell);
    }
  }
  return check;
}

}  // namespace abrlab
