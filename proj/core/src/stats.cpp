#include "abrlab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace abrlab {

double mean_of(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  const double m = mean_of(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

double iqm(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) throw TooFewValues("iqm: need at least 4 values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t drop = n / 4;
  double acc = 0.0;
  for (std::size_t i = drop; i < n - drop; ++i) acc += sorted[i];
  return acc / static_cast<double>(n - 2 * drop);
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> values,
                                                     int bins) {
  if (bins < 2) throw std::invalid_argument("empirical_cdf: bins must be >= 2");
  if (values.empty()) throw TooFewValues("empirical_cdf: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = (hi - lo) / bins;

  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(static_cast<std::size_t>(bins));
  long cum = 0;
  for (int b = 0; b < bins; ++b) {
    cum += counts[static_cast<std::size_t>(b)];
    cdf.emplace_back(lo + width * (b + 1),
                     static_cast<double>(cum) / static_cast<double>(values.size()));
  }
  cdf.back().second = 1.0;  // exact despite rounding
  return cdf;
}

namespace {

double log_gamma(double x) { return std::lgamma(x); }

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

namespace {

double student_t_cdf(double nu, double t) {
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * incomplete_beta(nu / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

}  // namespace

double student_t_quantile(double nu, double p) {
  if (nu <= 0.0) throw std::invalid_argument("student_t_quantile: nu must be > 0");
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("student_t_quantile: 0 < p < 1");
  if (p == 0.5) return 0.0;
  const bool upper = p > 0.5;
  const double target = upper ? p : 1.0 - p;
  // Bracket then bisect; the CDF is strictly increasing.
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(nu, hi) < target) {
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(nu, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-9 * std::max(1.0, lo)) break;
  }
  const double t = 0.5 * (lo + hi);
  return upper ? t : -t;
}

TInterval t_interval(std::span<const double> values, double level) {
  if (values.size() < 2) throw TooFewValues("t_interval: need at least 2 values");
  if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("t_interval: 0 < level < 1");
  const double n = static_cast<double>(values.size());
  const double m = mean_of(values);
  const double s = sample_std(values);
  const double tq = student_t_quantile(n - 1.0, 0.5 + level / 2.0);
  return {m, tq * s / std::sqrt(n)};
}

double ls_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("ls_slope: need matched series of length >= 2");
  }
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace abrlab
