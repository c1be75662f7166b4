// Aggregation statistics for the evaluation protocol: interquartile mean,
// binned empirical CDF, and Student-t confidence intervals.

#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace abrlab {

class TooFewValues : public std::invalid_argument {
 public:
  explicit TooFewValues(const std::string& what) : std::invalid_argument(what) {}
};

// Drops floor(n/4) smallest and largest values, means the rest. n >= 4.
double iqm(std::span<const double> values);

// Histogram over [min, max] with `bins` equal bins; cumulative counts
// normalized by n. Returns (right bin edge, F); final F is exactly 1.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> values, int bins);

struct TInterval {
  double mean = 0.0;
  double half_width = 0.0;
};

// mean +- t_{n-1,(1+level)/2} * s / sqrt(n). n >= 2.
TInterval t_interval(std::span<const double> values, double level = 0.95);

// Inverse CDF of Student's t with nu degrees of freedom; |error| < 1e-6.
double student_t_quantile(double nu, double p);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

double mean_of(std::span<const double> values);
double sample_std(std::span<const double> values);

// Least-squares slope of y against x.
double ls_slope(std::span<const double> x, std::span<const double> y);

}  // namespace abrlab
