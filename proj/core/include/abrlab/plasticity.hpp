// Plasticity diagnostics over captured activations and parameters:
// dormant-neuron ratio, batch rank, effective rank, approximate rank,
// expert load balance, and per-segment weight statistics.

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abrlab/diff.hpp"

namespace abrlab {

struct ActivationBatch {
  int rows = 0;  // B samples
  int cols = 0;  // H neurons
  std::vector<double> m;  // row-major B x H, post-activation

  double& at(int r, int c) { return m[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return m[static_cast<std::size_t>(r) * cols + c]; }
};

class SVDFailure : public std::runtime_error {
 public:
  explicit SVDFailure(const std::string& what) : std::runtime_error(what) {}
};
class ZeroMatrix : public std::invalid_argument {
 public:
  ZeroMatrix() : std::invalid_argument("all singular values are zero") {}
};
class EmptyLog : public std::invalid_argument {
 public:
  EmptyLog() : std::invalid_argument("empty route log") {}
};

// Singular values, descending, via one-sided Jacobi on the smaller dimension.
std::vector<double> singular_values(const ActivationBatch& batch);

// Numerical-rank cutoff: sigma > sigma_max * max(B,H) * DBL_EPSILON.
double rank_tolerance(const ActivationBatch& batch, std::span<const double> sigma);

// Dormancy index s_i = mean|h_i| / ((1/H) sum_j mean|h_j|); ratio of s_i <= tau.
// A zero denominator means every neuron is dormant (ratio 1).
double dormant_ratio(const ActivationBatch& batch, double tau = 0.025);

// Count of singular values above the rank tolerance.
int batch_rank(const ActivationBatch& batch);

// exp of the Shannon entropy of sigma_i / sum|sigma_j| (values under the rank
// tolerance are treated as zero, so the result never exceeds batch_rank).
double effective_rank(const ActivationBatch& batch);

// Smallest r with sum_{i<=r} sigma_i^2 / sum sigma_j^2 >= prop.
int approx_rank(const ActivationBatch& batch, double prop = 0.99);

// Selection frequencies summing to 1.
std::vector<double> load_balance(std::span<const int> selections, int n_experts);

struct SegmentStat {
  std::string name;
  double mean_abs_weight = 0.0;
};
std::vector<SegmentStat> weight_stats(const ParamSet& params);

}  // namespace abrlab
