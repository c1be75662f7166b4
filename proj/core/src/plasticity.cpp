#include "abrlab/plasticity.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

namespace abrlab {

namespace {

void check_batch(const ActivationBatch& batch) {
  if (batch.rows < 1 || batch.cols < 1 ||
      batch.m.size() != static_cast<std::size_t>(batch.rows) * batch.cols) {
    throw std::invalid_argument("ActivationBatch: bad shape");
  }
  for (double v : batch.m) {
    if (!std::isfinite(v)) throw SVDFailure("non-finite activation entry");
  }
}

}  // namespace

std::vector<double> singular_values(const ActivationBatch& batch) {
  check_batch(batch);
  // Work on columns of A; transpose first if that makes fewer columns.
  const bool transpose = batch.rows < batch.cols;
  const int nrow = transpose ? batch.cols : batch.rows;
  const int ncol = transpose ? batch.rows : batch.cols;
  std::vector<double> a(static_cast<std::size_t>(nrow) * ncol);
  for (int r = 0; r < batch.rows; ++r) {
    for (int c = 0; c < batch.cols; ++c) {
      const double v = batch.at(r, c);
      if (transpose) {
        a[static_cast<std::size_t>(c) * ncol + r] = v;
      } else {
        a[static_cast<std::size_t>(r) * ncol + c] = v;
      }
    }
  }
  auto col = [&](int j) { return a.data() + j; };  // stride ncol

  const int max_sweeps = 60;
  const double tol = 1e-14;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < ncol - 1; ++p) {
      for (int q = p + 1; q < ncol; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        const double* cp = col(p);
        const double* cq = col(q);
        for (int i = 0; i < nrow; ++i) {
          const double xp = cp[static_cast<std::size_t>(i) * ncol];
          const double xq = cq[static_cast<std::size_t>(i) * ncol];
          app += xp * xp;
          aqq += xq * xq;
          apq += xp * xq;
        }
        if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        double* mp = col(p);
        double* mq = col(q);
        for (int i = 0; i < nrow; ++i) {
          const std::size_t off = static_cast<std::size_t>(i) * ncol;
          const double xp = mp[off];
          const double xq = mq[off];
          mp[off] = cs * xp - sn * xq;
          mq[off] = sn * xp + cs * xq;
        }
      }
    }
    if (!rotated) break;
    if (sweep == max_sweeps - 1) throw SVDFailure("one-sided Jacobi did not converge");
  }

  std::vector<double> sigma(static_cast<std::size_t>(ncol));
  for (int j = 0; j < ncol; ++j) {
    double s = 0.0;
    const double* cj = col(j);
    for (int i = 0; i < nrow; ++i) {
      const double x = cj[static_cast<std::size_t>(i) * ncol];
      s += x * x;
    }
    sigma[static_cast<std::size_t>(j)] = std::sqrt(s);
  }
  std::sort(sigma.begin(), sigma.end(), std::greater<double>());
  return sigma;
}

double rank_tolerance(const ActivationBatch& batch, std::span<const double> sigma) {
  const double smax = sigma.empty() ? 0.0 : sigma[0];
  return smax * std::max(batch.rows, batch.cols) * DBL_EPSILON;
}

double dormant_ratio(const ActivationBatch& batch, double tau) {
  check_batch(batch);
  if (tau < 0.0) throw std::invalid_argument("dormant_ratio: tau must be >= 0");
  const int H = batch.cols;
  std::vector<double> mean_abs(static_cast<std::size_t>(H), 0.0);
  for (int r = 0; r < batch.rows; ++r) {
    for (int c = 0; c < H; ++c) {
      mean_abs[static_cast<std::size_t>(c)] += std::abs(batch.at(r, c));
    }
  }
  double layer_mean = 0.0;
  for (double& v : mean_abs) {
    v /= batch.rows;
    layer_mean += v;
  }
  layer_mean /= H;
  if (layer_mean <= 0.0) return 1.0;
  int dormant = 0;
  for (double v : mean_abs) {
    if (v / layer_mean <= tau) ++dormant;
  }
  return static_cast<double>(dormant) / H;
}

int batch_rank(const ActivationBatch& batch) {
  const auto sigma = singular_values(batch);
  const double tol = rank_tolerance(batch, sigma);
  int rank = 0;
  for (double s : sigma) {
    if (s > tol) ++rank;
  }
  return rank;
}

double effective_rank(const ActivationBatch& batch) {
  const auto sigma = singular_values(batch);
  const double tol = rank_tolerance(batch, sigma);
  double total = 0.0;
  for (double s : sigma) {
    if (s > tol) total += s;
  }
  if (total <= 0.0) throw ZeroMatrix();
  double h = 0.0;
  for (double s : sigma) {
    if (s > tol) {
      const double p = s / total;
      h -= p * std::log(p);
    }
  }
  return std::exp(h);
}

int approx_rank(const ActivationBatch& batch, double prop) {
  if (prop <= 0.0 || prop > 1.0) throw std::invalid_argument("approx_rank: 0 < prop <= 1");
  const auto sigma = singular_values(batch);
  double total = 0.0;
  for (double s : sigma) total += s * s;
  if (total <= 0.0) throw ZeroMatrix();
  double cum = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    cum += sigma[i] * sigma[i] / total;
    if (cum >= prop) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(sigma.size());
}

std::vector<double> load_balance(std::span<const int> selections, int n_experts) {
  if (selections.empty()) throw EmptyLog();
  std::vector<double> freq(static_cast<std::size_t>(n_experts), 0.0);
  for (int s : selections) {
    if (s < 0 || s >= n_experts) throw std::out_of_range("load_balance: expert index");
    freq[static_cast<std::size_t>(s)] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(selections.size());
  return freq;
}

std::vector<SegmentStat> weight_stats(const ParamSet& params) {
  std::vector<SegmentStat> stats;
  const ParamLayout& layout = *params.layout();
  stats.reserve(static_cast<std::size_t>(layout.count()));
  for (int id = 0; id < layout.count(); ++id) {
    const auto seg = params.seg(id);
    double acc = 0.0;
    for (double v : seg) acc += std::abs(v);
    stats.push_back({layout.seg(id).name, acc / static_cast<double>(seg.size())});
  }
  return stats;
}

}  // namespace abrlab
