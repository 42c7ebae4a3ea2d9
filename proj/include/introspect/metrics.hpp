#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "introspect/errors.hpp"

namespace introspect::metrics {

// All divergences and entropies are in nats.

inline constexpr double kDefaultKlSmoothing = 1e-9;
inline constexpr double kDefaultCenteringEpsilon = 1e-6;

/// Finite distribution over labeled outcomes. Construction renormalizes the
/// raw weights to sum to 1 and keeps the pre-normalization sum for
/// provenance.
class ProbabilityDistribution {
 public:
  ProbabilityDistribution(std::vector<std::string> outcomes, Eigen::VectorXd raw);

  /// Binary distribution over the labels {"A","B"}.
  static ProbabilityDistribution over_ab(double p_a, double p_b);

  const std::vector<std::string>& outcomes() const { return outcomes_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  double pre_normalization_sum() const { return pre_normalization_sum_; }
  Eigen::Index size() const { return probs_.size(); }

  bool same_outcomes(const ProbabilityDistribution& other) const {
    return outcomes_ == other.outcomes_;
  }

 private:
  std::vector<std::string> outcomes_;
  Eigen::VectorXd probs_;
  double pre_normalization_sum_ = 0.0;
};

/// Rectangular score matrix with target rows and observer columns.
struct ScoreMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;

  void validate() const;
  Eigen::Index row_index(const std::string& label) const;
  Eigen::Index col_index(const std::string& label) const;
};

struct PairedTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;  // two-sided
  double mean_difference = 0.0;
};

struct ClosestPair {
  double max_similarity = 0.0;
  std::pair<std::size_t, std::size_t> pair{0, 0};
};

// Expression-friendly kernels over Eigen types.

template <typename Derived>
double entropy_nats(const Eigen::MatrixBase<Derived>& p) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double v = p(i);
    if (v > 0.0) e -= v * std::log(v);
  }
  return e < 0.0 ? 0.0 : e;
}

template <typename DerivedU, typename DerivedV>
double cosine(const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) throw DimensionMismatch("cosine: vector lengths differ");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw ZeroVector("cosine: zero-norm vector");
  const double c = u.dot(v) / (nu * nv);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

/// KL(p‖q) = Σ p_i ln(p_i/q_i), with 0·ln(0/·) ≡ 0. Smoothing is added to q
/// (then q renormalized) only when some q_i = 0 coincides with p_i > 0;
/// smoothing = 0 in that situation raises NonFinite.
double kl_divergence(const ProbabilityDistribution& p, const ProbabilityDistribution& q,
                     double smoothing = kDefaultKlSmoothing);

/// Equal-weight multi-distribution Jensen-Shannon divergence:
/// mean_i KL(D_i ‖ M) with M the arithmetic mixture. Bounded by ln(k).
double jsd_multi(const std::vector<ProbabilityDistribution>& dists);

double shannon_entropy(const ProbabilityDistribution& p);

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// (x - min)/(max - min); a constant column maps to all 0.5.
std::vector<double> minmax_normalize(const std::vector<double>& column);

/// C = L - row mean - col mean + grand mean with L = ln(A + ε). Output row
/// and column means vanish by construction.
ScoreMatrix double_center_log(const ScoreMatrix& matrix, double epsilon = kDefaultCenteringEpsilon);

/// Two-sided paired t-test with sample (n-1) standard deviation. Identical
/// differences raise ZeroVariance rather than returning ±inf.
PairedTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y);

/// Maximum pairwise cosine similarity; ties break to the lowest index pair.
ClosestPair closest_pair_similarity(const std::vector<Eigen::VectorXd>& vectors);

/// Two-sided Student-t tail probability via the regularized incomplete beta
/// function.
double student_t_two_sided_p(double t, int degrees_of_freedom);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace introspect::metrics
