#include "introspect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace introspect::metrics {

namespace {

bool labels_unique(const std::vector<std::string>& labels) {
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) return false;
  }
  return true;
}

}  // namespace

ProbabilityDistribution::ProbabilityDistribution(std::vector<std::string> outcomes,
                                                 Eigen::VectorXd raw)
    : outcomes_(std::move(outcomes)), probs_(std::move(raw)) {
  if (outcomes_.empty() || static_cast<Eigen::Index>(outcomes_.size()) != probs_.size()) {
    throw LabelMismatch("distribution: outcome/probability lengths differ");
  }
  if (!labels_unique(outcomes_)) {
    throw LabelMismatch("distribution: duplicate outcome label");
  }
  if ((probs_.array() < 0.0).any() || !probs_.allFinite()) {
    throw NonFinite("distribution: probabilities must be finite and non-negative");
  }
  pre_normalization_sum_ = probs_.sum();
  if (pre_normalization_sum_ <= 0.0) {
    throw NonFinite("distribution: probabilities sum to zero");
  }
  probs_ /= pre_normalization_sum_;
}

ProbabilityDistribution ProbabilityDistribution::over_ab(double p_a, double p_b) {
  Eigen::VectorXd raw(2);
  raw << p_a, p_b;
  return ProbabilityDistribution({"A", "B"}, std::move(raw));
}

void ScoreMatrix::validate() const {
  if (static_cast<Eigen::Index>(row_labels.size()) != values.rows() ||
      static_cast<Eigen::Index>(col_labels.size()) != values.cols()) {
    throw DimensionMismatch("score matrix: label/value shape mismatch");
  }
  if (!labels_unique(row_labels) || !labels_unique(col_labels)) {
    throw LabelMismatch("score matrix: duplicate row or column label");
  }
}

Eigen::Index ScoreMatrix::row_index(const std::string& label) const {
  const auto it = std::find(row_labels.begin(), row_labels.end(), label);
  if (it == row_labels.end()) throw LabelMismatch("score matrix: unknown row " + label);
  return static_cast<Eigen::Index>(it - row_labels.begin());
}

Eigen::Index ScoreMatrix::col_index(const std::string& label) const {
  const auto it = std::find(col_labels.begin(), col_labels.end(), label);
  if (it == col_labels.end()) throw LabelMismatch("score matrix: unknown column " + label);
  return static_cast<Eigen::Index>(it - col_labels.begin());
}

double kl_divergence(const ProbabilityDistribution& p, const ProbabilityDistribution& q,
                     double smoothing) {
  if (!p.same_outcomes(q)) throw LabelMismatch("kl_divergence: outcome labels differ");
  if (smoothing < 0.0) throw NonFinite("kl_divergence: negative smoothing");

  const Eigen::VectorXd& pp = p.probs();
  Eigen::VectorXd qq = q.probs();

  bool needs_smoothing = false;
  for (Eigen::Index i = 0; i < pp.size(); ++i) {
    if (pp(i) > 0.0 && qq(i) == 0.0) {
      needs_smoothing = true;
      break;
    }
  }
  if (needs_smoothing) {
    if (smoothing == 0.0) {
      throw NonFinite("kl_divergence: q has a zero where p is positive and smoothing is 0");
    }
    qq.array() += smoothing;
    qq /= qq.sum();
  }

  double d = 0.0;
  for (Eigen::Index i = 0; i < pp.size(); ++i) {
    if (pp(i) > 0.0) d += pp(i) * std::log(pp(i) / qq(i));
  }
  return d < 0.0 ? 0.0 : d;
}

double jsd_multi(const std::vector<ProbabilityDistribution>& dists) {
  if (dists.size() < 2) throw LabelMismatch("jsd_multi: needs at least two distributions");
  for (std::size_t i = 1; i < dists.size(); ++i) {
    if (!dists[i].same_outcomes(dists[0])) {
      throw LabelMismatch("jsd_multi: outcome labels differ");
    }
  }

  Eigen::VectorXd mixture = Eigen::VectorXd::Zero(dists[0].size());
  for (const auto& d : dists) mixture += d.probs();
  mixture /= static_cast<double>(dists.size());

  // M_i = 0 implies every component is 0 there, so no smoothing is required.
  double total = 0.0;
  for (const auto& d : dists) {
    const Eigen::VectorXd& pp = d.probs();
    for (Eigen::Index i = 0; i < pp.size(); ++i) {
      if (pp(i) > 0.0) total += pp(i) * std::log(pp(i) / mixture(i));
    }
  }
  const double jsd = total / static_cast<double>(dists.size());
  return jsd < 0.0 ? 0.0 : jsd;
}

double shannon_entropy(const ProbabilityDistribution& p) { return entropy_nats(p.probs()); }

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return cosine(u, v);
}

std::vector<double> minmax_normalize(const std::vector<double>& column) {
  if (column.empty()) throw EmptyColumn("minmax_normalize: empty column");
  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(column.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double span = hi - lo;
  std::transform(column.begin(), column.end(), out.begin(),
                 [&](double x) { return (x - lo) / span; });
  return out;
}

ScoreMatrix double_center_log(const ScoreMatrix& matrix, double epsilon) {
  matrix.validate();
  if ((matrix.values.array() < 0.0).any()) {
    throw NegativeEntry("double_center_log: matrix entries must be non-negative");
  }
  if (epsilon == 0.0 && (matrix.values.array() == 0.0).any()) {
    throw NonFinite("double_center_log: zero entry with epsilon 0");
  }

  Eigen::MatrixXd log_values = (matrix.values.array() + epsilon).log().matrix();
  const Eigen::VectorXd row_means = log_values.rowwise().mean();
  const Eigen::RowVectorXd col_means = log_values.colwise().mean();
  const double grand_mean = log_values.mean();

  Eigen::MatrixXd centered = log_values;
  centered.colwise() -= row_means;
  centered.rowwise() -= col_means;
  centered.array() += grand_mean;

  return ScoreMatrix{matrix.row_labels, matrix.col_labels, std::move(centered)};
}

PairedTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw LengthMismatch("paired_t_test: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw LengthMismatch("paired_t_test: needs at least two pairs");

  Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd diff = xv - yv;
  const double mean = diff.mean();
  const double ss = (diff.array() - mean).square().sum();
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    std::ostringstream msg;
    msg << "paired_t_test: zero variance, mean_difference " << mean;
    throw ZeroVariance(msg.str());
  }

  PairedTestResult result;
  result.mean_difference = mean;
  result.degrees_of_freedom = static_cast<int>(n - 1);
  result.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  result.p_value = student_t_two_sided_p(result.t_statistic, result.degrees_of_freedom);
  return result;
}

ClosestPair closest_pair_similarity(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.size() < 2) {
    throw DimensionMismatch("closest_pair_similarity: needs at least two vectors");
  }
  ClosestPair best;
  best.max_similarity = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double sim = cosine_similarity(vectors[i], vectors[j]);
      if (sim > best.max_similarity) {
        best.max_similarity = sim;
        best.pair = {i, j};
      }
    }
  }
  return best;
}

namespace {

// Continued fraction for the incomplete beta function, modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw NonFinite("incomplete beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int degrees_of_freedom) {
  if (degrees_of_freedom < 1) throw NonFinite("student t: dof must be positive");
  const double nu = static_cast<double>(degrees_of_freedom);
  const double x = nu / (nu + t * t);
  double p = regularized_incomplete_beta(nu / 2.0, 0.5, x);
  if (p < 0.0) p = 0.0;
  if (p > 1.0) p = 1.0;
  return p;
}

}  // namespace introspect::metrics
