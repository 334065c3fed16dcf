#include "sage/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sage {

namespace {

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n-1 denominator
};

MeanVar mean_and_variance(std::span<const double> sample) {
  MeanVar mv;
  const size_t n = sample.size();
  double sum = 0.0;
  for (double v : sample) sum += v;
  mv.mean = sum / static_cast<double>(n);
  if (n < 2) return mv;
  double ss = 0.0;
  for (double v : sample) {
    const double d = v - mv.mean;
    ss += d * d;
  }
  mv.variance = ss / static_cast<double>(n - 1);
  return mv;
}

void require_same_dimensions(const std::vector<DimensionAssessment>& a,
                             const std::vector<DimensionAssessment>& b) {
  if (a.size() != b.size())
    raise(Errc::layer_mismatch, "assessment vectors differ in arity");
  for (const auto& lhs : a) {
    const bool found = std::any_of(b.begin(), b.end(), [&](const DimensionAssessment& rhs) {
      return rhs.dimension_id == lhs.dimension_id;
    });
    if (!found)
      raise(Errc::layer_mismatch, "dimension " + lhs.dimension_id + " missing from peer");
  }
}

}  // namespace

ConvergenceResult convergence(const RoundOutput& round4, const RoundOutput& round5) {
  require_same_dimensions(round4.assessments, round5.assessments);
  ConvergenceResult result;
  result.cell_convergent = true;
  for (const auto& final_assessment : round5.assessments) {
    const auto& prior = round4.assessment(final_assessment.dimension_id);
    const int delta_tenths = std::abs(final_assessment.score_tenths - prior.score_tenths);
    DimensionConvergence dc;
    dc.delta = scale::tenths_to_score(delta_tenths);
    dc.convergent = delta_tenths < kConvergenceThresholdTenths;
    result.cell_convergent = result.cell_convergent && dc.convergent;
    result.per_dimension[final_assessment.dimension_id] = dc;
  }
  return result;
}

AgreementResult agreement(const RoundOutput& final_round, const ValidatorReport& validator) {
  require_same_dimensions(final_round.assessments, validator.independent_assessments);
  AgreementResult result;
  int sum_tenths = 0;
  for (const auto& final_assessment : final_round.assessments) {
    const auto& peer = validator.assessment(final_assessment.dimension_id);
    const int diff_tenths = std::abs(final_assessment.score_tenths - peer.score_tenths);
    sum_tenths += diff_tenths;
    result.per_dimension_abs_diff[final_assessment.dimension_id] =
        scale::tenths_to_score(diff_tenths);
    result.per_dimension_agrees[final_assessment.dimension_id] =
        diff_tenths < kAgreementThresholdTenths;
  }
  const int n = static_cast<int>(final_round.assessments.size());
  result.mad = static_cast<double>(sum_tenths) / (10.0 * n);
  // mad < 0.5 iff sum < n * 5 tenths; integer comparison keeps it exact.
  result.agrees = sum_tenths < n * kAgreementThresholdTenths;
  return result;
}

double layer_score(const std::vector<DimensionAssessment>& assessments) {
  if (assessments.size() != 4)
    raise(Errc::wrong_arity, "layer score needs exactly 4 assessments, got " +
                                 std::to_string(assessments.size()));
  int sum_tenths = 0;
  for (const auto& a : assessments) sum_tenths += a.score_tenths;
  return static_cast<double>(sum_tenths) / 40.0;
}

StatResult welch_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2)
    raise(Errc::too_few_samples, "welch t-test needs at least 2 values per sample");
  const MeanVar a = mean_and_variance(x);
  const MeanVar b = mean_and_variance(y);
  if (a.variance == 0.0 && b.variance == 0.0)
    raise(Errc::degenerate_variance, "both samples constant");
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  const double se2 = a.variance / na + b.variance / nb;
  StatResult result;
  result.method = "welch_t";
  result.statistic = (a.mean - b.mean) / std::sqrt(se2);
  const double df_num = se2 * se2;
  const double df_den = (a.variance / na) * (a.variance / na) / (na - 1.0) +
                        (b.variance / nb) * (b.variance / nb) / (nb - 1.0);
  result.df = df_num / df_den;
  result.p_value = student_t_two_sided_p(result.statistic, *result.df);
  result.effect_size = cohens_d(x, y);
  return result;
}

StatResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    raise(Errc::length_mismatch, "paired samples must have equal length");
  if (x.size() < 2) raise(Errc::too_few_samples, "paired t-test needs at least 2 pairs");
  std::vector<double> diffs(x.size());
  for (size_t i = 0; i < x.size(); ++i) diffs[i] = x[i] - y[i];
  const MeanVar d = mean_and_variance(diffs);
  StatResult result;
  result.method = "paired_t";
  result.df = static_cast<double>(x.size() - 1);
  if (d.variance == 0.0) {
    if (d.mean == 0.0) {  // genuinely no effect
      result.statistic = 0.0;
      result.p_value = 1.0;
      return result;
    }
    raise(Errc::degenerate_variance, "constant nonzero differences");
  }
  const double n = static_cast<double>(x.size());
  result.statistic = d.mean / std::sqrt(d.variance / n);
  result.p_value = student_t_two_sided_p(result.statistic, *result.df);
  return result;
}

double cohens_d(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2)
    raise(Errc::too_few_samples, "cohens_d needs at least 2 values per sample");
  const MeanVar a = mean_and_variance(x);
  const MeanVar b = mean_and_variance(y);
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  const double pooled_var =
      ((na - 1.0) * a.variance + (nb - 1.0) * b.variance) / (na + nb - 2.0);
  if (pooled_var == 0.0) raise(Errc::degenerate_variance, "pooled variance is zero");
  return (a.mean - b.mean) / std::sqrt(pooled_var);
}

StatResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) raise(Errc::too_few_groups, "anova needs at least 2 groups");
  for (const auto& g : groups)
    if (g.size() < 2) raise(Errc::too_few_samples, "each group needs at least 2 values");

  const size_t k = groups.size();
  size_t total = 0;
  std::vector<MeanVar> stats(k);
  for (size_t i = 0; i < k; ++i) {
    stats[i] = mean_and_variance(groups[i]);
    total += groups[i].size();
  }

  double ssw = 0.0;
  for (size_t i = 0; i < k; ++i)
    ssw += stats[i].variance * static_cast<double>(groups[i].size() - 1);
  if (ssw == 0.0) raise(Errc::degenerate_variance, "zero within-group variance");

  const bool all_means_equal = std::all_of(stats.begin(), stats.end(), [&](const MeanVar& s) {
    return s.mean == stats.front().mean;
  });

  StatResult result;
  result.method = "anova_f";
  const double df1 = static_cast<double>(k - 1);
  const double df2 = static_cast<double>(total - k);
  result.df = df1;
  result.df2 = df2;
  if (all_means_equal) {  // equal means give F = 0 exactly
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  double grand = 0.0;
  for (size_t i = 0; i < k; ++i) grand += stats[i].mean * static_cast<double>(groups[i].size());
  grand /= static_cast<double>(total);
  double ssb = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double d = stats[i].mean - grand;
    ssb += static_cast<double>(groups[i].size()) * d * d;
  }
  result.statistic = (ssb / df1) / (ssw / df2);
  result.p_value = f_upper_tail_p(result.statistic, df1, df2);
  return result;
}

std::vector<double> bonferroni(const std::vector<double>& p_values, int m) {
  if (m < static_cast<int>(p_values.size()))
    raise(Errc::invalid_p, "comparison count below the number of p-values");
  std::vector<double> adjusted;
  adjusted.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0))
      raise(Errc::invalid_p, "p-value outside [0, 1]");
    adjusted.push_back(std::min(1.0, p * static_cast<double>(m)));
  }
  return adjusted;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) raise(Errc::length_mismatch, "samples must have equal length");
  if (x.size() < 3) raise(Errc::too_few_samples, "pearson needs at least 3 pairs");
  const MeanVar a = mean_and_variance(x);
  const MeanVar b = mean_and_variance(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - a.mean;
    const double dy = y[i] - b.mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) raise(Errc::degenerate_variance, "constant sample");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t lhs, size_t rhs) { return values[lhs] < values[rhs]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) raise(Errc::length_mismatch, "samples must have equal length");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// ---------------------------------------------------------------------------
// Regularized incomplete beta via modified Lentz continued fraction.
// ---------------------------------------------------------------------------

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr double rel_tol = 1e-14;  // comfortably under the 1e-10 contract
  constexpr double tiny = 1e-300;
  constexpr int max_iterations = 2000;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < rel_tol) return h;
  }
  return h;  // converged as far as doubles allow
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    raise(Errc::out_of_range, "incomplete beta requires positive shape parameters");
  if (!(x >= 0.0 && x <= 1.0))
    raise(Errc::out_of_range, "incomplete beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) raise(Errc::out_of_range, "t distribution needs df > 0");
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

double f_upper_tail_p(double f_stat, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) raise(Errc::out_of_range, "F distribution needs df > 0");
  if (f_stat <= 0.0) return 1.0;
  const double x = df2 / (df2 + df1 * f_stat);
  return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x);
}

double correlation_p_value(double r, int n) {
  if (n < 3) raise(Errc::too_few_samples, "correlation p-value needs n >= 3");
  if (std::fabs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return student_t_two_sided_p(t, df);
}

}  // namespace sage
