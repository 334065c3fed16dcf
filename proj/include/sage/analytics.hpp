#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sage/transcript.hpp"

namespace sage {

// ---------------------------------------------------------------------------
// Reliability metrics. Convergence and agreement apply strict inequalities on
// integer tenths, so grid scores can never be misclassified by float error.
// ---------------------------------------------------------------------------

/// |R5 - R4| < 0.3, strict.
inline constexpr int kConvergenceThresholdTenths = 3;
/// MAD < 0.5, strict.
inline constexpr int kAgreementThresholdTenths = 5;

struct DimensionConvergence {
  double delta = 0.0;  // |R5 - R4| in score units
  bool convergent = false;
  bool operator==(const DimensionConvergence&) const = default;
};

struct ConvergenceResult {
  std::map<std::string, DimensionConvergence> per_dimension;
  bool cell_convergent = false;  // all four dimensions
  bool operator==(const ConvergenceResult&) const = default;
};

struct AgreementResult {
  std::map<std::string, double> per_dimension_abs_diff;
  std::map<std::string, bool> per_dimension_agrees;  // abs diff < 0.5
  double mad = 0.0;                                  // mean of the four abs diffs
  bool agrees = false;                               // mad < 0.5
  bool operator==(const AgreementResult&) const = default;
};

ConvergenceResult convergence(const RoundOutput& round4, const RoundOutput& round5);
AgreementResult agreement(const RoundOutput& final_round, const ValidatorReport& validator);

/// Unweighted arithmetic mean of exactly four dimension scores, full
/// precision (not grid-snapped). Throws wrong_arity otherwise.
double layer_score(const std::vector<DimensionAssessment>& assessments);

// ---------------------------------------------------------------------------
// Hypothesis tests, effect sizes, correlations.
// ---------------------------------------------------------------------------

struct StatResult {
  double statistic = 0.0;
  std::optional<double> df;
  std::optional<double> df2;  // denominator df (F tests only)
  double p_value = 1.0;
  std::optional<double> effect_size;
  std::string method;
};

/// Welch's unequal-variance t-test, two-sided. effect_size carries Cohen's d.
StatResult welch_t_test(std::span<const double> x, std::span<const double> y);

/// Paired t-test on x - y. All-zero differences are a defined no-effect case
/// (t = 0, p = 1); constant nonzero differences throw degenerate_variance.
StatResult paired_t_test(std::span<const double> x, std::span<const double> y);

/// Standardized mean difference with classic pooled SD (n-1 denominators).
double cohens_d(std::span<const double> x, std::span<const double> y);

StatResult one_way_anova(const std::vector<std::vector<double>>& groups);

/// Each adjusted p = min(1, p * m); requires m >= |p_values| and p in [0, 1].
std::vector<double> bonferroni(const std::vector<double>& p_values, int m);

double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson over average ranks (ties get the mean rank).
double spearman(std::span<const double> x, std::span<const double> y);

/// Average ranks, 1-based, ties averaged.
std::vector<double> average_ranks(std::span<const double> values);

// ---------------------------------------------------------------------------
// Distribution tails, computed via the regularized incomplete beta function
// (continued fraction, relative tolerance 1e-12) -- no table dependence.
// ---------------------------------------------------------------------------

double regularized_incomplete_beta(double a, double b, double x);
double student_t_two_sided_p(double t, double df);
double f_upper_tail_p(double f_stat, double df1, double df2);
/// Two-sided p for a correlation coefficient via the t transform, df = n-2.
double correlation_p_value(double r, int n);

}  // namespace sage
