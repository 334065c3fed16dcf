#pragma once

#include <string>
#include <vector>

#include "sage/record.hpp"

namespace sage {

/// One rendered analysis table. Cells are preformatted strings so markdown
/// and CSV renderings carry identical numeric values.
struct ReportTable {
  std::string kind;
  std::string title;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footnotes;
};

/// Success rate, parsing success, convergence rate, peer agreement under
/// both counting conventions, mean inter-rater difference, mode-invariance
/// max |delta|.
ReportTable report_reliability(const std::vector<EvaluationRecord>& records);

/// Per layer: mean (SD) per category, Can-Pulp and Can-LLM differences,
/// Welch p (Bonferroni-adjusted over the three pairwise comparisons per
/// layer), Cohen's d; plus an overall row.
ReportTable report_genre(const std::vector<EvaluationRecord>& records);

/// Per layer: content mean, title mean, difference, paired-t p over
/// story-level pairs; stories evaluated in only one mode are excluded and
/// counted in a footnote.
ReportTable report_mode_invariance(const std::vector<EvaluationRecord>& records);

/// Three layer pairs with Pearson r, Spearman rho, and p; flags r >= 0.7
/// against the redundancy threshold.
ReportTable report_correlation(const std::vector<EvaluationRecord>& records);

/// Per dimension: round-5 mean, convergence rate, dimension-level agreement
/// rate, mean |final - validator|.
ReportTable report_dimension_detail(const std::vector<EvaluationRecord>& records);

ReportTable build_report(const std::vector<EvaluationRecord>& records,
                         const std::string& kind);

std::string to_markdown(const ReportTable& table);
std::string to_csv(const ReportTable& table);

/// "<0.001" below threshold, otherwise three decimals.
std::string format_p(double p);

}  // namespace sage
