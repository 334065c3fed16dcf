#include "sage/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace sage {

namespace {

std::string fmt(const char* spec, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), spec, value);
  return buffer;
}

std::string fmt2(double v) { return fmt("%.2f", v); }
std::string fmt_signed2(double v) { return fmt("%+.2f", v); }
std::string fmt3(double v) { return fmt("%.3f", v); }
std::string fmt_rate(double fraction) { return fmt("%.1f%%", fraction * 100.0); }

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::string mean_sd_cell(const std::vector<double>& values) {
  if (values.empty()) return "n/a";
  const double mean = mean_of(values);
  if (values.size() < 2) return fmt2(mean) + " (n/a)";
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return fmt2(mean) + " (" + fmt2(sd) + ")";
}

const std::vector<LayerId> kLayers = {LayerId::L4, LayerId::L5, LayerId::L6};

std::vector<const EvaluationRecord*> completed(const std::vector<EvaluationRecord>& records) {
  std::vector<const EvaluationRecord*> ok;
  for (const auto& r : records)
    if (r.ok() && r.derived) ok.push_back(&r);
  return ok;
}

bool parse_failure(const EvaluationRecord& record) {
  if (!record.failure) return false;
  const auto& code = record.failure->error_code;
  return code == "SchemaViolation" || code == "NotStructured" ||
         code == "ScoreOutOfRange" || code == "ConfidenceOutOfRange" ||
         code == "MissingDimension" || code == "UnknownDimension" || code == "IllegalStep";
}

}  // namespace

std::string format_p(double p) {
  if (p < 0.001) return "<0.001";
  return fmt3(p);
}

ReportTable report_reliability(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) raise(Errc::empty_store, "no records to report on");
  const auto ok = completed(records);
  const double total = static_cast<double>(records.size());

  ReportTable table;
  table.kind = "reliability";
  table.title = "System reliability";
  table.headers = {"Metric", "Value", "Detail"};

  table.rows.push_back({"Total cells", std::to_string(records.size()), ""});
  table.rows.push_back(
      {"Success rate", fmt_rate(static_cast<double>(ok.size()) / total),
       std::to_string(ok.size()) + "/" + std::to_string(records.size()) + " completed"});
  const long parse_failures =
      std::count_if(records.begin(), records.end(),
                    [](const EvaluationRecord& r) { return parse_failure(r); });
  table.rows.push_back({"Parsing success",
                        fmt_rate((total - static_cast<double>(parse_failures)) / total),
                        std::to_string(parse_failures) + " parse failures"});

  long convergent = 0, dimension_cells = 0;
  long agree_dims = 0;
  long agree_cells = 0;
  double abs_diff_sum = 0.0;
  long abs_diff_count = 0;
  for (const auto* r : ok) {
    for (const auto& [dim, dc] : r->derived->convergence.per_dimension) {
      ++dimension_cells;
      if (dc.convergent) ++convergent;
    }
    if (r->derived->agreement.agrees) ++agree_cells;
    for (const auto& [dim, agrees] : r->derived->agreement.per_dimension_agrees)
      if (agrees) ++agree_dims;
    for (const auto& [dim, diff] : r->derived->agreement.per_dimension_abs_diff) {
      abs_diff_sum += diff;
      ++abs_diff_count;
    }
  }
  if (dimension_cells > 0) {
    table.rows.push_back({"Convergence rate",
                          fmt_rate(static_cast<double>(convergent) / dimension_cells),
                          "|R5-R4| < 0.3, strict, over dimension-cells"});
    table.rows.push_back({"Peer agreement (evaluation-level)",
                          fmt_rate(static_cast<double>(agree_cells) / ok.size()),
                          "MAD < 0.5, strict"});
    table.rows.push_back({"Peer agreement (dimension-level)",
                          fmt_rate(static_cast<double>(agree_dims) / dimension_cells),
                          "|final - validator| < 0.5, strict"});
    table.rows.push_back({"Mean inter-rater difference",
                          fmt3(abs_diff_sum / static_cast<double>(abs_diff_count)),
                          "mean |final - validator| over dimension-cells"});
  }

  // Mode invariance: max over layers of |content mean - title mean|.
  double max_delta = 0.0;
  bool have_both_modes = false;
  for (LayerId layer : kLayers) {
    std::vector<double> content, title;
    for (const auto* r : ok) {
      if (r->layer != layer) continue;
      (r->mode == Mode::content_limit ? content : title).push_back(r->derived->layer_score);
    }
    if (!content.empty() && !title.empty()) {
      have_both_modes = true;
      max_delta = std::max(max_delta, std::fabs(mean_of(content) - mean_of(title)));
    }
  }
  table.rows.push_back({"Mode invariance max |delta|",
                        have_both_modes ? fmt3(max_delta) : "n/a",
                        have_both_modes ? "across layers; < 0.05 indicates mode-invariant"
                                        : "needs both modes"});

  table.footnotes.push_back(
      "Peer agreement is reported under both counting conventions; the evaluation-level "
      "convention averages the four dimension differences per cell (MAD), the "
      "dimension-level convention counts dimensions independently.");
  table.footnotes.push_back(
      "Rubric bands are gap-filled to a total partition of [1.0, 5.0] "
      "(Absent [1,2), Weak [2,3), Moderate [3,4), Strong [4,4.5), Exceptional [4.5,5]).");
  return table;
}

namespace {

struct GenreSamples {
  std::vector<double> canonical, pulp, llm;
};

GenreSamples genre_samples(const std::vector<const EvaluationRecord*>& ok, LayerId layer,
                           bool all_layers) {
  GenreSamples samples;
  for (const auto* r : ok) {
    if (!all_layers && r->layer != layer) continue;
    switch (r->category) {
      case Category::canonical: samples.canonical.push_back(r->derived->layer_score); break;
      case Category::pulp: samples.pulp.push_back(r->derived->layer_score); break;
      case Category::llm_generated: samples.llm.push_back(r->derived->layer_score); break;
    }
  }
  return samples;
}

}  // namespace

ReportTable report_genre(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) raise(Errc::empty_store, "no records to report on");
  const auto ok = completed(records);

  int categories_with_two = 0;
  {
    const auto all = genre_samples(ok, LayerId::L4, /*all_layers=*/true);
    std::set<std::string> story_cats[3];
    for (const auto* r : ok) {
      const int idx = static_cast<int>(r->category);
      story_cats[idx].insert(r->story_id);
    }
    for (const auto& stories : story_cats)
      if (stories.size() >= 2) ++categories_with_two;
    (void)all;
  }
  if (categories_with_two < 2)
    raise(Errc::insufficient_groups,
          "genre report needs at least two categories with two stories each");

  ReportTable table;
  table.kind = "genre";
  table.title = "Genre comparison";
  table.headers = {"Layer", "Canonical", "Pulp", "LLM", "Can-Pulp", "Can-LLM", "p (Can-LLM)",
                   "d (Can-LLM)"};

  const auto make_row = [&](const std::string& label, const GenreSamples& s) {
    std::vector<std::string> row(8, "n/a");
    row[0] = label;
    row[1] = mean_sd_cell(s.canonical);
    row[2] = mean_sd_cell(s.pulp);
    row[3] = mean_sd_cell(s.llm);
    if (!s.canonical.empty() && !s.pulp.empty())
      row[4] = fmt_signed2(mean_of(s.canonical) - mean_of(s.pulp));
    if (!s.canonical.empty() && !s.llm.empty())
      row[5] = fmt_signed2(mean_of(s.canonical) - mean_of(s.llm));
    if (s.canonical.size() >= 2 && s.llm.size() >= 2) {
      try {
        const auto test = welch_t_test(s.canonical, s.llm);
        // Bonferroni family: the three pairwise category comparisons per layer.
        row[6] = format_p(bonferroni({test.p_value}, 3)[0]);
        row[7] = fmt2(*test.effect_size);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_variance) throw;
        table.footnotes.push_back(label + ": DegenerateVariance, Welch test not defined.");
      }
    }
    return row;
  };

  for (LayerId layer : kLayers) {
    const auto s = genre_samples(ok, layer, false);
    if (s.canonical.empty() && s.pulp.empty() && s.llm.empty()) continue;
    table.rows.push_back(make_row(to_string(layer), s));
    // Per-layer one-way ANOVA over the categories present.
    std::vector<std::vector<double>> groups;
    for (const auto* g : {&s.canonical, &s.pulp, &s.llm})
      if (g->size() >= 2) groups.push_back(*g);
    if (groups.size() >= 2) {
      try {
        const auto f = one_way_anova(groups);
        table.footnotes.push_back(to_string(layer) + " ANOVA: F(" + fmt("%.0f", *f.df) + ", " +
                                  fmt("%.0f", *f.df2) + ") = " + fmt2(f.statistic) +
                                  ", p = " + format_p(f.p_value) + ".");
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_variance) throw;
        table.footnotes.push_back(to_string(layer) + ": DegenerateVariance, ANOVA not defined.");
      }
    }
  }
  table.rows.push_back(make_row("Overall", genre_samples(ok, LayerId::L4, true)));

  table.footnotes.push_back(
      "Observations are (story, mode) layer scores. p-values are Welch tests "
      "Bonferroni-adjusted over the three pairwise category comparisons per layer; ANOVA is "
      "run per layer.");
  return table;
}

ReportTable report_mode_invariance(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) raise(Errc::empty_store, "no records to report on");
  const auto ok = completed(records);

  ReportTable table;
  table.kind = "mode_invariance";
  table.title = "Mode invariance: content-limit vs title-limit";
  table.headers = {"Layer", "Content-Limit", "Title-Limit", "Difference", "p (paired)"};

  int excluded = 0;
  std::vector<double> all_content, all_title;
  int layers_with_pairs = 0;

  for (LayerId layer : kLayers) {
    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> by_story;
    for (const auto* r : ok) {
      if (r->layer != layer) continue;
      auto& slot = by_story[r->story_id];
      (r->mode == Mode::content_limit ? slot.first : slot.second) = r->derived->layer_score;
    }
    std::vector<double> content, title;
    for (const auto& [story, pair] : by_story) {
      if (pair.first && pair.second) {
        content.push_back(*pair.first);
        title.push_back(*pair.second);
      } else {
        ++excluded;
      }
    }
    if (content.empty()) continue;
    ++layers_with_pairs;
    all_content.insert(all_content.end(), content.begin(), content.end());
    all_title.insert(all_title.end(), title.begin(), title.end());

    std::vector<std::string> row(5, "n/a");
    row[0] = to_string(layer);
    row[1] = fmt2(mean_of(content));
    row[2] = fmt2(mean_of(title));
    row[3] = fmt_signed2(mean_of(title) - mean_of(content));
    if (content.size() >= 2) {
      try {
        row[4] = format_p(paired_t_test(title, content).p_value);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_variance) throw;
        table.footnotes.push_back(to_string(layer) +
                                  ": DegenerateVariance, paired test not defined.");
      }
    }
    table.rows.push_back(std::move(row));
  }

  if (layers_with_pairs == 0 || all_content.size() < 2)
    raise(Errc::unpaired_modes, "mode invariance needs both modes for at least two stories");

  std::vector<std::string> overall(5, "n/a");
  overall[0] = "Overall";
  overall[1] = fmt2(mean_of(all_content));
  overall[2] = fmt2(mean_of(all_title));
  overall[3] = fmt_signed2(mean_of(all_title) - mean_of(all_content));
  try {
    overall[4] = format_p(paired_t_test(all_title, all_content).p_value);
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_variance) throw;
  }
  table.rows.push_back(std::move(overall));

  table.footnotes.push_back("Difference = title-limit mean - content-limit mean; differences "
                            "below 0.05 in magnitude indicate mode-invariant evaluation.");
  if (excluded > 0)
    table.footnotes.push_back(std::to_string(excluded) +
                              " story-layer pairs excluded (evaluated in a single mode).");
  return table;
}

ReportTable report_correlation(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) raise(Errc::empty_store, "no records to report on");
  const auto ok = completed(records);

  // Observations: (story, mode) with all three layers completed.
  std::map<std::pair<std::string, std::string>, std::map<LayerId, double>> cells;
  for (const auto* r : ok)
    cells[{r->story_id, to_string(r->mode)}][r->layer] = r->derived->layer_score;

  std::map<LayerId, std::vector<double>> series;
  for (const auto& [key, scores] : cells) {
    if (scores.size() != kLayers.size()) continue;
    for (const auto& [layer, value] : scores) series[layer].push_back(value);
  }
  for (LayerId layer : kLayers) {
    if (series[layer].size() < 3)
      raise(Errc::missing_layer, "correlation report needs all three layers on at least "
                                 "three common observations");
  }

  ReportTable table;
  table.kind = "correlation";
  table.title = "Cross-layer correlation";
  table.headers = {"Layer pair", "Pearson r", "Spearman rho", "p"};

  std::vector<std::string> flagged;
  const auto add_pair = [&](LayerId a, LayerId b) {
    const auto& x = series[a];
    const auto& y = series[b];
    const std::string label = to_string(a) + " x " + to_string(b);
    try {
      const double r = pearson(x, y);
      const double rho = spearman(x, y);
      table.rows.push_back(
          {label, fmt3(r), fmt3(rho), format_p(correlation_p_value(r, static_cast<int>(x.size())))});
      if (r >= 0.7) flagged.push_back(label + " (r = " + fmt3(r) + ")");
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_variance) throw;
      table.rows.push_back({label, "n/a", "n/a", "n/a"});
      table.footnotes.push_back(label + ": DegenerateVariance, correlation not defined.");
    }
  };
  add_pair(LayerId::L4, LayerId::L5);
  add_pair(LayerId::L4, LayerId::L6);
  add_pair(LayerId::L5, LayerId::L6);

  table.footnotes.push_back("N = " + std::to_string(series[LayerId::L4].size()) +
                            " (story, mode) observations with all three layers present.");
  if (flagged.empty()) {
    table.footnotes.push_back(
        "No pair reaches the r >= 0.7 redundancy threshold; layers measure distinct facets.");
  } else {
    std::string note = "Redundancy threshold r >= 0.7 reached by: ";
    for (size_t i = 0; i < flagged.size(); ++i) {
      if (i) note += ", ";
      note += flagged[i];
    }
    table.footnotes.push_back(note + ".");
  }
  return table;
}

ReportTable report_dimension_detail(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) raise(Errc::empty_store, "no records to report on");
  const auto ok = completed(records);
  if (ok.empty()) raise(Errc::empty_store, "no completed records to report on");

  ReportTable table;
  table.kind = "dimension_detail";
  table.title = "Dimension detail";
  table.headers = {"Layer", "Dimension", "N", "Mean (R5)", "Convergence", "Agreement",
                   "Mean |diff|"};

  const auto& ontology = Ontology::builtin();
  for (LayerId layer : kLayers) {
    for (const auto& dim : ontology.layer_spec(layer).dimensions) {
      long n = 0, convergent = 0, agrees = 0;
      double score_sum = 0.0, diff_sum = 0.0;
      for (const auto* r : ok) {
        if (r->layer != layer) continue;
        const auto conv = r->derived->convergence.per_dimension.find(dim);
        if (conv == r->derived->convergence.per_dimension.end()) continue;
        ++n;
        if (conv->second.convergent) ++convergent;
        if (r->derived->agreement.per_dimension_agrees.at(dim)) ++agrees;
        diff_sum += r->derived->agreement.per_dimension_abs_diff.at(dim);
        score_sum += r->transcript->rounds[4].assessment(dim).score();
      }
      if (n == 0) continue;
      table.rows.push_back({to_string(layer), dim, std::to_string(n),
                            fmt2(score_sum / static_cast<double>(n)),
                            fmt_rate(static_cast<double>(convergent) / n),
                            fmt_rate(static_cast<double>(agrees) / n),
                            fmt3(diff_sum / static_cast<double>(n))});
    }
  }
  table.footnotes.push_back("Convergence counts |R5-R4| < 0.3 (strict); agreement counts "
                            "|final - validator| < 0.5 (strict).");
  return table;
}

ReportTable build_report(const std::vector<EvaluationRecord>& records,
                         const std::string& kind) {
  if (kind == "reliability") return report_reliability(records);
  if (kind == "genre") return report_genre(records);
  if (kind == "mode_invariance") return report_mode_invariance(records);
  if (kind == "correlation") return report_correlation(records);
  if (kind == "dimension_detail") return report_dimension_detail(records);
  raise(Errc::usage, "unknown report kind '" + kind + "'");
}

std::string to_markdown(const ReportTable& table) {
  std::ostringstream out;
  out << "## " << table.title << "\n\n";
  out << "|";
  for (const auto& h : table.headers) out << " " << h << " |";
  out << "\n|";
  for (size_t i = 0; i < table.headers.size(); ++i) out << " --- |";
  out << "\n";
  for (const auto& row : table.rows) {
    out << "|";
    for (const auto& cell : row) out << " " << cell << " |";
    out << "\n";
  }
  if (!table.footnotes.empty()) {
    out << "\nNotes:\n";
    for (const auto& note : table.footnotes) out << "- " << note << "\n";
  }
  return out.str();
}

namespace {

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string escaped = "\"";
  for (char c : cell) {
    if (c == '"') escaped += "\"\"";
    else escaped += c;
  }
  escaped += "\"";
  return escaped;
}

}  // namespace

std::string to_csv(const ReportTable& table) {
  std::ostringstream out;
  for (size_t i = 0; i < table.headers.size(); ++i) {
    if (i) out << ",";
    out << csv_escape(table.headers[i]);
  }
  out << "\n";
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << csv_escape(row[i]);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace sage
