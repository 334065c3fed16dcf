#pragma once

#include <compare>
#include <optional>
#include <string>

#include "sage/analytics.hpp"
#include "sage/transcript.hpp"

namespace sage {

struct CellKey {
  std::string story_id;
  std::string layer;
  std::string mode;
  auto operator<=>(const CellKey&) const = default;
};

struct DerivedMetrics {
  ConvergenceResult convergence;
  AgreementResult agreement;
  double layer_score = 0.0;  // round-5 mean, full precision
  bool operator==(const DerivedMetrics&) const = default;
};

struct FailureStub {
  std::string stage;       // "round3", "validator", ...
  std::string error_code;  // stable Errc name
  std::string message;
};

/// Unit of persistence: one (story, layer, mode) cell, either a full
/// transcript with derived metrics or a failure stub.
struct EvaluationRecord {
  std::string story_id;
  LayerId layer = LayerId::L4;
  Mode mode = Mode::content_limit;
  Category category = Category::canonical;
  std::optional<EvaluationTranscript> transcript;
  std::optional<DerivedMetrics> derived;
  std::optional<FailureStub> failure;
  std::string engine_version;
  std::string created_at;

  bool ok() const { return transcript.has_value(); }
  CellKey key() const { return {story_id, to_string(layer), to_string(mode)}; }
};

nlohmann::ordered_json to_json(const EvaluationRecord& record);
EvaluationRecord record_from_json(const nlohmann::json& doc);

/// Recomputes convergence, agreement, and layer score from a transcript.
DerivedMetrics derive_metrics(const EvaluationTranscript& transcript);

enum class Grouping { overall, by_layer, by_mode, by_category, by_dimension };

/// Convergent dimension-cells over all dimension-cells, per group. Throws
/// empty_group when no completed records are present.
std::map<std::string, double> convergence_rate(const std::vector<EvaluationRecord>& records,
                                               Grouping grouping);

}  // namespace sage
