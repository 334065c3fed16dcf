#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sage/corpus.hpp"
#include "sage/ontology.hpp"

namespace sage {

inline constexpr int kRoundCount = 5;
/// Round index used for the validator pass in prompt bundles.
inline constexpr int kValidatorRound = 0;

struct DimensionAssessment {
  std::string dimension_id;
  int score_tenths = 0;
  int confidence = 0;
  std::string reasoning;
  std::optional<std::string> evidence_strength;  // strong | adequate | weak

  double score() const { return scale::tenths_to_score(score_tenths); }
  bool operator==(const DimensionAssessment&) const = default;
};

/// JSON key of the round-specific reflection field ("bias_findings",
/// "boundary_findings", ...). Round 1 has none (returns nullptr).
const char* reflection_key(int round_index);

struct RoundOutput {
  int round_index = 0;
  std::vector<DimensionAssessment> assessments;  // layer order, exactly 4
  std::string reflection;                        // prose under reflection_key(round)
  std::optional<std::string> extracted_content;  // round 1 only
  std::vector<std::string> normalization_notes;  // parse-time grid snaps

  const DimensionAssessment& assessment(const std::string& dimension_id) const;
  bool operator==(const RoundOutput&) const = default;
};

struct ValidatorIssue {
  std::string kind;      // projection_bias | hallucination | boundary_violation | unsupported_inference
  std::string severity;  // low | medium | high
  std::string note;
  bool operator==(const ValidatorIssue&) const = default;
};

struct ValidatorReport {
  std::vector<DimensionAssessment> independent_assessments;
  std::vector<ValidatorIssue> issues;
  std::string agreement_notes;
  std::string trust_level;  // high | medium | low

  const DimensionAssessment& assessment(const std::string& dimension_id) const;
  bool operator==(const ValidatorReport&) const = default;
};

struct EvaluationTranscript {
  std::string story_id;
  LayerId layer = LayerId::L4;
  Mode mode = Mode::content_limit;
  std::vector<RoundOutput> rounds;  // exactly 5, ordered 1..5
  ValidatorReport validator;
  std::string prompt_template_hash;
  nlohmann::ordered_json config_snapshot;
  std::string started_at;
  std::string finished_at;
};

nlohmann::ordered_json to_json(const DimensionAssessment& a);
nlohmann::ordered_json to_json(const RoundOutput& r);
nlohmann::ordered_json to_json(const ValidatorReport& v);
nlohmann::ordered_json to_json(const EvaluationTranscript& t);

DimensionAssessment assessment_from_json(const nlohmann::json& doc);
RoundOutput round_from_json(const nlohmann::json& doc);
ValidatorReport validator_from_json(const nlohmann::json& doc);
EvaluationTranscript transcript_from_json(const nlohmann::json& doc);

}  // namespace sage
