#include "sage/transcript.hpp"

namespace sage {

const char* reflection_key(int round_index) {
  switch (round_index) {
    case 2: return "bias_findings";
    case 3: return "boundary_findings";
    case 4: return "evidence_notes";
    case 5: return "convergence_notes";
    default: return nullptr;
  }
}

const DimensionAssessment& RoundOutput::assessment(const std::string& dimension_id) const {
  for (const auto& a : assessments)
    if (a.dimension_id == dimension_id) return a;
  raise(Errc::unknown_dimension, "no assessment for " + dimension_id);
}

const DimensionAssessment& ValidatorReport::assessment(const std::string& dimension_id) const {
  for (const auto& a : independent_assessments)
    if (a.dimension_id == dimension_id) return a;
  raise(Errc::unknown_dimension, "no validator assessment for " + dimension_id);
}

nlohmann::ordered_json to_json(const DimensionAssessment& a) {
  nlohmann::ordered_json doc;
  doc["dimension"] = a.dimension_id;
  doc["score"] = a.score();
  doc["confidence"] = a.confidence;
  doc["reasoning"] = a.reasoning;
  if (a.evidence_strength) doc["evidence_strength"] = *a.evidence_strength;
  return doc;
}

DimensionAssessment assessment_from_json(const nlohmann::json& doc) {
  DimensionAssessment a;
  a.dimension_id = doc.at("dimension").get<std::string>();
  bool snapped = false;
  a.score_tenths = scale::snap_to_tenths(doc.at("score").get<double>(), snapped);
  a.confidence = doc.at("confidence").get<int>();
  a.reasoning = doc.at("reasoning").get<std::string>();
  if (doc.contains("evidence_strength") && !doc["evidence_strength"].is_null())
    a.evidence_strength = doc["evidence_strength"].get<std::string>();
  return a;
}

nlohmann::ordered_json to_json(const RoundOutput& r) {
  nlohmann::ordered_json doc;
  doc["round"] = r.round_index;
  if (r.extracted_content) doc["extracted_content"] = *r.extracted_content;
  doc["assessments"] = nlohmann::ordered_json::array();
  for (const auto& a : r.assessments) doc["assessments"].push_back(to_json(a));
  if (const char* key = reflection_key(r.round_index)) doc[key] = r.reflection;
  if (!r.normalization_notes.empty()) doc["normalization_notes"] = r.normalization_notes;
  return doc;
}

RoundOutput round_from_json(const nlohmann::json& doc) {
  RoundOutput r;
  r.round_index = doc.at("round").get<int>();
  if (doc.contains("extracted_content") && !doc["extracted_content"].is_null())
    r.extracted_content = doc["extracted_content"].get<std::string>();
  for (const auto& item : doc.at("assessments")) r.assessments.push_back(assessment_from_json(item));
  if (const char* key = reflection_key(r.round_index); key && doc.contains(key))
    r.reflection = doc[key].get<std::string>();
  if (doc.contains("normalization_notes"))
    r.normalization_notes = doc["normalization_notes"].get<std::vector<std::string>>();
  return r;
}

nlohmann::ordered_json to_json(const ValidatorReport& v) {
  nlohmann::ordered_json doc;
  doc["independent_assessments"] = nlohmann::ordered_json::array();
  for (const auto& a : v.independent_assessments)
    doc["independent_assessments"].push_back(to_json(a));
  doc["issues"] = nlohmann::ordered_json::array();
  for (const auto& issue : v.issues) {
    doc["issues"].push_back(nlohmann::ordered_json{
        {"kind", issue.kind}, {"severity", issue.severity}, {"note", issue.note}});
  }
  doc["agreement_notes"] = v.agreement_notes;
  doc["trust_level"] = v.trust_level;
  return doc;
}

ValidatorReport validator_from_json(const nlohmann::json& doc) {
  ValidatorReport v;
  for (const auto& item : doc.at("independent_assessments"))
    v.independent_assessments.push_back(assessment_from_json(item));
  if (doc.contains("issues")) {
    for (const auto& item : doc["issues"]) {
      v.issues.push_back(ValidatorIssue{item.at("kind").get<std::string>(),
                                        item.at("severity").get<std::string>(),
                                        item.at("note").get<std::string>()});
    }
  }
  v.agreement_notes = doc.at("agreement_notes").get<std::string>();
  v.trust_level = doc.at("trust_level").get<std::string>();
  return v;
}

nlohmann::ordered_json to_json(const EvaluationTranscript& t) {
  nlohmann::ordered_json doc;
  doc["story_id"] = t.story_id;
  doc["layer"] = to_string(t.layer);
  doc["mode"] = to_string(t.mode);
  doc["rounds"] = nlohmann::ordered_json::array();
  for (const auto& r : t.rounds) doc["rounds"].push_back(to_json(r));
  doc["validator"] = to_json(t.validator);
  doc["prompt_template_hash"] = t.prompt_template_hash;
  doc["config"] = t.config_snapshot;
  doc["started_at"] = t.started_at;
  doc["finished_at"] = t.finished_at;
  return doc;
}

EvaluationTranscript transcript_from_json(const nlohmann::json& doc) {
  EvaluationTranscript t;
  t.story_id = doc.at("story_id").get<std::string>();
  t.layer = parse_layer(doc.at("layer").get<std::string>());
  t.mode = parse_mode(doc.at("mode").get<std::string>());
  for (const auto& item : doc.at("rounds")) t.rounds.push_back(round_from_json(item));
  t.validator = validator_from_json(doc.at("validator"));
  t.prompt_template_hash = doc.at("prompt_template_hash").get<std::string>();
  t.config_snapshot = doc.at("config");
  t.started_at = doc.at("started_at").get<std::string>();
  t.finished_at = doc.at("finished_at").get<std::string>();
  return t;
}

}  // namespace sage
