#include "sage/protocol.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <future>
#include <sstream>

#include "sage/store.hpp"
#include "sage/version.hpp"

namespace sage {

namespace {

/// Mock runs pin the clock so fixed-seed batches are byte-reproducible.
std::string timestamp(const ProviderConfig& provider) {
  if (provider.backend == Backend::mock) return "1970-01-01T00:00:00Z";
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buffer[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

int parse_confidence(const nlohmann::json& value, const std::string& dim_id) {
  if (!value.is_number())
    raise(Errc::schema_violation, dim_id + ": confidence must be a number");
  const double raw = value.get<double>();
  const int rounded = static_cast<int>(std::llround(raw));
  if (std::fabs(raw - rounded) > 1e-9)
    raise(Errc::confidence_out_of_range, dim_id + ": confidence must be an integer");
  if (rounded < scale::kConfidenceMin || rounded > scale::kConfidenceMax)
    raise(Errc::confidence_out_of_range,
          dim_id + ": confidence " + std::to_string(rounded) + " outside [1, 5]");
  return rounded;
}

DimensionAssessment parse_assessment(const nlohmann::json& item, LayerId layer,
                                     std::vector<std::string>& notes) {
  if (!item.is_object() || !item.contains("dimension") || !item.contains("score") ||
      !item.contains("confidence") || !item.contains("reasoning"))
    raise(Errc::schema_violation,
          "assessment requires dimension, score, confidence, reasoning");
  DimensionAssessment a;
  a.dimension_id = item["dimension"].get<std::string>();
  if (!item["score"].is_number())
    raise(Errc::schema_violation, a.dimension_id + ": score must be a number");
  const double raw = item["score"].get<double>();
  bool snapped = false;
  const int tenths = scale::snap_to_tenths(raw, snapped);
  if (tenths < scale::kMinTenths || tenths > scale::kMaxTenths)
    raise(Errc::score_out_of_range,
          a.dimension_id + ": score " + std::to_string(raw) + " outside [1.0, 5.0]");
  if (snapped) {
    std::ostringstream note;
    note << a.dimension_id << ": score " << raw << " snapped to "
         << scale::tenths_to_score(tenths) << " (round half up)";
    notes.push_back(note.str());
  }
  a.score_tenths = tenths;
  a.confidence = parse_confidence(item["confidence"], a.dimension_id);
  a.reasoning = item["reasoning"].get<std::string>();
  if (item.contains("evidence_strength") && !item["evidence_strength"].is_null()) {
    const auto strength = item["evidence_strength"].get<std::string>();
    if (strength != "strong" && strength != "adequate" && strength != "weak")
      raise(Errc::schema_violation,
            a.dimension_id + ": evidence_strength '" + strength + "' not recognized");
    a.evidence_strength = strength;
  }
  (void)layer;
  return a;
}

/// Orders assessments canonically and verifies coverage via the registry.
std::vector<DimensionAssessment> check_coverage(std::vector<DimensionAssessment> assessments,
                                                const Ontology& ontology, LayerId layer) {
  std::map<std::string, double> scores;
  for (const auto& a : assessments) {
    if (scores.count(a.dimension_id))
      raise(Errc::schema_violation, "duplicate assessment for " + a.dimension_id);
    scores[a.dimension_id] = a.score();
  }
  ontology.validate_score_vector(scores, layer);
  std::vector<DimensionAssessment> ordered;
  for (const auto& id : ontology.layer_spec(layer).dimensions) {
    for (auto& a : assessments)
      if (a.dimension_id == id) ordered.push_back(std::move(a));
  }
  return ordered;
}

}  // namespace

RoundOutput parse_round_output(const nlohmann::json& doc, const Ontology& ontology,
                               LayerId layer, int round_index) {
  if (round_index < 1 || round_index > kRoundCount)
    raise(Errc::invalid_round, "round index " + std::to_string(round_index));
  if (!doc.is_object()) raise(Errc::schema_violation, "round document must be an object");
  RoundOutput out;
  out.round_index = round_index;
  if (doc.contains("round") && doc["round"].is_number_integer() &&
      doc["round"].get<int>() != round_index)
    raise(Errc::schema_violation, "document claims round " +
                                      std::to_string(doc["round"].get<int>()) + ", expected " +
                                      std::to_string(round_index));
  if (!doc.contains("assessments") || !doc["assessments"].is_array())
    raise(Errc::schema_violation, "missing assessments array");
  std::vector<DimensionAssessment> assessments;
  for (const auto& item : doc["assessments"])
    assessments.push_back(parse_assessment(item, layer, out.normalization_notes));
  out.assessments = check_coverage(std::move(assessments), ontology, layer);

  if (round_index == 1) {
    if (!doc.contains("extracted_content") || !doc["extracted_content"].is_string())
      raise(Errc::schema_violation, "round 1 requires extracted_content");
    out.extracted_content = doc["extracted_content"].get<std::string>();
  } else {
    const char* key = reflection_key(round_index);
    if (!doc.contains(key) || !doc[key].is_string())
      raise(Errc::schema_violation,
            std::string("round ") + std::to_string(round_index) + " requires " + key);
    out.reflection = doc[key].get<std::string>();
  }
  return out;
}

ValidatorReport parse_validator_report(const nlohmann::json& doc, const Ontology& ontology,
                                       LayerId layer) {
  if (!doc.is_object()) raise(Errc::schema_violation, "validator document must be an object");
  if (!doc.contains("independent_assessments") || !doc["independent_assessments"].is_array())
    raise(Errc::schema_violation, "missing independent_assessments array");
  ValidatorReport report;
  std::vector<std::string> notes;  // validator scores snap silently
  std::vector<DimensionAssessment> assessments;
  for (const auto& item : doc["independent_assessments"])
    assessments.push_back(parse_assessment(item, layer, notes));
  report.independent_assessments = check_coverage(std::move(assessments), ontology, layer);
  if (doc.contains("issues")) {
    if (!doc["issues"].is_array()) raise(Errc::schema_violation, "issues must be an array");
    for (const auto& item : doc["issues"]) {
      ValidatorIssue issue;
      issue.kind = item.at("kind").get<std::string>();
      issue.severity = item.at("severity").get<std::string>();
      issue.note = item.value("note", std::string{});
      if (issue.severity != "low" && issue.severity != "medium" && issue.severity != "high")
        raise(Errc::schema_violation, "issue severity '" + issue.severity + "' not recognized");
      report.issues.push_back(std::move(issue));
    }
  }
  if (!doc.contains("agreement_notes") || !doc["agreement_notes"].is_string())
    raise(Errc::schema_violation, "missing agreement_notes");
  report.agreement_notes = doc["agreement_notes"].get<std::string>();
  if (!doc.contains("trust_level") || !doc["trust_level"].is_string())
    raise(Errc::schema_violation, "missing trust_level");
  report.trust_level = doc["trust_level"].get<std::string>();
  if (report.trust_level != "high" && report.trust_level != "medium" &&
      report.trust_level != "low")
    raise(Errc::schema_violation, "trust_level '" + report.trust_level + "' not recognized");
  return report;
}

namespace {

constexpr const char* kCorrectiveSuffix =
    "\n\nIMPORTANT: your previous reply was not a valid document for this round. "
    "Respond again with a single JSON object exactly matching the requested schema.";

/// One round (or the validator pass) with the reparse policy: on a schema
/// problem, re-request with a corrective instruction appended, up to
/// options.reparse_limit extra attempts.
template <typename ParseFn>
auto complete_and_parse(EvalContext& ctx, PromptBundle bundle, ParseFn&& parse) {
  const int attempts = 1 + std::max(0, ctx.options.reparse_limit);
  for (int attempt = 1;; ++attempt) {
    const Completion completion = ctx.client.complete(bundle);
    try {
      const nlohmann::json doc = extract_structured(completion.raw_text);
      return parse(doc);
    } catch (const Error& e) {
      const bool reparseable = e.code() == Errc::schema_violation ||
                               e.code() == Errc::not_structured ||
                               e.code() == Errc::score_out_of_range ||
                               e.code() == Errc::confidence_out_of_range ||
                               e.code() == Errc::missing_dimension ||
                               e.code() == Errc::unknown_dimension ||
                               e.code() == Errc::illegal_step;
      if (!reparseable || attempt >= attempts) throw;
      if (bundle.user_text.find(kCorrectiveSuffix) == std::string::npos)
        bundle.user_text += kCorrectiveSuffix;
    }
  }
}

[[noreturn]] void fail_cell(const std::string& stage, const Error& error) {
  throw Error(Errc::cell_failure, stage + " failed with " + error.what());
}

}  // namespace

std::vector<RoundOutput> run_iterative(EvalContext& ctx, const StoryRecord& story,
                                       LayerId layer, Mode mode) {
  const EvaluationPayload payload = mode_payload(story, mode);
  std::vector<RoundOutput> rounds;
  rounds.reserve(kRoundCount);
  for (int round = 1; round <= kRoundCount; ++round) {
    PromptBundle bundle =
        ctx.prompts.build_round_prompt(ctx.ontology, layer, mode, round, payload, rounds);
    try {
      rounds.push_back(complete_and_parse(ctx, std::move(bundle), [&](const nlohmann::json& doc) {
        return parse_round_output(doc, ctx.ontology, layer, round);
      }));
    } catch (const Error& e) {
      fail_cell("round" + std::to_string(round), e);
    }
  }
  return rounds;
}

ValidatorReport run_validator(EvalContext& ctx, const StoryRecord& story, LayerId layer,
                              Mode mode, const std::vector<RoundOutput>& rounds) {
  if (static_cast<int>(rounds.size()) != kRoundCount)
    raise(Errc::incomplete_transcript, "validator needs the full five-round transcript");
  const EvaluationPayload payload = mode_payload(story, mode);
  PromptBundle bundle =
      ctx.prompts.build_validator_prompt(ctx.ontology, layer, mode, payload, rounds);
  try {
    return complete_and_parse(ctx, std::move(bundle), [&](const nlohmann::json& doc) {
      return parse_validator_report(doc, ctx.ontology, layer);
    });
  } catch (const Error& e) {
    if (e.code() == Errc::cell_failure) throw;
    fail_cell("validator", e);
  }
}

EvaluationRecord evaluate_cell(EvalContext& ctx, const StoryRecord& story, LayerId layer,
                               Mode mode) {
  EvaluationTranscript transcript;
  transcript.story_id = story.story_id;
  transcript.layer = layer;
  transcript.mode = mode;
  transcript.started_at = timestamp(ctx.provider);
  transcript.rounds = run_iterative(ctx, story, layer, mode);
  transcript.validator = run_validator(ctx, story, layer, mode, transcript.rounds);
  transcript.prompt_template_hash = ctx.prompts.version_hash();
  transcript.config_snapshot = ctx.provider.to_json();
  transcript.finished_at = timestamp(ctx.provider);

  EvaluationRecord record;
  record.story_id = story.story_id;
  record.layer = layer;
  record.mode = mode;
  record.category = story.category;
  record.derived = derive_metrics(transcript);
  record.transcript = std::move(transcript);
  record.engine_version = kEngineVersion;
  record.created_at = timestamp(ctx.provider);
  return record;
}

EvaluationRecord failure_record(const StoryRecord& story, LayerId layer, Mode mode,
                                const std::string& stage, const Error& error,
                                const ProviderConfig& provider) {
  EvaluationRecord record;
  record.story_id = story.story_id;
  record.layer = layer;
  record.mode = mode;
  record.category = story.category;
  record.failure = FailureStub{stage, errc_name(error.code()), error.what()};
  record.engine_version = kEngineVersion;
  record.created_at = timestamp(provider);
  return record;
}

BatchOutcome run_grid(EvalContext& ctx, const std::vector<StoryRecord>& stories,
                      const std::vector<LayerId>& layers, const std::vector<Mode>& modes,
                      ResultsStore& store, bool retry_failures) {
  BatchOutcome outcome;
  const std::uint64_t issued_before = ctx.client.completions_issued();

  struct PlannedCell {
    const StoryRecord* story;
    LayerId layer;
    Mode mode;
  };
  std::vector<PlannedCell> pending;
  for (const auto& story : stories) {
    for (LayerId layer : layers) {
      for (Mode mode : modes) {
        const CellKey key{story.story_id, to_string(layer), to_string(mode)};
        if (store.contains(key) && !(retry_failures && store.is_failure(key))) {
          ++outcome.already_present;
          continue;
        }
        const auto report = validate_story(story, mode);
        if (!report.ok()) {
          std::string reason;
          for (const auto& finding : report.errors) {
            if (!reason.empty()) reason += "; ";
            reason += finding.code + ": " + finding.detail;
          }
          outcome.skipped.push_back({key, reason});
          continue;
        }
        pending.push_back({&story, layer, mode});
      }
    }
  }

  // Bounded window of concurrent cells; results append in grid order, so the
  // store contents do not depend on thread scheduling.
  const size_t window = static_cast<size_t>(std::max(1, ctx.options.concurrency));
  std::vector<std::future<EvaluationRecord>> futures(pending.size());
  const auto launch = [&](const PlannedCell& cell) {
    return std::async(std::launch::async, [&ctx, cell]() -> EvaluationRecord {
      try {
        return evaluate_cell(ctx, *cell.story, cell.layer, cell.mode);
      } catch (const Error& e) {
        if (e.code() != Errc::cell_failure) throw;
        return failure_record(*cell.story, cell.layer, cell.mode, "evaluate", e, ctx.provider);
      }
    });
  };

  size_t launched = 0;
  for (size_t i = 0; i < pending.size(); ++i) {
    while (launched < pending.size() && launched < i + window)
      futures[launched] = launch(pending[launched]), ++launched;
    EvaluationRecord record = futures[i].get();
    futures[i] = {};
    if (record.failure) ++outcome.failed;
    ++outcome.evaluated;
    store.append(record);
  }

  outcome.completions_issued = ctx.client.completions_issued() - issued_before;
  return outcome;
}

}  // namespace sage
