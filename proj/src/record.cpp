#include "sage/record.hpp"

#include "sage/store.hpp"

namespace sage {

namespace {

nlohmann::ordered_json derived_to_json(const DerivedMetrics& derived) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json conv;
  conv["cell_convergent"] = derived.convergence.cell_convergent;
  conv["per_dimension"] = nlohmann::ordered_json::object();
  for (const auto& [id, dc] : derived.convergence.per_dimension) {
    conv["per_dimension"][id] = {{"delta", dc.delta}, {"convergent", dc.convergent}};
  }
  doc["convergence"] = std::move(conv);
  nlohmann::ordered_json agree;
  agree["mad"] = derived.agreement.mad;
  agree["agrees"] = derived.agreement.agrees;
  agree["per_dimension_abs_diff"] = nlohmann::ordered_json::object();
  for (const auto& [id, diff] : derived.agreement.per_dimension_abs_diff)
    agree["per_dimension_abs_diff"][id] = diff;
  agree["per_dimension_agrees"] = nlohmann::ordered_json::object();
  for (const auto& [id, ok] : derived.agreement.per_dimension_agrees)
    agree["per_dimension_agrees"][id] = ok;
  doc["agreement"] = std::move(agree);
  doc["layer_score"] = derived.layer_score;
  return doc;
}

DerivedMetrics derived_from_json(const nlohmann::json& doc) {
  DerivedMetrics derived;
  const auto& conv = doc.at("convergence");
  derived.convergence.cell_convergent = conv.at("cell_convergent").get<bool>();
  for (const auto& [id, value] : conv.at("per_dimension").items()) {
    derived.convergence.per_dimension[id] =
        DimensionConvergence{value.at("delta").get<double>(), value.at("convergent").get<bool>()};
  }
  const auto& agree = doc.at("agreement");
  derived.agreement.mad = agree.at("mad").get<double>();
  derived.agreement.agrees = agree.at("agrees").get<bool>();
  for (const auto& [id, value] : agree.at("per_dimension_abs_diff").items())
    derived.agreement.per_dimension_abs_diff[id] = value.get<double>();
  for (const auto& [id, value] : agree.at("per_dimension_agrees").items())
    derived.agreement.per_dimension_agrees[id] = value.get<bool>();
  derived.layer_score = doc.at("layer_score").get<double>();
  return derived;
}

}  // namespace

nlohmann::ordered_json to_json(const EvaluationRecord& record) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kStoreSchemaVersion;
  doc["story_id"] = record.story_id;
  doc["layer"] = to_string(record.layer);
  doc["mode"] = to_string(record.mode);
  doc["category"] = to_string(record.category);
  doc["status"] = record.ok() ? "ok" : "failed";
  if (record.transcript) doc["transcript"] = to_json(*record.transcript);
  if (record.derived) doc["derived"] = derived_to_json(*record.derived);
  if (record.failure) {
    doc["failure"] = {{"stage", record.failure->stage},
                      {"error_code", record.failure->error_code},
                      {"message", record.failure->message}};
  }
  doc["engine_version"] = record.engine_version;
  doc["created_at"] = record.created_at;
  return doc;
}

EvaluationRecord record_from_json(const nlohmann::json& doc) {
  EvaluationRecord record;
  const int version = doc.at("schema_version").get<int>();
  if (version != kStoreSchemaVersion)
    raise(Errc::store_corrupt, "unsupported schema_version " + std::to_string(version));
  record.story_id = doc.at("story_id").get<std::string>();
  record.layer = parse_layer(doc.at("layer").get<std::string>());
  record.mode = parse_mode(doc.at("mode").get<std::string>());
  record.category = parse_category(doc.at("category").get<std::string>());
  if (doc.contains("transcript")) record.transcript = transcript_from_json(doc["transcript"]);
  if (doc.contains("derived")) record.derived = derived_from_json(doc["derived"]);
  if (doc.contains("failure")) {
    record.failure = FailureStub{doc["failure"].at("stage").get<std::string>(),
                                 doc["failure"].at("error_code").get<std::string>(),
                                 doc["failure"].at("message").get<std::string>()};
  }
  record.engine_version = doc.at("engine_version").get<std::string>();
  record.created_at = doc.at("created_at").get<std::string>();
  const auto status = doc.at("status").get<std::string>();
  if ((status == "ok") != record.ok())
    raise(Errc::store_corrupt, "record status disagrees with its payload");
  return record;
}

DerivedMetrics derive_metrics(const EvaluationTranscript& transcript) {
  if (transcript.rounds.size() != static_cast<size_t>(kRoundCount))
    raise(Errc::incomplete_transcript, "transcript must hold all five rounds");
  DerivedMetrics derived;
  derived.convergence = convergence(transcript.rounds[3], transcript.rounds[4]);
  derived.agreement = agreement(transcript.rounds[4], transcript.validator);
  derived.layer_score = layer_score(transcript.rounds[4].assessments);
  return derived;
}

std::map<std::string, double> convergence_rate(const std::vector<EvaluationRecord>& records,
                                               Grouping grouping) {
  std::map<std::string, std::pair<long, long>> counts;  // group -> (convergent, total)
  for (const auto& record : records) {
    if (!record.derived) continue;
    for (const auto& [dim, dc] : record.derived->convergence.per_dimension) {
      std::string group;
      switch (grouping) {
        case Grouping::overall: group = "overall"; break;
        case Grouping::by_layer: group = to_string(record.layer); break;
        case Grouping::by_mode: group = to_string(record.mode); break;
        case Grouping::by_category: group = to_string(record.category); break;
        case Grouping::by_dimension: group = dim; break;
      }
      auto& [convergent, total] = counts[group];
      if (dc.convergent) ++convergent;
      ++total;
    }
  }
  if (counts.empty()) raise(Errc::empty_group, "no completed records to group");
  std::map<std::string, double> rates;
  for (const auto& [group, pair] : counts)
    rates[group] = static_cast<double>(pair.first) / static_cast<double>(pair.second);
  return rates;
}

}  // namespace sage
