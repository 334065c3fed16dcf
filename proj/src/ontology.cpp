#include "sage/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sage {

std::string to_string(LayerId layer) {
  switch (layer) {
    case LayerId::L4: return "L4";
    case LayerId::L5: return "L5";
    case LayerId::L6: return "L6";
  }
  return "?";
}

std::optional<LayerId> try_parse_layer(std::string_view text) {
  if (text == "L4" || text == "l4") return LayerId::L4;
  if (text == "L5" || text == "l5") return LayerId::L5;
  if (text == "L6" || text == "l6") return LayerId::L6;
  return std::nullopt;
}

LayerId parse_layer(std::string_view text) {
  if (auto layer = try_parse_layer(text)) return *layer;
  raise(Errc::unsupported_layer,
        "layer '" + std::string(text) + "' is not evaluable (supported: L4, L5, L6)");
}

namespace scale {

int snap_to_tenths(double raw, bool& snapped) {
  // Round half up in decimal intent: the 1e-9 nudge absorbs binary
  // representation error around .x5 boundaries (3.65 parses slightly low).
  const int tenths = static_cast<int>(std::floor(raw * 10.0 + 0.5 + 1e-9));
  snapped = std::fabs(raw * 10.0 - tenths) > 1e-9;
  return tenths;
}

bool on_grid(double raw) {
  bool snapped = false;
  (void)snap_to_tenths(raw, snapped);
  return !snapped;
}

}  // namespace scale

namespace {

DimensionSpec dim(std::string id, std::string name, LayerId layer, std::string definition,
                  std::vector<std::string> anchors) {
  return DimensionSpec{std::move(id), std::move(name), layer, std::move(definition),
                       std::move(anchors)};
}

}  // namespace

const Ontology& Ontology::builtin() {
  static const Ontology instance = [] {
    Ontology o;
    o.layers_ = {
        LayerSpec{LayerId::L4, "Cultural Representation", {"IPD", "CVP", "CSP", "CPC"}},
        LayerSpec{LayerId::L5, "Emotional-Psychological Representation", {"AC", "PI", "EG", "ENC"}},
        LayerSpec{LayerId::L6, "Existential-Philosophical Representation", {"LP", "MR", "HC", "ME"}},
    };
    o.dimensions_ = {
        dim("IPD", "Intersectional Power Dynamics", LayerId::L4,
            "How deeply the text engages power as a structuring force across social axes "
            "(class, gender, race, kinship, occupation, institution) rather than as surface "
            "acknowledgment of social categories.",
            {"Bourdieu (cultural capital)", "Marxist criticism", "feminist criticism",
             "postcolonial theory"}),
        dim("CVP", "Cultural Voice & Perspective", LayerId::L4,
            "Epistemic positioning of the narrative voice relative to the cultures it "
            "represents: insider authority versus exoticizing outsider gaze, read through "
            "register, focalization, and treatment of cultural knowledge.",
            {"Said (Orientalism)", "Spivak (subaltern studies)"}),
        dim("CSP", "Cultural Specificity", LayerId::L4,
            "Density and precision of cultural particularity across temporal, spatial, "
            "social, and material domains; concrete detail over generic setting.",
            {"Geertz (thick description)"}),
        dim("CPC", "Cultural Pattern Complexity", LayerId::L4,
            "Whether the text works multiple cultural logics at once: layered relational "
            "structure, institutional rather than personalized conflict, reflexivity toward "
            "the represented systems, archetypal depth over genre convention.",
            {"structural anthropology", "Bourdieu (habitus)"}),
        dim("AC", "Affective Complexity", LayerId::L5,
            "Multiplicity, contradiction, and evolution of represented emotional states; "
            "layered and ambivalent affect rather than single named feelings.",
            {"affect theory (Sedgwick, Berlant, Ngai)"}),
        dim("PI", "Psychological Interiority", LayerId::L5,
            "Depth of access to characters' inner worlds: thought, motivation, memory, and "
            "conflicting desire beyond observable behavior.",
            {"narrative psychology (Cohn, Bruner, Bakhtin)"}),
        dim("EG", "Emotional Granularity", LayerId::L5,
            "Precision and differentiation of emotional vocabulary and concepts, lexical or "
            "structural; fine-grained distinctions between neighboring feeling states.",
            {"Barrett (emotion granularity)"}),
        dim("ENC", "Emotional-Narrative Coherence", LayerId::L5,
            "Whether emotional moments arise organically from situation and character, with "
            "antecedent motivation and stakes-proportionality; flags sentimentality and "
            "unearned pathos.",
            {"New Criticism (organic unity)", "Wood (motivated emotion)"}),
        dim("LP", "Life Philosophy", LayerId::L6,
            "Engagement with fundamental questions of existence, authenticity, freedom, and "
            "meaning, sustained through lived narrative situation rather than didactic "
            "insertion.",
            {"existentialism (Heidegger, Sartre, Camus)",
             "Eastern traditions (Confucian, Daoist, Buddhist)"}),
        dim("MR", "Moral Reflection", LayerId::L6,
            "Depth of ethical inquiry: dilemmas with genuine complexity, competing "
            "frameworks yielding conflicting obligations, irreducible ambiguity over clean "
            "binaries.",
            {"Levinas (alterity)", "MacIntyre (virtue ethics)", "Confucian ethics"}),
        dim("HC", "Human Condition", LayerId::L6,
            "Exploration of mortality, suffering, finitude, and vulnerability as conditions "
            "that shape experience and meaning-making, not as plot devices.",
            {"Arendt (human plurality)", "Nussbaum (capabilities)"}),
        dim("ME", "Meaning Exploration", LayerId::L6,
            "How the narrative constructs, questions, or subverts frameworks of meaning; "
            "high whether meaning is affirmed or systematically undermined, provided its "
            "contingency is the philosophical subject.",
            {"Ricoeur (narrative identity)", "Gadamer (fusion of horizons)"}),
    };
    // Anchor bands extended upward to the next band's floor so lookup is
    // total on [1.0, 5.0].
    o.rubric_ = {
        RubricBand{"Absent", 10, 20, false,
                   "Dimension effectively absent or trivially treated; no meaningful evidence."},
        RubricBand{"Weak", 20, 30, false,
                   "Minimal representation; surface-level treatment with sparse evidence."},
        RubricBand{"Moderate", 30, 40, false,
                   "Some representation present but limited in scope or depth; evidence "
                   "adequate but not extensive."},
        RubricBand{"Strong", 40, 45, false,
                   "Substantial representation with clear evidence; demonstrates depth and "
                   "nuance."},
        RubricBand{"Exceptional", 45, 50, true,
                   "Rich, multi-layered representation with extensive textual evidence; "
                   "sophisticated treatment demonstrating mastery."},
    };
    o.check_invariants();
    return o;
  }();
  return instance;
}

void Ontology::check_invariants() const {
  if (layers_.size() != 3) raise(Errc::manifest_parse, "registry must define exactly 3 layers");
  std::set<std::string> seen;
  for (const auto& d : dimensions_) {
    if (!seen.insert(d.id).second)
      raise(Errc::manifest_parse, "duplicate dimension id " + d.id);
  }
  for (const auto& layer : layers_) {
    for (const auto& id : layer.dimensions) {
      const auto& d = dimension(id);
      if (d.layer != layer.id)
        raise(Errc::manifest_parse, "dimension " + id + " not registered under " + to_string(layer.id));
    }
  }
  if (dimensions_.size() != 12)
    raise(Errc::manifest_parse, "registry must define 12 dimensions");
  // Bands must partition [1.0, 5.0] in tenths with no gaps or overlaps.
  int cursor = scale::kMinTenths;
  for (size_t i = 0; i < rubric_.size(); ++i) {
    const auto& band = rubric_[i];
    if (band.lo_tenths != cursor)
      raise(Errc::manifest_parse, "rubric gap/overlap before band " + band.label);
    if (band.hi_tenths <= band.lo_tenths)
      raise(Errc::manifest_parse, "empty rubric band " + band.label);
    cursor = band.hi_tenths;
    const bool last = i + 1 == rubric_.size();
    if (band.hi_inclusive != last)
      raise(Errc::manifest_parse, "only the top band may close the scale");
  }
  if (cursor != scale::kMaxTenths)
    raise(Errc::manifest_parse, "rubric must end at 5.0");
}

const LayerSpec& Ontology::layer_spec(LayerId id) const {
  for (const auto& layer : layers_)
    if (layer.id == id) return layer;
  raise(Errc::unsupported_layer, "layer not registered: " + to_string(id));
}

const LayerSpec& Ontology::layer_spec(std::string_view layer_id) const {
  return layer_spec(parse_layer(layer_id));
}

const DimensionSpec& Ontology::dimension(std::string_view dimension_id) const {
  for (const auto& d : dimensions_)
    if (d.id == dimension_id) return d;
  raise(Errc::unknown_dimension, "dimension not registered: " + std::string(dimension_id));
}

const RubricBand& Ontology::rubric_band_tenths(int tenths) const {
  if (tenths < scale::kMinTenths || tenths > scale::kMaxTenths)
    raise(Errc::out_of_range, "score outside [1.0, 5.0]");
  for (const auto& band : rubric_) {
    if (tenths >= band.lo_tenths &&
        (tenths < band.hi_tenths || (band.hi_inclusive && tenths == band.hi_tenths)))
      return band;
  }
  raise(Errc::out_of_range, "no band for score");  // unreachable under invariants
}

const RubricBand& Ontology::rubric_band(double score) const {
  if (!(score >= scale::kScoreMin && score <= scale::kScoreMax))
    raise(Errc::out_of_range, "score outside [1.0, 5.0]");
  bool snapped = false;
  return rubric_band_tenths(scale::snap_to_tenths(score, snapped));
}

void Ontology::validate_score_vector(const std::map<std::string, double>& scores,
                                     LayerId layer) const {
  const auto& spec = layer_spec(layer);
  for (const auto& id : spec.dimensions) {
    if (!scores.count(id))
      raise(Errc::missing_dimension, "missing " + id + " for " + to_string(layer));
  }
  for (const auto& [id, value] : scores) {
    if (std::find(spec.dimensions.begin(), spec.dimensions.end(), id) == spec.dimensions.end())
      raise(Errc::unknown_dimension, id + " does not belong to " + to_string(layer));
    if (!(value >= scale::kScoreMin && value <= scale::kScoreMax))
      raise(Errc::score_out_of_range, id + " = " + std::to_string(value));
    if (!scale::on_grid(value))
      raise(Errc::illegal_step, id + " not on the 0.1 grid");
  }
}

nlohmann::ordered_json Ontology::to_json() const {
  nlohmann::ordered_json doc;
  doc["schema"] = "sage-ontology";
  doc["scale"] = {{"score_min", scale::kScoreMin},
                  {"score_max", scale::kScoreMax},
                  {"score_step", scale::kScoreStep},
                  {"confidence_min", scale::kConfidenceMin},
                  {"confidence_max", scale::kConfidenceMax}};
  doc["layers"] = nlohmann::ordered_json::array();
  for (const auto& layer : layers_) {
    nlohmann::ordered_json item;
    item["id"] = to_string(layer.id);
    item["name"] = layer.name;
    item["dimensions"] = layer.dimensions;
    doc["layers"].push_back(std::move(item));
  }
  doc["dimensions"] = nlohmann::ordered_json::array();
  for (const auto& d : dimensions_) {
    nlohmann::ordered_json item;
    item["id"] = d.id;
    item["name"] = d.name;
    item["layer"] = to_string(d.layer);
    item["definition"] = d.definition;
    item["theoretical_anchors"] = d.theoretical_anchors;
    doc["dimensions"].push_back(std::move(item));
  }
  doc["rubric"] = nlohmann::ordered_json::array();
  for (const auto& band : rubric_) {
    nlohmann::ordered_json item;
    item["label"] = band.label;
    item["lo"] = scale::tenths_to_score(band.lo_tenths);
    item["hi"] = scale::tenths_to_score(band.hi_tenths);
    item["hi_inclusive"] = band.hi_inclusive;
    item["criteria"] = band.criteria;
    doc["rubric"].push_back(std::move(item));
  }
  return doc;
}

Ontology Ontology::from_json(const nlohmann::json& doc) {
  Ontology o;
  try {
    for (const auto& item : doc.at("layers")) {
      LayerSpec layer;
      layer.id = parse_layer(item.at("id").get<std::string>());
      layer.name = item.at("name").get<std::string>();
      const auto dims = item.at("dimensions").get<std::vector<std::string>>();
      if (dims.size() != 4)
        raise(Errc::manifest_parse, "layer " + layer.name + " must list 4 dimensions");
      std::copy(dims.begin(), dims.end(), layer.dimensions.begin());
      o.layers_.push_back(std::move(layer));
    }
    for (const auto& item : doc.at("dimensions")) {
      DimensionSpec d;
      d.id = item.at("id").get<std::string>();
      d.name = item.at("name").get<std::string>();
      d.layer = parse_layer(item.at("layer").get<std::string>());
      d.definition = item.at("definition").get<std::string>();
      d.theoretical_anchors = item.at("theoretical_anchors").get<std::vector<std::string>>();
      o.dimensions_.push_back(std::move(d));
    }
    for (const auto& item : doc.at("rubric")) {
      RubricBand band;
      band.label = item.at("label").get<std::string>();
      bool snapped = false;
      band.lo_tenths = scale::snap_to_tenths(item.at("lo").get<double>(), snapped);
      band.hi_tenths = scale::snap_to_tenths(item.at("hi").get<double>(), snapped);
      band.hi_inclusive = item.at("hi_inclusive").get<bool>();
      band.criteria = item.at("criteria").get<std::string>();
      o.rubric_.push_back(std::move(band));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::manifest_parse, std::string("ontology document: ") + e.what());
  }
  o.check_invariants();
  return o;
}

Ontology Ontology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::manifest_parse, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void Ontology::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write " + path.string());
  out << to_json().dump(2) << "\n";
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::unsupported_layer: return "UnsupportedLayer";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::missing_dimension: return "MissingDimension";
    case Errc::unknown_dimension: return "UnknownDimension";
    case Errc::score_out_of_range: return "ScoreOutOfRange";
    case Errc::illegal_step: return "IllegalStep";
    case Errc::confidence_out_of_range: return "ConfidenceOutOfRange";
    case Errc::manifest_parse: return "ManifestParseError";
    case Errc::duplicate_story_id: return "DuplicateStoryId";
    case Errc::missing_text: return "MissingText";
    case Errc::missing_metadata: return "MissingMetadata";
    case Errc::invalid_round: return "InvalidRound";
    case Errc::transcript_length_mismatch: return "TranscriptLengthMismatch";
    case Errc::incomplete_transcript: return "IncompleteTranscript";
    case Errc::template_missing: return "TemplateMissing";
    case Errc::template_parse: return "TemplateParseError";
    case Errc::transport: return "TransportError";
    case Errc::auth: return "AuthError";
    case Errc::timeout: return "TimeoutError";
    case Errc::not_structured: return "NotStructured";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::schema_violation: return "SchemaViolation";
    case Errc::cell_failure: return "CellFailure";
    case Errc::layer_mismatch: return "LayerMismatch";
    case Errc::empty_group: return "EmptyGroup";
    case Errc::wrong_arity: return "WrongArity";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::too_few_groups: return "TooFewGroups";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::invalid_p: return "InvalidP";
    case Errc::duplicate_cell: return "DuplicateCell";
    case Errc::write_error: return "WriteError";
    case Errc::store_corrupt: return "StoreCorrupt";
    case Errc::empty_store: return "EmptyStore";
    case Errc::insufficient_groups: return "InsufficientGroups";
    case Errc::unpaired_modes: return "UnpairedModes";
    case Errc::missing_layer: return "MissingLayer";
    case Errc::usage: return "UsageError";
    case Errc::io_error: return "IoError";
  }
  return "Error";
}

}  // namespace sage
