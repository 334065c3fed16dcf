#include "sage/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sage {

EvaluationPayload mode_payload(const StoryRecord& story, Mode mode) {
  EvaluationPayload payload;
  payload.mode = mode;
  payload.story_id = story.story_id;
  payload.category = story.category;
  if (mode == Mode::content_limit) {
    if (!story.text || story.text->empty())
      raise(Errc::missing_text, story.story_id + " has no text for content-limit evaluation");
    payload.text = story.text;
  } else {
    if (!story.title || story.title->empty() || !story.author || story.author->empty())
      raise(Errc::missing_metadata,
            story.story_id + " needs title and author for title-limit evaluation");
    payload.title = story.title;
    payload.author = story.author;
  }
  return payload;
}

std::string schema_id_for_round(int round_index) {
  if (round_index == kValidatorRound) return "validator";
  if (round_index >= 1 && round_index <= kRoundCount)
    return "round" + std::to_string(round_index);
  raise(Errc::invalid_round, "round index " + std::to_string(round_index));
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    const size_t close = text.find("}}", open + 2);
    if (close == std::string::npos)
      raise(Errc::template_parse, "unterminated placeholder");
    const std::string name = text.substr(open + 2, close - open - 2);
    const auto it = values.find(name);
    if (it == values.end())
      raise(Errc::template_parse, "unknown placeholder {{" + name + "}}");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

namespace {

std::string mode_token(Mode mode) {
  return mode == Mode::content_limit ? "content" : "title";
}

std::string template_key(LayerId layer, Mode mode, int round_index) {
  std::string layer_token = to_string(layer);
  std::transform(layer_token.begin(), layer_token.end(), layer_token.begin(), ::tolower);
  if (round_index == kValidatorRound) return layer_token + "_validator";
  return layer_token + "_" + mode_token(mode) + "_r" + std::to_string(round_index);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::template_missing, "missing template asset " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Renders the per-layer dimension block from the registry so prompt prose
/// follows ontology edits without touching the templates.
std::string dimension_block(const Ontology& ontology, LayerId layer) {
  const auto& spec = ontology.layer_spec(layer);
  std::ostringstream out;
  int index = 1;
  for (const auto& id : spec.dimensions) {
    const auto& d = ontology.dimension(id);
    out << index++ << ". " << d.id << " (" << d.name << ") -- " << d.definition;
    if (!d.theoretical_anchors.empty()) {
      out << " [";
      for (size_t i = 0; i < d.theoretical_anchors.size(); ++i) {
        if (i) out << "; ";
        out << d.theoretical_anchors[i];
      }
      out << "]";
    }
    out << "\n";
  }
  return out.str();
}

std::string rubric_block(const Ontology& ontology) {
  std::ostringstream out;
  const auto& bands = ontology.rubric();
  for (auto it = bands.rbegin(); it != bands.rend(); ++it) {
    out << scale::tenths_to_score(it->lo_tenths) << "-"
        << scale::tenths_to_score(it->hi_tenths) << (it->hi_inclusive ? "" : ")")
        << " " << it->label << ": " << it->criteria << "\n";
  }
  return out.str();
}

std::string transcript_block(const std::vector<RoundOutput>& rounds) {
  std::ostringstream out;
  for (const auto& round : rounds) {
    out << "--- ROUND " << round.round_index << " OUTPUT ---\n"
        << to_json(round).dump(2) << "\n";
  }
  return out.str();
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& directory) {
  PromptLibrary library;
  library.directory_ = directory;
  if (!std::filesystem::is_directory(directory))
    raise(Errc::template_missing, "template directory not found: " + directory.string());

  std::vector<std::pair<std::string, std::string>> assets;  // filename -> content
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    assets.emplace_back(entry.path().filename().string(), read_file(entry.path()));
  }
  std::sort(assets.begin(), assets.end());

  std::uint64_t hash = 14695981039346656037ull;
  for (const auto& [name, content] : assets) {
    hash = fnv1a64(name, hash);
    hash = fnv1a64(content, hash);

    // Split on the [[system]] / [[user]] sentinels.
    const std::string system_tag = "[[system]]";
    const std::string user_tag = "[[user]]";
    const size_t sys_pos = content.find(system_tag);
    const size_t user_pos = content.find(user_tag);
    if (sys_pos == std::string::npos || user_pos == std::string::npos || user_pos < sys_pos)
      raise(Errc::template_parse, name + ": expected [[system]] then [[user]] sections");
    Template tpl;
    tpl.system_text = content.substr(sys_pos + system_tag.size(), user_pos - sys_pos - system_tag.size());
    tpl.user_text = content.substr(user_pos + user_tag.size());
    // Trim a single leading newline after each sentinel.
    if (!tpl.system_text.empty() && tpl.system_text.front() == '\n') tpl.system_text.erase(0, 1);
    if (!tpl.user_text.empty() && tpl.user_text.front() == '\n') tpl.user_text.erase(0, 1);
    library.templates_[name.substr(0, name.size() - 4)] = std::move(tpl);
  }

  // Every (layer, mode, round) and per-layer validator asset must exist.
  for (LayerId layer : {LayerId::L4, LayerId::L5, LayerId::L6}) {
    for (Mode mode : {Mode::content_limit, Mode::title_limit})
      for (int round = 1; round <= kRoundCount; ++round)
        library.get(template_key(layer, mode, round));
    library.get(template_key(layer, Mode::content_limit, kValidatorRound));
  }

  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << hash;
  library.version_hash_ = hex.str();
  return library;
}

const PromptLibrary::Template& PromptLibrary::get(const std::string& key) const {
  const auto it = templates_.find(key);
  if (it == templates_.end())
    raise(Errc::template_missing, "template asset '" + key + ".txt' not found in " +
                                      directory_.string());
  return it->second;
}

PromptBundle PromptLibrary::build_round_prompt(const Ontology& ontology, LayerId layer,
                                               Mode mode, int round_index,
                                               const EvaluationPayload& payload,
                                               const std::vector<RoundOutput>& transcript) const {
  if (round_index < 1 || round_index > kRoundCount)
    raise(Errc::invalid_round, "round index " + std::to_string(round_index));
  if (static_cast<int>(transcript.size()) != round_index - 1)
    raise(Errc::transcript_length_mismatch,
          "round " + std::to_string(round_index) + " expects " +
              std::to_string(round_index - 1) + " prior rounds, got " +
              std::to_string(transcript.size()));
  if (payload.mode != mode)
    raise(Errc::usage, "payload mode does not match requested mode");

  std::map<std::string, std::string> values;
  values["dimensions"] = dimension_block(ontology, layer);
  values["rubric"] = rubric_block(ontology);
  values["layer_name"] = ontology.layer_spec(layer).name;
  if (mode == Mode::content_limit) {
    values["story_text"] = *payload.text;
  } else {
    values["title"] = *payload.title;
    values["author"] = *payload.author;
  }
  if (round_index > 1) values["transcript"] = transcript_block(transcript);

  const auto& tpl = get(template_key(layer, mode, round_index));
  PromptBundle bundle;
  bundle.system_text = render_template(tpl.system_text, values);
  bundle.user_text = render_template(tpl.user_text, values);
  bundle.layer = layer;
  bundle.mode = mode;
  bundle.round_index = round_index;
  bundle.expected_schema_id = schema_id_for_round(round_index);
  bundle.story_id = payload.story_id;
  bundle.category = payload.category;
  return bundle;
}

PromptBundle PromptLibrary::build_validator_prompt(
    const Ontology& ontology, LayerId layer, Mode mode, const EvaluationPayload& payload,
    const std::vector<RoundOutput>& full_transcript) const {
  if (static_cast<int>(full_transcript.size()) != kRoundCount)
    raise(Errc::incomplete_transcript,
          "validator requires all " + std::to_string(kRoundCount) + " rounds, got " +
              std::to_string(full_transcript.size()));
  if (payload.mode != mode)
    raise(Errc::usage, "payload mode does not match requested mode");

  std::map<std::string, std::string> values;
  values["dimensions"] = dimension_block(ontology, layer);
  values["rubric"] = rubric_block(ontology);
  values["layer_name"] = ontology.layer_spec(layer).name;
  values["transcript"] = transcript_block(full_transcript);
  if (mode == Mode::content_limit) {
    values["story_block"] = "STORY TEXT:\n" + *payload.text;
  } else {
    values["story_block"] = "WORK: \"" + *payload.title + "\" by " + *payload.author +
                            " (title-limit: no text provided)";
  }

  const auto& tpl = get(template_key(layer, mode, kValidatorRound));
  PromptBundle bundle;
  bundle.system_text = render_template(tpl.system_text, values);
  bundle.user_text = render_template(tpl.user_text, values);
  bundle.layer = layer;
  bundle.mode = mode;
  bundle.round_index = kValidatorRound;
  bundle.expected_schema_id = schema_id_for_round(kValidatorRound);
  bundle.story_id = payload.story_id;
  bundle.category = payload.category;
  return bundle;
}

}  // namespace sage
