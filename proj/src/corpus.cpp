#include "sage/corpus.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sage {

std::string to_string(Category c) {
  switch (c) {
    case Category::canonical: return "canonical";
    case Category::pulp: return "pulp";
    case Category::llm_generated: return "llm_generated";
  }
  return "?";
}

std::string to_string(QualityTier t) {
  switch (t) {
    case QualityTier::none: return "none";
    case QualityTier::high: return "high";
    case QualityTier::average: return "average";
    case QualityTier::low: return "low";
  }
  return "?";
}

std::string to_string(Mode m) {
  return m == Mode::content_limit ? "content_limit" : "title_limit";
}

Category parse_category(std::string_view text) {
  if (text == "canonical") return Category::canonical;
  if (text == "pulp") return Category::pulp;
  if (text == "llm_generated") return Category::llm_generated;
  raise(Errc::manifest_parse, "unknown category '" + std::string(text) + "'");
}

QualityTier parse_quality_tier(std::string_view text) {
  if (text.empty() || text == "none") return QualityTier::none;
  if (text == "high") return QualityTier::high;
  if (text == "average") return QualityTier::average;
  if (text == "low") return QualityTier::low;
  raise(Errc::manifest_parse, "unknown quality_tier '" + std::string(text) + "'");
}

Mode parse_mode(std::string_view text) {
  if (text == "content" || text == "content_limit") return Mode::content_limit;
  if (text == "title" || text == "title_limit") return Mode::title_limit;
  raise(Errc::usage, "unknown mode '" + std::string(text) + "' (use content or title)");
}

int count_words(std::string_view text) {
  int count = 0;
  bool in_token = false;
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::manifest_parse, "cannot read story text " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::manifest_parse, "cannot open manifest " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::manifest_parse, path.string() + ": " + e.what());
  }

  Manifest manifest;
  std::set<std::string> ids;
  const auto base_dir = path.parent_path();
  try {
    const auto& entries = doc.at("stories");
    if (!entries.is_array()) raise(Errc::manifest_parse, "'stories' must be a list");
    for (const auto& entry : entries) {
      StoryRecord record;
      record.story_id = entry.at("story_id").get<std::string>();
      if (record.story_id.empty()) raise(Errc::manifest_parse, "empty story_id");
      if (!ids.insert(record.story_id).second)
        raise(Errc::duplicate_story_id, "story_id '" + record.story_id + "' appears twice");
      record.category = parse_category(entry.at("category").get<std::string>());
      if (entry.contains("title") && !entry["title"].is_null())
        record.title = entry["title"].get<std::string>();
      if (entry.contains("author") && !entry["author"].is_null())
        record.author = entry["author"].get<std::string>();
      if (entry.contains("text") && !entry["text"].is_null()) {
        record.text = entry["text"].get<std::string>();
      } else if (entry.contains("text_path") && !entry["text_path"].is_null()) {
        record.text = read_text_file(base_dir / entry["text_path"].get<std::string>());
      }
      if (entry.contains("quality_tier") && !entry["quality_tier"].is_null())
        record.quality_tier = parse_quality_tier(entry["quality_tier"].get<std::string>());
      if (record.quality_tier != QualityTier::none &&
          record.category != Category::llm_generated)
        raise(Errc::manifest_parse, record.story_id +
                                        ": quality_tier applies only to llm_generated stories");
      if (entry.contains("source") && !entry["source"].is_null())
        record.source = entry["source"].get<std::string>();

      const int declared =
          entry.contains("word_count") && !entry["word_count"].is_null()
              ? entry["word_count"].get<int>()
              : -1;
      if (record.text) {
        record.word_count = count_words(*record.text);
        if (declared >= 0 && declared != record.word_count) {
          manifest.warnings.push_back(record.story_id + ": WordCountMismatch declared " +
                                      std::to_string(declared) + ", counted " +
                                      std::to_string(record.word_count));
        }
      } else if (declared >= 0) {
        record.word_count = declared;
      }
      manifest.stories.push_back(std::move(record));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::manifest_parse, path.string() + ": " + e.what());
  }
  return manifest;
}

void save_manifest(const std::vector<StoryRecord>& stories,
                   const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["stories"] = nlohmann::ordered_json::array();
  for (const auto& record : stories) {
    nlohmann::ordered_json entry;
    entry["story_id"] = record.story_id;
    entry["category"] = to_string(record.category);
    if (record.title) entry["title"] = *record.title;
    if (record.author) entry["author"] = *record.author;
    if (record.text) entry["text"] = *record.text;
    entry["word_count"] = record.word_count;
    if (record.quality_tier != QualityTier::none)
      entry["quality_tier"] = to_string(record.quality_tier);
    if (!record.source.empty()) entry["source"] = record.source;
    doc["stories"].push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write manifest " + path.string());
  out << doc.dump(2) << "\n";
}

ValidationReport validate_story(const StoryRecord& record, Mode mode) {
  ValidationReport report;
  report.story_id = record.story_id;
  if (mode == Mode::content_limit) {
    if (!record.text || record.text->empty())
      report.errors.push_back({"MissingText", "content-limit evaluation requires story text"});
  } else {
    if (!record.title || record.title->empty())
      report.errors.push_back({"MissingMetadata", "title-limit evaluation requires a title"});
    if (!record.author || record.author->empty())
      report.errors.push_back({"MissingMetadata", "title-limit evaluation requires an author"});
  }
  if (record.text &&
      (record.word_count < kWordCountMin || record.word_count > kWordCountMax)) {
    report.warnings.push_back(
        {"LengthOutOfRange", std::to_string(record.word_count) + " words outside [" +
                                 std::to_string(kWordCountMin) + ", " +
                                 std::to_string(kWordCountMax) + "]"});
  }
  return report;
}

}  // namespace sage
