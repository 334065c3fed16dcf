#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sage/error.hpp"

namespace sage {

enum class Category { canonical, pulp, llm_generated };
enum class QualityTier { none, high, average, low };
enum class Mode { content_limit, title_limit };

std::string to_string(Category c);
std::string to_string(QualityTier t);
std::string to_string(Mode m);
Category parse_category(std::string_view text);
QualityTier parse_quality_tier(std::string_view text);
/// Accepts "content"/"content_limit" and "title"/"title_limit".
Mode parse_mode(std::string_view text);

struct StoryRecord {
  std::string story_id;
  Category category = Category::canonical;
  std::optional<std::string> title;
  std::optional<std::string> author;
  std::optional<std::string> text;
  int word_count = 0;
  QualityTier quality_tier = QualityTier::none;
  std::string source;

  bool operator==(const StoryRecord&) const = default;
};

struct Manifest {
  std::vector<StoryRecord> stories;
  std::vector<std::string> warnings;  // load-time cross-check findings
};

/// Whitespace-delimited token count.
int count_words(std::string_view text);

/// Loads and validates a manifest document. Story texts referenced via
/// text_path are read relative to the manifest file. Throws
/// manifest_parse or duplicate_story_id.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes records back out with inline text; load_manifest(save_manifest(r))
/// is the identity on the record list.
void save_manifest(const std::vector<StoryRecord>& stories,
                   const std::filesystem::path& path);

struct Finding {
  std::string code;
  std::string detail;
  bool operator==(const Finding&) const = default;
};

struct ValidationReport {
  std::string story_id;
  std::vector<Finding> errors;
  std::vector<Finding> warnings;
  bool ok() const { return errors.empty(); }
};

/// Mode-specific usability check. Never throws: all findings land in the
/// report. Length outside [2000, 8000] words is a warning, not an error.
ValidationReport validate_story(const StoryRecord& record, Mode mode);

inline constexpr int kWordCountMin = 2000;
inline constexpr int kWordCountMax = 8000;

}  // namespace sage
