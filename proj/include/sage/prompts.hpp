#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sage/corpus.hpp"
#include "sage/ontology.hpp"
#include "sage/transcript.hpp"

namespace sage {

/// Mode-redacted view of a story. content_limit carries only the text;
/// title_limit carries only title and author. story_id/category are routing
/// metadata and are never rendered into prompt text.
struct EvaluationPayload {
  Mode mode = Mode::content_limit;
  std::optional<std::string> text;
  std::optional<std::string> title;
  std::optional<std::string> author;
  std::string story_id;
  Category category = Category::canonical;
};

/// Strict redaction per mode. Throws missing_text / missing_metadata.
EvaluationPayload mode_payload(const StoryRecord& story, Mode mode);

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  LayerId layer = LayerId::L4;
  Mode mode = Mode::content_limit;
  int round_index = 1;  // 1..5, or kValidatorRound for the validator pass
  std::string expected_schema_id;
  std::string story_id;
  Category category = Category::canonical;
};

/// Schema identifier bound to a round ("round1".."round5", "validator").
std::string schema_id_for_round(int round_index);

/// Prompt templates loaded from an asset directory: one file per
/// (layer, mode, round) plus one validator file per layer. Rendering is a
/// pure function of the inputs; the asset set is fingerprinted so records
/// can pin the exact prompt version they were produced with.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& directory);

  /// fnv1a64 hex digest over the sorted asset files.
  const std::string& version_hash() const { return version_hash_; }
  const std::filesystem::path& directory() const { return directory_; }

  PromptBundle build_round_prompt(const Ontology& ontology, LayerId layer, Mode mode,
                                  int round_index, const EvaluationPayload& payload,
                                  const std::vector<RoundOutput>& transcript) const;

  PromptBundle build_validator_prompt(const Ontology& ontology, LayerId layer, Mode mode,
                                      const EvaluationPayload& payload,
                                      const std::vector<RoundOutput>& full_transcript) const;

 private:
  struct Template {
    std::string system_text;
    std::string user_text;
  };

  const Template& get(const std::string& key) const;

  std::filesystem::path directory_;
  std::map<std::string, Template> templates_;
  std::string version_hash_;
};

/// Renders `{{name}}` placeholders from `values`; unknown or unresolved
/// placeholders throw template_parse.
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values);

/// 64-bit FNV-1a, used to fingerprint template assets.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);

}  // namespace sage
