#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "sage/record.hpp"

namespace sage {

inline constexpr int kStoreSchemaVersion = 1;

/// Append-only results file, one JSON record per line, schema_version field
/// first. One live record per cell key; the only permitted supersede is a
/// later record replacing an earlier failure stub (retry-failures), which
/// keeps the file append-only while the index tracks the latest record.
class ResultsStore {
 public:
  /// Creates the file if absent, otherwise loads and indexes it.
  static ResultsStore open(const std::filesystem::path& path);

  /// Durably appends before returning. Throws duplicate_cell when the key is
  /// already live with a non-failure record, write_error on I/O trouble.
  void append(const EvaluationRecord& record);

  bool contains(const CellKey& key) const { return index_.count(key) > 0; }
  /// True when the latest record for the key is a failure stub.
  bool is_failure(const CellKey& key) const;

  size_t size() const { return index_.size(); }
  const std::filesystem::path& path() const { return path_; }

  /// Latest record per key, in first-append order.
  std::vector<EvaluationRecord> snapshot() const;

  const std::vector<std::string>& load_warnings() const { return warnings_; }

 private:
  ResultsStore() = default;

  std::filesystem::path path_;
  std::ofstream out_;
  std::vector<EvaluationRecord> records_;          // latest per key
  std::map<CellKey, size_t> index_;                // key -> records_ position
  std::vector<std::string> warnings_;
};

/// Reads every live record from a results file. A truncated trailing line is
/// skipped with a TruncatedTail warning; damage anywhere else throws
/// store_corrupt.
std::vector<EvaluationRecord> load_records(const std::filesystem::path& path,
                                           std::vector<std::string>* warnings = nullptr);

/// Full cartesian grid minus cells already present; failure stubs count as
/// present unless retry_failures is set.
std::vector<CellKey> plan_resume(const ResultsStore& store,
                                 const std::vector<StoryRecord>& stories,
                                 const std::vector<LayerId>& layers,
                                 const std::vector<Mode>& modes,
                                 bool retry_failures = false);

}  // namespace sage
