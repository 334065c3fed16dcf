#include "sage/store.hpp"

#include <sstream>

namespace sage {

std::vector<EvaluationRecord> load_records(const std::filesystem::path& path,
                                           std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open results store " + path.string());

  std::vector<EvaluationRecord> ordered;
  std::map<CellKey, size_t> index;
  std::string line;
  size_t line_number = 0;
  std::string pending_error;
  bool pending_is_last = false;

  while (std::getline(in, line)) {
    ++line_number;
    if (!pending_error.empty()) {
      // Damage followed by more lines is corruption, not a crash tail.
      raise(Errc::store_corrupt, pending_error);
    }
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      pending_error = path.string() + ":" + std::to_string(line_number) + ": unparsable record";
      pending_is_last = true;
      continue;
    }
    EvaluationRecord record;
    try {
      record = record_from_json(doc);
    } catch (const Error& e) {
      if (e.code() == Errc::store_corrupt) throw;
      raise(Errc::store_corrupt,
            path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
    const CellKey key = record.key();
    const auto it = index.find(key);
    if (it == index.end()) {
      index[key] = ordered.size();
      ordered.push_back(std::move(record));
    } else if (!ordered[it->second].ok()) {
      ordered[it->second] = std::move(record);  // retry superseding a failure stub
    } else {
      raise(Errc::store_corrupt, path.string() + ":" + std::to_string(line_number) +
                                     ": duplicate record for cell " + key.story_id + "/" +
                                     key.layer + "/" + key.mode);
    }
  }
  if (!pending_error.empty() && pending_is_last) {
    if (warnings != nullptr) warnings->push_back("TruncatedTail: " + pending_error);
  }
  return ordered;
}

ResultsStore ResultsStore::open(const std::filesystem::path& path) {
  ResultsStore store;
  store.path_ = path;
  if (std::filesystem::exists(path)) {
    store.records_ = load_records(path, &store.warnings_);
    for (size_t i = 0; i < store.records_.size(); ++i)
      store.index_[store.records_[i].key()] = i;
  }
  store.out_.open(path, std::ios::app);
  if (!store.out_) raise(Errc::write_error, "cannot open " + path.string() + " for append");
  return store;
}

bool ResultsStore::is_failure(const CellKey& key) const {
  const auto it = index_.find(key);
  return it != index_.end() && !records_[it->second].ok();
}

void ResultsStore::append(const EvaluationRecord& record) {
  const CellKey key = record.key();
  const auto it = index_.find(key);
  if (it != index_.end() && records_[it->second].ok())
    raise(Errc::duplicate_cell,
          "cell " + key.story_id + "/" + key.layer + "/" + key.mode + " already recorded");
  out_ << to_json(record).dump() << "\n";
  out_.flush();
  if (!out_) raise(Errc::write_error, "append to " + path_.string() + " failed");
  if (it != index_.end()) {
    records_[it->second] = record;
  } else {
    index_[key] = records_.size();
    records_.push_back(record);
  }
}

std::vector<EvaluationRecord> ResultsStore::snapshot() const { return records_; }

std::vector<CellKey> plan_resume(const ResultsStore& store,
                                 const std::vector<StoryRecord>& stories,
                                 const std::vector<LayerId>& layers,
                                 const std::vector<Mode>& modes, bool retry_failures) {
  std::vector<CellKey> pending;
  for (const auto& story : stories) {
    for (LayerId layer : layers) {
      for (Mode mode : modes) {
        CellKey key{story.story_id, to_string(layer), to_string(mode)};
        if (store.contains(key) && !(retry_failures && store.is_failure(key))) continue;
        pending.push_back(std::move(key));
      }
    }
  }
  return pending;
}

}  // namespace sage
