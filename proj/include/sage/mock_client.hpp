#pragma once

#include <atomic>
#include <cstdint>

#include "sage/client.hpp"
#include "sage/ontology.hpp"

namespace sage {

/// Deterministic stand-in backend: (bundle, seed) -> raw_text is a pure
/// function. Emits schema-valid documents whose scores follow category base
/// tables (canonical > pulp > llm_generated) plus bounded hash noise, with
/// per-round movement toward the round-5 target small enough to converge
/// except for a seeded 1-in-50 forced-divergence cell.
Completion mock_complete(const PromptBundle& bundle, std::uint64_t seed,
                         const Ontology& ontology = Ontology::builtin());

class MockClient : public Client {
 public:
  MockClient(std::uint64_t seed, const Ontology& ontology)
      : seed_(seed), ontology_(ontology) {}

  Completion complete(const PromptBundle& bundle) override {
    issued_.fetch_add(1);
    return mock_complete(bundle, seed_, ontology_);
  }

  std::uint64_t completions_issued() const override { return issued_.load(); }

 private:
  std::uint64_t seed_;
  const Ontology& ontology_;
  std::atomic<std::uint64_t> issued_{0};
};

namespace mock_detail {

/// Exposed for tests that need to locate seeded injection cells.
bool forces_divergence(std::uint64_t seed, const std::string& story_id, LayerId layer,
                       Mode mode);
bool forces_disagreement(std::uint64_t seed, const std::string& story_id, LayerId layer,
                         Mode mode);

}  // namespace mock_detail

}  // namespace sage
