#pragma once

#include <functional>
#include <vector>

#include "sage/client.hpp"
#include "sage/record.hpp"

namespace sage {

struct RunOptions {
  /// Extra re-requests of the same round after a SchemaViolation before the
  /// cell fails.
  int reparse_limit = 2;
  int concurrency = 1;
};

/// Everything a cell evaluation needs; shared across concurrent cells.
struct EvalContext {
  const Ontology& ontology;
  const PromptLibrary& prompts;
  Client& client;
  ProviderConfig provider;
  RunOptions options;
};

/// Validates a parsed round document against the layer registry: exactly the
/// layer's four dimensions, scores snapped to the 0.1 grid (round half up,
/// recorded as normalization notes), confidences integral in [1, 5].
RoundOutput parse_round_output(const nlohmann::json& doc, const Ontology& ontology,
                               LayerId layer, int round_index);

ValidatorReport parse_validator_report(const nlohmann::json& doc, const Ontology& ontology,
                                       LayerId layer);

/// Runs the five rounds strictly sequentially; round r's prompt embeds the
/// transcript of rounds 1..r-1. Throws cell_failure wrapping the terminal
/// error.
std::vector<RoundOutput> run_iterative(EvalContext& ctx, const StoryRecord& story,
                                       LayerId layer, Mode mode);

ValidatorReport run_validator(EvalContext& ctx, const StoryRecord& story, LayerId layer,
                              Mode mode, const std::vector<RoundOutput>& rounds);

/// Five rounds + validator + derived metrics. Throws cell_failure.
EvaluationRecord evaluate_cell(EvalContext& ctx, const StoryRecord& story, LayerId layer,
                               Mode mode);

/// Converts a cell_failure into a persistable stub record.
EvaluationRecord failure_record(const StoryRecord& story, LayerId layer, Mode mode,
                                const std::string& stage, const Error& error,
                                const ProviderConfig& provider);

struct SkippedCell {
  CellKey cell;
  std::string reason;
};

struct BatchOutcome {
  int evaluated = 0;       // new records appended this run (incl. failures)
  int failed = 0;          // failure stubs among them
  int already_present = 0; // cells satisfied by the store (resume)
  std::vector<SkippedCell> skipped;
  std::uint64_t completions_issued = 0;
};

class ResultsStore;

/// Evaluates every pending (story, layer, mode) cell against the store,
/// skipping cells whose story fails mode validation. Cells run concurrently
/// up to options.concurrency; appends stay in grid order so a fixed-seed
/// mock run is byte-reproducible regardless of thread scheduling.
BatchOutcome run_grid(EvalContext& ctx, const std::vector<StoryRecord>& stories,
                      const std::vector<LayerId>& layers, const std::vector<Mode>& modes,
                      ResultsStore& store, bool retry_failures = false);

}  // namespace sage
