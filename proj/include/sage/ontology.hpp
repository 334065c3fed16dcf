#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sage/error.hpp"

namespace sage {

enum class LayerId { L4, L5, L6 };

std::string to_string(LayerId layer);
/// Parses "L4"/"L5"/"L6"; anything else (including the rule-based L1-L3)
/// throws unsupported_layer.
LayerId parse_layer(std::string_view text);
std::optional<LayerId> try_parse_layer(std::string_view text);

/// Score/confidence scale. Dimension scores live on a 0.1 grid in
/// [1.0, 5.0] and are carried as integer tenths so that the strict
/// thresholds elsewhere (0.3 convergence, 0.5 agreement) compare exactly.
namespace scale {

inline constexpr int kMinTenths = 10;
inline constexpr int kMaxTenths = 50;
inline constexpr double kScoreMin = 1.0;
inline constexpr double kScoreMax = 5.0;
inline constexpr double kScoreStep = 0.1;
inline constexpr int kConfidenceMin = 1;
inline constexpr int kConfidenceMax = 5;

/// Snaps a raw score to the 0.1 grid (round half up). `snapped` is set when
/// the input was not already on the grid. No range check.
int snap_to_tenths(double raw, bool& snapped);

/// True when `raw` sits on the 0.1 grid (within representation noise).
bool on_grid(double raw);

inline double tenths_to_score(int tenths) { return tenths / 10.0; }

}  // namespace scale

struct DimensionSpec {
  std::string id;          // short code, e.g. "IPD"
  std::string name;        // full name
  LayerId layer;
  std::string definition;  // prose summary
  std::vector<std::string> theoretical_anchors;
};

struct LayerSpec {
  LayerId id;
  std::string name;
  std::array<std::string, 4> dimensions;  // canonical order
};

/// Half-open score band [lo, hi) except the top band, which closes at 5.0.
struct RubricBand {
  std::string label;
  int lo_tenths;
  int hi_tenths;
  bool hi_inclusive;
  std::string criteria;
};

/// Immutable registry of layers, dimensions, scale, and rubric. Safe for
/// unrestricted concurrent reads once constructed.
class Ontology {
 public:
  /// The built-in three-layer registry (L4-L6, 12 dimensions).
  static const Ontology& builtin();

  static Ontology from_json(const nlohmann::json& doc);
  static Ontology load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer_spec(LayerId id) const;
  const LayerSpec& layer_spec(std::string_view layer_id) const;
  const DimensionSpec& dimension(std::string_view dimension_id) const;

  /// The unique band containing `score`; throws out_of_range outside [1, 5].
  const RubricBand& rubric_band(double score) const;
  const RubricBand& rubric_band_tenths(int tenths) const;
  const std::vector<RubricBand>& rubric() const { return rubric_; }

  /// Accepts iff exactly the layer's four dimensions are present and every
  /// score is on the 0.1 grid inside [1.0, 5.0]. Throws missing_dimension,
  /// unknown_dimension, score_out_of_range, or illegal_step.
  void validate_score_vector(const std::map<std::string, double>& scores,
                             LayerId layer) const;

 private:
  Ontology() = default;
  void check_invariants() const;

  std::vector<LayerSpec> layers_;
  std::vector<DimensionSpec> dimensions_;
  std::vector<RubricBand> rubric_;
};

}  // namespace sage
