#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finnews {

enum class Sentiment { negative, neutral, positive };

std::string_view to_string(Sentiment s);

// Case-insensitive, surrounding whitespace ignored.
std::optional<Sentiment> parse_sentiment(std::string_view text);

struct EntitySentiment {
  std::string entity;
  // Type label (company, person, currency, ...), kept verbatim.
  std::string entity_name;
  Sentiment sentiment = Sentiment::neutral;
  std::vector<std::string> warnings;
};

// Labels the model is expected to emit. Anything else is kept with a warning.
const std::vector<std::string>& canonical_entity_types();

struct AnalysisReport {
  std::string analysis;
  std::vector<std::string> main_points;
  std::string summary;
  std::vector<EntitySentiment> entities;
  std::vector<std::string> parse_diagnostics;
};

// Equality on the four sections and the entity triples; diagnostics and
// per-entity warnings are ignored.
bool same_content(const AnalysisReport& a, const AnalysisReport& b);

enum class Section { analysis, main_points, summary, json_data };

std::string_view section_header(Section s);

// Returns the first bracket-balanced `[...]` span after the "JSON Data:"
// header. Brackets inside double-quoted strings do not count.
std::optional<std::string> extract_json_block(std::string_view text);

struct RepairResult {
  std::vector<nlohmann::json> objects;
  // Repairs that changed the text, in the order they ran:
  // "single-quote", "trailing-comma", "element-salvage".
  std::vector<std::string> repairs;
  std::vector<std::string> diagnostics;
  bool failed = false;
};

// Strict parse first; then single-quote normalization, trailing-comma
// removal and per-object salvage, each tried only if the previous stage
// still fails to parse. `failed` is set when a non-empty block yields no
// objects.
RepairResult repair_json(std::string_view raw);

struct EntityValidation {
  std::optional<EntitySentiment> entity;
  std::string rejection;
};

// `context` is the surrounding response text. When given, a non-person label
// on an entity that the text introduces with a person title ("President",
// "CEO", ...) gets an implausible-type warning.
EntityValidation validate_entity(const nlohmann::json& object, std::string_view context = {});

// Total over arbitrary input: problems are reported in parse_diagnostics.
AnalysisReport parse_report(std::string_view text);

// Canonical four-section rendering with strict JSON for the entities.
// Throws std::invalid_argument when the report carries diagnostics.
std::string render_report(const AnalysisReport& report);

nlohmann::ordered_json to_json(const AnalysisReport& report);

// Inverse of to_json. Throws std::invalid_argument on schema violations.
AnalysisReport report_from_json(const nlohmann::json& j);

}  // namespace finnews
