#include "finnews/report.hpp"

#include <array>
#include <stdexcept>

#include "finnews/json_io.hpp"
#include "finnews/text.hpp"

namespace finnews {

namespace {

constexpr std::array<Section, 4> kSections = {Section::analysis, Section::main_points,
                                              Section::summary, Section::json_data};

struct HeaderHit {
  Section section;
  std::size_t line_start;
  std::size_t content_start;
};

std::vector<HeaderHit> locate_headers(std::string_view text) {
  std::vector<HeaderHit> hits;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::size_t p = pos;
    while (p < eol && (text[p] == ' ' || text[p] == '\t')) ++p;
    const std::string_view line = text.substr(p, eol - p);
    for (Section s : kSections) {
      const std::string_view header = section_header(s);
      if (istarts_with_ascii(line, header)) {
        hits.push_back({s, pos, p + header.size()});
        break;
      }
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return hits;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    const std::size_t eol = s.find('\n', pos);
    if (eol == std::string_view::npos) {
      lines.push_back(s.substr(pos));
      break;
    }
    lines.push_back(s.substr(pos, eol - pos));
    pos = eol + 1;
  }
  return lines;
}

// "12. text" or "12) text"; returns the text after the marker.
std::optional<std::string_view> numbered_item(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i == 0 || i > 4 || i >= line.size()) return std::nullopt;
  if (line[i] != '.' && line[i] != ')') return std::nullopt;
  ++i;
  if (i < line.size() && line[i] != ' ' && line[i] != '\t') return std::nullopt;
  return line.substr(i);
}

std::vector<std::string> split_main_points(std::string_view content,
                                           std::vector<std::string>& diagnostics) {
  std::vector<std::string> points;
  bool unnumbered = false;
  bool has_current = false;
  for (std::string_view raw : split_lines(content)) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (auto item = numbered_item(line)) {
      points.push_back(trim(*item));
      has_current = true;
    } else if (has_current) {
      auto& last = points.back();
      last += last.empty() ? line : " " + line;
    } else {
      std::string_view text = line;
      if (text.size() > 1 && (text[0] == '-' || text[0] == '*') && text[1] == ' ') {
        text.remove_prefix(2);
      }
      points.push_back(trim(text));
      unnumbered = true;
    }
  }
  if (unnumbered) diagnostics.push_back("main-points: unnumbered item");
  std::size_t empty = 0;
  std::erase_if(points, [&](const std::string& p) { return p.empty() && ++empty; });
  if (empty) diagnostics.push_back("main-points: dropped " + std::to_string(empty) + " empty item(s)");
  return points;
}

// Calls on_char for every byte outside double-quoted strings, and tracks
// backslash escapes inside them.
template <typename F>
void scan_outside_strings(std::string_view s, F&& on_char) {
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      continue;
    }
    if (!on_char(i, c)) return;
  }
}

std::optional<nlohmann::json> try_parse(std::string_view s) {
  try {
    return nlohmann::json::parse(s);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::string normalize_single_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_double = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_double) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_double = false;
      }
      continue;
    }
    if (c == '"') {
      in_double = true;
      out.push_back(c);
      continue;
    }
    if (c != '\'') {
      out.push_back(c);
      continue;
    }
    // A single-quoted string ends at a quote followed by a JSON delimiter,
    // so apostrophes inside words survive.
    out.push_back('"');
    std::size_t j = i + 1;
    for (; j < s.size(); ++j) {
      if (s[j] == '\\' && j + 1 < s.size()) {
        if (s[j + 1] == '\'') {
          out.push_back('\'');
        } else {
          out.push_back('\\');
          out.push_back(s[j + 1]);
        }
        ++j;
        continue;
      }
      if (s[j] == '\'') {
        std::size_t k = j + 1;
        while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\n' || s[k] == '\r')) ++k;
        if (k == s.size() || s[k] == ':' || s[k] == ',' || s[k] == '}' || s[k] == ']') break;
      }
      if (s[j] == '"') out.push_back('\\');
      out.push_back(s[j]);
    }
    out.push_back('"');
    i = j;
  }
  return out;
}

std::string remove_trailing_commas(std::string_view s) {
  std::vector<std::size_t> drop;
  scan_outside_strings(s, [&](std::size_t i, char c) {
    if (c == ',') {
      std::size_t k = i + 1;
      while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\n' || s[k] == '\r')) ++k;
      if (k < s.size() && (s[k] == ']' || s[k] == '}')) drop.push_back(i);
    }
    return true;
  });
  std::string out;
  out.reserve(s.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (next < drop.size() && drop[next] == i) {
      ++next;
      continue;
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string snippet(std::string_view s) {
  constexpr std::size_t kMax = 60;
  std::string out = clean_text(s.substr(0, kMax));
  if (s.size() > kMax) out += "...";
  return out;
}

// Top-level `{...}` spans, string-aware. An unterminated final object is
// returned as an open span reaching the end of input.
std::vector<std::string_view> top_level_objects(std::string_view s) {
  std::vector<std::string_view> spans;
  int depth = 0;
  std::size_t start = 0;
  scan_outside_strings(s, [&](std::size_t i, char c) {
    if (c == '{') {
      if (depth++ == 0) start = i;
    } else if (c == '}' && depth > 0) {
      if (--depth == 0) spans.push_back(s.substr(start, i - start + 1));
    }
    return true;
  });
  if (depth > 0) spans.push_back(s.substr(start));
  return spans;
}

void collect_elements(const nlohmann::json& j, RepairResult& result) {
  if (j.is_object()) {
    result.diagnostics.push_back("json: single object instead of array");
    result.objects.push_back(j);
    return;
  }
  if (!j.is_array()) {
    result.diagnostics.push_back("json: block is not an array");
    result.failed = true;
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_object()) {
      result.objects.push_back(j[i]);
    } else {
      result.diagnostics.push_back("json: dropped non-object element " + std::to_string(i));
    }
  }
  if (!j.empty() && result.objects.empty()) result.failed = true;
}

// Reads a string-valued field; non-string values are kept as their JSON text.
std::optional<std::string> field_text(const nlohmann::json& obj, const char* key,
                                      std::vector<std::string>& warnings) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return trim(it->get<std::string>());
  warnings.push_back(std::string(it->is_structured() ? "nested-value: " : "non-string-value: ") + key);
  return dump_line(*it);
}

bool is_canonical_type(std::string_view type) {
  for (const auto& t : canonical_entity_types()) {
    if (iequals_ascii(t, type)) return true;
  }
  return false;
}

bool is_person_title(std::string_view word) {
  static const std::array<std::string_view, 18> titles = {
      "president", "ceo", "mr.", "mrs.", "ms.", "dr.", "analyst", "strategist", "chairman",
      "chairwoman", "co-founder", "founder", "economist", "senator", "governor", "executive",
      "secretary", "minister"};
  const std::string w = to_lower_ascii(word);
  for (auto t : titles) {
    if (w == t) return true;
  }
  return false;
}

// True when some occurrence of `entity` in `context` is preceded, within two
// words, by a person title.
bool introduced_as_person(std::string_view entity, std::string_view context) {
  if (entity.empty()) return false;
  for (std::size_t pos = context.find(entity); pos != std::string_view::npos;
       pos = context.find(entity, pos + 1)) {
    std::size_t end = pos;
    for (int word = 0; word < 2; ++word) {
      while (end > 0 && (context[end - 1] == ' ' || context[end - 1] == '\t')) --end;
      std::size_t begin = end;
      while (begin > 0 && context[begin - 1] != ' ' && context[begin - 1] != '\t' &&
             context[begin - 1] != '\n') {
        --begin;
      }
      std::string_view w = context.substr(begin, end - begin);
      while (!w.empty() && w.back() == ',') w.remove_suffix(1);
      if (w.empty()) break;
      if (is_person_title(w)) return true;
      end = begin;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::negative: return "negative";
    case Sentiment::neutral: return "neutral";
    case Sentiment::positive: return "positive";
  }
  return "neutral";
}

std::optional<Sentiment> parse_sentiment(std::string_view text) {
  const std::string t = to_lower_ascii(trim(text));
  if (t == "negative") return Sentiment::negative;
  if (t == "neutral") return Sentiment::neutral;
  if (t == "positive") return Sentiment::positive;
  return std::nullopt;
}

const std::vector<std::string>& canonical_entity_types() {
  static const std::vector<std::string> types = {
      "company", "person", "organization", "currency", "product",
      "financial product", "technology", "economy", "group"};
  return types;
}

bool same_content(const AnalysisReport& a, const AnalysisReport& b) {
  if (a.analysis != b.analysis || a.main_points != b.main_points || a.summary != b.summary ||
      a.entities.size() != b.entities.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.entities.size(); ++i) {
    const auto& x = a.entities[i];
    const auto& y = b.entities[i];
    if (x.entity != y.entity || x.entity_name != y.entity_name || x.sentiment != y.sentiment) {
      return false;
    }
  }
  return true;
}

std::string_view section_header(Section s) {
  switch (s) {
    case Section::analysis: return "Analysis:";
    case Section::main_points: return "Main Points:";
    case Section::summary: return "Summary:";
    case Section::json_data: return "JSON Data:";
  }
  return "";
}

std::optional<std::string> extract_json_block(std::string_view text) {
  const auto hits = locate_headers(text);
  const HeaderHit* json_hit = nullptr;
  for (const auto& h : hits) {
    if (h.section == Section::json_data) {
      json_hit = &h;
      break;
    }
  }
  if (!json_hit) return std::nullopt;
  const std::string_view rest = text.substr(json_hit->content_start);
  std::optional<std::size_t> open;
  std::optional<std::size_t> close;
  int depth = 0;
  scan_outside_strings(rest, [&](std::size_t i, char c) {
    if (c == '[') {
      if (!open) open = i;
      ++depth;
    } else if (c == ']' && open) {
      if (--depth == 0) {
        close = i;
        return false;
      }
    }
    return true;
  });
  if (!open || !close) return std::nullopt;
  return std::string(rest.substr(*open, *close - *open + 1));
}

RepairResult repair_json(std::string_view raw) {
  RepairResult result;
  std::string text(raw);
  if (auto j = try_parse(text)) {
    collect_elements(*j, result);
    return result;
  }
  if (std::string next = normalize_single_quotes(text); next != text) {
    result.repairs.push_back("single-quote");
    text = std::move(next);
    if (auto j = try_parse(text)) {
      collect_elements(*j, result);
      return result;
    }
  }
  if (std::string next = remove_trailing_commas(text); next != text) {
    result.repairs.push_back("trailing-comma");
    text = std::move(next);
    if (auto j = try_parse(text)) {
      collect_elements(*j, result);
      return result;
    }
  }
  result.repairs.push_back("element-salvage");
  const auto spans = top_level_objects(text);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    auto j = try_parse(spans[i]);
    if (j && j->is_object()) {
      result.objects.push_back(std::move(*j));
    } else {
      result.diagnostics.push_back("json: dropped unparseable element " + std::to_string(i) + ": " +
                                   snippet(spans[i]));
    }
  }
  if (result.objects.empty()) result.failed = true;
  return result;
}

EntityValidation validate_entity(const nlohmann::json& object, std::string_view context) {
  EntityValidation out;
  if (!object.is_object()) {
    out.rejection = "not an object";
    return out;
  }
  EntitySentiment e;
  const auto entity = field_text(object, "entity", e.warnings);
  if (!entity) {
    out.rejection = "missing entity key";
    return out;
  }
  if (entity->empty()) {
    out.rejection = "empty entity";
    return out;
  }
  e.entity = *entity;

  const auto type = field_text(object, "entity_name", e.warnings);
  if (!type || type->empty()) {
    e.entity_name = "unknown";
    e.warnings.push_back("missing-type");
  } else {
    e.entity_name = *type;
    if (!is_canonical_type(e.entity_name)) e.warnings.push_back("uncanonical-type: " + e.entity_name);
  }

  const auto sentiment_text = field_text(object, "sentiment", e.warnings);
  const auto sentiment = sentiment_text ? parse_sentiment(*sentiment_text) : std::nullopt;
  if (sentiment) {
    e.sentiment = *sentiment;
  } else {
    e.sentiment = Sentiment::neutral;
    e.warnings.push_back("sentiment-coerced: " + (sentiment_text ? *sentiment_text : "<missing>"));
  }

  if (!iequals_ascii(e.entity_name, "person") && introduced_as_person(e.entity, context)) {
    e.warnings.push_back("implausible-type: '" + e.entity + "' is introduced as a person but labeled '" +
                         e.entity_name + "'");
  }
  out.entity = std::move(e);
  return out;
}

AnalysisReport parse_report(std::string_view text) {
  AnalysisReport report;
  auto& diag = report.parse_diagnostics;
  const auto hits = locate_headers(text);

  std::array<std::optional<std::string_view>, 4> content;
  for (std::size_t h = 0; h < hits.size(); ++h) {
    const auto idx = static_cast<std::size_t>(hits[h].section);
    const std::size_t end = h + 1 < hits.size() ? hits[h + 1].line_start : text.size();
    if (content[idx]) {
      diag.push_back("duplicate-section: " + std::string(section_header(hits[h].section)) +
                     " (later occurrence ignored)");
      continue;
    }
    content[idx] = text.substr(hits[h].content_start, end - hits[h].content_start);
  }
  const std::size_t first = hits.empty() ? text.size() : hits.front().line_start;
  if (!trim(text.substr(0, first)).empty()) diag.push_back("leading text before first section ignored");
  for (Section s : kSections) {
    if (!content[static_cast<std::size_t>(s)]) {
      diag.push_back("missing-section: " + std::string(section_header(s)));
    }
  }

  if (const auto& c = content[static_cast<std::size_t>(Section::analysis)]) report.analysis = trim(*c);
  if (const auto& c = content[static_cast<std::size_t>(Section::main_points)]) {
    report.main_points = split_main_points(*c, diag);
  }
  if (const auto& c = content[static_cast<std::size_t>(Section::summary)]) report.summary = trim(*c);

  if (content[static_cast<std::size_t>(Section::json_data)]) {
    const auto block = extract_json_block(text);
    if (!block) {
      diag.push_back("json-block-absent: no balanced [...] after JSON Data:");
      return report;
    }
    auto repaired = repair_json(*block);
    for (const auto& r : repaired.repairs) diag.push_back("json-repair: " + r);
    for (auto& d : repaired.diagnostics) diag.push_back(std::move(d));
    if (repaired.failed) diag.push_back("json-repair-failed");
    for (std::size_t i = 0; i < repaired.objects.size(); ++i) {
      auto v = validate_entity(repaired.objects[i], text);
      if (v.entity) {
        report.entities.push_back(std::move(*v.entity));
      } else {
        diag.push_back("entity-rejected " + std::to_string(i) + ": " + v.rejection);
      }
    }
  }
  return report;
}

std::string render_report(const AnalysisReport& report) {
  if (!report.parse_diagnostics.empty()) {
    throw std::invalid_argument("render_report: report carries parse diagnostics");
  }
  std::string out;
  out += section_header(Section::analysis);
  out += '\n';
  out += report.analysis;
  out += "\n\n";
  out += section_header(Section::main_points);
  out += '\n';
  for (std::size_t i = 0; i < report.main_points.size(); ++i) {
    out += std::to_string(i + 1) + ". " + report.main_points[i] + '\n';
  }
  out += '\n';
  out += section_header(Section::summary);
  out += '\n';
  out += report.summary;
  out += "\n\n";
  out += section_header(Section::json_data);
  out += '\n';
  nlohmann::ordered_json entities = nlohmann::ordered_json::array();
  for (const auto& e : report.entities) {
    entities.push_back({{"entity", e.entity},
                        {"entity_name", e.entity_name},
                        {"sentiment", std::string(to_string(e.sentiment))}});
  }
  out += dump_line(entities);
  return out;
}

nlohmann::ordered_json to_json(const AnalysisReport& report) {
  nlohmann::ordered_json entities = nlohmann::ordered_json::array();
  for (const auto& e : report.entities) {
    entities.push_back({{"entity", e.entity},
                        {"entity_name", e.entity_name},
                        {"sentiment", std::string(to_string(e.sentiment))}});
  }
  return {{"analysis", report.analysis},
          {"main_points", report.main_points},
          {"summary", report.summary},
          {"entities", std::move(entities)},
          {"diagnostics", report.parse_diagnostics}};
}

AnalysisReport report_from_json(const nlohmann::json& j) {
  try {
    AnalysisReport r;
    r.analysis = j.at("analysis").get<std::string>();
    r.main_points = j.at("main_points").get<std::vector<std::string>>();
    r.summary = j.at("summary").get<std::string>();
    for (const auto& obj : j.at("entities")) {
      auto v = validate_entity(obj);
      if (!v.entity) throw std::invalid_argument("report entity: " + v.rejection);
      if (!parse_sentiment(obj.at("sentiment").get<std::string>())) {
        throw std::invalid_argument("report entity: bad sentiment");
      }
      r.entities.push_back(std::move(*v.entity));
    }
    if (j.contains("diagnostics")) r.parse_diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("report JSON: ") + e.what());
  }
}

}  // namespace finnews
