#include "finnews/prompting.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "finnews/json_io.hpp"
#include "finnews/text.hpp"

namespace finnews {

namespace {

constexpr std::array<std::string_view, 5> kMarkers = {kBeginSequence, kInstOpen, kInstClose, kSysOpen,
                                                      kSysClose};

void reject_markers(std::string_view field, std::string_view name) {
  for (auto m : kMarkers) {
    if (field.find(m) != std::string_view::npos) {
      throw PromptError(std::string(name) + " contains template marker " + std::string(m));
    }
  }
}

std::string prefix() {
  return std::string(kBeginSequence) + std::string(kInstOpen) + " " + std::string(kSysOpen) + "\n";
}

std::string sys_suffix() { return "\n" + std::string(kSysClose) + "\n\n"; }

}  // namespace

std::string render_prompt(const PromptEnvelope& envelope) {
  if (clean_text(envelope.input_text).empty()) throw PromptError("input text is empty");
  reject_markers(envelope.system_text, "system text");
  reject_markers(envelope.instruction_text, "instruction text");
  reject_markers(envelope.input_text, "input text");
  if (envelope.instruction_text.find('\n') != std::string::npos) {
    throw PromptError("instruction text must be a single line");
  }
  return prefix() + envelope.system_text + sys_suffix() + envelope.instruction_text + "\n" +
         envelope.input_text + " " + std::string(kInstClose);
}

std::optional<PromptEnvelope> parse_prompt(std::string_view prompt) {
  const std::string head = prefix();
  const std::string tail = " " + std::string(kInstClose);
  if (prompt.size() < head.size() + tail.size() || prompt.substr(0, head.size()) != head ||
      prompt.substr(prompt.size() - tail.size()) != tail) {
    return std::nullopt;
  }
  const std::string_view body = prompt.substr(head.size(), prompt.size() - head.size() - tail.size());
  const std::string sep = sys_suffix();
  const auto sys_end = body.find(sep);
  if (sys_end == std::string_view::npos) return std::nullopt;
  const std::string_view after = body.substr(sys_end + sep.size());
  const auto nl = after.find('\n');
  if (nl == std::string_view::npos) return std::nullopt;
  PromptEnvelope e;
  e.system_text = std::string(body.substr(0, sys_end));
  e.instruction_text = std::string(after.substr(0, nl));
  e.input_text = std::string(after.substr(nl + 1));
  return e;
}

std::set<TaskTag> infer_task_tags(std::string_view response) {
  const auto report = parse_report(response);
  std::set<TaskTag> tags = {TaskTag::analysis, TaskTag::main_points, TaskTag::summary, TaskTag::entities};
  const std::array<std::pair<Section, TaskTag>, 4> map = {{{Section::analysis, TaskTag::analysis},
                                                           {Section::main_points, TaskTag::main_points},
                                                           {Section::summary, TaskTag::summary},
                                                           {Section::json_data, TaskTag::entities}}};
  for (const auto& d : report.parse_diagnostics) {
    for (const auto& [section, tag] : map) {
      if (d == "missing-section: " + std::string(section_header(section))) tags.erase(tag);
    }
  }
  return tags;
}

InstructionRecord build_instruction_record(const NewsArticle& article, const AnalysisReport& target,
                                           const PromptEnvelope& defaults) {
  PromptEnvelope envelope = defaults;
  envelope.input_text = article.body;
  InstructionRecord record;
  record.prompt = render_prompt(envelope);
  record.response = render_report(target);
  const auto reparsed = parse_report(record.response);
  if (!reparsed.parse_diagnostics.empty() || !same_content(reparsed, target)) {
    throw std::invalid_argument("target report for article '" + article.id +
                                "' does not survive canonical rendering");
  }
  record.task_tags = {TaskTag::analysis, TaskTag::main_points, TaskTag::summary, TaskTag::entities};
  return record;
}

std::size_t export_training_file(const std::vector<InstructionRecord>& records,
                                 const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("export_training_file: no records");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json line = {{"prompt", r.prompt}, {"response", r.response}};
    out << dump_line(line) << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return records.size();
}

std::vector<InstructionRecord> import_training_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<InstructionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      InstructionRecord r;
      r.prompt = j.at("prompt").get<std::string>();
      r.response = j.at("response").get<std::string>();
      r.task_tags = infer_task_tags(r.response);
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

LengthEstimate estimate_length_budget(const InstructionRecord& record, double chars_per_token,
                                      std::size_t max_tokens) {
  if (!(chars_per_token > 0.0)) throw std::invalid_argument("chars_per_token must be positive");
  LengthEstimate est;
  est.characters = utf8_length(record.prompt) + utf8_length(record.response);
  est.tokens = static_cast<std::size_t>(std::ceil(static_cast<double>(est.characters) / chars_per_token));
  est.over_budget = est.tokens > max_tokens;
  return est;
}

}  // namespace finnews
