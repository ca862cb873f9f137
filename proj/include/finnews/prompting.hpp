#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "finnews/corpus.hpp"
#include "finnews/report.hpp"

namespace finnews {

// Llama-2 chat markers.
inline constexpr std::string_view kBeginSequence = "<s>";
inline constexpr std::string_view kInstOpen = "[INST]";
inline constexpr std::string_view kInstClose = "[/INST]";
inline constexpr std::string_view kSysOpen = "<<SYS>>";
inline constexpr std::string_view kSysClose = "<</SYS>>";

inline constexpr std::string_view kDefaultSystemText =
    "You are an expert in financial news analytics.\n"
    "Please find companies, products, technologies and currencies \n"
    "in the text and assess sentiments towards them.";

inline constexpr std::string_view kDefaultInstructionText = "Please analyse the text:";

inline constexpr std::size_t kMaxSeqLength = 2048;

struct PromptEnvelope {
  std::string system_text{kDefaultSystemText};
  std::string instruction_text{kDefaultInstructionText};
  std::string input_text;

  bool operator==(const PromptEnvelope&) const = default;
};

class PromptError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// <s>[INST] <<SYS>>\n{system}\n<</SYS>>\n\n{instruction}\n{input} [/INST]
// Throws PromptError when input_text is empty after cleaning, when any field
// contains a marker, or when instruction_text spans several lines.
std::string render_prompt(const PromptEnvelope& envelope);

// Inverse of render_prompt; nullopt when `prompt` is not in template form.
std::optional<PromptEnvelope> parse_prompt(std::string_view prompt);

enum class TaskTag { analysis, main_points, summary, entities };

struct InstructionRecord {
  std::string prompt;
  std::string response;
  std::set<TaskTag> task_tags;

  bool operator==(const InstructionRecord&) const = default;
};

// Tags for the sections that are present in a response.
std::set<TaskTag> infer_task_tags(std::string_view response);

// Throws PromptError for an article with an empty body and
// std::invalid_argument when the target does not reparse to itself.
InstructionRecord build_instruction_record(const NewsArticle& article, const AnalysisReport& target,
                                           const PromptEnvelope& defaults = {});

// JSONL of {"prompt", "response"}; returns the number of lines written.
std::size_t export_training_file(const std::vector<InstructionRecord>& records,
                                 const std::filesystem::path& path);

std::vector<InstructionRecord> import_training_file(const std::filesystem::path& path);

struct LengthEstimate {
  std::size_t characters = 0;
  std::size_t tokens = 0;
  bool over_budget = false;
};

LengthEstimate estimate_length_budget(const InstructionRecord& record, double chars_per_token = 4.0,
                                      std::size_t max_tokens = kMaxSeqLength);

}  // namespace finnews
