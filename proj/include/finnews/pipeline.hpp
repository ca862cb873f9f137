#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "finnews/analytics.hpp"
#include "finnews/corpus.hpp"
#include "finnews/gateway.hpp"
#include "finnews/prompting.hpp"
#include "finnews/report.hpp"
#include "finnews/store.hpp"

namespace finnews {

// Process exit status per error class.
enum class ExitCode : int { ok = 0, failure = 1, usage = 2, config = 3, io = 4, gateway = 5 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  std::vector<std::filesystem::path> corpus_paths;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  LoadOptions load;
  SplitSpec split;
  PromptEnvelope prompt;
  GatewayConfig backend;
  std::filesystem::path mock_fixtures;
  GenerationParams generation;
  std::filesystem::path store_path = "reports.jsonl";
  std::size_t parallelism = 4;
  double chars_per_token = 4.0;
  double var_alpha = kDefaultVarAlpha;
  std::size_t bootstrap_draws = 1000;
  std::uint64_t bootstrap_seed = 0;
};

// Keys: corpus{paths,format,columns{...},tolerant}, split{validation_fraction,
// seed}, prompt{system_text,instruction_text}, backend{url,api_key,timeout_s,
// max_retries,backoff_base_s,mock_fixtures}, generation{max_new_tokens,
// temperature,stop}, store{path}, analyze{parallelism}, prompting{chars_per_token},
// analytics{var_alpha,bootstrap_draws,bootstrap_seed}. Unknown keys are errors.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path);

// FINNEWS_LLM_URL, FINNEWS_LLM_KEY, FINNEWS_LLM_TIMEOUT_S, FINNEWS_LLM_RETRIES,
// FINNEWS_MOCK_FIXTURES, FINNEWS_STORE_PATH, FINNEWS_SPLIT_SEED,
// FINNEWS_PARALLELISM.
void apply_env_overrides(PipelineConfig& config);

// Throws ConfigError on the first invalid field.
void validate(const PipelineConfig& config);

// Mock backend when mock_fixtures is set, HTTP backend otherwise.
std::shared_ptr<CompletionBackend> make_backend(const PipelineConfig& config);

// render -> complete -> parse -> append. Diagnostics go to `diag`. Gateway
// errors propagate and leave the store untouched.
AnalysisReport analyze_article(const Gateway& gateway, ReportStore& store, const PipelineConfig& config,
                               const NewsArticle& article, std::ostream& diag);

struct BatchSummary {
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<std::string> failures;  // "article-id: reason"
};

// Continues past per-article failures.
BatchSummary analyze_batch(const Gateway& gateway, ReportStore& store, const PipelineConfig& config,
                           const std::vector<NewsArticle>& articles, std::ostream& diag);

}  // namespace finnews
