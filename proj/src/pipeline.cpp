#include "finnews/pipeline.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>

#include "finnews/text.hpp"

namespace finnews {

namespace {

void check_keys(const nlohmann::json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::chrono::milliseconds seconds_to_ms(double s) {
  return std::chrono::milliseconds(static_cast<long long>(s * 1000.0));
}

std::optional<std::uint64_t> env_uint(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(v, &end, 10);
  if (errno || *end != '\0' || *v == '-') throw ConfigError(std::string(name) + " must be a non-negative integer");
  return x;
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    check_keys(j, "<root>", {"corpus", "split", "prompt", "backend", "generation", "store", "analyze",
                             "prompting", "analytics"});
    if (j.contains("corpus")) {
      const auto& o = j["corpus"];
      check_keys(o, "corpus", {"paths", "format", "columns", "tolerant"});
      if (o.contains("paths")) {
        for (const auto& p : o["paths"]) c.corpus_paths.emplace_back(p.get<std::string>());
      }
      if (o.contains("format")) {
        const auto f = parse_corpus_format(o["format"].get<std::string>());
        if (!f) throw ConfigError("config: corpus.format must be csv or jsonl");
        c.corpus_format = *f;
      }
      if (o.contains("columns")) {
        const auto& m = o["columns"];
        check_keys(m, "corpus.columns", {"id", "publisher", "date", "title", "text"});
        read(m, "id", c.load.columns.id);
        read(m, "publisher", c.load.columns.publisher);
        read(m, "date", c.load.columns.date);
        read(m, "title", c.load.columns.title);
        read(m, "text", c.load.columns.text);
      }
      read(o, "tolerant", c.load.tolerant);
    }
    if (j.contains("split")) {
      const auto& o = j["split"];
      check_keys(o, "split", {"validation_fraction", "seed"});
      read(o, "validation_fraction", c.split.validation_fraction);
      read(o, "seed", c.split.seed);
    }
    if (j.contains("prompt")) {
      const auto& o = j["prompt"];
      check_keys(o, "prompt", {"system_text", "instruction_text"});
      read(o, "system_text", c.prompt.system_text);
      read(o, "instruction_text", c.prompt.instruction_text);
    }
    if (j.contains("backend")) {
      const auto& o = j["backend"];
      check_keys(o, "backend", {"url", "api_key", "timeout_s", "max_retries", "backoff_base_s", "mock_fixtures"});
      read(o, "url", c.backend.url);
      read(o, "api_key", c.backend.api_key);
      if (o.contains("timeout_s")) c.backend.timeout = seconds_to_ms(o["timeout_s"].get<double>());
      read(o, "max_retries", c.backend.max_retries);
      if (o.contains("backoff_base_s")) c.backend.backoff_base = seconds_to_ms(o["backoff_base_s"].get<double>());
      if (o.contains("mock_fixtures")) c.mock_fixtures = o["mock_fixtures"].get<std::string>();
    }
    if (j.contains("generation")) {
      const auto& o = j["generation"];
      check_keys(o, "generation", {"max_new_tokens", "temperature", "stop"});
      read(o, "max_new_tokens", c.generation.max_new_tokens);
      read(o, "temperature", c.generation.temperature);
      read(o, "stop", c.generation.stop_sequences);
    }
    if (j.contains("store")) {
      check_keys(j["store"], "store", {"path"});
      if (j["store"].contains("path")) c.store_path = j["store"]["path"].get<std::string>();
    }
    if (j.contains("analyze")) {
      check_keys(j["analyze"], "analyze", {"parallelism"});
      read(j["analyze"], "parallelism", c.parallelism);
    }
    if (j.contains("prompting")) {
      check_keys(j["prompting"], "prompting", {"chars_per_token"});
      read(j["prompting"], "chars_per_token", c.chars_per_token);
    }
    if (j.contains("analytics")) {
      const auto& o = j["analytics"];
      check_keys(o, "analytics", {"var_alpha", "bootstrap_draws", "bootstrap_seed"});
      read(o, "var_alpha", c.var_alpha);
      read(o, "bootstrap_draws", c.bootstrap_draws);
      read(o, "bootstrap_seed", c.bootstrap_seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return PipelineConfig{};
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot open config file " + path->string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path->string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_env_overrides(PipelineConfig& config) {
  try {
    config.backend = gateway_config_from_env(config.backend);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (const char* v = std::getenv("FINNEWS_MOCK_FIXTURES"); v && *v) config.mock_fixtures = v;
  if (const char* v = std::getenv("FINNEWS_STORE_PATH"); v && *v) config.store_path = v;
  if (auto s = env_uint("FINNEWS_SPLIT_SEED")) config.split.seed = *s;
  if (auto p = env_uint("FINNEWS_PARALLELISM")) config.parallelism = *p;
}

void validate(const PipelineConfig& c) {
  if (!(c.split.validation_fraction > 0.0 && c.split.validation_fraction < 1.0)) {
    throw ConfigError("split.validation_fraction must lie in (0, 1)");
  }
  if (c.load.columns.text.empty()) throw ConfigError("corpus.columns.text must be set");
  if (c.prompt.instruction_text.find('\n') != std::string::npos) {
    throw ConfigError("prompt.instruction_text must be a single line");
  }
  if (c.backend.timeout.count() <= 0) throw ConfigError("backend.timeout_s must be positive");
  if (c.backend.max_retries < 0) throw ConfigError("backend.max_retries must be >= 0");
  if (c.backend.backoff_base.count() < 0) throw ConfigError("backend.backoff_base_s must be >= 0");
  if (c.generation.max_new_tokens < 1) throw ConfigError("generation.max_new_tokens must be >= 1");
  if (!(c.generation.temperature >= 0.0)) throw ConfigError("generation.temperature must be >= 0");
  if (c.store_path.empty()) throw ConfigError("store.path must be set");
  if (c.parallelism < 1) throw ConfigError("analyze.parallelism must be >= 1");
  if (!(c.chars_per_token > 0.0)) throw ConfigError("prompting.chars_per_token must be positive");
  if (!(c.var_alpha > 0.0 && c.var_alpha < 1.0)) throw ConfigError("analytics.var_alpha must lie in (0, 1)");
  if (c.bootstrap_draws < 100) throw ConfigError("analytics.bootstrap_draws must be >= 100");
}

std::shared_ptr<CompletionBackend> make_backend(const PipelineConfig& config) {
  if (!config.mock_fixtures.empty()) {
    auto mock = std::make_shared<MockBackend>();
    try {
      mock->load_fixtures(config.mock_fixtures);
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
    return mock;
  }
  if (config.backend.url.empty()) {
    throw ConfigError("no backend configured: set backend.url, FINNEWS_LLM_URL or mock fixtures");
  }
  try {
    return std::make_shared<HttpBackend>(config.backend);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

AnalysisReport analyze_article(const Gateway& gateway, ReportStore& store, const PipelineConfig& config,
                               const NewsArticle& article, std::ostream& diag) {
  PromptEnvelope envelope = config.prompt;
  envelope.input_text = article.body;
  const auto completion = gateway.complete(render_prompt(envelope), config.generation);
  auto report = parse_report(completion.text);
  for (const auto& d : report.parse_diagnostics) diag << article.id << ": " << d << '\n';
  for (const auto& e : report.entities) {
    for (const auto& w : e.warnings) diag << article.id << ": entity '" << e.entity << "': " << w << '\n';
  }
  store.append(article.id, article.published_at, report);
  return report;
}

BatchSummary analyze_batch(const Gateway& gateway, ReportStore& store, const PipelineConfig& config,
                           const std::vector<NewsArticle>& articles, std::ostream& diag) {
  BatchSummary summary;
  std::vector<std::string> prompts;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    PromptEnvelope envelope = config.prompt;
    envelope.input_text = articles[i].body;
    try {
      prompts.push_back(render_prompt(envelope));
      positions.push_back(i);
    } catch (const PromptError& e) {
      ++summary.failed;
      summary.failures.push_back(articles[i].id + ": " + e.what());
    }
  }
  const auto results = gateway.complete_batch(prompts, config.generation, config.parallelism);
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& article = articles[positions[k]];
    if (const auto* f = std::get_if<Gateway::Failure>(&results[k])) {
      ++summary.failed;
      summary.failures.push_back(article.id + ": " + std::string(to_string(f->kind)) + ": " + f->message);
      continue;
    }
    const auto& completion = std::get<CompletionResult>(results[k]);
    auto report = parse_report(completion.text);
    for (const auto& d : report.parse_diagnostics) diag << article.id << ": " << d << '\n';
    try {
      store.append(article.id, article.published_at, report);
      ++summary.succeeded;
    } catch (const StoreError& e) {
      ++summary.failed;
      summary.failures.push_back(article.id + ": " + e.what());
    }
  }
  return summary;
}

}  // namespace finnews
