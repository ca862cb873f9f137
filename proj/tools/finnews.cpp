// finnews: command-line driver for the news analytics pipeline.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "finnews/analytics.hpp"
#include "finnews/corpus.hpp"
#include "finnews/json_io.hpp"
#include "finnews/pipeline.hpp"
#include "finnews/prompting.hpp"
#include "finnews/run_monitor.hpp"

namespace fs = std::filesystem;
using namespace finnews;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int code(ExitCode c) { return static_cast<int>(c); }

DateRange parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("window must be START:END, got '" + text + "'");
  const auto start = parse_date(text.substr(0, colon));
  const auto end = parse_date(text.substr(colon + 1));
  if (!start || !end) throw UsageError("window dates must be YYYY-MM-DD, got '" + text + "'");
  return {*start, *end};
}

std::vector<double> read_samples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open samples file " + path.string());
  std::vector<double> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      const auto v = parse_double(tok);
      if (!v) throw UsageError(path.string() + ":" + std::to_string(line_no) + ": not a number '" + tok + "'");
      samples.push_back(*v);
    }
  }
  return samples;
}

std::vector<NewsArticle> load_all(const std::vector<fs::path>& paths, const PipelineConfig& config,
                                  nlohmann::json& report) {
  std::vector<NewsArticle> all;
  report = nlohmann::json::array();
  for (const auto& p : paths) {
    auto res = load_articles(p, config.corpus_format, config.load);
    nlohmann::json malformed = nlohmann::json::array();
    for (const auto& m : res.malformed) malformed.push_back({{"line", m.line}, {"reason", m.reason}});
    report.push_back({{"file", p.string()},
                      {"loaded", res.articles.size()},
                      {"dropped_empty", res.dropped_empty},
                      {"malformed", malformed}});
    std::cerr << p.string() << ": " << res.articles.size() << " article(s), " << res.dropped_empty
              << " dropped (empty body), " << res.malformed.size() << " malformed\n";
    for (auto& a : res.articles) all.push_back(std::move(a));
  }
  return all;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Financial news analytics pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Pipeline config file (JSON)");

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data", "Load, clean and split a news corpus");
  std::vector<std::string> prep_inputs;
  std::string prep_format;
  std::optional<double> prep_fraction;
  std::optional<std::uint64_t> prep_seed;
  std::string prep_out;
  bool prep_tolerant = false;
  prep->add_option("-i,--input", prep_inputs, "Corpus file(s); defaults to corpus.paths from config");
  prep->add_option("-f,--format", prep_format, "csv or jsonl");
  prep->add_option("--fraction", prep_fraction, "Validation fraction (default 0.25)");
  prep->add_option("--seed", prep_seed, "Split seed (default 42)");
  prep->add_option("-o,--out-dir", prep_out, "Output directory")->required();
  prep->add_flag("--tolerant", prep_tolerant, "Skip malformed rows instead of failing");

  // build-instructions
  auto* build = app.add_subcommand("build-instructions", "Export prompt/response training JSONL");
  std::string build_articles, build_targets, build_out, build_format;
  std::optional<double> build_cpt;
  bool build_exclude = false;
  build->add_option("--articles", build_articles, "Article file")->required();
  build->add_option("-f,--format", build_format, "csv or jsonl");
  build->add_option("--targets", build_targets, "Target reports (store JSONL)")->required();
  build->add_option("-o,--out", build_out, "Training JSONL to write")->required();
  build->add_option("--chars-per-token", build_cpt, "Length heuristic (default 4.0)");
  build->add_flag("--exclude-over-budget", build_exclude, "Drop records over 2048 estimated tokens");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Analyze one article or a batch and store the reports");
  std::string an_input, an_format, an_text, an_id = "cli-0", an_date, an_store, an_mock;
  std::optional<std::size_t> an_parallelism;
  analyze->add_option("-i,--input", an_input, "Article file for batch mode");
  analyze->add_option("-f,--format", an_format, "csv or jsonl");
  analyze->add_option("--text", an_text, "Analyze this text as a single article");
  analyze->add_option("--id", an_id, "Article id for --text");
  analyze->add_option("--date", an_date, "Article date for --text (YYYY-MM-DD)");
  analyze->add_option("--store", an_store, "Report store path");
  analyze->add_option("--mock-fixtures", an_mock, "Use the offline mock backend with these fixtures");
  analyze->add_option("-j,--parallelism", an_parallelism, "Concurrent requests in batch mode");

  // features
  auto* features = app.add_subcommand("features", "Aggregate entity sentiment features to CSV");
  std::string feat_store, feat_entity, feat_out;
  std::vector<std::string> feat_windows;
  features->add_option("--store", feat_store, "Report store path");
  features->add_option("-e,--entity", feat_entity, "Entity name")->required();
  features->add_option("-w,--window", feat_windows, "START:END date window, repeatable")->required();
  features->add_option("-o,--out", feat_out, "CSV path (default stdout)");

  // var
  auto* var = app.add_subcommand("var", "Value at risk: lower empirical quantile of a samples file");
  std::optional<double> var_alpha;
  std::string var_file;
  var->add_option("--alpha", var_alpha, "Quantile level (default 0.05)");
  var->add_option("samples", var_file, "Whitespace/comma separated numbers")->required();

  // monitor
  auto* monitor = app.add_subcommand("monitor", "Inspect a fine-tuning loss log");
  std::string mon_log, mon_compare, mon_export, mon_quant;
  int mon_patience = 2;
  monitor->add_option("log", mon_log, "loss_log.csv")->required();
  monitor->add_option("--compare", mon_compare, "Second log to compare against");
  monitor->add_option("--patience", mon_patience, "Overfit patience (epochs)");
  monitor->add_option("--export", mon_export, "Write the parsed curve back out as CSV");
  monitor->add_option("--quantization", mon_quant, "4bit or 8bit");

  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config") {
      ++i;
      continue;
    }
    if (arg.starts_with("-")) continue;
    if (!app.get_subcommand_no_throw(arg)) {
      std::cerr << "error: unknown subcommand '" << arg << "'\n\n" << app.help();
      return code(ExitCode::usage);
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return code(ExitCode::usage);
  }

  try {
    PipelineConfig config =
        load_pipeline_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
    apply_env_overrides(config);

    if (*prep) {
      if (!prep_format.empty()) {
        const auto f = parse_corpus_format(prep_format);
        if (!f) throw UsageError("--format must be csv or jsonl");
        config.corpus_format = *f;
      }
      if (prep_fraction) config.split.validation_fraction = *prep_fraction;
      if (prep_seed) config.split.seed = *prep_seed;
      if (prep_tolerant) config.load.tolerant = true;
      validate(config);
      std::vector<fs::path> inputs(prep_inputs.begin(), prep_inputs.end());
      if (inputs.empty()) inputs = config.corpus_paths;
      if (inputs.empty()) throw UsageError("prepare-data: no input files given");

      nlohmann::json load_report;
      const auto articles = load_all(inputs, config, load_report);
      if (articles.empty()) throw UsageError("prepare-data: no articles survived loading");
      const auto split = split_dataset(articles, config.split);
      std::error_code ec;
      fs::create_directories(prep_out, ec);
      if (ec) throw IoError("cannot create " + prep_out + ": " + ec.message());
      write_articles_jsonl(split.train, fs::path(prep_out) / "train.jsonl");
      write_articles_jsonl(split.validation, fs::path(prep_out) / "validation.jsonl");
      write_json_file(fs::path(prep_out) / "split_manifest.json",
                      {{"validation_fraction", config.split.validation_fraction},
                       {"seed", config.split.seed},
                       {"total", articles.size()},
                       {"train", split.train.size()},
                       {"validation", split.validation.size()},
                       {"inputs", load_report}});
      std::cout << "train " << split.train.size() << "\nvalidation " << split.validation.size() << '\n';
      return code(ExitCode::ok);
    }

    if (*build) {
      if (!build_format.empty()) {
        const auto f = parse_corpus_format(build_format);
        if (!f) throw UsageError("--format must be csv or jsonl");
        config.corpus_format = *f;
      }
      if (build_cpt) config.chars_per_token = *build_cpt;
      validate(config);
      nlohmann::json load_report;
      const auto articles = load_all({build_articles}, config, load_report);
      const auto targets = ReportStore::open(build_targets);
      std::unordered_map<std::string, const NewsArticle*> by_id;
      for (const auto& a : articles) by_id[a.id] = &a;

      std::vector<InstructionRecord> records;
      std::size_t flagged = 0, missing = 0;
      for (RecordId id = 0; id < targets.size(); ++id) {
        auto target = *targets.get(id);
        const auto it = by_id.find(target.article_id);
        if (it == by_id.end()) {
          ++missing;
          continue;
        }
        auto record = build_instruction_record(*it->second, target.report, config.prompt);
        if (estimate_length_budget(record, config.chars_per_token).over_budget) {
          ++flagged;
          std::cerr << target.article_id << ": over the " << kMaxSeqLength << "-token budget\n";
          if (build_exclude) continue;
        }
        records.push_back(std::move(record));
      }
      if (records.empty()) throw UsageError("build-instructions: no (article, target) pairs to export");
      const auto written = export_training_file(records, build_out);
      std::cout << "written " << written << "\nover_budget " << flagged << "\nunmatched_targets " << missing
                << '\n';
      return code(ExitCode::ok);
    }

    if (*analyze) {
      if (!an_store.empty()) config.store_path = an_store;
      if (!an_mock.empty()) config.mock_fixtures = an_mock;
      if (an_parallelism) config.parallelism = *an_parallelism;
      if (!an_format.empty()) {
        const auto f = parse_corpus_format(an_format);
        if (!f) throw UsageError("--format must be csv or jsonl");
        config.corpus_format = *f;
      }
      validate(config);
      if (an_text.empty() == an_input.empty()) throw UsageError("analyze: give exactly one of --text or --input");
      Gateway gateway(make_backend(config), config.backend);
      auto store = ReportStore::open(config.store_path);

      if (!an_text.empty()) {
        NewsArticle article;
        article.id = an_id;
        article.body = clean_text(an_text);
        if (!an_date.empty()) {
          article.published_at = parse_date(an_date);
          if (!article.published_at) throw UsageError("--date must be YYYY-MM-DD");
        }
        const auto report = analyze_article(gateway, store, config, article, std::cerr);
        std::cout << to_json(report).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
        return code(ExitCode::ok);
      }
      nlohmann::json load_report;
      const auto articles = load_all({an_input}, config, load_report);
      const auto summary = analyze_batch(gateway, store, config, articles, std::cerr);
      for (const auto& f : summary.failures) std::cerr << "failed: " << f << '\n';
      std::cout << "succeeded " << summary.succeeded << "\nfailed " << summary.failed << '\n';
      return code(summary.failed ? ExitCode::gateway : ExitCode::ok);
    }

    if (*features) {
      if (!feat_store.empty()) config.store_path = feat_store;
      validate(config);
      if (!fs::exists(config.store_path)) throw IoError("store not found: " + config.store_path.string());
      const auto store = ReportStore::open(config.store_path);
      std::vector<DateRange> windows;
      for (const auto& w : feat_windows) windows.push_back(parse_window(w));
      const auto rows = aggregate_features(store, feat_entity, windows);
      if (feat_out.empty()) {
        std::cout << render_features_csv(rows);
      } else {
        export_features_csv(rows, feat_out);
      }
      return code(ExitCode::ok);
    }

    if (*var) {
      if (var_alpha) config.var_alpha = *var_alpha;
      validate(config);
      PredictiveDistribution dist{read_samples(var_file)};
      if (dist.samples.empty()) throw UsageError("var: samples file is empty");
      std::cout << format_double(var_quantile(dist, config.var_alpha)) << '\n';
      return code(ExitCode::ok);
    }

    if (*monitor) {
      if (!fs::exists(mon_log)) throw IoError("loss log not found: " + mon_log);
      auto run = parse_loss_log(mon_log);
      if (!mon_quant.empty()) {
        run.quantization = parse_quantization(mon_quant);
        if (!run.quantization) throw UsageError("--quantization must be 4bit or 8bit");
      }
      std::cout << "run " << run.run_id;
      if (run.quantization) std::cout << " (" << to_string(*run.quantization) << ")";
      std::cout << "\nepochs " << run.points.size() << '\n';
      if (!run.points.empty()) {
        std::cout << "final_loss " << format_double(run.points.back().train_loss) << '\n';
        std::size_t evals = 0;
        for (const auto& p : run.points) evals += p.eval_loss.has_value();
        if (evals >= static_cast<std::size_t>(mon_patience) + 1) {
          const auto overfit = detect_overfit(run.points, mon_patience);
          std::cout << "overfit_epoch " << (overfit ? std::to_string(*overfit) : "none") << '\n';
        } else {
          std::cout << "overfit_epoch n/a (too few eval points)\n";
        }
      }
      if (!mon_compare.empty()) {
        if (!fs::exists(mon_compare)) throw IoError("loss log not found: " + mon_compare);
        const auto other = parse_loss_log(mon_compare);
        const auto d = compare_runs(run, other);
        std::cout << "max_train_divergence " << format_double(d.max_train) << "\nmean_train_divergence "
                  << format_double(d.mean_train) << '\n';
        if (d.max_eval) {
          std::cout << "max_eval_divergence " << format_double(*d.max_eval) << "\nmean_eval_divergence "
                    << format_double(*d.mean_eval) << '\n';
        }
      }
      if (!mon_export.empty()) export_curve_csv(run, mon_export);
      return code(ExitCode::ok);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return code(ExitCode::config);
  } catch (const GatewayError& e) {
    std::cerr << "gateway error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return code(ExitCode::gateway);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::usage);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::usage);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return code(ExitCode::io);
  } catch (const CorpusError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return code(ExitCode::io);
  } catch (const StoreError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return code(ExitCode::io);
  } catch (const LossLogError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return code(ExitCode::io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::failure);
  }
  return code(ExitCode::usage);
}
