#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "finnews/report.hpp"
#include "finnews/run_monitor.hpp"

namespace finnews::testing {

inline std::filesystem::path fixture_dir() { return FINNEWS_FIXTURE_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string reference_response(const std::string& name) {
  return read_file(fixture_dir() / "reference_examples" / (name + ".response.txt"));
}

inline std::string reference_article(const std::string& name) {
  return read_file(fixture_dir() / "reference_examples" / (name + ".article.txt"));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("finnews-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Words chosen so generated text never forms a section header or a numbered
// list item at the start of a line.
inline std::string random_sentence(std::mt19937_64& rng, int min_words, int max_words) {
  static const std::vector<std::string> words = {
      "shares", "rose", "fell", "the", "dollar", "euro", "Tesla", "guidance", "quarter", "revenue",
      "O'Neil", "\"quoted\"", "[bracket]", "{brace}", "growth", "Ünïcödé", "rates", "3.5%", "-",
      "analysts", "Main", "Points", "JSON", "Data", "outlook", "weak", "strong", "C:\\path", "€",
  };
  std::uniform_int_distribution<int> count(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  const int n = count(rng);
  std::string out = "Report";
  for (int i = 0; i < n; ++i) out += " " + words[pick(rng)];
  return out;
}

inline AnalysisReport random_report(std::mt19937_64& rng) {
  static const std::vector<std::string> types = {"company", "person",  "currency", "product",
                                                 "economy", "group",   "technology", "financial product",
                                                 "organization", "index fund"};
  AnalysisReport r;
  std::uniform_int_distribution<int> lines(1, 3);
  const int paragraphs = lines(rng);
  for (int i = 0; i < paragraphs; ++i) {
    if (i) r.analysis += "\n";
    r.analysis += random_sentence(rng, 1, 25);
  }
  std::uniform_int_distribution<int> points(1, 7);
  const int np = points(rng);
  for (int i = 0; i < np; ++i) r.main_points.push_back(random_sentence(rng, 1, 15));
  r.summary = random_sentence(rng, 1, 20);
  std::uniform_int_distribution<int> entities(0, 9);
  std::uniform_int_distribution<std::size_t> type_pick(0, types.size() - 1);
  std::uniform_int_distribution<int> sentiment(0, 2);
  const int ne = entities(rng);
  for (int i = 0; i < ne; ++i) {
    EntitySentiment e;
    e.entity = random_sentence(rng, 0, 3);
    e.entity_name = types[type_pick(rng)];
    e.sentiment = static_cast<Sentiment>(sentiment(rng));
    r.entities.push_back(e);
  }
  return r;
}

inline RunRecord random_run(std::mt19937_64& rng, const std::string& id) {
  RunRecord run;
  run.run_id = id;
  std::uniform_int_distribution<int> len(1, 30);
  std::uniform_int_distribution<int> gap(1, 3);
  std::uniform_real_distribution<double> loss(0.0, 5.0);
  std::bernoulli_distribution has_eval(0.8);
  const int n = len(rng);
  int epoch = 0;
  for (int i = 0; i < n; ++i) {
    epoch += gap(rng);
    LossCurvePoint p;
    p.epoch = epoch;
    p.train_loss = loss(rng);
    if (has_eval(rng)) p.eval_loss = loss(rng);
    run.points.push_back(p);
  }
  return run;
}

}  // namespace finnews::testing
