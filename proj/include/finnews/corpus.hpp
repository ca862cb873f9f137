#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finnews/text.hpp"

namespace finnews {

struct NewsArticle {
  std::string id;
  std::string publisher;
  std::optional<Date> published_at;
  std::string title;
  std::string body;

  bool operator==(const NewsArticle&) const = default;
};

nlohmann::json to_json(const NewsArticle& article);

enum class CorpusFormat { csv, jsonl };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

// Maps canonical fields to source column names (CSV header or JSONL keys).
// An empty id column means ids are derived from a content hash.
struct ColumnMap {
  std::string id = "id";
  std::string publisher = "publisher";
  std::string date = "date";
  std::string title = "title";
  std::string text = "text";
};

struct LoadOptions {
  ColumnMap columns;
  bool tolerant = false;
};

struct MalformedRow {
  std::size_t line = 0;
  std::string reason;
};

struct LoadResult {
  std::vector<NewsArticle> articles;
  std::size_t dropped_empty = 0;
  std::vector<MalformedRow> malformed;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& message, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Throws CorpusError on an unreadable file, a missing header column, or (in
// strict mode) the first malformed row. Tolerant mode records malformed rows
// and keeps going.
LoadResult load_articles(const std::filesystem::path& path, CorpusFormat format,
                         const LoadOptions& options = {});

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// newlines. Each record carries the 1-based line it starts on.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRecord> read_csv(std::string_view content);
std::string csv_escape(std::string_view field);

struct SplitSpec {
  double validation_fraction = 0.25;
  std::uint64_t seed = 42;
};

struct DatasetSplit {
  std::vector<NewsArticle> train;
  std::vector<NewsArticle> validation;
};

// Ranks articles by a seeded hash of their id and assigns the lowest
// round(fraction * N) to validation. Both partitions keep input order.
DatasetSplit split_dataset(const std::vector<NewsArticle>& articles, const SplitSpec& opts);

void write_articles_jsonl(const std::vector<NewsArticle>& articles,
                          const std::filesystem::path& path);

}  // namespace finnews
