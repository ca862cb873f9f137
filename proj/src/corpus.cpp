#include "finnews/corpus.hpp"

#include "finnews/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace finnews {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw CorpusError("read failed: " + path.string());
  return ss.str();
}

std::string derived_id(const std::string& publisher, const std::string& title,
                       const std::string& body) {
  return "h" + hex64(fnv1a64(publisher + '\x1f' + title + '\x1f' + body));
}

struct RawRow {
  std::size_t line = 0;
  std::string id;
  std::string publisher;
  std::string date;
  std::string title;
  std::string text;
};

// Shared tail of both loaders: cleaning, empty-body drop, id and date checks.
class ArticleCollector {
 public:
  explicit ArticleCollector(const LoadOptions& options) : options_(options) {}

  void malformed(std::size_t line, std::string reason) {
    if (!options_.tolerant) throw CorpusError(reason, line);
    result_.malformed.push_back({line, std::move(reason)});
  }

  void add(RawRow row) {
    NewsArticle a;
    a.publisher = row.publisher;
    a.title = clean_text(row.title);
    a.body = clean_text(row.text);
    if (a.body.empty()) {
      ++result_.dropped_empty;
      return;
    }
    const std::string date_text = trim(row.date);
    if (!date_text.empty()) {
      a.published_at = parse_date(date_text);
      if (!a.published_at) return malformed(row.line, "unparseable date '" + date_text + "'");
    }
    a.id = trim(row.id);
    if (a.id.empty()) a.id = derived_id(a.publisher, a.title, a.body);
    if (!seen_.insert(a.id).second) return malformed(row.line, "duplicate id '" + a.id + "'");
    result_.articles.push_back(std::move(a));
  }

  LoadResult take() { return std::move(result_); }

 private:
  const LoadOptions& options_;
  LoadResult result_;
  std::unordered_set<std::string> seen_;
};

LoadResult load_csv(const std::string& content, const LoadOptions& options) {
  const auto records = read_csv(content);
  if (records.empty()) throw CorpusError("missing CSV header row");
  const auto& header = records.front().fields;
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto text_col = column(options.columns.text);
  if (!text_col) throw CorpusError("CSV header lacks text column '" + options.columns.text + "'", 1);
  const auto id_col = column(options.columns.id);
  const auto pub_col = column(options.columns.publisher);
  const auto date_col = column(options.columns.date);
  const auto title_col = column(options.columns.title);

  ArticleCollector collector(options);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    if (rec.fields.size() != header.size()) {
      collector.malformed(rec.line, "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(rec.fields.size()));
      continue;
    }
    auto get = [&](std::optional<std::size_t> c) { return c ? rec.fields[*c] : std::string{}; };
    collector.add({rec.line, get(id_col), get(pub_col), get(date_col), get(title_col), get(text_col)});
  }
  return collector.take();
}

LoadResult load_jsonl(const std::string& content, const LoadOptions& options) {
  ArticleCollector collector(options);
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      collector.malformed(line_no, std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!obj.is_object()) {
      collector.malformed(line_no, "line is not a JSON object");
      continue;
    }
    std::string bad_key;
    auto get = [&](const std::string& key) -> std::string {
      if (key.empty() || !obj.contains(key) || obj[key].is_null()) return {};
      const auto& v = obj[key];
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return v.dump();
      bad_key = key;
      return {};
    };
    RawRow row{line_no, get(options.columns.id), get(options.columns.publisher),
               get(options.columns.date), get(options.columns.title), get(options.columns.text)};
    if (!bad_key.empty()) {
      collector.malformed(line_no, "field '" + bad_key + "' is not a string");
      continue;
    }
    collector.add(std::move(row));
  }
  return collector.take();
}

}  // namespace

nlohmann::json to_json(const NewsArticle& article) {
  return {{"id", article.id},
          {"publisher", article.publisher},
          {"date", article.published_at ? nlohmann::json(format_date(*article.published_at))
                                        : nlohmann::json(nullptr)},
          {"title", article.title},
          {"text", article.body}};
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  if (iequals_ascii(name, "csv")) return CorpusFormat::csv;
  if (iequals_ascii(name, "jsonl")) return CorpusFormat::jsonl;
  return std::nullopt;
}

std::vector<CsvRecord> read_csv(std::string_view content) {
  std::vector<CsvRecord> records;
  CsvRecord current{1, {}};
  std::string field;
  bool in_quotes = false;
  bool record_open = false;
  std::size_t line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current = CsvRecord{line, {}};
    record_open = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        record_open = true;
        break;
      case ',':
        end_field();
        record_open = true;
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') break;
        field.push_back(c);
        record_open = true;
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        record_open = true;
    }
  }
  if (record_open || !field.empty()) end_record();
  return records;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

LoadResult load_articles(const std::filesystem::path& path, CorpusFormat format,
                         const LoadOptions& options) {
  const std::string content = read_file(path);
  return format == CorpusFormat::csv ? load_csv(content, options) : load_jsonl(content, options);
}

DatasetSplit split_dataset(const std::vector<NewsArticle>& articles, const SplitSpec& opts) {
  if (articles.empty()) throw std::invalid_argument("split_dataset: empty input");
  if (!(opts.validation_fraction > 0.0 && opts.validation_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: validation_fraction must lie in (0, 1)");
  }
  const std::uint64_t salt = splitmix64(opts.seed);
  struct Ranked {
    std::uint64_t key;
    const std::string* id;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(articles.size());
  std::unordered_set<std::string_view> ids;
  for (const auto& a : articles) {
    if (!ids.insert(a.id).second) {
      throw std::invalid_argument("split_dataset: duplicate article id '" + a.id + "'");
    }
    ranked.push_back({splitmix64(fnv1a64(a.id) ^ salt), &a.id});
  }
  const auto n_valid = static_cast<std::size_t>(
      std::llround(opts.validation_fraction * static_cast<double>(articles.size())));
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.key != b.key ? a.key < b.key : *a.id < *b.id;
  });
  std::unordered_set<std::string_view> validation_ids;
  for (std::size_t i = 0; i < n_valid; ++i) validation_ids.insert(*ranked[i].id);

  DatasetSplit split;
  split.validation.reserve(n_valid);
  split.train.reserve(articles.size() - n_valid);
  for (const auto& a : articles) {
    (validation_ids.count(a.id) ? split.validation : split.train).push_back(a);
  }
  return split;
}

void write_articles_jsonl(const std::vector<NewsArticle>& articles,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& a : articles) out << dump_line(to_json(a)) << '\n';
  if (!out) throw CorpusError("write failed: " + path.string());
}

}  // namespace finnews
