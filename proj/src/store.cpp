#include "finnews/store.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>

#include <unistd.h>

#include "finnews/json_io.hpp"

namespace finnews {

namespace {

std::string record_line(const std::string& article_id, const std::optional<Date>& date,
                        const AnalysisReport& report) {
  nlohmann::ordered_json j;
  j["article_id"] = article_id;
  j["date"] = date ? nlohmann::ordered_json(format_date(*date)) : nlohmann::ordered_json(nullptr);
  j["report"] = to_json(report);
  return dump_line(j) + "\n";
}

}  // namespace

ReportStore ReportStore::open(const std::filesystem::path& path) {
  ReportStore store;
  store.path_ = path;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (std::filesystem::exists(path)) throw StoreError("cannot read store " + path.string());
    return store;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StoredReport rec;
      rec.id = store.records_.size();
      rec.article_id = j.at("article_id").get<std::string>();
      if (!j.at("date").is_null()) {
        rec.date = parse_date(j.at("date").get<std::string>());
        if (!rec.date) throw std::invalid_argument("bad date");
      }
      rec.report = report_from_json(j.at("report"));
      store.index_record(rec);
      store.records_.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw StoreError(path.string() + ":" + std::to_string(line_no) + ": corrupt record: " + e.what());
    }
  }
  return store;
}

ReportStore ReportStore::in_memory() { return ReportStore(); }

ReportStore::ReportStore(ReportStore&& other) noexcept
    : path_(std::move(other.path_)),
      records_(std::move(other.records_)),
      index_(std::move(other.index_)),
      index_entries_(other.index_entries_) {}

void ReportStore::index_record(const StoredReport& record) {
  for (std::size_t i = 0; i < record.report.entities.size(); ++i) {
    index_[to_lower_ascii(record.report.entities[i].entity)].emplace_back(record.id, i);
    ++index_entries_;
  }
}

RecordId ReportStore::append(const std::string& article_id, const std::optional<Date>& date,
                             const AnalysisReport& report) {
  if (article_id.empty()) throw std::invalid_argument("append_report: empty article id");
  std::unique_lock lock(mutex_);
  if (!path_.empty()) {
    const std::string line = record_line(article_id, date, report);
    std::FILE* f = std::fopen(path_.c_str(), "ab");
    if (!f) throw StoreError("cannot open store " + path_.string() + ": " + std::strerror(errno));
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                    ::fsync(::fileno(f)) == 0;
    const int err = errno;
    const bool closed = std::fclose(f) == 0;
    if (!ok || !closed) {
      // Roll back a partial line so the file stays parseable.
      std::error_code ec;
      const auto size = std::filesystem::file_size(path_, ec);
      if (!ec && size >= line.size()) {
        std::ifstream check(path_, std::ios::binary);
        check.seekg(static_cast<std::streamoff>(size - line.size()));
        std::string tail(line.size(), '\0');
        check.read(tail.data(), static_cast<std::streamsize>(tail.size()));
        if (tail == line) std::filesystem::resize_file(path_, size - line.size(), ec);
      }
      throw StoreError("append to " + path_.string() + " failed: " + std::strerror(err));
    }
  }
  StoredReport rec{records_.size(), article_id, date, report};
  index_record(rec);
  records_.push_back(std::move(rec));
  return records_.back().id;
}

std::vector<EntityMention> ReportStore::query_by_entity(const std::string& entity,
                                                        const std::optional<DateRange>& window) const {
  std::shared_lock lock(mutex_);
  std::vector<EntityMention> out;
  const auto it = index_.find(to_lower_ascii(entity));
  if (it == index_.end()) return out;
  for (const auto& [rid, pos] : it->second) {
    const auto& rec = records_[rid];
    if (window && (!rec.date || !window->contains(*rec.date))) continue;
    out.push_back({rid, rec.report.entities[pos], rec.date});
  }
  return out;
}

std::optional<StoredReport> ReportStore::get(RecordId id) const {
  std::shared_lock lock(mutex_);
  if (id >= records_.size()) return std::nullopt;
  return records_[id];
}

StoreStats ReportStore::stats() const {
  std::shared_lock lock(mutex_);
  return {records_.size(), index_entries_};
}

}  // namespace finnews
