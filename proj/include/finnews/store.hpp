#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "finnews/report.hpp"
#include "finnews/text.hpp"

namespace finnews {

using RecordId = std::uint64_t;

struct StoredReport {
  RecordId id = 0;
  std::string article_id;
  std::optional<Date> date;
  AnalysisReport report;
};

struct DateRange {
  Date start;
  Date end;  // inclusive

  bool contains(const Date& d) const { return start <= d && d <= end; }
};

struct EntityMention {
  RecordId record_id = 0;
  EntitySentiment entity;
  std::optional<Date> date;
};

struct StoreStats {
  std::size_t records = 0;
  std::size_t index_entries = 0;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Append-only report store. On disk: JSONL of {"article_id", "date",
// "report"}; the record id is the zero-based line number. The entity index is
// rebuilt on open. One writer, many readers.
class ReportStore {
 public:
  // Opens (creating if absent) a file-backed store.
  static ReportStore open(const std::filesystem::path& path);
  static ReportStore in_memory();

  ReportStore(ReportStore&& other) noexcept;
  ReportStore& operator=(ReportStore&&) = delete;

  // The line is flushed and fsync'd before the index is updated. On I/O
  // failure nothing changes.
  RecordId append(const std::string& article_id, const std::optional<Date>& date,
                  const AnalysisReport& report);

  // Case-insensitive exact match on the entity string. With a window, only
  // dated records inside it match.
  std::vector<EntityMention> query_by_entity(const std::string& entity,
                                             const std::optional<DateRange>& window = std::nullopt) const;

  std::optional<StoredReport> get(RecordId id) const;
  StoreStats stats() const;
  std::size_t size() const { return stats().records; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  ReportStore() = default;
  void index_record(const StoredReport& record);

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::vector<StoredReport> records_;
  // lower-cased entity -> (record, entity position)
  std::unordered_map<std::string, std::vector<std::pair<RecordId, std::size_t>>> index_;
  std::size_t index_entries_ = 0;
};

}  // namespace finnews
