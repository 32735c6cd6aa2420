#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcafe/model.hpp"

namespace crowdcafe {

// ---------------------------------------------------------------- CSV

/// Comma-separated, double-quote quoting, LF or CRLF line endings; quoted
/// fields may contain separators, doubled quotes and newlines. A leading
/// UTF-8 byte order mark is skipped and blank lines are ignored.
///
/// Errors: NotUtf8, EmptyHeader, DuplicateColumn(name), RaggedRow(line).
std::vector<Payload> parse_csv(std::string_view bytes);

/// Low-level record splitter shared by parse_csv and the code-pool import.
/// Each record carries the 1-based line number it starts on.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> read_csv_records(std::string_view bytes);

std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

/// Serializes payloads with the given column order.
std::string write_csv(const std::vector<std::string>& header, const std::vector<Payload>& rows);

bool is_valid_utf8(std::string_view bytes);

// ---------------------------------------------------------------- feeds

class FeedQuery {
 public:
  /// A leading '#' on the hashtag is dropped. Throws invalid_argument on an
  /// empty hashtag or limit < 1.
  FeedQuery(std::string source, std::string hashtag, int limit);

  const std::string& source() const { return source_; }
  const std::string& hashtag() const { return hashtag_; }
  int limit() const { return limit_; }

 private:
  std::string source_;
  std::string hashtag_;
  int limit_;
};

class FeedAdapter {
 public:
  virtual ~FeedAdapter() = default;
  /// Every returned payload has a "media_url" or "text" field.
  virtual std::vector<Payload> fetch(const FeedQuery& query) const = 0;
};

// Replays a JSON array of string-valued objects from disk. Items carrying a
// "hashtag" field only match that tag (case-insensitive); items without one
// match every query. Results keep file order.
class FixtureFeedAdapter final : public FeedAdapter {
 public:
  explicit FixtureFeedAdapter(std::filesystem::path file) : file_(std::move(file)) {}
  std::vector<Payload> fetch(const FeedQuery& query) const override;

  /// Parses fixture JSON text; used by fetch and directly by tests.
  static std::vector<Payload> parse_items(std::string_view text);

 private:
  std::filesystem::path file_;
};

class FeedRegistry {
 public:
  void add(std::string name, std::shared_ptr<const FeedAdapter> adapter);
  const FeedAdapter* find(const std::string& name) const;

 private:
  std::map<std::string, std::shared_ptr<const FeedAdapter>> adapters_;
};

/// At most query.limit() payloads. Errors: UnknownAdapter, AdapterFailure.
std::vector<Payload> fetch_feed(const FeedRegistry& registry, const FeedQuery& query);

// ---------------------------------------------------------------- batching

struct BatchPlan {
  std::size_t instances = 0;
  std::vector<std::size_t> sizes;
};

/// ceil(n/k) batches; all full except possibly the last.
BatchPlan batch_units(std::size_t n_units, std::size_t batch_size);

/// Splits items into consecutive groups following batch_units.
template <typename T>
std::vector<std::vector<T>> split_batches(std::span<const T> items, std::size_t batch_size) {
  const BatchPlan plan = batch_units(items.size(), batch_size);
  std::vector<std::vector<T>> out;
  out.reserve(plan.instances);
  std::size_t offset = 0;
  for (std::size_t size : plan.sizes) {
    out.emplace_back(items.begin() + offset, items.begin() + offset + size);
    offset += size;
  }
  return out;
}

}  // namespace crowdcafe
