#include "crowdcafe/ingestion.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace crowdcafe {

bool is_valid_utf8(std::string_view bytes) {
  std::size_t i = 0;
  const auto* s = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  while (i < n) {
    const unsigned char c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len;
    std::uint32_t cp;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (s[i + k] & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
      return false;
    i += len;
  }
  return true;
}

std::vector<CsvRecord> read_csv_records(std::string_view bytes) {
  if (!is_valid_utf8(bytes)) throw Error(Errc::not_utf8);
  if (bytes.substr(0, 3) == "\xEF\xBB\xBF") bytes.remove_prefix(3);

  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  std::size_t line = 1;
  std::size_t i = 0;
  bool in_quotes = false;
  bool field_started = false;  // anything seen on this record
  current.line = 1;

  auto end_record = [&] {
    if (field_started) {
      current.fields.push_back(std::move(field));
      records.push_back(std::move(current));
    }
    current = CsvRecord{};
    field.clear();
    field_started = false;
  };

  while (i < bytes.size()) {
    const char c = bytes[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      if (c == '\n') ++line;
      field.push_back(c);
      ++i;
      continue;
    }
    if (!field_started) current.line = line;
    switch (c) {
      case '"':
        field_started = true;
        in_quotes = true;
        ++i;
        break;
      case ',':
        field_started = true;
        current.fields.push_back(std::move(field));
        field.clear();
        ++i;
        break;
      case '\r':
        if (i + 1 < bytes.size() && bytes[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        ++i;
        break;
      default:
        field_started = true;
        field.push_back(c);
        ++i;
    }
  }
  if (in_quotes) throw Error(Errc::ragged_row, "unterminated quote starting on line " + std::to_string(current.line));
  end_record();
  return records;
}

std::vector<Payload> parse_csv(std::string_view bytes) {
  std::vector<CsvRecord> records = read_csv_records(bytes);
  if (records.empty()) throw Error(Errc::empty_header);
  const auto& header = records.front().fields;
  std::set<std::string> seen;
  for (const auto& name : header) {
    if (name.empty()) throw Error(Errc::empty_header, "blank column name");
    if (!seen.insert(name).second) throw Error(Errc::duplicate_column, name);
  }

  std::vector<Payload> out;
  out.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      throw Error(Errc::ragged_row, "line " + std::to_string(rec.line));
    Payload p;
    for (std::size_t c = 0; c < header.size(); ++c) p.emplace(header[c], rec.fields[c]);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

void append_csv_field(std::string& out, const std::string& value) {
  const bool quote = value.find_first_of(",\"\r\n") != std::string::npos ||
                     (!value.empty() && (value.front() == ' ' || value.back() == ' '));
  if (!quote) {
    out += value;
    return;
  }
  out.push_back('"');
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void append_csv_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    append_csv_field(out, row[i]);
  }
  // a lone empty field would otherwise read back as a blank line
  if (row.size() == 1 && row[0].empty()) out += "\"\"";
  out.push_back('\n');
}

}  // namespace

std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  append_csv_row(out, header);
  for (const auto& row : rows) append_csv_row(out, row);
  return out;
}

std::string write_csv(const std::vector<std::string>& header, const std::vector<Payload>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const auto& p : rows) {
    std::vector<std::string> row;
    for (const auto& col : header) {
      auto it = p.find(col);
      row.push_back(it == p.end() ? std::string{} : it->second);
    }
    cells.push_back(std::move(row));
  }
  return write_csv(header, cells);
}

// ---------------------------------------------------------------- feeds

FeedQuery::FeedQuery(std::string source, std::string hashtag, int limit)
    : source_(std::move(source)), hashtag_(std::move(hashtag)), limit_(limit) {
  if (!hashtag_.empty() && hashtag_.front() == '#') hashtag_.erase(0, 1);
  if (hashtag_.empty()) throw Error(Errc::invalid_argument, "feed hashtag must not be empty");
  if (limit_ < 1) throw Error(Errc::invalid_argument, "feed limit must be >= 1");
}

namespace {

std::string ascii_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
  });
  return s;
}

}  // namespace

std::vector<Payload> FixtureFeedAdapter::parse_items(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::adapter_failure, std::string("fixture is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(Errc::adapter_failure, "fixture must be a JSON array");
  std::vector<Payload> items;
  items.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    if (!obj.is_object()) throw Error(Errc::adapter_failure, "fixture item " + std::to_string(i) + " is not an object");
    Payload p;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!it.value().is_string())
        throw Error(Errc::adapter_failure,
                    "fixture item " + std::to_string(i) + " field '" + it.key() + "' is not a string");
      p.emplace(it.key(), it.value().get<std::string>());
    }
    if (!p.count("media_url") && !p.count("text"))
      throw Error(Errc::adapter_failure, "fixture item " + std::to_string(i) + " has neither media_url nor text");
    items.push_back(std::move(p));
  }
  return items;
}

std::vector<Payload> FixtureFeedAdapter::fetch(const FeedQuery& query) const {
  std::ifstream in(file_, std::ios::binary);
  if (!in) throw Error(Errc::adapter_failure, "cannot read fixture " + file_.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<Payload> items = parse_items(ss.str());

  const std::string wanted = ascii_lower(query.hashtag());
  std::vector<Payload> out;
  for (auto& p : items) {
    if (out.size() >= static_cast<std::size_t>(query.limit())) break;
    auto tag = p.find("hashtag");
    if (tag != p.end()) {
      std::string t = tag->second;
      if (!t.empty() && t.front() == '#') t.erase(0, 1);
      if (ascii_lower(t) != wanted) continue;
    }
    out.push_back(std::move(p));
  }
  return out;
}

void FeedRegistry::add(std::string name, std::shared_ptr<const FeedAdapter> adapter) {
  adapters_[std::move(name)] = std::move(adapter);
}

const FeedAdapter* FeedRegistry::find(const std::string& name) const {
  auto it = adapters_.find(name);
  return it == adapters_.end() ? nullptr : it->second.get();
}

std::vector<Payload> fetch_feed(const FeedRegistry& registry, const FeedQuery& query) {
  const FeedAdapter* adapter = registry.find(query.source());
  if (!adapter) throw Error(Errc::unknown_adapter, query.source());
  std::vector<Payload> items;
  try {
    items = adapter->fetch(query);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::adapter_failure, e.what());
  }
  if (items.size() > static_cast<std::size_t>(query.limit())) items.resize(query.limit());
  for (const auto& p : items) {
    if (!p.count("media_url") && !p.count("text"))
      throw Error(Errc::adapter_failure, "adapter returned an item without media_url or text");
  }
  return items;
}

// ---------------------------------------------------------------- batching

BatchPlan batch_units(std::size_t n_units, std::size_t batch_size) {
  if (batch_size < 1) throw Error(Errc::invalid_batch_size, "batch size must be >= 1");
  BatchPlan plan;
  plan.instances = (n_units + batch_size - 1) / batch_size;
  plan.sizes.assign(n_units / batch_size, batch_size);
  if (n_units % batch_size) plan.sizes.push_back(n_units % batch_size);
  return plan;
}

}  // namespace crowdcafe
