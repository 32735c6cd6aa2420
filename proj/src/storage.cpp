#include "crowdcafe/storage.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace crowdcafe {

namespace {

constexpr const char* kLogName = "wal.jsonl";
constexpr const char* kSnapshotName = "snapshot.jsonl";

std::string_view collection_of(std::string_view key) {
  const auto slash = key.find('/');
  return slash == std::string_view::npos ? key : key.substr(0, slash);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

[[noreturn]] void unavailable(const std::string& what) {
  throw Error(Errc::storage_unavailable, what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      unavailable("log write failed");
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

// ---------------------------------------------------------------- gate

void Store::Gate::enter_shared() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !exclusive_ && waiting_exclusive_ == 0; });
  ++shared_;
}

void Store::Gate::leave_shared() {
  std::lock_guard lock(mu_);
  if (--shared_ == 0) cv_.notify_all();
}

void Store::Gate::enter_exclusive() {
  std::unique_lock lock(mu_);
  ++waiting_exclusive_;
  cv_.wait(lock, [&] { return !exclusive_ && shared_ == 0; });
  --waiting_exclusive_;
  exclusive_ = true;
}

void Store::Gate::leave_exclusive() {
  std::lock_guard lock(mu_);
  exclusive_ = false;
  cv_.notify_all();
}

// ---------------------------------------------------------------- txn

StoreTxn::~StoreTxn() { store_.end_txn(start_seq_); }

std::optional<json> StoreTxn::read(std::string_view key) {
  if (auto it = writes_.find(std::string(key)); it != writes_.end()) return it->second;
  read_keys_.emplace(key);
  std::shared_lock lock(store_.data_mu_);
  auto it = store_.data_.find(key);
  if (it == store_.data_.end()) return std::nullopt;
  return it->second.value;
}

void StoreTxn::write(std::string key, json value) {
  auto [it, inserted] = writes_.try_emplace(key, std::nullopt);
  if (inserted) write_order_.push_back(key);
  it->second = std::move(value);
}

void StoreTxn::erase(std::string key) {
  auto [it, inserted] = writes_.try_emplace(key, std::nullopt);
  if (inserted) write_order_.push_back(key);
  it->second.reset();
}

std::vector<Record> StoreTxn::scan(std::string_view prefix) {
  scanned_prefixes_.emplace_back(prefix);
  // (creation order, local write order, record); local inserts sort last
  std::vector<std::tuple<std::uint64_t, std::size_t, Record>> found;
  {
    std::shared_lock lock(store_.data_mu_);
    for (auto it = store_.data_.lower_bound(prefix); it != store_.data_.end() && starts_with(it->first, prefix);
         ++it) {
      auto local = writes_.find(it->first);
      if (local == writes_.end()) {
        found.emplace_back(it->second.created, 0, Record{it->first, it->second.value});
      } else if (local->second) {
        found.emplace_back(it->second.created, 0, Record{it->first, *local->second});
      }
    }
    for (std::size_t i = 0; i < write_order_.size(); ++i) {
      const auto& key = write_order_[i];
      if (!starts_with(key, prefix) || store_.data_.count(key)) continue;
      const auto& v = writes_.at(key);
      if (v) found.emplace_back(UINT64_MAX, i, Record{key, *v});
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::vector<Record> out;
  out.reserve(found.size());
  for (auto& t : found) out.push_back(std::move(std::get<2>(t)));
  return out;
}

// ---------------------------------------------------------------- store

Store::Store(Options options) : options_(std::move(options)) {
  if (options_.data_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options_.data_dir, ec);
    if (ec) throw Error(Errc::storage_unavailable, "cannot create " + options_.data_dir->string() + ": " + ec.message());
    recover();
    const auto log_path = *options_.data_dir / kLogName;
    log_fd_ = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log_fd_ < 0) unavailable("cannot open " + log_path.string());
  }
}

Store::~Store() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

std::uint64_t Store::begin_txn() {
  std::lock_guard lock(commit_mu_);
  active_starts_.insert(commit_seq_);
  return commit_seq_;
}

void Store::end_txn(std::uint64_t start_seq) {
  std::lock_guard lock(commit_mu_);
  active_starts_.erase(active_starts_.find(start_seq));
  trim_history_locked();
}

void Store::trim_history_locked() {
  const std::uint64_t oldest = active_starts_.empty() ? commit_seq_ : *active_starts_.begin();
  while (!history_.empty() && history_.front().first <= oldest) history_.pop_front();
}

bool Store::validate_locked(const StoreTxn& txn) const {
  for (const auto& [seq, keys] : history_) {
    if (seq <= txn.start_seq_) continue;
    for (const auto& key : keys) {
      if (txn.read_keys_.count(key)) return false;
      for (const auto& prefix : txn.scanned_prefixes_)
        if (starts_with(key, prefix)) return false;
    }
  }
  return true;
}

bool Store::validate(const StoreTxn& txn) const {
  std::lock_guard lock(commit_mu_);
  return validate_locked(txn);
}

bool Store::commit(StoreTxn& txn) {
  std::lock_guard lock(commit_mu_);
  if (!validate_locked(txn)) return false;
  if (txn.write_order_.empty()) return true;

  std::vector<std::pair<std::string, std::optional<json>>> writes;
  writes.reserve(txn.write_order_.size());
  for (const auto& key : txn.write_order_) writes.emplace_back(key, txn.writes_.at(key));

  const std::uint64_t seq = commit_seq_ + 1;
  if (log_fd_ >= 0) append_log(writes, seq);
  {
    std::unique_lock data_lock(data_mu_);
    apply_locked(writes);
  }
  commit_seq_ = seq;
  std::vector<std::string> keys;
  keys.reserve(writes.size());
  for (auto& w : writes) keys.push_back(w.first);
  history_.emplace_back(seq, std::move(keys));
  return true;
}

void Store::apply_locked(const std::vector<std::pair<std::string, std::optional<json>>>& writes) {
  for (const auto& [key, value] : writes) {
    if (!value) {
      data_.erase(key);
      continue;
    }
    auto it = data_.find(key);
    if (it == data_.end()) {
      data_.emplace(key, Entry{*value, next_created_++});
    } else {
      it->second.value = *value;
    }
  }
}

void Store::append_log(const std::vector<std::pair<std::string, std::optional<json>>>& writes, std::uint64_t seq) {
  json w = json::array();
  for (const auto& [key, value] : writes) w.push_back(json::array({key, value ? *value : json(nullptr)}));
  std::string line = json{{"seq", seq}, {"w", std::move(w)}}.dump();
  line.push_back('\n');
  write_all(log_fd_, line);
  if (options_.sync && ::fdatasync(log_fd_) != 0) unavailable("fdatasync failed");
}

void Store::recover() {
  const auto snap_path = *options_.data_dir / kSnapshotName;
  if (std::filesystem::exists(snap_path)) {
    std::ifstream in(snap_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line);
      data_.emplace(rec.at("key").get<std::string>(), Entry{rec.at("value"), next_created_++});
    }
  }

  const auto log_path = *options_.data_dir / kLogName;
  if (!std::filesystem::exists(log_path)) return;
  std::ifstream in(log_path, std::ios::binary);
  std::string line;
  std::uint64_t good_bytes = 0;
  bool torn = false;
  while (std::getline(in, line)) {
    // A final line without '\n' was cut short by a crash.
    if (in.eof()) {
      torn = true;
      break;
    }
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      torn = true;
      break;
    }
    std::vector<std::pair<std::string, std::optional<json>>> writes;
    for (const auto& w : rec.at("w")) {
      const json& v = w.at(1);
      writes.emplace_back(w.at(0).get<std::string>(), v.is_null() ? std::nullopt : std::optional<json>(v));
    }
    apply_locked(writes);
    commit_seq_ = rec.at("seq").get<std::uint64_t>();
    good_bytes += line.size() + 1;
  }
  if (torn) std::filesystem::resize_file(log_path, good_bytes);
}

void Store::compact() {
  if (!options_.data_dir) return;
  gate_.enter_exclusive();
  struct Leave {
    Gate& g;
    ~Leave() { g.leave_exclusive(); }
  } leave{gate_};
  std::lock_guard lock(commit_mu_);

  const auto tmp = *options_.data_dir / (std::string(kSnapshotName) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    std::shared_lock data_lock(data_mu_);
    std::vector<std::pair<std::uint64_t, const std::pair<const std::string, Entry>*>> ordered;
    for (const auto& kv : data_) ordered.push_back({kv.second.created, &kv});
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [_, kv] : ordered) out << json{{"key", kv->first}, {"value", kv->second.value}}.dump() << '\n';
    out.flush();
    if (!out) throw Error(Errc::storage_unavailable, "snapshot write failed");
  }
  {
    const int fd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd >= 0) {
      ::fsync(fd);
      ::close(fd);
    }
  }
  std::filesystem::rename(tmp, *options_.data_dir / kSnapshotName);
  if (::ftruncate(log_fd_, 0) != 0) unavailable("log truncate failed");
}

std::optional<json> Store::get(std::string_view key) const {
  std::shared_lock lock(data_mu_);
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return std::optional<json>(std::in_place, it->second.value);
}

std::vector<Record> Store::list_by_prefix(std::string_view prefix,
                                          const std::function<bool(const json&)>& filter) const {
  std::vector<std::pair<std::uint64_t, Record>> found;
  {
    std::shared_lock lock(data_mu_);
    for (auto it = data_.lower_bound(prefix); it != data_.end() && starts_with(it->first, prefix); ++it) {
      if (filter && !filter(it->second.value)) continue;
      found.push_back({it->second.created, Record{it->first, it->second.value}});
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Record> out;
  out.reserve(found.size());
  for (auto& [_, r] : found) out.push_back(std::move(r));
  return out;
}

void Store::export_dump(std::ostream& out) const {
  for (const auto& r : list_by_prefix("")) {
    out << json{{"collection", collection_of(r.key)}, {"key", r.key}, {"value", r.value}}.dump() << '\n';
  }
}

std::size_t Store::import_dump(std::istream& in) {
  std::vector<std::pair<std::string, json>> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::invalid_argument, "dump line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.contains("key") || !rec.contains("value") || !rec.contains("collection"))
      throw Error(Errc::invalid_argument, "dump line " + std::to_string(lineno) + " lacks collection/key/value");
    std::string key = rec.at("key").get<std::string>();
    if (collection_of(key) != rec.at("collection").get<std::string>())
      throw Error(Errc::invalid_argument, "dump line " + std::to_string(lineno) + " collection does not match key");
    records.emplace_back(std::move(key), rec.at("value"));
  }
  transact([&](StoreTxn& txn) {
    for (const auto& [k, v] : records) txn.write(k, v);
  });
  return records.size();
}

std::uint64_t Store::commit_count() const {
  std::lock_guard lock(commit_mu_);
  return commit_seq_;
}

void Store::backoff(int attempt) {
  int cap_us = 50 << std::min(attempt, 8);
  int wait;
  {
    std::lock_guard lock(rng_mu_);
    wait = static_cast<int>(jitter_() % static_cast<unsigned>(cap_us + 1));
  }
  std::this_thread::sleep_for(std::chrono::microseconds(wait));
}

}  // namespace crowdcafe
