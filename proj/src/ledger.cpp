#include "crowdcafe/ledger.hpp"

#include "crowdcafe/repository.hpp"

namespace crowdcafe {

namespace {

std::string tx_prefix(std::string_view worker) { return "tx/" + std::string(worker) + "/"; }
std::string codes_prefix(std::string_view item) { return "codes/" + std::string(item) + "/"; }
std::string issued_key(std::string_view item, std::string_view code) {
  return "issued/" + std::string(item) + "/" + std::string(code);
}
std::string reward_key(std::string_view item) { return "rewards/" + std::string(item); }

Transaction append(StoreTxn& txn, std::string_view worker, Cents amount, TransactionKind kind, Timestamp now) {
  const std::string prefix = tx_prefix(worker);
  const std::size_t n = txn.scan(prefix).size() + 1;
  Transaction t{std::string(worker) + ":" + padded(n), std::string(worker), amount, std::move(kind), now};
  txn.write(prefix + padded(n), t);
  return t;
}

}  // namespace

void to_json(json& j, const Transaction& t) {
  json kind = std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, JudgmentCredit>) {
          return {{"type", "judgment_credit"}, {"job_id", k.job_id}, {"instance_id", k.instance_id}};
        } else if constexpr (std::is_same_v<K, CouponPurchase>) {
          return {{"type", "coupon_purchase"}, {"coupon_id", k.coupon_id}};
        } else {
          return {{"type", "manual_adjustment"}, {"note", k.note}};
        }
      },
      t.kind);
  j = json{{"id", t.id},
           {"worker_id", t.worker_id},
           {"amount", t.amount},
           {"kind", std::move(kind)},
           {"created_at", timestamp_json(t.created_at)}};
}

void from_json(const json& j, Transaction& t) {
  t.id = j.at("id").get<std::string>();
  t.worker_id = j.at("worker_id").get<std::string>();
  t.amount = j.at("amount").get<Cents>();
  t.created_at = timestamp_from_json(j.at("created_at"));
  const json& k = j.at("kind");
  const std::string type = k.at("type").get<std::string>();
  if (type == "judgment_credit") {
    t.kind = JudgmentCredit{k.at("job_id").get<std::string>(), k.at("instance_id").get<std::string>()};
  } else if (type == "coupon_purchase") {
    t.kind = CouponPurchase{k.at("coupon_id").get<std::string>()};
  } else if (type == "manual_adjustment") {
    t.kind = ManualAdjustment{k.at("note").get<std::string>()};
  } else {
    throw Error(Errc::invalid_argument, "unknown transaction kind '" + type + "'");
  }
}

void to_json(json& j, const RewardItem& r) {
  j = json{{"id", r.id}, {"title", r.title}, {"price", r.price}, {"venue", r.venue}, {"remaining", r.remaining}};
}

void to_json(json& j, const Coupon& c) {
  j = json{{"id", c.id},
           {"worker_id", c.worker_id},
           {"reward_item_id", c.reward_item_id},
           {"code", c.code},
           {"issued_at", timestamp_json(c.issued_at)}};
}

void from_json(const json& j, Coupon& c) {
  c.id = j.at("id").get<std::string>();
  c.worker_id = j.at("worker_id").get<std::string>();
  c.reward_item_id = j.at("reward_item_id").get<std::string>();
  c.code = j.at("code").get<std::string>();
  c.issued_at = timestamp_from_json(j.at("issued_at"));
}

namespace ledger {

Transaction credit_judgment(StoreTxn& txn, std::string_view worker_id, const Job& job,
                            std::string_view instance_id, Timestamp now) {
  Repo repo(txn);
  auto inst = repo.find_instance(instance_id);
  if (!inst || inst->job_id != job.id) throw Error(Errc::unknown_instance, std::string(instance_id));
  if (inst->worker_id != worker_id || inst->state != InstanceState::Submitted)
    throw Error(Errc::not_reserver, std::string(instance_id));
  if (inst->credited) throw Error(Errc::already_credited, std::string(instance_id));
  inst->credited = true;
  repo.put(*inst);
  return append(txn, worker_id, job.reward, JudgmentCredit{job.id, inst->id}, now);
}

Cents balance(StoreTxn& txn, std::string_view worker_id) {
  Cents sum{0};
  for (const auto& r : txn.scan(tx_prefix(worker_id))) sum = sum + r.value.at("amount").get<Cents>();
  return sum;
}

Cents balance(const Store& store, std::string_view worker_id) {
  Cents sum{0};
  for (const auto& r : store.list_by_prefix(tx_prefix(worker_id))) sum = sum + r.value.at("amount").get<Cents>();
  return sum;
}

std::vector<Transaction> transactions(StoreTxn& txn, std::string_view worker_id) {
  std::vector<Transaction> out;
  for (const auto& r : txn.scan(tx_prefix(worker_id))) out.push_back(r.value.get<Transaction>());
  return out;
}

std::vector<Transaction> transactions(const Store& store, std::string_view worker_id) {
  std::vector<Transaction> out;
  for (const auto& r : store.list_by_prefix(tx_prefix(worker_id))) out.push_back(r.value.get<Transaction>());
  return out;
}

Coupon purchase_coupon(StoreTxn& txn, std::string_view worker_id, std::string_view reward_item_id, Timestamp now) {
  auto item = txn.read(reward_key(reward_item_id));
  if (!item) throw Error(Errc::not_found, "reward " + std::string(reward_item_id));
  const Cents price = item->at("price").get<Cents>();

  const Cents have = balance(txn, worker_id);
  if (have < price)
    throw Error(Errc::insufficient_funds, "balance " + format_euros(have) + " < price " + format_euros(price));

  const std::string prefix = codes_prefix(reward_item_id);
  auto pool = txn.scan(prefix);
  if (pool.empty()) throw Error(Errc::sold_out, std::string(reward_item_id));
  const std::string code = pool.front().key.substr(prefix.size());
  txn.erase(pool.front().key);
  txn.write(issued_key(reward_item_id, code), json{{"worker_id", worker_id}});

  const std::size_t n = txn.scan("coupons/" + std::string(worker_id) + "/").size() + 1;
  Coupon c{std::string(worker_id) + ":" + padded(n), std::string(worker_id), std::string(reward_item_id), code, now};
  txn.write("coupons/" + std::string(worker_id) + "/" + padded(n), c);
  append(txn, worker_id, -price, CouponPurchase{c.id}, now);
  return c;
}

Transaction adjust(StoreTxn& txn, std::string_view worker_id, Cents amount, std::string note, Timestamp now) {
  const Cents have = balance(txn, worker_id);
  if ((have + amount).value < 0)
    throw Error(Errc::insufficient_funds, "adjustment would leave " + format_euros(have + amount));
  return append(txn, worker_id, amount, ManualAdjustment{std::move(note)}, now);
}

void upsert_reward(StoreTxn& txn, const RewardItem& item) {
  require_valid_id(item.id, "reward id");
  if (item.price.value < 0) throw Error(Errc::invalid_argument, "reward price must be >= 0");
  txn.write(reward_key(item.id), json{{"id", item.id}, {"title", item.title}, {"price", item.price}, {"venue", item.venue}});
}

int add_codes(StoreTxn& txn, std::string_view reward_item_id, const std::vector<std::string>& codes) {
  if (!txn.exists(reward_key(reward_item_id))) throw Error(Errc::not_found, "reward " + std::string(reward_item_id));
  int added = 0;
  const std::string prefix = codes_prefix(reward_item_id);
  for (const auto& code : codes) {
    require_valid_id(code, "coupon code");
    if (txn.exists(prefix + code) || txn.exists(issued_key(reward_item_id, code))) continue;
    txn.write(prefix + code, json::object());
    ++added;
  }
  return added;
}

std::vector<RewardItem> catalog(StoreTxn& txn) {
  std::vector<RewardItem> out;
  for (const auto& r : txn.scan("rewards/")) {
    RewardItem item;
    item.id = r.value.at("id").get<std::string>();
    item.title = r.value.value("title", "");
    item.price = r.value.at("price").get<Cents>();
    item.venue = r.value.value("venue", "");
    item.remaining = static_cast<int>(txn.scan(codes_prefix(item.id)).size());
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<Coupon> coupons(const Store& store, std::string_view worker_id) {
  std::vector<Coupon> out;
  for (const auto& r : store.list_by_prefix("coupons/" + std::string(worker_id) + "/"))
    out.push_back(r.value.get<Coupon>());
  return out;
}

}  // namespace ledger

}  // namespace crowdcafe
