#pragma once

// Append-only earnings/spendings log, reward catalog and coupon issuance.
// Balances are always derived from the log.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crowdcafe/model.hpp"
#include "crowdcafe/storage.hpp"

namespace crowdcafe {

struct JudgmentCredit {
  std::string job_id;
  std::string instance_id;
  bool operator==(const JudgmentCredit&) const = default;
};
struct CouponPurchase {
  std::string coupon_id;
  bool operator==(const CouponPurchase&) const = default;
};
struct ManualAdjustment {
  std::string note;
  bool operator==(const ManualAdjustment&) const = default;
};

using TransactionKind = std::variant<JudgmentCredit, CouponPurchase, ManualAdjustment>;

struct Transaction {
  std::string id;
  std::string worker_id;
  Cents amount;  // positive earns, negative spends
  TransactionKind kind;
  Timestamp created_at;
  bool operator==(const Transaction&) const = default;
};

struct RewardItem {
  std::string id;
  std::string title;
  Cents price;
  std::string venue;
  int remaining = 0;  // unissued codes; derived on read
};

struct Coupon {
  std::string id;
  std::string worker_id;
  std::string reward_item_id;
  std::string code;
  Timestamp issued_at;
};

void to_json(json& j, const Transaction& t);
void from_json(const json& j, Transaction& t);
void to_json(json& j, const RewardItem& r);
void to_json(json& j, const Coupon& c);
void from_json(const json& j, Coupon& c);

namespace ledger {

/// Pays job.reward for a submitted instance. Errors: UnknownInstance,
/// AlreadyCredited, NotReserver (instance not submitted by this worker).
Transaction credit_judgment(StoreTxn& txn, std::string_view worker_id, const Job& job,
                            std::string_view instance_id, Timestamp now);

Cents balance(StoreTxn& txn, std::string_view worker_id);
Cents balance(const Store& store, std::string_view worker_id);

std::vector<Transaction> transactions(StoreTxn& txn, std::string_view worker_id);
std::vector<Transaction> transactions(const Store& store, std::string_view worker_id);

/// Errors: not_found (item), InsufficientFunds(balance, price), SoldOut.
Coupon purchase_coupon(StoreTxn& txn, std::string_view worker_id, std::string_view reward_item_id, Timestamp now);

/// Signed operator adjustment; may not drive the balance below zero.
Transaction adjust(StoreTxn& txn, std::string_view worker_id, Cents amount, std::string note, Timestamp now);

/// Creates or updates the catalog entry (codes untouched).
void upsert_reward(StoreTxn& txn, const RewardItem& item);

/// Adds codes to an item's pool, skipping ones already pooled or issued.
/// Returns how many were added.
int add_codes(StoreTxn& txn, std::string_view reward_item_id, const std::vector<std::string>& codes);

std::vector<RewardItem> catalog(StoreTxn& txn);
std::vector<Coupon> coupons(const Store& store, std::string_view worker_id);

}  // namespace ledger

}  // namespace crowdcafe
