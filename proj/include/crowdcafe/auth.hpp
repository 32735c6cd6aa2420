#pragma once

// Operator-seeded users, password hashing and bearer sessions.

#include <optional>
#include <string>
#include <string_view>

#include "crowdcafe/model.hpp"
#include "crowdcafe/storage.hpp"

namespace crowdcafe {

enum class Role { Worker, Requestor, Admin };
std::string_view to_string(Role r);
Role parse_role(std::string_view s);

struct User {
  std::string id;
  Role role = Role::Worker;
  std::string display_name;
  std::string password_hash;
};

void to_json(json& j, const User& u);
void from_json(const json& j, User& u);

struct Session {
  std::string token;  // only known to the client; the store keeps a digest
  std::string principal;
  Role role = Role::Worker;
  Timestamp expires_at;
};

namespace auth {

enum class HashStrength { Interactive, Minimal };

std::string hash_password(std::string_view password, HashStrength strength = HashStrength::Interactive);
bool verify_password(std::string_view hash, std::string_view password);

/// 128 random bits, hex encoded.
std::string new_token();

/// Creates or updates a user (and the Worker record for workers). The
/// password hash is kept when the password still verifies.
void upsert_user(StoreTxn& txn, const std::string& id, Role role, const std::string& display_name,
                 const std::string& password, HashStrength strength = HashStrength::Interactive);

std::optional<User> find_user(StoreTxn& txn, std::string_view id);

/// Errors: unauthorized on unknown user or wrong password.
Session login(Store& store, std::string_view user, std::string_view password, Timestamp now, int ttl_seconds);

/// Expired or unknown tokens yield nullopt.
std::optional<Session> authenticate(const Store& store, std::string_view token, Timestamp now);

void logout(Store& store, std::string_view token);

}  // namespace auth

}  // namespace crowdcafe
