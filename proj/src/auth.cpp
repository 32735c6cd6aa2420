#include "crowdcafe/auth.hpp"

#include <sodium.h>

#include <mutex>
#include <vector>

#include "crowdcafe/repository.hpp"

namespace crowdcafe {

namespace {

void init_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error(Errc::storage_unavailable, "libsodium initialisation failed");
  });
}

std::string hex(const unsigned char* data, std::size_t n) {
  std::string out(n * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), data, n);
  out.pop_back();
  return out;
}

std::string session_key(std::string_view token) {
  unsigned char digest[32];
  crypto_generichash(digest, sizeof digest, reinterpret_cast<const unsigned char*>(token.data()), token.size(),
                     nullptr, 0);
  return "sessions/" + hex(digest, sizeof digest);
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Worker: return "worker";
    case Role::Requestor: return "requestor";
    case Role::Admin: return "admin";
  }
  return "worker";
}

Role parse_role(std::string_view s) {
  if (s == "worker") return Role::Worker;
  if (s == "requestor") return Role::Requestor;
  if (s == "admin") return Role::Admin;
  throw Error(Errc::invalid_argument, "unknown role '" + std::string(s) + "'");
}

void to_json(json& j, const User& u) {
  j = json{{"id", u.id}, {"role", to_string(u.role)}, {"display_name", u.display_name}, {"password_hash", u.password_hash}};
}

void from_json(const json& j, User& u) {
  u.id = j.at("id").get<std::string>();
  u.role = parse_role(j.at("role").get<std::string>());
  u.display_name = j.value("display_name", "");
  u.password_hash = j.at("password_hash").get<std::string>();
}

namespace auth {

std::string hash_password(std::string_view password, HashStrength strength) {
  init_sodium();
  const bool minimal = strength == HashStrength::Minimal;
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(out, password.data(), password.size(),
                        minimal ? crypto_pwhash_OPSLIMIT_MIN : crypto_pwhash_OPSLIMIT_INTERACTIVE,
                        minimal ? crypto_pwhash_MEMLIMIT_MIN : crypto_pwhash_MEMLIMIT_INTERACTIVE) != 0)
    throw Error(Errc::storage_unavailable, "password hashing ran out of memory");
  return out;
}

bool verify_password(std::string_view hash, std::string_view password) {
  init_sodium();
  const std::string h(hash);
  return crypto_pwhash_str_verify(h.c_str(), password.data(), password.size()) == 0;
}

std::string new_token() {
  init_sodium();
  unsigned char bytes[16];
  randombytes_buf(bytes, sizeof bytes);
  return hex(bytes, sizeof bytes);
}

std::optional<User> find_user(StoreTxn& txn, std::string_view id) {
  auto v = txn.read("users/" + std::string(id));
  if (!v) return std::nullopt;
  return v->get<User>();
}

void upsert_user(StoreTxn& txn, const std::string& id, Role role, const std::string& display_name,
                 const std::string& password, HashStrength strength) {
  require_valid_id(id, "user id");
  if (password.empty()) throw Error(Errc::invalid_argument, "empty password for user " + id);
  User u;
  if (auto existing = find_user(txn, id)) u = *existing;
  u.id = id;
  u.role = role;
  u.display_name = display_name;
  if (u.password_hash.empty() || !verify_password(u.password_hash, password))
    u.password_hash = hash_password(password, strength);
  txn.write("users/" + id, u);
  if (role == Role::Worker) {
    Repo repo(txn);
    Worker w;
    if (auto existing = repo.find_worker(id)) w = *existing;
    w.id = id;
    w.display_name = display_name;
    repo.put(w);
  }
}

Session login(Store& store, std::string_view user, std::string_view password, Timestamp now, int ttl_seconds) {
  auto record = store.get("users/" + std::string(user));
  if (!record) throw Error(Errc::unauthorized, "unknown user or wrong password");
  const User u = record->get<User>();
  if (!verify_password(u.password_hash, password)) throw Error(Errc::unauthorized, "unknown user or wrong password");
  Session s{new_token(), u.id, u.role, now.plus_seconds(ttl_seconds)};
  store.transact([&](StoreTxn& txn) {
    txn.write(session_key(s.token),
              json{{"principal", s.principal}, {"role", to_string(s.role)}, {"expires_at", timestamp_json(s.expires_at)}});
  });
  return s;
}

std::optional<Session> authenticate(const Store& store, std::string_view token, Timestamp now) {
  if (token.empty() || token.size() > 256) return std::nullopt;
  auto v = store.get(session_key(token));
  if (!v) return std::nullopt;
  Session s{std::string(token), v->at("principal").get<std::string>(), parse_role(v->at("role").get<std::string>()),
            timestamp_from_json(v->at("expires_at"))};
  if (s.expires_at <= now) return std::nullopt;
  return s;
}

void logout(Store& store, std::string_view token) {
  const std::string key = session_key(token);
  store.transact([&](StoreTxn& txn) {
    if (txn.exists(key)) txn.erase(key);
  });
}

}  // namespace auth

}  // namespace crowdcafe
