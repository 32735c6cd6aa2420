#include <gtest/gtest.h>

#include "crowdcafe/auth.hpp"

using namespace crowdcafe;

namespace {

const Timestamp kNow{1399885200000};

void add_user(Store& s, const std::string& id, Role role, const std::string& pw) {
  s.transact([&](StoreTxn& t) { auth::upsert_user(t, id, role, id, pw, auth::HashStrength::Minimal); });
}

}  // namespace

TEST(Password, HashAndVerify) {
  const auto h = auth::hash_password("wonderland", auth::HashStrength::Minimal);
  EXPECT_NE(h.find("$argon2"), std::string::npos);
  EXPECT_TRUE(auth::verify_password(h, "wonderland"));
  EXPECT_FALSE(auth::verify_password(h, "Wonderland"));
  EXPECT_NE(auth::hash_password("wonderland", auth::HashStrength::Minimal), h);
}

TEST(Token, RandomHex) {
  const auto a = auth::new_token(), b = auth::new_token();
  EXPECT_EQ(a.size(), 32u);
  EXPECT_NE(a, b);
  EXPECT_EQ(a.find_first_not_of("0123456789abcdef"), std::string::npos);
}

TEST(Roles, RoundTrip) {
  for (Role r : {Role::Worker, Role::Requestor, Role::Admin}) EXPECT_EQ(parse_role(to_string(r)), r);
  EXPECT_THROW(parse_role("root"), Error);
}

TEST(Users, WorkersGetWorkerRecord) {
  Store s;
  add_user(s, "alice", Role::Worker, "pw");
  add_user(s, "kitchen", Role::Requestor, "pw");
  EXPECT_TRUE(s.get("workers/alice"));
  EXPECT_FALSE(s.get("workers/kitchen"));
  const auto u = s.transact([](StoreTxn& t) { return auth::find_user(t, "alice"); });
  ASSERT_TRUE(u);
  EXPECT_EQ(u->role, Role::Worker);
  // the stored record never contains the clear password
  EXPECT_EQ(s.get("users/alice")->dump().find("\"pw\""), std::string::npos);
}

TEST(Users, UpsertKeepsHashWhenPasswordUnchanged) {
  Store s;
  add_user(s, "alice", Role::Worker, "pw");
  const auto before = s.get("users/alice")->at("password_hash");
  add_user(s, "alice", Role::Worker, "pw");
  EXPECT_EQ(s.get("users/alice")->at("password_hash"), before);
  add_user(s, "alice", Role::Worker, "new");
  EXPECT_NE(s.get("users/alice")->at("password_hash"), before);
}

TEST(Sessions, LoginAuthenticateLogout) {
  Store s;
  add_user(s, "alice", Role::Worker, "pw");
  const auto session = auth::login(s, "alice", "pw", kNow, 3600);
  EXPECT_EQ(session.principal, "alice");
  EXPECT_EQ(session.role, Role::Worker);
  // the token itself is not a key in the store
  EXPECT_FALSE(s.get("sessions/" + session.token));
  EXPECT_TRUE(auth::authenticate(s, session.token, kNow.plus_seconds(3599)));
  EXPECT_FALSE(auth::authenticate(s, session.token, kNow.plus_seconds(3601)));
  EXPECT_FALSE(auth::authenticate(s, "deadbeef", kNow));
  auth::logout(s, session.token);
  EXPECT_FALSE(auth::authenticate(s, session.token, kNow));
}

TEST(Sessions, BadCredentials) {
  Store s;
  add_user(s, "alice", Role::Worker, "pw");
  for (auto [u, p] : {std::pair{"alice", "nope"}, std::pair{"bob", "pw"}}) {
    try {
      auth::login(s, u, p, kNow, 60);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::unauthorized);
    }
  }
}
