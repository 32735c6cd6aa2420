#include "crowdcafe/service.hpp"

#include <thread>

#include <httplib.h>

#include "crowdcafe/auth.hpp"

namespace crowdcafe {

int http_status(Errc code) {
  switch (code) {
    case Errc::unauthorized: return 401;
    case Errc::insufficient_funds: return 402;
    case Errc::forbidden:
    case Errc::not_eligible:
    case Errc::not_reserver: return 403;
    case Errc::not_found:
    case Errc::unknown_job:
    case Errc::unknown_instance:
    case Errc::nothing_available:
    case Errc::no_published_jobs: return 404;
    case Errc::conflict:
    case Errc::already_reserved:
    case Errc::already_credited:
    case Errc::sold_out: return 409;
    case Errc::reservation_expired: return 410;
    case Errc::adapter_failure: return 502;
    case Errc::retries_exhausted:
    case Errc::storage_unavailable: return 503;
    default: return 400;
  }
}

namespace {

using httplib::Request;
using httplib::Response;

void send_json(Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, Errc code, const std::string& detail) {
  send_json(res, json{{"error", errc_name(code)}, {"detail", detail}}, http_status(code));
}

json body_json(const Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::invalid_argument, std::string("malformed JSON: ") + e.what());
  }
}

std::optional<std::string> idem_key(const Request& req) {
  if (!req.has_header("Idempotency-Key")) return std::nullopt;
  return req.get_header_value("Idempotency-Key");
}

std::size_t size_param(const Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') throw Error(Errc::invalid_argument, std::string(name) + " must be a non-negative integer");
  return static_cast<std::size_t>(n);
}

bool wants_csv(const Request& req) {
  return req.get_header_value("Accept").find("text/csv") != std::string::npos ||
         req.get_param_value("format") == "csv";
}

}  // namespace

struct Service::Impl {
  explicit Impl(Platform& p) : platform(p) { routes(); }

  Platform& platform;
  httplib::Server server;
  std::thread thread;

  Principal principal(const Request& req) {
    const std::string h = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (h.compare(0, prefix.size(), prefix) != 0) throw Error(Errc::unauthorized, "missing bearer token");
    return platform.authenticate(h.substr(prefix.size()));
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const Request& req, Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.detail());
      } catch (const json::exception& e) {
        send_error(res, Errc::invalid_argument, e.what());
      } catch (const std::exception& e) {
        send_json(res, json{{"error", "internal"}, {"detail", e.what()}}, 500);
      }
    };
  }

  void routes() {
    server.set_payload_max_length(64u << 20);
    server.set_tcp_nodelay(true);

    server.Get("/healthz", [](const Request&, Response& res) { res.set_content("ok", "text/plain"); });

    server.Post("/auth/login", guarded([this](const Request& req, Response& res) {
      const json body = body_json(req);
      const Session s = platform.login(body.at("user").get<std::string>(), body.at("password").get<std::string>());
      send_json(res, {{"token", s.token},
                      {"principal", s.principal},
                      {"role", to_string(s.role)},
                      {"expires_at", timestamp_json(s.expires_at)}});
    }));
    server.Post("/auth/logout", guarded([this](const Request& req, Response& res) {
      principal(req);
      platform.logout(req.get_header_value("Authorization").substr(7));
      send_json(res, {{"ok", true}});
    }));

    // ---------------------------------------------------------- kitchen
    server.Post("/kitchen/jobs", guarded([this](const Request& req, Response& res) {
      const Principal p = principal(req);
      send_json(res, platform.create_job(p, body_json(req)), 201);
    }));
    server.Get(R"(/kitchen/jobs/([^/]+))", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.job(principal(req), req.matches[1].str()));
    }));
    server.Post(R"(/kitchen/jobs/([^/]+)/data)", guarded([this](const Request& req, Response& res) {
      const Principal p = principal(req);
      const std::string id = req.matches[1].str();
      json out;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) throw Error(Errc::missing_field, "multipart field 'file'");
        out = platform.attach_csv(p, id, req.get_file_value("file").content);
      } else if (req.get_header_value("Content-Type").find("text/csv") != std::string::npos) {
        out = platform.attach_csv(p, id, req.body);
      } else {
        const json body = body_json(req);
        if (body.contains("feed")) {
          const json& f = body.at("feed");
          out = platform.attach_feed(p, id, FeedQuery(f.value("source", std::string("fixture")),
                                                      f.at("hashtag").get<std::string>(), f.value("limit", 1000)));
        } else {
          out = platform.attach_survey(p, id);
        }
      }
      send_json(res, out, 201);
    }));
    server.Post(R"(/kitchen/jobs/([^/]+)/gold)", guarded([this](const Request& req, Response& res) {
      const json body = body_json(req);
      const json& entries = body.is_object() && body.contains("gold") ? body.at("gold") : body;
      send_json(res, {{"count", platform.add_gold(principal(req), req.matches[1].str(), entries)}});
    }));
    server.Post(R"(/kitchen/jobs/([^/]+)/publish)", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.publish(principal(req), req.matches[1].str()));
    }));
    server.Post(R"(/kitchen/jobs/([^/]+)/close)", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.close(principal(req), req.matches[1].str()));
    }));
    server.Get(R"(/kitchen/jobs/([^/]+)/results)", guarded([this](const Request& req, Response& res) {
      const Principal p = principal(req);
      if (wants_csv(req)) {
        res.set_content(platform.results_csv(p, req.matches[1].str()), "text/csv");
      } else {
        send_json(res, platform.results(p, req.matches[1].str()));
      }
    }));

    // ---------------------------------------------------------- cafe
    server.Get("/cafe/categories", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.categories(principal(req)));
    }));
    server.Get("/cafe/jobs", guarded([this](const Request& req, Response& res) {
      const Principal p = principal(req);
      if (!req.has_param("category")) throw Error(Errc::missing_field, "category");
      const Category c = parse_category(req.get_param_value("category"));
      send_json(res, platform.list_jobs(p, c, Page{size_param(req, "limit", 50), size_param(req, "offset", 0)}));
    }));
    server.Post(R"(/cafe/jobs/([^/]+)/claim)", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.claim(principal(req), req.matches[1].str(), idem_key(req)));
    }));
    server.Post(R"(/cafe/instances/([^/]+)/submit)", guarded([this](const Request& req, Response& res) {
      const Principal p = principal(req);
      send_json(res, platform.submit(p, req.matches[1].str(), body_json(req), idem_key(req)));
    }));
    server.Get(R"(/cafe/instances/([^/]+)/render)", guarded([this](const Request& req, Response& res) {
      const std::string html = platform.render(principal(req), req.matches[1].str());
      res.set_header("Content-Security-Policy",
                     "default-src 'none'; img-src http: https: data:; style-src 'unsafe-inline'; form-action 'none'");
      res.set_header("X-Content-Type-Options", "nosniff");
      res.set_content(html, "text/html; charset=utf-8");
    }));
    server.Get("/cafe/rewards", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.rewards(principal(req)));
    }));
    server.Post(R"(/cafe/rewards/([^/]+)/purchase)", guarded([this](const Request& req, Response& res) {
      send_json(res, platform.purchase(principal(req), req.matches[1].str(), idem_key(req)));
    }));
    server.Get("/cafe/transactions", guarded([this](const Request& req, Response& res) {
      const Principal p = principal(req);
      send_json(res, platform.transactions(p, Page{size_param(req, "limit", 50), size_param(req, "offset", 0)}));
    }));
  }
};

Service::Service(Platform& platform) : impl_(std::make_unique<Impl>(platform)) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::config_error, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(Errc::config_error, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::run() { impl_->server.listen_after_bind(); }

int Service::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace crowdcafe
