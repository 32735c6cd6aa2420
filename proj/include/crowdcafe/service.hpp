#pragma once

// HTTP/JSON front end. Kitchen endpoints serve requestors, Cafe endpoints
// serve workers; every error body is {"error": "<code>", "detail": "..."}.

#include <memory>
#include <string>

#include "crowdcafe/error.hpp"
#include "crowdcafe/platform.hpp"

namespace crowdcafe {

int http_status(Errc code);

class Service {
 public:
  explicit Service(Platform& platform);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  /// bind() plus run() on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crowdcafe
