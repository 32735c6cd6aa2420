// crowdcafe: run the service and perform operator tasks.

#include <atomic>
#include <chrono>
#include <csignal>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "crowdcafe/admin.hpp"
#include "crowdcafe/platform.hpp"
#include "crowdcafe/reports.hpp"
#include "crowdcafe/service.hpp"
#include "crowdcafe/simulator.hpp"

using namespace crowdcafe;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

int env_int(const char* name, int fallback) {
  const std::string v = env_or(name, "");
  if (v.empty()) return fallback;
  try {
    std::size_t pos = 0;
    const int n = std::stoi(v, &pos);
    if (pos == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw Error(Errc::config_error, std::string(name) + " must be an integer");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PlatformConfig platform_config() {
  PlatformConfig c;
  c.reservation.ttl_seconds = env_int("CROWDCAFE_RESERVATION_TTL", 600);
  c.session_ttl_seconds = env_int("CROWDCAFE_SESSION_TTL", 86400);
  c.template_dir = env_or("CROWDCAFE_TEMPLATE_DIR", ".");
  return c;
}

std::atomic<bool> g_stop{false};
std::mutex g_stop_mu;
std::condition_variable g_stop_cv;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdcafe: microtask crowdsourcing service and operator tools"};
  app.require_subcommand(1);
  std::string data_dir = env_or("CROWDCAFE_DATA_DIR", "crowdcafe-data");
  app.add_option("--data-dir", data_dir, "Store directory (env CROWDCAFE_DATA_DIR)");
  bool no_sync = false;
  app.add_flag("--no-sync", no_sync, "Skip fsync on commit");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string bind = env_or("CROWDCAFE_BIND", "127.0.0.1:8080");
  serve->add_option("--bind", bind, "host:port (env CROWDCAFE_BIND)");
  int expire_every = 30;
  serve->add_option("--expire-every", expire_every, "Seconds between reservation expiry sweeps")->check(CLI::PositiveNumber);

  auto* seed = app.add_subcommand("seed", "Upsert users, rewards and coupon codes from a YAML file");
  std::string seed_file;
  seed->add_option("file", seed_file)->required()->check(CLI::ExistingFile);

  auto* job = app.add_subcommand("job", "Job management");
  job->require_subcommand(1);
  auto* job_load = job->add_subcommand("load", "Create, fill and publish a job from a config file");
  std::string job_file;
  job_load->add_option("file", job_file)->required()->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "Drive synthetic workers through the API");
  SimConfig sim;
  simulate->add_option("--workers", sim.workers)->check(CLI::PositiveNumber);
  simulate->add_option("--accuracy", sim.accuracy)->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--parallelism", sim.parallelism)->check(CLI::PositiveNumber);
  simulate->add_option("--job", sim.job_id);
  simulate->add_option("--duration-scale", sim.duration_scale)->check(CLI::PositiveNumber);
  bool sim_json = false;
  simulate->add_flag("--json", sim_json, "Print the report as JSON");

  auto* expire = app.add_subcommand("expire", "Expire stale reservations now");

  auto* exp = app.add_subcommand("export", "Export results or analytics for a job");
  std::string kind = "results", export_job, format = "json", out_path;
  std::optional<std::string> field;
  exp->add_option("kind", kind, "results | judgments | kappa | stats")->required();
  exp->add_option("--job", export_job)->required();
  exp->add_option("--format", format, "json | text | csv");
  exp->add_option("--field", field, "Answer field for kappa");
  exp->add_option("-o,--out", out_path, "Output file (default stdout)");

  auto* dump = app.add_subcommand("dump", "Write every record as JSON lines to stdout");
  auto* import = app.add_subcommand("import", "Load a dump into the store");
  std::string import_file;
  import->add_option("file", import_file)->required()->check(CLI::ExistingFile);
  auto* compact = app.add_subcommand("compact", "Rewrite the log as a snapshot");

  CLI11_PARSE(app, argc, argv);

  try {
    Store store(Store::Options{data_dir, !no_sync});

    if (*serve) {
      FeedRegistry feeds;
      const std::string fixture = env_or("CROWDCAFE_FEED_FIXTURE", "");
      if (!fixture.empty()) feeds.add("fixture", std::make_shared<FixtureFeedAdapter>(fixture));
      Platform platform(store, std::move(feeds), platform_config());
      Service service(platform);
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw Error(Errc::config_error, "bind address must be host:port");
      const int port = service.bind(bind.substr(0, colon), std::stoi(bind.substr(colon + 1)));
      std::cerr << "crowdcafe listening on " << bind.substr(0, colon) << ":" << port << "\n";

      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      std::thread server([&] { service.run(); });
      auto next_sweep = std::chrono::steady_clock::now();
      while (!g_stop) {
        if (std::chrono::steady_clock::now() >= next_sweep) {
          try {
            const int n = platform.expire_reservations();
            if (n > 0) std::cerr << "expired " << n << " reservation(s)\n";
          } catch (const std::exception& e) {
            std::cerr << "expiry sweep failed: " << e.what() << "\n";
          }
          next_sweep += std::chrono::seconds(expire_every);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      }
      service.stop();
      server.join();
      return 0;
    }

    if (*seed) {
      const auto base = std::filesystem::path(seed_file).parent_path();
      const auto cfg = admin::parse_seed(read_file(seed_file), base.empty() ? "." : base);
      const auto s = admin::seed(store, cfg);
      std::cout << "users " << s.users << "\nrewards " << s.rewards << "\ncodes_added " << s.codes_added
                << "\ncodes_present " << s.codes_present << "\n";
      return 0;
    }

    if (*job_load) {
      const auto base = std::filesystem::path(job_file).parent_path();
      const auto r = admin::load_job(store, read_file(job_file), base.empty() ? "." : base, platform_config());
      std::cout << json{{"job", r.job.id}, {"status", to_string(r.job.status)}, {"data", r.data}, {"gold", r.gold}}.dump(2)
                << "\n";
      return 0;
    }

    if (*simulate) {
      const SimReport r = crowdcafe::simulate(store, sim, platform_config());
      const json j = to_json(r);
      std::cout << (sim_json ? j.dump(2) + "\n" : reports::to_text(j));
      return 0;
    }

    if (*expire) {
      std::cout << "expired " << admin::expire(store, system_now()) << "\n";
      return 0;
    }

    if (*exp) {
      const auto k = admin::parse_export_kind(kind);
      const auto f = admin::parse_export_format(format);
      if (out_path.empty()) {
        admin::export_report(store, k, export_job, f, field, std::cout);
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error(Errc::config_error, "cannot write " + out_path);
        admin::export_report(store, k, export_job, f, field, out);
      }
      return 0;
    }

    if (*dump) {
      store.export_dump(std::cout);
      return 0;
    }
    if (*import) {
      std::ifstream in(import_file, std::ios::binary);
      std::cout << "imported " << store.import_dump(in) << " record(s)\n";
      return 0;
    }
    if (*compact) {
      store.compact();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
