#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "inim/core.hpp"
#include "inim/dataset_gen.hpp"
#include "inim/regularizer.hpp"

namespace httplib {
class Server;
}

namespace inim {

struct ServiceConfig {
  std::size_t sample_cap = 2'000'000;
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
  std::size_t max_sessions = 64;

  /// Defaults, with sample_cap taken from INIM_SESSION_CAP when set.
  static ServiceConfig from_env();
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string content_type;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP status used for an error code.
int http_status(ErrorCode code);

struct LassoResult {
  std::vector<std::size_t> ids;
  Positions original;
};

/// Session store behind the web API. Every public member is thread-safe;
/// runs are computed eagerly at creation and never mutated afterwards.
class SessionService {
 public:
  explicit SessionService(ServiceConfig config = ServiceConfig::from_env());
  ~SessionService();

  /// Throws Error(PayloadTooLarge) beyond the sample cap.
  std::string create(const ScatterDataset& dataset, const RegularizationParams& params);
  std::string create(const GenSpec& spec, const RegularizationParams& params);

  /// Throws Error(UnknownSession).
  std::shared_ptr<const RegularizationRun> run(const std::string& id);

  Positions positions(const std::string& id, double level);

  /// Serialized encoding (grid, density, contours) at an integer level,
  /// computed once per (kind, level). Throws Error(UnknownKind).
  std::string encoding(const std::string& id, const std::string& kind, std::size_t level);

  /// Even-odd selection at a transition level. Throws
  /// Error(DegeneratePolygon) for fewer than 3 vertices or zero area.
  LassoResult lasso(const std::string& id, const Positions& polygon, double level);

  void remove(const std::string& id);
  std::size_t session_count() const;
  std::size_t memory_bytes() const;

  /// Routes one API request; errors become {code, message} bodies.
  HttpResponse handle(const HttpRequest& request);

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id);
  std::string insert(std::shared_ptr<Session> session);
  void evict_locked();

  HttpResponse route(const HttpRequest& request);

  ServiceConfig config_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> clock_{0};
  std::uint64_t next_id_ = 0;
  std::uint64_t id_salt_ = 0;
};

/// Registers the API routes on an httplib server.
void mount(httplib::Server& server, SessionService& service);

/// Blocks serving on host:port until the server is stopped.
int serve(SessionService& service, const std::string& host, int port);

}  // namespace inim
