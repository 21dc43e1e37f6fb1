#include "inim/session_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <random>
#include <sstream>

#include "inim/cli_io.hpp"
#include "inim/encodings.hpp"

namespace inim {

using json = nlohmann::ordered_json;

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig config;
  if (const char* env = std::getenv("INIM_SESSION_CAP")) {
    try {
      const long long cap = std::stoll(env);
      if (cap > 0) config.sample_cap = static_cast<std::size_t>(cap);
    } catch (const std::exception&) {
      // Keep the default on malformed values.
    }
  }
  return config;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownKind: return 404;
    case ErrorCode::PayloadTooLarge: return 413;
    case ErrorCode::Io:
    case ErrorCode::SingularMass: return 500;
    default: return 400;
  }
}

struct SessionService::Session {
  std::string id;
  std::shared_ptr<const RegularizationRun> run;
  std::atomic<std::uint64_t> last_access{0};
  std::mutex cache_mutex;
  std::map<std::pair<std::string, std::size_t>, std::shared_ptr<const std::string>> encodings;
  std::shared_ptr<const ContourSet> base_contours;
};

SessionService::SessionService(ServiceConfig config) : config_(config) {
  std::random_device device;
  id_salt_ = (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

SessionService::~SessionService() = default;

std::string SessionService::insert(std::shared_ptr<Session> session) {
  std::unique_lock lock(mutex_);
  std::ostringstream id;
  id << std::hex << mix_seed(id_salt_ ^ mix_seed(next_id_++));
  session->id = id.str();
  session->last_access = ++clock_;
  sessions_[session->id] = session;
  evict_locked();
  return session->id;
}

void SessionService::evict_locked() {
  const auto total_bytes = [this] {
    std::size_t bytes = 0;
    for (const auto& [id, s] : sessions_) bytes += s->run->memory_bytes();
    return bytes;
  };
  while (sessions_.size() > 1 &&
         (sessions_.size() > config_.max_sessions || total_bytes() > config_.memory_budget_bytes)) {
    auto oldest = sessions_.begin();
    for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
      if (it->second->last_access < oldest->second->last_access) oldest = it;
    }
    sessions_.erase(oldest);
  }
}

std::string SessionService::create(const ScatterDataset& dataset, const RegularizationParams& params) {
  if (dataset.size() > config_.sample_cap) {
    throw Error(ErrorCode::PayloadTooLarge, std::to_string(dataset.size()) + " samples exceed the cap of " +
                                                std::to_string(config_.sample_cap));
  }
  if (dataset.size() == 0) throw Error(ErrorCode::EmptyInput, "dataset has no samples");
  params.validate();
  auto session = std::make_shared<Session>();
  session->run = std::make_shared<const RegularizationRun>(inim::run(dataset, params));
  return insert(std::move(session));
}

std::string SessionService::create(const GenSpec& spec, const RegularizationParams& params) {
  spec.validate();
  const std::size_t n = spec.kind == GenKind::FixedFourCluster ? (spec.desk_scale ? 10'000 : 1'000'000)
                                                               : spec.total_n;
  if (n > config_.sample_cap) {
    throw Error(ErrorCode::PayloadTooLarge,
                std::to_string(n) + " samples exceed the cap of " + std::to_string(config_.sample_cap));
  }
  return create(generate(spec), params);
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
  it->second->last_access = ++clock_;
  return it->second;
}

std::shared_ptr<const RegularizationRun> SessionService::run(const std::string& id) {
  return find(id)->run;
}

Positions SessionService::positions(const std::string& id, double level) {
  return transition_positions(*find(id)->run, level);
}

std::string SessionService::encoding(const std::string& id, const std::string& kind, std::size_t level) {
  if (kind != "grid" && kind != "density" && kind != "contours") {
    throw Error(ErrorCode::UnknownKind, "unknown encoding '" + kind + "'");
  }
  const std::shared_ptr<Session> session = find(id);
  const RegularizationRun& run = *session->run;
  if (level > run.iterations()) {
    throw Error(ErrorCode::OutOfRangeLevel, "encoding level beyond the completed iterations");
  }
  {
    std::lock_guard lock(session->cache_mutex);
    const auto it = session->encodings.find({kind, level});
    if (it != session->encodings.end()) return *it->second;
  }
  // Computed outside the lock; concurrent misses produce identical bytes.
  std::string body;
  if (kind == "grid") {
    body = to_json(deform_grid(run, level)).dump();
  } else if (kind == "density") {
    body = to_json(deform_background(run, level)).dump();
  } else {
    std::shared_ptr<const ContourSet> base;
    {
      std::lock_guard lock(session->cache_mutex);
      base = session->base_contours;
    }
    if (!base) {
      base = std::make_shared<const ContourSet>(
          extract_contours(run.initial_density(), default_contour_levels(run.initial_density())));
      std::lock_guard lock(session->cache_mutex);
      if (!session->base_contours) session->base_contours = base;
    }
    body = to_json(deform_contours(*base, run, level)).dump();
  }
  std::lock_guard lock(session->cache_mutex);
  const auto [it, inserted] =
      session->encodings.emplace(std::make_pair(kind, level), std::make_shared<const std::string>(std::move(body)));
  return *it->second;
}

LassoResult SessionService::lasso(const std::string& id, const Positions& polygon, double level) {
  if (polygon.size() < 3 || std::abs(polygon_area(polygon)) < 1e-15) {
    throw Error(ErrorCode::DegeneratePolygon, "lasso polygon needs 3 vertices and a non-empty interior");
  }
  const std::shared_ptr<Session> session = find(id);
  const Positions at_level = transition_positions(*session->run, level);
  const Positions& original = session->run->original().samples;
  LassoResult result;
  for (std::size_t s = 0; s < at_level.size(); ++s) {
    if (point_in_polygon(polygon, at_level[s])) {
      result.ids.push_back(s);
      result.original.push_back(original[s]);
    }
  }
  return result;
}

void SessionService::remove(const std::string& id) {
  std::unique_lock lock(mutex_);
  if (sessions_.erase(id) == 0) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

std::size_t SessionService::memory_bytes() const {
  std::shared_lock lock(mutex_);
  std::size_t bytes = 0;
  for (const auto& [id, s] : sessions_) bytes += s->run->memory_bytes();
  return bytes;
}

// ---- HTTP routing --------------------------------------------------------

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    std::size_t slash = path.find('/', start);
    if (slash == std::string::npos) slash = path.size();
    if (slash > start) parts.push_back(path.substr(start, slash - start));
    start = slash + 1;
  }
  return parts;
}

double parse_number(const std::string& text, const char* what) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidParams, std::string("invalid ") + what + " '" + text + "'");
  }
  return value;
}

int parse_int(const std::string& text, const char* what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw Error(ErrorCode::InvalidParams, std::string(what) + " must be an integer");
  }
  return static_cast<int>(v);
}

void apply_param(RegularizationParams& p, const std::string& key, const std::string& value) {
  if (key == "k") {
    p.k = parse_int(value, "k");
  } else if (key == "iterations" || key == "iters") {
    p.iterations = parse_int(value, "iterations");
  } else if (key == "r" || key == "kernel") {
    p.r = parse_int(value, "kernel");
  } else if (key == "d0") {
    if (value == "auto") {
      p.d0_mode = BackgroundMode::Auto;
    } else {
      p.d0_mode = BackgroundMode::Explicit;
      p.d0 = parse_number(value, "d0");
    }
  } else if (key == "stop") {
    const auto stop = parse_stop_criterion(value);
    if (!stop) throw Error(ErrorCode::InvalidParams, "unknown stop criterion '" + value + "'");
    p.stop = *stop;
  } else if (key == "epsilon") {
    p.epsilon = parse_number(value, "epsilon");
  } else if (key == "time_budget_ms") {
    p.time_budget_ms = parse_number(value, "time_budget_ms");
  } else if (key == "metrics") {
    p.record_metrics = value != "false" && value != "0";
  }
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

RegularizationParams params_from_json(const json& j) {
  RegularizationParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw Error(ErrorCode::InvalidParams, "params must be an object");
  for (const auto& [key, value] : j.items()) apply_param(p, key, scalar_text(value));
  return p;
}

GenSpec gen_from_json(const json& j) {
  GenSpec spec;
  if (j.is_string()) {
    const auto kind = parse_gen_kind(j.get<std::string>());
    if (!kind) throw Error(ErrorCode::InvalidSpec, "unknown generator kind");
    spec.kind = *kind;
    spec.desk_scale = true;
    return spec;
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, "gen must be a string or an object");
  const auto kind = parse_gen_kind(j.value("kind", std::string("gaussian-mixture")));
  if (!kind) throw Error(ErrorCode::InvalidSpec, "unknown generator kind");
  spec.kind = *kind;
  spec.seed = j.value("seed", spec.seed);
  spec.total_n = j.value("n", spec.total_n);
  spec.desk_scale = j.value("desk_scale", true);
  spec.min_clusters = j.value("min_clusters", spec.min_clusters);
  spec.max_clusters = j.value("max_clusters", spec.max_clusters);
  spec.band = j.value("band", spec.band);
  return spec;
}

json error_json(const std::string& code, const std::string& message) {
  json j;
  j["code"] = code;
  j["message"] = message;
  return j;
}

json points_json(const Positions& points) {
  json arr = json::array();
  for (const Point2& p : points) arr.push_back({p.x, p.y});
  return arr;
}

Positions points_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidParams, std::string(what) + " must be an array");
  Positions out;
  out.reserve(j.size());
  for (const json& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::InvalidParams, std::string(what) + " entries must be [x, y] pairs");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

double level_of(const HttpRequest& request) {
  const auto it = request.query.find("level");
  return it == request.query.end() ? 0.0 : parse_number(it->second, "level");
}

std::string float32_pairs(const Positions& points) {
  std::string out;
  out.resize(points.size() * 8);
  char* p = out.data();
  for (const Point2& q : points) {
    for (const double v : {q.x, q.y}) {
      const float f = static_cast<float>(v);
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof bits);
      for (int b = 0; b < 4; ++b) *p++ = static_cast<char>((bits >> (8 * b)) & 0xffu);
    }
  }
  return out;
}

HttpResponse json_response(const json& j, int status = 200) {
  return {status, "application/json", j.dump()};
}

}  // namespace

HttpResponse SessionService::handle(const HttpRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return json_response(error_json(to_string(e.code()), e.what()), http_status(e.code()));
  } catch (const json::exception& e) {
    return json_response(error_json("ParseError", e.what()), 400);
  } catch (const std::exception& e) {
    return json_response(error_json("Internal", e.what()), 500);
  }
}

HttpResponse SessionService::route(const HttpRequest& request) {
  const std::vector<std::string> parts = split_path(request.path);
  const std::string& method = request.method;
  if (parts.size() < 2 || parts[0] != "api" || parts[1] != "sessions") {
    return json_response(error_json("NotFound", "no such endpoint"), 404);
  }

  if (parts.size() == 2 && method == "POST") {
    std::string id;
    ValidateOptions options;
    options.only_if_out_of_range = true;
    if (request.content_type.rfind("application/json", 0) == 0) {
      const json body = json::parse(request.body);
      const RegularizationParams params = params_from_json(body.value("params", json()));
      if (body.contains("gen")) {
        id = create(gen_from_json(body["gen"]), params);
      } else if (body.contains("points")) {
        Positions points = points_from_json(body["points"], "points");
        std::vector<std::int32_t> labels;
        if (body.contains("labels")) labels = body["labels"].get<std::vector<std::int32_t>>();
        if (points.size() > config_.sample_cap) {
          throw Error(ErrorCode::PayloadTooLarge, "sample count exceeds the cap");
        }
        id = create(validate_dataset(std::move(points), std::move(labels), options), params);
      } else {
        throw Error(ErrorCode::InvalidParams, "body needs 'gen' or 'points'");
      }
    } else {
      RegularizationParams params;
      for (const auto& [key, value] : request.query) apply_param(params, key, value);
      // Cheap line count guards the cap before parsing.
      const std::size_t rows = static_cast<std::size_t>(std::count(request.body.begin(), request.body.end(), '\n'));
      if (rows > config_.sample_cap + 1) throw Error(ErrorCode::PayloadTooLarge, "sample count exceeds the cap");
      id = create(parse_csv_text(request.body, options), params);
    }
    const auto r = run(id);
    json j;
    j["id"] = id;
    j["n"] = r->original().size();
    j["iterations"] = r->iterations();
    j["k"] = r->params().k;
    j["classes"] = r->original().class_count();
    return json_response(j);
  }

  if (parts.size() < 3) return json_response(error_json("NotFound", "no such endpoint"), 404);
  const std::string& id = parts[2];

  if (parts.size() == 3 && method == "DELETE") {
    remove(id);
    json j;
    j["deleted"] = id;
    return json_response(j);
  }
  if (parts.size() == 3 && method == "GET") {
    const auto r = run(id);
    json j;
    j["id"] = id;
    j["n"] = r->original().size();
    j["iterations"] = r->iterations();
    j["k"] = r->params().k;
    j["classes"] = r->original().class_count();
    return json_response(j);
  }
  if (parts.size() == 4 && parts[3] == "positions" && method == "GET") {
    const double level = level_of(request);
    const Positions points = positions(id, level);
    const auto format = request.query.find("format");
    if (format != request.query.end() && format->second == "binary") {
      return {200, "application/octet-stream", float32_pairs(points)};
    }
    const auto r = run(id);
    json j;
    j["level"] = level;
    j["n"] = points.size();
    json ids = json::array();
    for (std::size_t s = 0; s < points.size(); ++s) ids.push_back(s);
    j["ids"] = std::move(ids);
    j["positions"] = points_json(points);
    j["labels"] = r->original().labels;
    return json_response(j);
  }
  if (parts.size() == 5 && parts[3] == "encodings" && method == "GET") {
    const double level = level_of(request);
    if (level < 0.0 || level != std::floor(level)) {
      throw Error(ErrorCode::OutOfRangeLevel, "encoding level must be a non-negative integer");
    }
    return {200, "application/json", encoding(id, parts[4], static_cast<std::size_t>(level))};
  }
  if (parts.size() == 4 && parts[3] == "lasso" && method == "POST") {
    const json body = json::parse(request.body);
    const Positions polygon = points_from_json(body.at("polygon"), "polygon");
    const LassoResult result = lasso(id, polygon, body.value("level", 0.0));
    json j;
    j["count"] = result.ids.size();
    j["ids"] = result.ids;
    j["original"] = points_json(result.original);
    return json_response(j);
  }
  if (parts.size() == 4 && parts[3] == "metrics" && method == "GET") {
    const auto r = run(id);
    json j;
    j["enabled"] = r->params().record_metrics;
    j["records"] = json::array();
    for (const MetricRecord& m : r->metrics()) j["records"].push_back(json::parse(to_json_line(m)));
    return json_response(j);
  }
  return json_response(error_json("NotFound", "no such endpoint"), 404);
}

void mount(httplib::Server& server, SessionService& service) {
  const auto adapter = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request;
    request.method = req.method;
    request.path = req.path;
    for (const auto& [key, value] : req.params) request.query[key] = value;
    request.body = req.body;
    request.content_type = req.get_header_value("Content-Type");
    const HttpResponse response = service.handle(request);
    res.status = response.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(response.body, response.content_type);
  };
  const std::string pattern = R"(/api/.*)";
  server.Get(pattern, adapter);
  server.Post(pattern, adapter);
  server.Delete(pattern, adapter);
  server.Options(pattern, [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

int serve(SessionService& service, const std::string& host, int port) {
  httplib::Server server;
  mount(server, service);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace inim
