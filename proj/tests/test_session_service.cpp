#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "inim/cli_io.hpp"
#include "inim/density.hpp"
#include "inim/session_service.hpp"

using namespace inim;
using nlohmann::json;

namespace {

RegularizationParams quick(int k = 7, int iterations = 4) {
  RegularizationParams p;
  p.k = k;
  p.r = 4;
  p.iterations = iterations;
  return p;
}

HttpRequest request(std::string method, std::string path, std::string body = {},
                    std::string type = "application/json") {
  HttpRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  r.body = std::move(body);
  r.content_type = std::move(type);
  return r;
}

std::string csv_of(const ScatterDataset& ds) {
  std::ostringstream out;
  write_csv(out, ds);
  return out.str();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Service, CsvBodyCreatesSession) {
  SessionService service;
  const ScatterDataset ds = generate({.kind = GenKind::GaussianMixture, .seed = 5, .total_n = 10000});
  HttpRequest req = request("POST", "/api/sessions", csv_of(ds), "text/csv");
  req.query = {{"k", "7"}, {"iterations", "2"}};
  const HttpResponse res = service.handle(req);
  ASSERT_EQ(res.status, 200) << res.body;
  const json j = json::parse(res.body);
  EXPECT_EQ(j["n"], 10000);
  EXPECT_EQ(j["iterations"], 2);
  EXPECT_FALSE(j["id"].get<std::string>().empty());
  EXPECT_EQ(service.session_count(), 1u);
}

TEST(Service, PayloadCapIsEnforced) {
  SessionService service;
  GenSpec big{.kind = GenKind::GaussianMixture, .seed = 1, .total_n = 3'000'000};
  EXPECT_EQ(code_of([&] { service.create(big, quick()); }), ErrorCode::PayloadTooLarge);
  EXPECT_EQ(http_status(ErrorCode::PayloadTooLarge), 413);

  SessionService small(ServiceConfig{.sample_cap = 1000});
  const ScatterDataset ds = generate({.kind = GenKind::GaussianMixture, .seed = 2, .total_n = 1500});
  const HttpResponse res = small.handle(request("POST", "/api/sessions", csv_of(ds), "text/csv"));
  EXPECT_EQ(res.status, 413);
  EXPECT_EQ(json::parse(res.body)["code"], "PayloadTooLarge");
  EXPECT_EQ(small.session_count(), 0u);
}

TEST(Service, GenSpecSessionServesPositions) {
  SessionService service;
  json body;
  body["gen"] = {{"kind", "four-cluster"}, {"desk_scale", true}};
  body["params"] = {{"k", 7}, {"iterations", 3}};
  const HttpResponse created = service.handle(request("POST", "/api/sessions", body.dump()));
  ASSERT_EQ(created.status, 200) << created.body;
  const std::string id = json::parse(created.body)["id"];
  EXPECT_EQ(json::parse(created.body)["classes"], 4);

  HttpRequest get = request("GET", "/api/sessions/" + id + "/positions");
  get.query = {{"level", "0"}};
  const json level0 = json::parse(service.handle(get).body);
  ASSERT_EQ(level0["n"], 10000);
  const auto run = service.run(id);
  EXPECT_EQ(level0["positions"][17][0].get<double>(), run->original().samples[17].x);

  get.query = {{"level", "3"}, {"format", "binary"}};
  const HttpResponse binary = service.handle(get);
  EXPECT_EQ(binary.content_type, "application/octet-stream");
  ASSERT_EQ(binary.body.size(), 10000u * 8);
  float x = 0.0f;
  std::memcpy(&x, binary.body.data() + 8 * 5, 4);
  EXPECT_EQ(x, static_cast<float>((*run->frame(3))[5].x));
}

TEST(Service, TransitionLevels) {
  SessionService service;
  const std::string id =
      service.create(GenSpec{.kind = GenKind::FixedFourCluster, .seed = 3, .desk_scale = true}, quick());
  const auto run = service.run(id);
  EXPECT_EQ(service.positions(id, 0.0), run->original().samples);
  EXPECT_EQ(service.positions(id, 4.0), *run->frame(4));
  const Positions mid = service.positions(id, 1.5);
  for (std::size_t s = 0; s < mid.size(); s += 97) {
    EXPECT_NEAR(mid[s].x, 0.5 * ((*run->frame(1))[s].x + (*run->frame(2))[s].x), 1e-15);
  }
  EXPECT_EQ(code_of([&] { service.positions(id, 4.5); }), ErrorCode::OutOfRangeLevel);
}

TEST(Service, EncodingsAreCachedAndConsistent) {
  SessionService service;
  const std::string id =
      service.create(GenSpec{.kind = GenKind::FixedFourCluster, .seed = 4, .desk_scale = true}, quick());
  const json grid0 = json::parse(service.encoding(id, "grid", 0));
  for (const json& line : grid0["lines"]) {
    const bool horizontal = line[0][1] == line[1][1];
    for (const json& v : line) {
      if (horizontal) EXPECT_EQ(v[1], line[0][1]);
      else EXPECT_EQ(v[0], line[0][0]);
    }
  }
  const json density0 = json::parse(service.encoding(id, "density", 0));
  const TextureGrid& original = service.run(id)->initial_density().grid;
  ASSERT_EQ(density0["values"].size(), original.pixel_count());
  for (std::size_t n = 0; n < original.pixel_count(); n += 13) {
    EXPECT_NEAR(density0["values"][n].get<double>(), original.values()[n], 1e-6);
  }
  const std::string first = service.encoding(id, "contours", 2);
  EXPECT_EQ(service.encoding(id, "contours", 2), first);
  EXPECT_EQ(json::parse(first)["kind"], "contours");
  EXPECT_EQ(code_of([&] { service.encoding(id, "heatmap", 0); }), ErrorCode::UnknownKind);
  EXPECT_EQ(code_of([&] { service.encoding(id, "grid", 5); }), ErrorCode::OutOfRangeLevel);

  HttpRequest req = request("GET", "/api/sessions/" + id + "/encodings/heatmap");
  EXPECT_EQ(service.handle(req).status, 404);
  req = request("GET", "/api/sessions/" + id + "/encodings/grid");
  req.query = {{"level", "1.5"}};
  EXPECT_EQ(service.handle(req).status, 400);
}

TEST(Service, LassoSelections) {
  SessionService service;
  const std::string id =
      service.create(GenSpec{.kind = GenKind::FixedFourCluster, .seed = 6, .desk_scale = true}, quick(8, 8));
  const auto run = service.run(id);
  const Positions whole = {{-0.01, -0.01}, {1.01, -0.01}, {1.01, 1.01}, {-0.01, 1.01}};
  EXPECT_EQ(service.lasso(id, whole, 8.0).ids.size(), 10000u);

  EXPECT_EQ(code_of([&] { service.lasso(id, {{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.9}}, 0.0); }),
            ErrorCode::DegeneratePolygon);
  EXPECT_EQ(code_of([&] { service.lasso(id, {{0.1, 0.1}, {0.5, 0.5}}, 0.0); }), ErrorCode::DegeneratePolygon);

  // Rectangle around the deformed smallest cluster picks exactly its samples.
  const Positions& final_frame = *run->frame(8);
  const auto& labels = run->original().labels;
  for (std::int32_t target = 0; target < 4; ++target) {
    double x0 = 1, y0 = 1, x1 = 0, y1 = 0;
    for (std::size_t s = 0; s < final_frame.size(); ++s) {
      if (labels[s] != target) continue;
      x0 = std::min(x0, final_frame[s].x);
      y0 = std::min(y0, final_frame[s].y);
      x1 = std::max(x1, final_frame[s].x);
      y1 = std::max(y1, final_frame[s].y);
    }
    const double pad = 1e-9;
    const Positions rect = {{x0 - pad, y0 - pad}, {x1 + pad, y0 - pad}, {x1 + pad, y1 + pad}, {x0 - pad, y1 + pad}};
    const LassoResult sel = service.lasso(id, rect, 8.0);
    std::size_t own = 0;
    std::size_t foreign = 0;
    for (std::size_t s : sel.ids) (labels[s] == target ? own : foreign) += 1;
    EXPECT_EQ(own, static_cast<std::size_t>(4 - target) * 1000);
    if (target == 3) EXPECT_EQ(foreign, 0u);
    ASSERT_EQ(sel.original.size(), sel.ids.size());
    EXPECT_EQ(sel.original.front(), run->original().samples[sel.ids.front()]);
  }
}

TEST(Service, ErrorsMapToStatus) {
  SessionService service;
  const HttpResponse missing = service.handle(request("GET", "/api/sessions/nope"));
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(json::parse(missing.body)["code"], "UnknownSession");
  EXPECT_EQ(service.handle(request("POST", "/api/sessions", "{not json")).status, 400);
  EXPECT_EQ(service.handle(request("POST", "/api/sessions", R"({"gen":"spiral"})")).status, 400);
  EXPECT_EQ(service.handle(request("POST", "/api/sessions", R"({"gen":"diagonal","params":{"k":1}})")).status, 400);
  EXPECT_EQ(service.handle(request("GET", "/elsewhere")).status, 404);
  EXPECT_EQ(http_status(ErrorCode::SingularMass), 500);
  EXPECT_EQ(http_status(ErrorCode::DegeneratePolygon), 400);
}

TEST(Service, DeleteAndMetrics) {
  SessionService service;
  const std::string id = service.create(GenSpec{.kind = GenKind::Diagonal, .seed = 2, .total_n = 2000}, quick(7, 2));
  const json metrics = json::parse(service.handle(request("GET", "/api/sessions/" + id + "/metrics")).body);
  EXPECT_TRUE(metrics["enabled"].get<bool>());
  EXPECT_EQ(metrics["records"].size(), 3u);
  EXPECT_EQ(service.handle(request("DELETE", "/api/sessions/" + id)).status, 200);
  EXPECT_EQ(service.session_count(), 0u);
  EXPECT_EQ(service.handle(request("DELETE", "/api/sessions/" + id)).status, 404);
}

TEST(Service, EvictsLeastRecentlyUsed) {
  SessionService service(ServiceConfig{.max_sessions = 2});
  const GenSpec spec{.kind = GenKind::Diagonal, .seed = 1, .total_n = 500};
  const std::string a = service.create(spec, quick(6, 1));
  const std::string b = service.create(spec, quick(6, 1));
  EXPECT_NE(a, b);
  service.run(a);
  const std::string c = service.create(spec, quick(6, 1));
  EXPECT_EQ(service.session_count(), 2u);
  EXPECT_NO_THROW(service.run(a));
  EXPECT_NO_THROW(service.run(c));
  EXPECT_EQ(code_of([&] { service.run(b); }), ErrorCode::UnknownSession);

  SessionService tight(ServiceConfig{.memory_budget_bytes = 1});
  const std::string only = tight.create(spec, quick(6, 1));
  tight.create(spec, quick(6, 1));
  EXPECT_EQ(tight.session_count(), 1u);
  EXPECT_EQ(code_of([&] { tight.run(only); }), ErrorCode::UnknownSession);
}

TEST(Service, ConcurrentReadersSeeSameBytes) {
  SessionService service;
  const std::string id =
      service.create(GenSpec{.kind = GenKind::FixedFourCluster, .seed = 9, .desk_scale = true}, quick(7, 2));
  std::vector<std::string> seen(4);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < seen.size(); ++t) {
    threads.emplace_back([&, t] { seen[t] = service.encoding(id, "grid", 2); });
  }
  for (auto& th : threads) th.join();
  for (const std::string& s : seen) EXPECT_EQ(s, seen[0]);
}

TEST(Service, LoopbackHttp) {
  SessionService service;
  httplib::Server server;
  mount(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/api/sessions?k=6&iterations=2", "x,y\n0.1,0.2\n0.4,0.4\n0.45,0.5\n0.9,0.8\n",
                                   "text/csv");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 200) << created->body;
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = json::parse(created->body)["id"];
  const auto positions = client.Get("/api/sessions/" + id + "/positions?level=2&format=binary");
  ASSERT_TRUE(positions);
  EXPECT_EQ(positions->body.size(), 4u * 8);
  const auto lasso = client.Post("/api/sessions/" + id + "/lasso",
                                 R"({"polygon":[[0,0],[1,0],[1,1],[0,1]],"level":1.5})", "application/json");
  ASSERT_TRUE(lasso);
  EXPECT_EQ(json::parse(lasso->body)["count"], 4);
  const auto missing = client.Get("/api/sessions/ffff");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  worker.join();
}
