#include <gtest/gtest.h>

#include "edgetag/control/event_broker.hpp"
#include "edgetag/control/server.hpp"
#include "edgetag/engine/engine.hpp"
#include "edgetag/error.hpp"
#include "edgetag/telemetry/csv.hpp"
#include "golden.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <thread>

using namespace edgetag;
using namespace edgetag::control;

namespace {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

inference::ModelManifest manifest(const std::string& name) {
  return inference::load_manifest(testkit::fixture("models/" + name));
}

ModelRegistry registry() {
  ModelRegistry r;
  r.add(manifest("tiny-embedded.toml"));
  r.add(manifest("small.toml"));
  r.add(manifest("mismatch.toml"));
  return r;
}

engine::EngineConfig config(const fs::path& dir, std::optional<double> duration_s, double scale) {
  engine::EngineConfig c;
  c.manifest = manifest("tiny-embedded.toml");
  c.source.kind = audio::SourceKind::synthetic;
  c.source.signal = audio::SyntheticSignal::noise;
  c.duration_s = duration_s;
  c.time_scale = scale;
  c.temperature_source = "mock:50";
  c.output_dir = dir / "runs";
  c.recordings_dir = dir / "recordings";
  c.run_id = "run";
  return c;
}

struct ParsedEvent {
  std::string type;
  nlohmann::json data;
};

/// Streams /api/events on a background thread.
class SseClient {
 public:
  explicit SseClient(int port) : client_("127.0.0.1", port) {
    client_.set_read_timeout(10, 0);
    thread_ = std::thread([this] {
      auto res = client_.Get("/api/events", [this](const char* data, std::size_t len) {
        std::lock_guard lock(mutex_);
        buffer_.append(data, len);
        for (auto pos = buffer_.find("\n\n"); pos != std::string::npos; pos = buffer_.find("\n\n")) {
          parse(buffer_.substr(0, pos));
          buffer_.erase(0, pos + 2);
        }
        return !quit_;
      });
      std::lock_guard lock(mutex_);
      status_ = res ? res->status : -1;
      finished_ = true;
    });
  }
  ~SseClient() {
    quit_ = true;
    client_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::vector<ParsedEvent> events(const std::string& type = {}) {
    std::lock_guard lock(mutex_);
    std::vector<ParsedEvent> out;
    for (const auto& e : events_)
      if (type.empty() || e.type == type) out.push_back(e);
    return out;
  }
  bool finished() {
    std::lock_guard lock(mutex_);
    return finished_;
  }
  int status() {
    std::lock_guard lock(mutex_);
    return status_;
  }

 private:
  void parse(const std::string& block) {
    ParsedEvent e;
    std::string data;
    std::size_t pos = 0;
    while (pos < block.size()) {
      auto nl = block.find('\n', pos);
      if (nl == std::string::npos) nl = block.size();
      const auto line = block.substr(pos, nl - pos);
      if (line.rfind("event: ", 0) == 0) e.type = line.substr(7);
      if (line.rfind("data: ", 0) == 0) data += line.substr(6);
      pos = nl + 1;
    }
    if (e.type.empty()) return;
    e.data = nlohmann::json::parse(data);
    events_.push_back(std::move(e));
  }

  httplib::Client client_;
  std::thread thread_;
  std::mutex mutex_;
  std::string buffer_;
  std::vector<ParsedEvent> events_;
  std::atomic<bool> quit_{false};
  bool finished_ = false;
  int status_ = 0;
};

template <typename Pred>
bool wait_until(Pred pred, std::chrono::milliseconds timeout = 10s) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!pred()) {
    if (std::chrono::steady_clock::now() > deadline) return false;
    std::this_thread::sleep_for(5ms);
  }
  return true;
}

ControlOptions options() {
  ControlOptions o;
  o.listen.port = 0;
  o.registry = registry();
  return o;
}

nlohmann::json post(httplib::Client& c, const nlohmann::json& body, int* status = nullptr) {
  auto res = c.Post("/api/command", body.dump(), "application/json");
  if (!res) return nullptr;
  if (status) *status = res->status;
  return nlohmann::json::parse(res->body);
}

nlohmann::json get_json(httplib::Client& c, const std::string& path, int* status = nullptr) {
  auto res = c.Get(path);
  if (!res) return nullptr;
  if (status) *status = res->status;
  return nlohmann::json::parse(res->body);
}

std::vector<std::int64_t> indices(const std::vector<ParsedEvent>& events) {
  std::vector<std::int64_t> out;
  for (const auto& e : events) out.push_back(e.data["window_index"].get<std::int64_t>());
  return out;
}

}  // namespace

TEST(ControlParse, Endpoints) {
  EXPECT_EQ(parse_endpoint("127.0.0.1:8787").port, 8787);
  EXPECT_EQ(parse_endpoint("0.0.0.0:80").host, "0.0.0.0");
  EXPECT_EQ(parse_endpoint(":9000").host, "127.0.0.1");
  EXPECT_EQ(parse_endpoint("9001").port, 9001);
  EXPECT_EQ(to_string(Endpoint{}), "127.0.0.1:8787");
  for (const char* bad : {"host:", "host:99999", "host:-1", "host:12a", ""}) EXPECT_THROW(parse_endpoint(bad), Error) << bad;
}

TEST(ControlParse, Commands) {
  auto c = parse_command({{"kind", "change_model"}, {"manifest_id", "small"}});
  EXPECT_EQ(c.kind, ControlCommand::Kind::change_model);
  EXPECT_EQ(c.manifest_id, "small");
  EXPECT_EQ(parse_command({{"kind", "set_topk"}, {"k", 1}}).k, 1u);
  EXPECT_EQ(parse_command({{"kind", "set_topk"}, {"k", 3}}).k, 3u);
  EXPECT_TRUE(parse_command({{"kind", "set_save_audio"}, {"enabled", true}}).enabled);
  EXPECT_EQ(parse_command({{"kind", "end_process"}}).kind, ControlCommand::Kind::end_process);
  for (const auto& bad : {nlohmann::json{{"kind", "set_topk"}, {"k", 2}}, nlohmann::json{{"kind", "set_topk"}},
                          nlohmann::json{{"kind", "change_model"}}, nlohmann::json{{"kind", "reboot"}},
                          nlohmann::json{{"k", 1}}, nlohmann::json::array(),
                          nlohmann::json{{"kind", "set_save_audio"}, {"enabled", "yes"}}})
    EXPECT_THROW(parse_command(bad), Error) << bad.dump();
}

TEST(ControlRegistry, LoadsManifestDirectoryAndRejectsDuplicates) {
  const auto r = load_registry(testkit::fixture("models"));
  EXPECT_TRUE(r.find("tiny-embedded"));
  EXPECT_TRUE(r.find("small"));
  EXPECT_TRUE(r.find("large"));
  EXPECT_FALSE(r.find("broken"));
  ModelRegistry dup;
  dup.add(manifest("small.toml"));
  EXPECT_THROW(dup.add(manifest("small.toml")), Error);
  EXPECT_THROW(load_registry("/nonexistent/models"), Error);
}

TEST(EventBroker, BroadcastsIdenticalOrderedSequences) {
  EventBroker broker(4, 64);
  auto a = broker.subscribe();
  auto b = broker.subscribe();
  for (int i = 0; i < 50; ++i) broker.publish(i % 2 ? "bucket" : "prediction", std::to_string(i));
  for (auto& s : {a, b}) {
    for (int i = 0; i < 50; ++i) {
      const auto e = s->next(0ms);
      ASSERT_TRUE(e);
      EXPECT_EQ(e->data, std::to_string(i));
      EXPECT_EQ(e->id, static_cast<std::uint64_t>(i + 1));
    }
    EXPECT_FALSE(s->next(0ms));
  }
}

TEST(EventBroker, LimitsSubscribersAndDisconnectsSlowOnes) {
  EventBroker broker(2, 4);
  auto fast = broker.subscribe();
  auto slow = broker.subscribe();
  EXPECT_EQ(broker.subscribe(), nullptr);
  for (int i = 0; i < 10; ++i) {
    broker.publish("prediction", std::to_string(i));
    ASSERT_TRUE(fast->next(0ms));
  }
  EXPECT_TRUE(fast->connected());
  EXPECT_FALSE(slow->connected());
  EXPECT_FALSE(slow->next(0ms));
  EXPECT_EQ(broker.subscriber_count(), 1u);
  EXPECT_EQ(broker.disconnected_slow(), 1u);
  EXPECT_NE(broker.subscribe(), nullptr);
}

TEST(EventBroker, SseWireFormat) {
  const Event e{7, "prediction", "{\"a\":1}"};
  EXPECT_EQ(e.sse(), "id: 7\nevent: prediction\ndata: {\"a\":1}\n\n");
  const Event multi{8, "x", "l1\nl2"};
  EXPECT_EQ(multi.sse(), "id: 8\nevent: x\ndata: l1\ndata: l2\n\n");
}

TEST(EventBroker, StalledSubscriberDoesNotSlowTheEngine) {
  const auto dir = testkit::make_temp_dir("control_stall");
  ControlOptions o = options();
  o.subscriber_buffer = 3;
  ControlServer server(std::move(o));
  auto stalled = server.broker().subscribe();
  engine::Engine eng(config(dir, 60.0, 0.01), server.hooks());
  const auto summary = eng.run();
  EXPECT_EQ(summary.predictions, 11);
  EXPECT_EQ(summary.counters.windows_dropped, 0);
  EXPECT_FALSE(stalled->connected());
  EXPECT_EQ(server.broker().disconnected_slow(), 1u);
}

TEST(ControlServer, NoEngineAndNoUi) {
  ControlServer server(options());
  const int port = server.start();
  httplib::Client c("127.0.0.1", port);
  int status = 0;
  get_json(c, "/api/status", &status);
  EXPECT_EQ(status, 503);
  EXPECT_EQ(post(c, {{"kind", "end_process"}}, &status)["accepted"], false);
  EXPECT_EQ(status, 503);
  auto models = get_json(c, "/api/models", &status);
  EXPECT_EQ(status, 200);
  EXPECT_TRUE(models["active"].is_null());
  EXPECT_EQ(models["models"].size(), 3u);
  auto root = c.Get("/");
  ASSERT_TRUE(root);
  EXPECT_EQ(root->status, 200);
  EXPECT_NE(root->body.find("no UI"), std::string::npos);
}

TEST(ControlServer, ServesUiAssetsWhenPresent) {
  const auto dir = testkit::make_temp_dir("control_ui");
  std::ofstream(dir / "index.html") << "<html>console</html>";
  auto o = options();
  o.ui_dir = dir;
  ControlServer server(std::move(o));
  httplib::Client c("127.0.0.1", server.start());
  auto res = c.Get("/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, "<html>console</html>");
}

TEST(ControlServer, LiveStreamStatusAndCommands) {
  const auto dir = testkit::make_temp_dir("control_live");
  ControlServer server(options());
  const int port = server.start();
  engine::Engine eng(config(dir, std::nullopt, 0.05), server.hooks());
  server.attach(&eng);

  SseClient first(port);
  SseClient second(port);
  ASSERT_TRUE(wait_until([&] { return server.broker().subscriber_count() == 2; }));
  eng.start();
  httplib::Client c("127.0.0.1", port);

  // cold status
  auto status = get_json(c, "/api/status");
  EXPECT_EQ(status["model_id"], "tiny-embedded");
  EXPECT_TRUE(status["last"].is_null());
  EXPECT_EQ(status["events_enabled"], true);

  // 30 stream seconds -> at least 5 predictions in window order
  ASSERT_TRUE(wait_until([&] { return first.events("prediction").size() >= 5; }));
  const auto seen = indices(first.events("prediction"));
  for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_EQ(seen[i], seen[i - 1] + 1);

  status = get_json(c, "/api/status");
  EXPECT_FALSE(status["last"].is_null());
  EXPECT_GE(status["uptime_s"].get<double>(), 0.0);

  // set_topk 1 -> later predictions carry one entry
  int code = 0;
  EXPECT_EQ(post(c, {{"kind", "set_topk"}, {"k", 1}}, &code)["accepted"], true);
  EXPECT_EQ(code, 200);
  const auto after_topk = first.events("prediction").size();
  ASSERT_TRUE(wait_until([&] { return first.events("prediction").size() >= after_topk + 2; }));
  EXPECT_EQ(first.events("prediction").back().data["top_k"].size(), 1u);
  post(c, {{"kind", "set_topk"}, {"k", 2}}, &code);
  EXPECT_EQ(code, 400);

  // unknown model -> 4xx, state unchanged
  auto reply = post(c, {{"kind", "change_model"}, {"manifest_id", "nope"}}, &code);
  EXPECT_EQ(code, 404);
  EXPECT_EQ(reply["accepted"], false);
  EXPECT_EQ(get_json(c, "/api/status")["model_id"], "tiny-embedded");
  reply = post(c, {{"kind", "change_model"}, {"manifest_id", "mismatch"}}, &code);
  EXPECT_EQ(code, 409);
  EXPECT_EQ(get_json(c, "/api/status")["model_id"], "tiny-embedded");

  // valid model -> label follows within two hops
  reply = post(c, {{"kind", "change_model"}, {"manifest_id", "small"}}, &code);
  EXPECT_EQ(code, 200);
  EXPECT_EQ(reply["model_id"], "small");
  EXPECT_EQ(get_json(c, "/api/status")["model_id"], "small");
  EXPECT_EQ(get_json(c, "/api/models")["active"], "small");
  ASSERT_TRUE(wait_until([&] { return first.events("prediction").back().data["model_id"] == "small"; }));

  post(c, {{"kind", "set_save_audio"}, {"enabled", true}}, &code);
  EXPECT_EQ(code, 200);
  EXPECT_EQ(get_json(c, "/api/status")["save_audio"], true);

  auto raw = c.Get("/api/metrics/raw.csv");
  ASSERT_TRUE(raw);
  EXPECT_EQ(raw->body.substr(0, raw->body.find('\n')), telemetry::kRawCsvHeader);
  auto agg = c.Get("/api/metrics/agg.csv");
  ASSERT_TRUE(agg);
  EXPECT_EQ(agg->body.substr(0, agg->body.find('\n')), telemetry::kAggCsvHeader);

  // end_process -> engine stops within one hop, summary written, stream ends
  const auto t0 = std::chrono::steady_clock::now();
  post(c, {{"kind", "end_process"}}, &code);
  EXPECT_EQ(code, 202);
  ASSERT_TRUE(eng.wait_for(5s));
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 5s * 0.05 + 500ms);
  const auto summary = eng.wait();
  EXPECT_EQ(summary.exit_reason, "stopped");
  EXPECT_TRUE(fs::exists(eng.run_dir() / "run_summary.json"));
  server.detach(summary);
  ASSERT_TRUE(wait_until([&] { return !first.events("run_ended").empty(); }));
  EXPECT_EQ(first.events("run_ended")[0].data["exit_reason"], "stopped");
  server.stop();
  ASSERT_TRUE(wait_until([&] { return first.finished() && second.finished(); }));

  // both subscribers saw the same sequence
  const auto a = first.events();
  const auto b = second.events();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].type, b[i].type);
    EXPECT_EQ(a[i].data, b[i].data);
  }
}

TEST(ControlServer, HeadlessDisablesEventsButKeepsControl) {
  const auto dir = testkit::make_temp_dir("control_headless");
  ControlServer server(options());
  const int port = server.start();
  engine::Engine eng(config(dir, 60.0, 0.01), server.hooks());
  server.attach(&eng, false);
  eng.start();
  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/api/events");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(get_json(c, "/api/status")["events_enabled"], false);
  const auto summary = eng.wait();
  server.detach(summary);
  EXPECT_EQ(summary.predictions, 11);
  EXPECT_EQ(server.broker().published(), 1u);  // run_ended only
}

TEST(ControlServer, RejectsSubscribersBeyondTheLimit) {
  const auto dir = testkit::make_temp_dir("control_limit");
  auto o = options();
  o.max_subscribers = 2;
  ControlServer server(std::move(o));
  const int port = server.start();
  engine::Engine eng(config(dir, std::nullopt, 0.05), server.hooks());
  server.attach(&eng);
  SseClient a(port);
  SseClient b(port);
  ASSERT_TRUE(wait_until([&] { return server.broker().subscriber_count() == 2; }));
  SseClient c(port);
  ASSERT_TRUE(wait_until([&] { return c.finished(); }));
  EXPECT_EQ(c.status(), 503);
  server.detach();
}

TEST(ControlServer, StalledHttpSubscriberIsDisconnected) {
  const auto dir = testkit::make_temp_dir("control_stall_http");
  auto o = options();
  o.subscriber_buffer = 8;
  ControlServer server(std::move(o));
  const int port = server.start();
  engine::Engine eng(config(dir, std::nullopt, 0.05), server.hooks());
  server.attach(&eng);

  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  int small = 1024;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &small, sizeof small);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  const std::string request = "GET /api/events HTTP/1.1\r\nHost: localhost\r\n\r\n";
  ASSERT_EQ(::send(fd, request.data(), request.size(), 0), static_cast<ssize_t>(request.size()));
  ASSERT_TRUE(wait_until([&] { return server.broker().subscriber_count() == 1; }));

  // never read; flood past socket buffers and the subscriber buffer
  const std::string payload = nlohmann::json{{"pad", std::string(16384, 'x')}}.dump();
  for (int i = 0; i < 2000 && server.broker().disconnected_slow() == 0; ++i) server.broker().publish("bucket", payload);
  EXPECT_EQ(server.broker().disconnected_slow(), 1u);
  EXPECT_EQ(server.broker().subscriber_count(), 0u);

  httplib::Client c("127.0.0.1", port);
  int code = 0;
  get_json(c, "/api/status", &code);
  EXPECT_EQ(code, 200);
  ::close(fd);
  server.detach();
}
