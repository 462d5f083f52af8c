#include "edgetag/control/server.hpp"

#include "edgetag/error.hpp"
#include "edgetag/time_util.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>

namespace edgetag::control {

namespace {

namespace fs = std::filesystem;

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

nlohmann::json stats_json(const std::optional<telemetry::Stats>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"min", s->min}, {"max", s->max}, {"p95", s->p95}};
}

}  // namespace

void ModelRegistry::add(inference::ModelManifest manifest) {
  const auto id = manifest.model_id;
  if (!models_.emplace(id, std::move(manifest)).second)
    throw Error(Errc::config, fmt::format("model registry: duplicate model_id '{}'", id));
}

const inference::ModelManifest* ModelRegistry::find(const std::string& model_id) const {
  const auto it = models_.find(model_id);
  return it == models_.end() ? nullptr : &it->second;
}

std::vector<std::string> ModelRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, m] : models_) out.push_back(id);
  return out;
}

ModelRegistry load_registry(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::file_missing, fmt::format("model directory {} not found", dir.string()));
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".toml" || ext == ".json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ModelRegistry registry;
  for (const auto& f : files) {
    try {
      auto m = inference::load_manifest(f);
      if (registry.find(m.model_id)) {
        spdlog::warn("skipping {}: model_id '{}' already registered", f.string(), m.model_id);
        continue;
      }
      registry.add(std::move(m));
    } catch (const Error& e) {
      spdlog::warn("skipping {}: {}", f.string(), e.what());
    }
  }
  return registry;
}

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  std::string port_text = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) ep.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535)
    throw Error(Errc::config, fmt::format("invalid listen address '{}' (expected host:port)", text));
  ep.port = port;
  return ep;
}

std::string to_string(const Endpoint& endpoint) { return fmt::format("{}:{}", endpoint.host, endpoint.port); }

ControlCommand parse_command(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
    throw Error(Errc::config, "command must be an object with a string 'kind'");
  const auto kind = doc["kind"].get<std::string>();
  ControlCommand c;
  if (kind == "change_model") {
    c.kind = ControlCommand::Kind::change_model;
    if (!doc.contains("manifest_id") || !doc["manifest_id"].is_string())
      throw Error(Errc::config, "change_model needs a string 'manifest_id'");
    c.manifest_id = doc["manifest_id"].get<std::string>();
  } else if (kind == "set_topk") {
    c.kind = ControlCommand::Kind::set_topk;
    if (!doc.contains("k") || !doc["k"].is_number_integer()) throw Error(Errc::config, "set_topk needs an integer 'k'");
    const auto k = doc["k"].get<std::int64_t>();
    if (k != 1 && k != 3) throw Error(Errc::config, fmt::format("set_topk: k must be 1 or 3, got {}", k));
    c.k = static_cast<std::size_t>(k);
  } else if (kind == "set_save_audio") {
    c.kind = ControlCommand::Kind::set_save_audio;
    if (!doc.contains("enabled") || !doc["enabled"].is_boolean())
      throw Error(Errc::config, "set_save_audio needs a boolean 'enabled'");
    c.enabled = doc["enabled"].get<bool>();
  } else if (kind == "end_process") {
    c.kind = ControlCommand::Kind::end_process;
  } else {
    throw Error(Errc::config, fmt::format("unknown command kind '{}'", kind));
  }
  return c;
}

nlohmann::json bucket_json(const telemetry::AggBucket& b) {
  return {{"bucket_start", format_iso8601(b.bucket_start_ns)},
          {"model_id", b.model_id},
          {"scenario", telemetry::to_string(b.scenario)},
          {"count", b.count},
          {"temp", stats_json(b.temp)},
          {"latency", stats_json(b.latency)}};
}

nlohmann::json thermal_json(const telemetry::ThermalEvent& e) {
  return {{"bucket_index", e.bucket_index},
          {"bucket_start", format_iso8601(e.bucket_start_ns)},
          {"direction", telemetry::to_string(e.direction)},
          {"max_temp_c", e.max_temp_c}};
}

ControlServer::ControlServer(ControlOptions options)
    : options_(std::move(options)),
      broker_(options_.max_subscribers, options_.subscriber_buffer),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

ControlServer::~ControlServer() { stop(); }

int ControlServer::start() {
  const auto& ep = options_.listen;
  if (ep.port == 0) {
    port_ = server_->bind_to_any_port(ep.host);
    if (port_ < 0) port_ = 0;
  } else {
    port_ = server_->bind_to_port(ep.host, ep.port) ? ep.port : 0;
  }
  if (port_ <= 0) throw Error(Errc::config, fmt::format("cannot listen on {}", to_string(ep)));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("control API listening on http://{}:{}", ep.host, port_);
  return port_;
}

void ControlServer::stop() {
  broker_.close();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

engine::EngineHooks ControlServer::hooks() {
  engine::EngineHooks h;
  h.on_prediction = [this](const engine::Prediction& p) {
    if (broker_.subscriber_count() > 0) broker_.publish("prediction", engine::to_json(p).dump());
  };
  h.on_bucket = [this](const telemetry::AggBucket& b) {
    if (broker_.subscriber_count() > 0) broker_.publish("bucket", bucket_json(b).dump());
  };
  h.on_thermal_event = [this](const telemetry::ThermalEvent& e) {
    if (broker_.subscriber_count() > 0) broker_.publish("thermal", thermal_json(e).dump());
  };
  return h;
}

void ControlServer::attach(engine::Engine* engine, bool events_enabled) {
  std::unique_lock lock(engine_mutex_);
  engine_ = engine;
  events_enabled_ = events_enabled;
}

void ControlServer::detach(const std::optional<engine::RunSummary>& summary) {
  {
    std::unique_lock lock(engine_mutex_);
    engine_ = nullptr;
  }
  broker_.publish("run_ended", summary ? engine::to_json(*summary).dump() : std::string("{}"));
}

ControlServer::Reply ControlServer::execute(const ControlCommand& command) {
  std::lock_guard serial(command_mutex_);
  std::shared_lock lock(engine_mutex_);
  if (!engine_) return {503, {{"accepted", false}, {"error", "no engine attached"}}};
  switch (command.kind) {
    case ControlCommand::Kind::change_model: {
      const auto* manifest = options_.registry.find(command.manifest_id);
      if (!manifest)
        return {404,
                {{"accepted", false},
                 {"model_id", engine_->status().model_id},
                 {"error", fmt::format("unknown manifest_id '{}'", command.manifest_id)}}};
      const auto ack = engine_->swap_model(*manifest);
      if (ack.accepted) broker_.publish("model", engine::to_json(ack).dump());
      return {ack.accepted ? 200 : 409, engine::to_json(ack)};
    }
    case ControlCommand::Kind::set_topk:
      try {
        engine_->set_top_k(command.k);
      } catch (const Error& e) {
        return {400, {{"accepted", false}, {"error", e.what()}}};
      }
      return {200, {{"accepted", true}, {"top_k", command.k}}};
    case ControlCommand::Kind::set_save_audio:
      engine_->set_save_audio(command.enabled);
      return {200, {{"accepted", true}, {"save_audio", command.enabled}}};
    case ControlCommand::Kind::end_process:
      if (options_.on_end_process)
        options_.on_end_process();
      else
        engine_->stop();
      return {202, {{"accepted", true}}};
  }
  return {500, {{"accepted", false}, {"error", "unhandled command"}}};
}

void ControlServer::routes() {
  auto& s = *server_;
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send_json(res, 500, {{"error", what}});
  });

  s.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(engine_mutex_);
    if (!engine_) return send_json(res, 503, {{"error", "no engine attached"}});
    auto doc = engine::to_json(engine_->status());
    doc["run_id"] = engine_->run_id();
    doc["events_enabled"] = events_enabled_;
    doc["subscribers"] = broker_.subscriber_count();
    send_json(res, 200, doc);
  });

  s.Get("/api/models", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& id : options_.registry.ids()) {
      const auto* m = options_.registry.find(id);
      models.push_back({{"model_id", id}, {"pipeline_kind", inference::to_string(m->pipeline_kind)}});
    }
    std::shared_lock lock(engine_mutex_);
    send_json(res, 200,
              {{"active", engine_ ? nlohmann::json(engine_->status().model_id) : nlohmann::json(nullptr)},
               {"models", std::move(models)}});
  });

  s.Post("/api/command", [this](const httplib::Request& req, httplib::Response& res) {
    const auto doc = nlohmann::json::parse(req.body, nullptr, false);
    if (doc.is_discarded()) return send_json(res, 400, {{"accepted", false}, {"error", "body is not valid JSON"}});
    ControlCommand command;
    try {
      command = parse_command(doc);
    } catch (const Error& e) {
      return send_json(res, 400, {{"accepted", false}, {"error", e.what()}});
    }
    const auto reply = execute(command);
    send_json(res, reply.status, reply.body);
  });

  const auto csv = [this](bool raw) {
    return [this, raw](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(engine_mutex_);
      if (!engine_) return send_json(res, 503, {{"error", "no engine attached"}});
      res.set_content(raw ? engine_->raw_csv() : engine_->agg_csv(), "text/csv; charset=utf-8");
    };
  };
  s.Get("/api/metrics/raw.csv", csv(true));
  s.Get("/api/metrics/agg.csv", csv(false));

  s.Get("/api/events", [this](const httplib::Request&, httplib::Response& res) {
    {
      std::shared_lock lock(engine_mutex_);
      if (!engine_) return send_json(res, 503, {{"error", "no engine attached"}});
      if (!events_enabled_) return send_json(res, 404, {{"error", "event stream disabled (headless run)"}});
    }
    auto sub = broker_.subscribe();
    if (!sub)
      return send_json(res, 503,
                       {{"error", fmt::format("subscriber limit ({}) reached", broker_.max_subscribers())}});
    res.set_header("Cache-Control", "no-cache");
    res.set_header("X-Accel-Buffering", "no");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub, first = std::make_shared<bool>(true)](std::size_t, httplib::DataSink& sink) {
          if (*first) {
            *first = false;
            const std::string hello = "retry: 2000\n\n";
            return sink.write(hello.data(), hello.size());
          }
          const auto event = sub->next(std::chrono::milliseconds(500));
          if (!event) {
            if (!sub->connected()) {
              sink.done();
              return true;
            }
            const std::string ping = ": keep-alive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          const auto text = event->sse();
          return sink.write(text.data(), text.size());
        },
        [this, sub](bool) { broker_.unsubscribe(sub); });
  });

  if (options_.ui_dir && fs::is_directory(*options_.ui_dir)) {
    s.set_mount_point("/", options_.ui_dir->string());
  } else {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("edge-tagger control API (no UI assets installed)\n", "text/plain; charset=utf-8");
    });
  }
}

}  // namespace edgetag::control
