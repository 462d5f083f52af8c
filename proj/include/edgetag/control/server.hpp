#pragma once

#include "edgetag/control/event_broker.hpp"
#include "edgetag/engine/engine.hpp"
#include "edgetag/inference/manifest.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace edgetag::control {

/// Manifests selectable through change_model, keyed by model_id.
class ModelRegistry {
 public:
  // Throws Error(Errc::config) on a duplicate model_id.
  void add(inference::ModelManifest manifest);
  const inference::ModelManifest* find(const std::string& model_id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return models_.size(); }

 private:
  std::map<std::string, inference::ModelManifest> models_;
};

// Loads every *.toml / *.json manifest in `dir`; files that are not valid
// manifests are skipped with a warning.
ModelRegistry load_registry(const std::filesystem::path& dir);

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 8787;
};

// "host:port", ":port" or "port". Throws Error(Errc::config).
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& endpoint);

struct ControlCommand {
  enum class Kind { change_model, set_topk, set_save_audio, end_process };
  Kind kind = Kind::end_process;
  std::string manifest_id;
  std::size_t k = 3;
  bool enabled = false;
};

// {"kind": "change_model", "manifest_id": "small"}, {"kind": "set_topk", "k": 1},
// {"kind": "set_save_audio", "enabled": true}, {"kind": "end_process"}.
// Throws Error(Errc::config) for anything else.
ControlCommand parse_command(const nlohmann::json& doc);

nlohmann::json bucket_json(const telemetry::AggBucket& bucket);
nlohmann::json thermal_json(const telemetry::ThermalEvent& event);

struct ControlOptions {
  Endpoint listen;
  std::size_t max_subscribers = 4;
  std::size_t subscriber_buffer = 256;
  // Static UI assets served under "/" when the directory exists.
  std::optional<std::filesystem::path> ui_dir;
  ModelRegistry registry;
  // Runs for end_process after the acknowledgement; defaults to stopping
  // the attached engine.
  std::function<void()> on_end_process;
};

/// HTTP/JSON + server-sent-events front end for one engine at a time.
/// Handlers only read engine snapshots; commands are serialized.
class ControlServer {
 public:
  explicit ControlServer(ControlOptions options);
  ~ControlServer();
  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  // Binds and serves on a background thread; returns the bound port (useful
  // with port 0). Throws Error(Errc::config) when the address cannot be bound.
  int start();
  void stop();

  // Hooks that forward engine events to subscribers; pass them to the
  // engine when it is constructed.
  engine::EngineHooks hooks();
  // Installs the engine the endpoints act on; events_enabled=false turns
  // /api/events off (headless).
  void attach(engine::Engine* engine, bool events_enabled = true);
  // Publishes run_ended and detaches.
  void detach(const std::optional<engine::RunSummary>& summary = std::nullopt);

  EventBroker& broker() { return broker_; }
  int port() const { return port_; }

 private:
  void routes();
  struct Reply {
    int status = 200;
    nlohmann::json body;
  };
  Reply execute(const ControlCommand& command);

  ControlOptions options_;
  EventBroker broker_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;

  mutable std::shared_mutex engine_mutex_;
  engine::Engine* engine_ = nullptr;
  bool events_enabled_ = false;
  std::mutex command_mutex_;
};

}  // namespace edgetag::control
