#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>

#include "ringkit/gateway/api.hpp"
#include "ringkit/gateway/hub.hpp"
#include "ringkit/hostkit.hpp"

namespace ringkit::gateway {

inline constexpr int kDefaultPort = 8765;
inline constexpr const char* kPortEnvVar = "RINGKIT_GATEWAY_PORT";

/// Port from RINGKIT_GATEWAY_PORT, else 8765.
inline int default_port() {
  if (const char* v = std::getenv(kPortEnvVar)) {
    try {
      const int p = std::stoi(v);
      if (p >= 0 && p <= 65535) return p;
    } catch (const std::exception&) {
    }
    throw Error(Errc::BadArgument, std::string(kPortEnvVar) + " is not a port number: " + v);
  }
  return kDefaultPort;
}

struct GatewayOptions {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;  // 0 picks a free port
  double speed = 1.0;       // simulated seconds per wall-clock second
  std::size_t queue_capacity = 256;
  std::filesystem::path static_dir;  // served at / when set
  std::chrono::milliseconds tick{5};
};

class Gateway {
 public:
  using ClientId = Hub::ClientId;

  Gateway(std::unique_ptr<transport::Environment> env, GatewayOptions opts = {})
      : env_(std::move(env)), opts_(std::move(opts)), hub_(opts_.queue_capacity) {
    if (!env_) throw Error(Errc::BadArgument, "gateway needs an environment");
    if (!(opts_.speed > 0)) throw Error(Errc::BadArgument, "speed must be positive");
    routes();
  }
  ~Gateway() { stop(); }

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds, starts the simulation and HTTP threads and returns the bound port.
  int start() {
    if (started_) return port_;
    port_ = opts_.port == 0 ? svr_.bind_to_any_port(opts_.host) : (svr_.bind_to_port(opts_.host, opts_.port) ? opts_.port : -1);
    if (port_ < 0) throw Error(Errc::IoError, "cannot bind " + opts_.host + ":" + std::to_string(opts_.port));
    started_ = true;
    sim_thread_ = std::thread([this] { sim_loop(); });
    http_thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (!started_ || stopped_.exchange(true)) return;
    hub_.close_all();
    svr_.stop();
    if (http_thread_.joinable()) http_thread_.join();
    {
      std::lock_guard lk(jobs_mu_);
      stopping_ = true;
    }
    jobs_cv_.notify_all();
    if (sim_thread_.joinable()) sim_thread_.join();
  }

  /// Blocks until `stop` is called from another thread.
  void wait() {
    if (http_thread_.joinable()) http_thread_.join();
  }

  int port() const noexcept { return port_; }
  Hub& hub() noexcept { return hub_; }

  /// Runs `f(environment)` on the simulation thread and returns its result.
  template <typename F>
  auto with_environment(F&& f) {
    return on_sim([this, &f] { return f(*env_); });
  }

 private:
  struct Transfer {
    std::unique_ptr<hostkit::FileFetch> fetch;
    std::filesystem::path export_dir;
    hostkit::ExportFormat format = hostkit::ExportFormat::Csv;
    double last_fraction = -1;
  };

  struct Conn {
    explicit Conn(transport::Link l) : link(std::move(l)) {}
    transport::Link link;
    std::optional<hostkit::CalibrationReport> calibration;
    hostkit::SessionPtr session;
    std::optional<hostkit::SessionData> last_session;
    std::optional<hostkit::OfflinePlanInfo> plan;
    std::string offline_state = "idle";
    std::optional<std::uint32_t> segments_written;
    int event_token = -1;
    std::optional<Transfer> transfer;
    std::map<std::uint16_t, proto::Bytes> partial;  // interrupted downloads
  };

  // --- simulation thread ---------------------------------------------------------

  template <typename F>
  auto on_sim(F&& f) -> std::invoke_result_t<F&> {
    using R = std::invoke_result_t<F&>;
    if (std::this_thread::get_id() == sim_id_) return f();
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
    auto fut = task->get_future();
    {
      std::lock_guard lk(jobs_mu_);
      if (stopping_ || !started_) throw ApiError("ShuttingDown", 503, "gateway is not running");
      jobs_.push_back([task] { (*task)(); });
    }
    jobs_cv_.notify_one();
    return fut.get();
  }

  void sim_loop() {
    sim_id_ = std::this_thread::get_id();
    using clock = std::chrono::steady_clock;
    auto anchor_wall = clock::now();
    auto anchor_sim = env_->now();
    auto last_status = clock::now();
    while (true) {
      std::deque<std::function<void()>> jobs;
      {
        std::unique_lock lk(jobs_mu_);
        jobs_cv_.wait_for(lk, opts_.tick, [this] { return stopping_ || !jobs_.empty(); });
        jobs.swap(jobs_);
        if (stopping_ && jobs.empty()) break;
      }
      for (auto& j : jobs) j();

      const auto now = clock::now();
      const auto elapsed_us = std::chrono::duration_cast<std::chrono::microseconds>(now - anchor_wall).count();
      const auto target = anchor_sim + static_cast<std::int64_t>(static_cast<double>(elapsed_us) * opts_.speed);
      guarded([&] { advance_transfers(target); });
      if (env_->now() > target) {
        // Blocking requests ran ahead of the wall clock; re-anchor instead of stalling.
        anchor_wall = now;
        anchor_sim = env_->now();
      } else {
        guarded([&] { env_->run_until(target); });
      }
      guarded([&] { reap_sessions(); });
      if (now - last_status >= std::chrono::seconds(1)) {
        last_status = now;
        guarded([&] { publish_offline_progress(); });
      }
    }
  }

  template <typename F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const Error& e) {
      hub_.publish(ApiKind::Error, error_body(to_string(e.code()), e.what()));
    } catch (const std::exception& e) {
      hub_.publish(ApiKind::Error, error_body("Internal", e.what()));
    }
  }

  // Sessions whose device stopped on its own (duration elapsed) are sealed here.
  void reap_sessions() {
    for (auto& [mac, c] : conns_) {
      if (!c.session || !c.session->active() || !c.session->device_stopped()) continue;
      seal_session(c, {}, hostkit::ExportFormat::Csv);
      hub_.publish(ApiKind::Dashboard, dashboard_body(mac, c, false));
    }
  }

  Json seal_session(Conn& c, const std::filesystem::path& export_dir, hostkit::ExportFormat fmt) {
    c.session->stop();
    c.last_session = c.session->snapshot();
    c.session.reset();
    Json exported = nullptr;
    if (!export_dir.empty()) {
      hostkit::export_session(*c.last_session, export_dir, fmt);
      exported = {{"dir", export_dir.string()}, {"format", hostkit::to_string(fmt)}};
    }
    return exported;
  }

  void advance_transfers(std::int64_t target) {
    for (auto& [mac, c] : conns_) {
      if (!c.transfer) continue;
      auto& t = *c.transfer;
      const auto id = t.fetch->entry().file_id;
      try {
        while (env_->now() < target && t.fetch->step()) {
          const auto p = t.fetch->progress();
          if (p.fraction() - t.last_fraction >= 0.01) {
            t.last_fraction = p.fraction();
            hub_.publish(ApiKind::FetchProgress, progress_body(mac, p, "transferring"));
          }
        }
        if (!t.fetch->done()) continue;
        auto file = t.fetch->finish();
        c.partial.erase(id);
        Json body = progress_body(mac, hostkit::FetchProgress{id, file.payload.size(), file.entry.size, file.finished_us},
                                  "verified");
        body["records"] = file.records.size();
        body["crc"] = file.entry.crc;
        body["duration_us"] = file.finished_us - file.started_us;
        if (!t.export_dir.empty()) {
          hostkit::export_session(hostkit::offline_session(mac, proto::SensorConfig{}, {file}), t.export_dir, t.format);
          body["export"] = {{"dir", t.export_dir.string()}, {"format", hostkit::to_string(t.format)}};
        }
        c.transfer.reset();
        hub_.publish(ApiKind::FetchProgress, body);
      } catch (const hostkit::FetchInterrupted& e) {
        c.partial[id] = e.partial();
        auto p = t.fetch->progress();
        p.bytes = e.resume_from();
        c.transfer.reset();
        Json body = progress_body(mac, p, "interrupted");
        body["resume_from"] = e.resume_from();
        hub_.publish(ApiKind::FetchProgress, body);
        hub_.publish(ApiKind::Error, with_mac(error_body(to_string(e.code()), e.what()), mac));
      } catch (const Error& e) {
        auto p = t.fetch->progress();
        c.transfer.reset();
        hub_.publish(ApiKind::FetchProgress, progress_body(mac, p, "failed"));
        hub_.publish(ApiKind::Error, with_mac(error_body(to_string(e.code()), e.what()), mac));
      }
    }
  }

  void refresh_offline(Conn& c) const {
    if (c.offline_state == "armed" && c.plan &&
        env_->now() >= c.plan->armed_at_us + static_cast<std::int64_t>(c.plan->start_delay_s) * 1'000'000)
      c.offline_state = "logging";
  }

  void publish_offline_progress() {
    for (auto& [mac, c] : conns_) {
      refresh_offline(c);
      if (radio_asleep(c)) hub_.publish(ApiKind::OfflineStatus, offline_body(mac, c));
    }
  }

  // --- bodies ------------------------------------------------------------------------

  static Json with_mac(Json j, const MacAddress& mac) {
    j["mac"] = mac.to_string();
    return j;
  }

  Json progress_body(const MacAddress& mac, const hostkit::FetchProgress& p, std::string_view state) const {
    Json j = hostkit::to_json(p);
    j["mac"] = mac.to_string();
    j["state"] = state;
    return j;
  }

  static Json session_json(const hostkit::SessionData& d, bool active, std::uint64_t frames) {
    Json ann = Json::array();
    for (const auto& a : d.annotations) ann.push_back(hostkit::to_json(a));
    return Json{{"session_id", d.session_id},
                {"active", active},
                {"start_us", d.start_us},
                {"end_us", d.end_us},
                {"packets", d.packets},
                {"records", d.samples.size()},
                {"counts",
                 {{"ppg", d.count(proto::Modality::Ppg)},
                  {"imu", d.count(proto::Modality::Imu)},
                  {"temp", d.count(proto::Modality::Temp)}}},
                {"gaps", d.gaps.size()},
                {"annotations", ann},
                {"render_frames", frames}};
  }

  Json session_summary(const Conn& c) const {
    if (c.session) return session_json(c.session->snapshot(), c.session->active(), c.session->render_frames());
    if (c.last_session) return session_json(*c.last_session, false, 0);
    return nullptr;
  }

  Json offline_body(const MacAddress& mac, const Conn& c) const {
    Json j{{"mac", mac.to_string()}, {"state", c.offline_state}, {"sim_time_us", env_->now()}};
    if (c.plan) {
      const auto& p = *c.plan;
      const auto start = p.armed_at_us + static_cast<std::int64_t>(p.start_delay_s) * 1'000'000;
      const double span = static_cast<double>(p.total_s) * 1e6;
      double progress = std::clamp(static_cast<double>(env_->now() - start) / span, 0.0, 1.0);
      if (c.offline_state == "complete") progress = 1.0;
      j["plan"] = hostkit::to_json(p);
      j["progress"] = progress;
    }
    if (c.segments_written) j["segments_written"] = *c.segments_written;
    return j;
  }

  bool radio_asleep(const Conn& c) const { return c.offline_state == "armed" || c.offline_state == "logging"; }

  Json dashboard_body(const MacAddress& mac, Conn& c, bool query_device) {
    Json j{{"mac", mac.to_string()}, {"connected", c.link.connected()}, {"sim_time_us", env_->now()}};
    j["dashboard"] = nullptr;
    if (query_device && c.link.connected() && !radio_asleep(c)) j["dashboard"] = hostkit::to_json(hostkit::device_info(c.link));
    j["session"] = session_summary(c);
    j["calibration"] = c.calibration ? hostkit::to_json(*c.calibration) : Json(nullptr);
    j["offline"] = offline_body(mac, c);
    return j;
  }

  // --- request plumbing -------------------------------------------------------------------

  static Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    Json j;
    try {
      j = Json::parse(req.body);
    } catch (const Json::exception& e) {
      throw bad_request(std::string("body is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw bad_request("body must be a JSON object");
    return j;
  }

  static std::optional<ClientId> client_of(const httplib::Request& req) {
    std::string v = req.get_header_value("X-Client-Id");
    if (v.empty() && req.has_param("client")) v = req.get_param_value("client");
    if (v.empty()) return std::nullopt;
    try {
      return static_cast<ClientId>(std::stoull(v));
    } catch (const std::exception&) {
      throw bad_request("bad client id '" + v + "'");
    }
  }

  static MacAddress mac_of(const httplib::Request& req) { return MacAddress::parse(req.path_params.at("mac")); }

  Conn& conn(const MacAddress& mac) {
    auto it = conns_.find(mac);
    if (it == conns_.end() || !it->second.link.connected())
      throw not_connected(mac.to_string() + " is not connected; POST /api/devices/" + mac.to_string() + "/connect");
    return it->second;
  }

  static void send(httplib::Response& res, int status, const Json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  using Handler = std::function<Json(const httplib::Request&)>;

  httplib::Server::Handler wrap(Handler h) {
    return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, 200, h(req));
      } catch (const ApiError& e) {
        send(res, e.status, hub_.make(ApiKind::Error, error_body(e.code, e.what())).to_json());
      } catch (const Error& e) {
        send(res, http_status(e.code()), hub_.make(ApiKind::Error, error_body(to_string(e.code()), e.what())).to_json());
      } catch (const Json::exception& e) {
        send(res, 400, hub_.make(ApiKind::Error, error_body("BadRequest", e.what())).to_json());
      } catch (const std::exception& e) {
        send(res, 500, hub_.make(ApiKind::Error, error_body("Internal", e.what())).to_json());
      }
    };
  }

  // Device endpoints: run on the simulation thread and answer with one ApiMessage.
  void device_route(const std::string& method, const std::string& path, bool needs_operator,
                    std::function<ApiMessage(const httplib::Request&, const Json&)> fn) {
    auto h = wrap([this, needs_operator, fn = std::move(fn)](const httplib::Request& req) {
      if (needs_operator) hub_.require_operator(client_of(req));
      const Json body = parse_body(req);
      return on_sim([&] { return fn(req, body); }).to_json();
    });
    if (method == "GET") svr_.Get(path, h);
    else svr_.Post(path, h);
  }

  void routes() {
    svr_.new_task_queue = [] { return new httplib::ThreadPool(32); };
    if (!opts_.static_dir.empty()) svr_.set_mount_point("/", opts_.static_dir.string());

    svr_.Get("/api/health", wrap([this](const httplib::Request&) {
      const auto now = on_sim([this] { return env_->now(); });
      Json op = nullptr;
      if (auto o = hub_.operator_id()) op = *o;
      return Json{{"api", kApiVersion}, {"sim_time_us", now}, {"speed", opts_.speed},
                  {"operator", op},     {"last_seq", hub_.last_seq()}};
    }));

    // Clients and the operator role.
    svr_.Post("/api/clients", wrap([this](const httplib::Request& req) {
      const Json b = parse_body(req);
      return Json{{"client_id", hub_.add_client(b.value("name", ""))}};
    }));
    svr_.Get("/api/clients", wrap([this](const httplib::Request&) { return Json{{"clients", hub_.clients_json()}}; }));
    svr_.Delete("/api/clients/:id", wrap([this](const httplib::Request& req) {
      hub_.remove_client(std::stoull(req.path_params.at("id")));
      return Json{{"removed", true}};
    }));
    auto need_client = [](const httplib::Request& req) {
      auto id = client_of(req);
      if (!id) throw bad_request("X-Client-Id header required");
      return *id;
    };
    svr_.Post("/api/operator/claim", wrap([this, need_client](const httplib::Request& req) {
      hub_.claim(need_client(req));
      return Json{{"operator", *hub_.operator_id()}};
    }));
    svr_.Post("/api/operator/release", wrap([this, need_client](const httplib::Request& req) {
      hub_.release(need_client(req));
      return Json{{"operator", nullptr}};
    }));
    svr_.Post("/api/operator/handover", wrap([this, need_client](const httplib::Request& req) {
      const Json b = parse_body(req);
      hub_.handover(need_client(req), b.at("to").get<ClientId>());
      return Json{{"operator", *hub_.operator_id()}};
    }));
    svr_.Get("/api/operator", wrap([this](const httplib::Request&) {
      Json op = nullptr;
      if (auto o = hub_.operator_id()) op = *o;
      return Json{{"operator", op}};
    }));

    // Streaming endpoint: newline-delimited ApiMessages, one per line.
    svr_.Get("/api/stream", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<ClientId> id;
      try {
        id = client_of(req);
      } catch (const ApiError& e) {
        send(res, e.status, hub_.make(ApiKind::Error, error_body(e.code, e.what())).to_json());
        return;
      }
      if (!id) id = hub_.add_client("stream");
      if (!hub_.has_client(*id)) {
        send(res, 404, hub_.make(ApiKind::Error, error_body("NotFound", "unknown client")).to_json());
        return;
      }
      auto box = hub_.attach(*id);
      res.set_header("X-Client-Id", std::to_string(*id));
      res.set_chunked_content_provider(
          "application/x-ndjson",
          [box](std::size_t, httplib::DataSink& sink) {
            const auto items = box->drain(std::chrono::milliseconds(100));
            for (const auto& it : items)
              if (!sink.write(it.line->data(), it.line->size())) return false;
            if (box->closed() && items.empty()) {
              sink.done();
              return true;
            }
            return sink.is_writable();
          },
          [this, id = *id, box](bool) { hub_.detach(id, box); });
    });

    device_route("GET", "/api/devices", false, [this](const httplib::Request& req, const Json&) {
      auto dur = std::chrono::milliseconds(req.has_param("duration_ms") ? std::stoll(req.get_param_value("duration_ms")) : 1000);
      auto key = hostkit::SortKey::Rssi;
      if (req.has_param("sort")) {
        const auto s = req.get_param_value("sort");
        if (s == "battery") key = hostkit::SortKey::Battery;
        else if (s == "name") key = hostkit::SortKey::Name;
        else if (s != "rssi") throw bad_request("sort must be rssi, battery or name");
      }
      Json list = Json::array();
      for (const auto& d : hostkit::discover(*env_, dur, key)) {
        Json j = hostkit::to_json(d);
        j["connected"] = conns_.count(d.mac) && conns_.at(d.mac).link.connected();
        list.push_back(j);
      }
      return hub_.publish(ApiKind::DeviceList, {{"devices", list}, {"sim_time_us", env_->now()}});
    });

    device_route("POST", "/api/devices/:mac/connect", false, [this](const httplib::Request& req, const Json&) {
      const auto mac = mac_of(req);
      auto it = conns_.find(mac);
      if (it != conns_.end() && it->second.link.connected()) return hub_.make(ApiKind::Dashboard, dashboard_body(mac, it->second, true));
      auto link = env_->connect(mac);
      Conn c(link);
      if (it != conns_.end()) {
        // Reconnect: keep what the host already knows about this device.
        c.calibration = it->second.calibration;
        c.last_session = std::move(it->second.last_session);
        c.partial = std::move(it->second.partial);
        conns_.erase(it);
      }
      auto& slot = conns_.emplace(mac, std::move(c)).first->second;
      return hub_.publish(ApiKind::Dashboard, dashboard_body(mac, slot, true));
    });

    device_route("POST", "/api/devices/:mac/disconnect", true, [this](const httplib::Request& req, const Json&) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (c.session) seal_session(c, {}, hostkit::ExportFormat::Csv);
      c.transfer.reset();
      c.link.close();
      return hub_.publish(ApiKind::Dashboard, dashboard_body(mac, c, false));
    });

    device_route("GET", "/api/devices/:mac/dashboard", false, [this](const httplib::Request& req, const Json&) {
      const auto mac = mac_of(req);
      return hub_.make(ApiKind::Dashboard, dashboard_body(mac, conn(mac), true));
    });

    device_route("POST", "/api/devices/:mac/calibrate", true, [this](const httplib::Request& req, const Json&) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (c.session) throw busy("stop the session before calibrating");
      hostkit::CalibrationReport rep;
      try {
        hostkit::calibrate(c.link, &rep);
      } catch (const Error& e) {
        if (e.code() != Errc::NotConverged) throw;
      }
      c.calibration = rep;
      Json body = hostkit::to_json(rep);
      body["mac"] = mac.to_string();
      return hub_.publish(ApiKind::CalibReport, body);
    });

    device_route("POST", "/api/devices/:mac/session/start", true, [this](const httplib::Request& req, const Json& b) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (c.session) throw busy("a session is already active on " + mac.to_string());
      if (c.transfer) throw busy("a file transfer is in progress");
      hostkit::SessionOptions so;
      so.calibration = c.calibration;
      so.duration_ms = b.value("duration_ms", std::uint32_t{0});
      const auto cfg = b.contains("config") ? hostkit::config_from_json(b.at("config")) : proto::SensorConfig{};
      auto s = hostkit::start_session(c.link, cfg, so);
      const auto sid = s->id();
      s->on_render([this, mac, sid](const hostkit::RenderFrame& f) {
        Json j = hostkit::to_json(f);
        j["mac"] = mac.to_string();
        j["session_id"] = sid;
        hub_.publish(ApiKind::RenderFrame, j);
      });
      s->on_hr([this, mac, sid](const hostkit::HrUpdate& u) {
        Json j = hostkit::to_json(u);
        j["mac"] = mac.to_string();
        j["session_id"] = sid;
        hub_.publish(ApiKind::HrUpdate, j);
      });
      c.session = s;
      c.last_session.reset();
      return hub_.publish(ApiKind::Dashboard, dashboard_body(mac, c, false));
    });

    device_route("POST", "/api/devices/:mac/session/stop", true, [this](const httplib::Request& req, const Json& b) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (!c.session) throw no_session("no active session on " + mac.to_string());
      const auto fmt = hostkit::parse_export_format(b.value("format", "csv"));
      const Json exported = seal_session(c, b.value("export_dir", ""), fmt);
      Json body = dashboard_body(mac, c, false);
      body["export"] = exported;
      return hub_.publish(ApiKind::Dashboard, body);
    });

    device_route("POST", "/api/devices/:mac/annotate", true, [this](const httplib::Request& req, const Json& b) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (!c.session) throw no_session("no active session on " + mac.to_string());
      const auto a = c.session->annotate(b.at("tag").get<std::string>());
      Json body = hostkit::to_json(a);
      body["mac"] = mac.to_string();
      body["session_id"] = c.session->id();
      body["index"] = c.session->snapshot().annotations.size() - 1;
      return hub_.publish(ApiKind::AnnotationAck, body);
    });

    device_route("POST", "/api/devices/:mac/offline", true, [this](const httplib::Request& req, const Json& b) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (c.session) throw busy("stop the session before scheduling an offline run");
      const auto total = std::chrono::seconds(b.at("total_s").get<std::int64_t>());
      const auto segment = std::chrono::seconds(b.at("segment_s").get<std::int64_t>());
      const auto delay = std::chrono::seconds(b.value("start_delay_s", std::int64_t{0}));
      c.plan = hostkit::configure_offline(c.link, total, segment, delay);
      c.offline_state = delay.count() > 0 ? "armed" : "logging";
      c.segments_written.reset();
      if (c.event_token >= 0) c.link.unsubscribe(c.event_token);
      c.event_token = c.link.subscribe([this, mac](const transport::Notification& n) {
        const auto* e = std::get_if<proto::DeviceEvent>(&n.what);
        if (!e) return;
        auto it = conns_.find(mac);
        if (it == conns_.end()) return;
        auto& cc = it->second;
        switch (e->code) {
          case proto::EventCode::LoggingComplete: cc.offline_state = "complete"; cc.segments_written = e->value; break;
          case proto::EventCode::FlashFull: cc.offline_state = "flash_full"; break;
          case proto::EventCode::BatteryEmpty: cc.offline_state = "battery_empty"; break;
          default: return;
        }
        hub_.publish(ApiKind::OfflineStatus, offline_body(mac, cc));
      });
      return hub_.publish(ApiKind::OfflineStatus, offline_body(mac, c));
    });

    device_route("GET", "/api/devices/:mac/offline", false, [this](const httplib::Request& req, const Json&) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      refresh_offline(c);
      return hub_.make(ApiKind::OfflineStatus, offline_body(mac, c));
    });

    device_route("GET", "/api/devices/:mac/files", false, [this](const httplib::Request& req, const Json&) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      Json files = Json::array();
      for (const auto& e : hostkit::list_files(c.link)) {
        Json j = hostkit::to_json(e);
        if (auto p = c.partial.find(e.file_id); p != c.partial.end()) j["partial_bytes"] = p->second.size();
        files.push_back(j);
      }
      return hub_.publish(ApiKind::FileList, {{"mac", mac.to_string()}, {"files", files}});
    });

    device_route("POST", "/api/devices/:mac/files/:id/fetch", true, [this](const httplib::Request& req, const Json& b) {
      const auto mac = mac_of(req);
      auto& c = conn(mac);
      if (c.transfer) throw busy("a file transfer is already in progress");
      if (c.session) throw busy("stop the session before fetching");
      const auto id = static_cast<std::uint16_t>(std::stoul(req.path_params.at("id")));
      proto::Bytes prefix;
      if (b.value("resume", false))
        if (auto p = c.partial.find(id); p != c.partial.end()) prefix = p->second;
      Transfer t;
      t.fetch = std::make_unique<hostkit::FileFetch>(c.link, id, std::move(prefix));
      t.export_dir = b.value("export_dir", "");
      t.format = hostkit::parse_export_format(b.value("format", "csv"));
      const auto p = t.fetch->progress();
      c.transfer = std::move(t);
      return hub_.publish(ApiKind::FetchProgress, progress_body(mac, {p.file_id, p.bytes, p.total, env_->now()}, "started"));
    });
  }

  std::unique_ptr<transport::Environment> env_;
  GatewayOptions opts_;
  Hub hub_;
  httplib::Server svr_;
  std::map<MacAddress, Conn> conns_;  // simulation thread only

  std::mutex jobs_mu_;
  std::condition_variable jobs_cv_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::atomic<std::thread::id> sim_id_{};
  std::thread sim_thread_;
  std::thread http_thread_;
  bool started_ = false;
  std::atomic<bool> stopped_{false};
  int port_ = -1;
};

}  // namespace ringkit::gateway
