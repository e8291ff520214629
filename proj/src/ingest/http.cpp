#include "noisenet/ingest/http.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/node/snippet.hpp"
#include "noisenet/node/telemetry.hpp"

namespace noisenet::ingest {

UploadRequest parse_upload(ItemKind kind, const std::string& body, const std::string& sensor_id_param,
                           const std::string& ts_ms_param) {
  UploadRequest r;
  r.kind = kind;
  r.body = std::vector<std::uint8_t>(body.begin(), body.end());
  r.size = body.size();
  switch (kind) {
    case ItemKind::Spl:
      if (sensor_id_param.empty() || ts_ms_param.empty()) throw FormatError("spl upload needs sensor_id and ts_ms");
      r.sensor_id = sensor_id_param;
      r.ts = from_unix_ms(parse_int(ts_ms_param));
      break;
    case ItemKind::Audio: {
      const auto c = node::SnippetContainer::from_bytes(*r.body);
      r.sensor_id = c.meta.sensor_id;
      r.ts = c.meta.capture_time;
      break;
    }
    case ItemKind::Status: {
      const auto t = node::TelemetryRecord::from_json(body);
      r.sensor_id = t.node_id;
      r.ts = t.ts;
      break;
    }
  }
  if (!sensor_id_param.empty() && sensor_id_param != r.sensor_id) throw FormatError("sensor_id does not match body");
  if (!ts_ms_param.empty() && from_unix_ms(parse_int(ts_ms_param)) != r.ts) {
    throw FormatError("ts_ms does not match body");
  }
  r.item_id = make_item_id(kind, r.sensor_id, r.ts);
  return r;
}

struct HttpBinding::Impl {
  IngestServer& server;
  Clock clock;
  std::mutex mutex;
  httplib::Server http;
  std::thread thread;

  Impl(IngestServer& s, Clock c) : server(s), clock(std::move(c)) {
    http.Post(R"(/ingest/(spl|audio|status))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
  }

  void handle(const httplib::Request& req, httplib::Response& res) {
    nlohmann::ordered_json reply;
    try {
      const auto kind = node::parse_kind(req.matches[1].str());
      const auto upload = parse_upload(kind, req.body, req.get_param_value("sensor_id"), req.get_param_value("ts_ms"));
      Ack ack;
      {
        std::lock_guard lock(mutex);
        ack = server.handle_upload(upload, clock());
      }
      reply["status"] = ack.ok ? "ok" : "error";
      reply["item_id"] = ack.item_id;
      if (!ack.ok) {
        reply["error"] = ack.error;
        res.status = ack.error == "server down" ? 503 : 400;
      }
    } catch (const std::exception& e) {
      reply["status"] = "error";
      reply["item_id"] = nullptr;
      reply["error"] = e.what();
      res.status = 400;
    }
    res.set_content(reply.dump(), "application/json");
  }
};

HttpBinding::HttpBinding(IngestServer& server, Clock clock) : impl_(std::make_unique<Impl>(server, std::move(clock))) {}

HttpBinding::~HttpBinding() { stop(); }

int HttpBinding::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError(fmt::format("{}:{}", host, port), "cannot bind");
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void HttpBinding::listen(const std::string& host, int port) {
  if (!impl_->http.listen(host, port)) throw IoError(fmt::format("{}:{}", host, port), "cannot listen");
}

std::size_t HttpBinding::flush(Timestamp now) {
  std::lock_guard lock(impl_->mutex);
  return impl_->server.flush(now);
}

void HttpBinding::exclusive(const std::function<void()>& fn) {
  std::lock_guard lock(impl_->mutex);
  fn();
}

void HttpBinding::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace noisenet::ingest
