#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "noisenet/ingest/server.hpp"

namespace noisenet::ingest {

/// REST front end for an IngestServer:
///   POST /ingest/spl?sensor_id=..&ts_ms=..   body: minute tar
///   POST /ingest/audio                       body: snippet container (.tar.gz)
///   POST /ingest/status                      body: telemetry JSON
/// Response: {"status":"ok"|"error","item_id":...} with 200, 400 (malformed)
/// or 503 (server down).
class HttpBinding {
 public:
  using Clock = std::function<Timestamp()>;

  HttpBinding(IngestServer& server, Clock clock);
  ~HttpBinding();
  HttpBinding(const HttpBinding&) = delete;
  HttpBinding& operator=(const HttpBinding&) = delete;

  /// Starts serving on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();
  /// IngestServer::flush, serialized with request handling.
  std::size_t flush(Timestamp now);
  /// Runs fn with request handling held off, for other work on the server's store.
  void exclusive(const std::function<void()>& fn);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parses a request body into an UploadRequest. Throws FormatError.
UploadRequest parse_upload(ItemKind kind, const std::string& body, const std::string& sensor_id_param,
                           const std::string& ts_ms_param);

}  // namespace noisenet::ingest
