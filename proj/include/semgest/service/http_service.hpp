#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgest/service/pipeline.hpp"

namespace httplib {
class Server;
}

namespace semgest::service {

struct Response {
  int status = 200;
  nlohmann::json body;
};

// Error body: {"error": {"code": ..., "message": ...}}.
Response error_response(int status, const std::string& code, const std::string& message);

// Request handlers over one loaded runtime. Handlers are safe to call
// concurrently; the only mutable state is the ring of recent text features
// shown by /space.
class Service {
 public:
  explicit Service(Runtime runtime, std::size_t recent_capacity = 64);

  Response healthz() const;
  Response tokenize(const std::string& body) const;
  Response attention(const std::string& body);
  Response generate(const std::string& body);
  Response library_clip(const std::string& clip_id) const;
  Response space(const std::map<std::string, std::string>& query) const;

  // Dispatch by method and path; unknown routes give 404.
  Response handle(const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& query, const std::string& body);

  void mount(httplib::Server& server);

  const Runtime& runtime() const { return runtime_; }

 private:
  struct RecentText {
    std::string text;
    std::vector<double> feature;
  };
  void remember(const std::string& text, const std::vector<double>& feature);

  Runtime runtime_;
  std::size_t recent_capacity_;
  mutable std::mutex recent_mutex_;
  std::deque<RecentText> recent_;
};

// SEMGEST_PORT when set and valid, otherwise `fallback`.
std::uint16_t port_from_env(std::uint16_t fallback = 8080);

// Blocks until the server stops.
void serve(Service& service, const std::string& host, std::uint16_t port);

}  // namespace semgest::service
