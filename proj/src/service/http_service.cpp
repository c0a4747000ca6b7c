#include "semgest/service/http_service.hpp"

#include <charconv>
#include <cstdlib>
#include <set>

#include <httplib.h>

#include "semgest/error.hpp"
#include "semgest/nd/rng.hpp"
#include "semgest/text/tokenizer.hpp"

namespace semgest::service {

using nlohmann::json;

namespace {

json parse_object(const std::string& body, const std::set<std::string>& allowed) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw ValidationError("request body is not valid JSON");
  if (!doc.is_object()) throw ValidationError("request body must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown field '" + key + "'");
  }
  return doc;
}

std::string required_text(const json& doc) {
  if (!doc.contains("text") || !doc.at("text").is_string()) {
    throw ValidationError("field 'text' must be a string");
  }
  return doc.at("text").get<std::string>();
}

std::uint64_t unsigned_field(const json& doc, const char* key, std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_number_unsigned()) {
    throw ValidationError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return doc.at(key).get<std::uint64_t>();
}

std::uint64_t unsigned_param(const std::map<std::string, std::string>& query, const char* key,
                             std::uint64_t fallback) {
  const auto it = query.find(key);
  if (it == query.end()) return fallback;
  std::uint64_t v = 0;
  const char* end = it->second.data() + it->second.size();
  const auto [ptr, ec] = std::from_chars(it->second.data(), end, v);
  if (ec != std::errc() || ptr != end || it->second.empty()) {
    throw ValidationError(std::string("query parameter '") + key + "' must be a non-negative integer");
  }
  return v;
}

template <typename F>
Response guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigMismatchError& e) {
    return error_response(409, "config_mismatch", e.what());
  } catch (const ValidationError& e) {
    return error_response(400, "validation_error", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

std::vector<double> project(const std::vector<double>& feature, const std::vector<double>& basis,
                            std::size_t dims) {
  std::vector<double> out(dims, 0.0);
  for (std::size_t r = 0; r < feature.size(); ++r) {
    for (std::size_t c = 0; c < dims; ++c) out[c] += feature[r] * basis[r * dims + c];
  }
  return out;
}

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::map<std::string, std::string> query_map(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  for (const auto& [key, value] : req.params) out.emplace(key, value);
  return out;
}

}  // namespace

Response error_response(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

Service::Service(Runtime runtime, std::size_t recent_capacity)
    : runtime_(std::move(runtime)), recent_capacity_(recent_capacity) {}

void Service::remember(const std::string& text, const std::vector<double>& feature) {
  if (recent_capacity_ == 0) return;
  std::lock_guard lock(recent_mutex_);
  if (recent_.size() == recent_capacity_) recent_.pop_front();
  recent_.push_back({text, feature});
}

Response Service::healthz() const {
  return {200,
          {{"status", "ok"},
           {"config_hash", runtime_.config_hash},
           {"library_size", runtime_.library.size()}}};
}

Response Service::tokenize(const std::string& body) const {
  return guarded([&] {
    const std::string text = required_text(parse_object(body, {"text"}));
    const text::TokenizedText tt = text::tokenize(text);
    return Response{200,
                    {{"tokens", tt.tokens},
                     {"word_count", text::count_words(text)},
                     {"truncated", text::count_words(text) > tt.tokens.size()}}};
  });
}

Response Service::attention(const std::string& body) {
  return guarded([&] {
    const std::string text = required_text(parse_object(body, {"text"}));
    const text::TokenizedText tt = text::tokenize(text);
    const text::AttendedText a = text::attend(runtime_.checkpoint.text, runtime_.embeddings, tt);
    remember(text::join(tt.tokens), a.feature);
    double sum = 0.0;
    for (double v : a.attention) sum += v;
    return Response{200,
                    {{"tokens", tt.tokens},
                     {"raw_attention", a.raw_attention},
                     {"attention", a.attention},
                     {"attention_sum", sum}}};
  });
}

Response Service::generate(const std::string& body) {
  return guarded([&] {
    const json doc = parse_object(
        body, {"text", "attention_override", "target_duration_s", "seed", "k", "config_hash"});
    if (doc.contains("config_hash")) {
      if (!doc.at("config_hash").is_string()) {
        throw ValidationError("field 'config_hash' must be a string");
      }
      contrastive::require_config(runtime_.config_hash, doc.at("config_hash").get<std::string>(),
                                  "request");
    }
    retrieval::GenerationRequest request;
    request.text = required_text(doc);
    request.seed = unsigned_field(doc, "seed", 0);
    request.k = unsigned_field(doc, "k", runtime_.config.k_neighbors);
    if (doc.contains("target_duration_s")) {
      if (!doc.at("target_duration_s").is_number()) {
        throw ValidationError("field 'target_duration_s' must be a number");
      }
      request.target_duration_s = doc.at("target_duration_s").get<double>();
    }
    if (doc.contains("attention_override")) {
      const json& o = doc.at("attention_override");
      if (!o.is_array()) throw ValidationError("field 'attention_override' must be an array");
      for (const json& item : o) {
        if (!item.is_object() || !item.contains("index") || !item.contains("weight") ||
            !item.at("index").is_number_unsigned() || !item.at("weight").is_number() ||
            item.size() != 2) {
          throw ValidationError(
              "attention_override entries must be {\"index\": unsigned, \"weight\": number}");
        }
        request.attention_override.emplace_back(item.at("index").get<std::size_t>(),
                                                item.at("weight").get<double>());
      }
    }
    const retrieval::Generation g = retrieval::generate(request, runtime_.checkpoint,
                                                        runtime_.embeddings, runtime_.library);
    for (const retrieval::SegmentDiagnostics& s : g.segments) {
      remember(text::join(s.tokens), s.feature);
    }
    return Response{200,
                    {{"config_hash", runtime_.config_hash},
                     {"motion", motion::motion_to_json(g.motion)},
                     {"diagnostics", retrieval::diagnostics_json(g)}}};
  });
}

Response Service::library_clip(const std::string& clip_id) const {
  for (std::size_t i = 0; i < runtime_.library.size(); ++i) {
    if (runtime_.library.entries[i].clip_id == clip_id) {
      return {200, motion::motion_to_json(runtime_.library.clips[i])};
    }
  }
  return error_response(404, "not_found", "no library clip '" + clip_id + "'");
}

Response Service::space(const std::map<std::string, std::string>& query) const {
  return guarded([&] {
    for (const auto& [key, value] : query) {
      if (key != "dims" && key != "seed") throw ValidationError("unknown query parameter '" + key + "'");
    }
    const std::size_t dims = unsigned_param(query, "dims", 2);
    const std::uint64_t seed = unsigned_param(query, "seed", 0);
    const std::size_t d = runtime_.library.feature_dim();
    if (dims == 0 || dims > d) {
      throw ValidationError("dims must be between 1 and " + std::to_string(d));
    }
    // Gaussian random projection, fixed by the seed.
    nd::Rng rng(nd::derive_seed(seed, "space"));
    std::vector<double> basis(d * dims);
    for (double& v : basis) v = rng.normal() / std::sqrt(static_cast<double>(dims));

    json gestures = json::array();
    for (const retrieval::LibraryEntry& e : runtime_.library.entries) {
      gestures.push_back(
          {{"clip_id", e.clip_id}, {"cluster", e.cluster}, {"point", project(e.feature, basis, dims)}});
    }
    json texts = json::array();
    {
      std::lock_guard lock(recent_mutex_);
      for (const RecentText& r : recent_) {
        texts.push_back({{"text", r.text}, {"point", project(r.feature, basis, dims)}});
      }
    }
    return Response{200,
                    {{"dims", dims}, {"seed", seed}, {"gestures", gestures}, {"texts", texts}}};
  });
}

Response Service::handle(const std::string& method, const std::string& path,
                         const std::map<std::string, std::string>& query, const std::string& body) {
  if (method == "GET" && path == "/healthz") return healthz();
  if (method == "POST" && path == "/tokenize") return tokenize(body);
  if (method == "POST" && path == "/attention") return attention(body);
  if (method == "POST" && path == "/generate") return generate(body);
  if (method == "GET" && path == "/space") return space(query);
  const std::string prefix = "/library/";
  if (method == "GET" && path.starts_with(prefix) && path.size() > prefix.size() &&
      path.find('/', prefix.size()) == std::string::npos) {
    return library_clip(path.substr(prefix.size()));
  }
  return error_response(404, "not_found", "no route for " + method + " " + path);
}

void Service::mount(httplib::Server& server) {
  server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, healthz());
  });
  server.Post("/tokenize", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, tokenize(req.body));
  });
  server.Post("/attention", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, attention(req.body));
  });
  server.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, generate(req.body));
  });
  server.Get(R"(/library/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, library_clip(req.matches[1]));
  });
  server.Get("/space", [this](const httplib::Request& req, httplib::Response& res) {
    reply(res, space(query_map(req)));
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) {
      const std::string code = res.status == 404 ? "not_found" : "http_error";
      reply(res, error_response(res.status, code, "no route for " + req.method + " " + req.path));
    }
  });
}

std::uint16_t port_from_env(std::uint16_t fallback) {
  const char* raw = std::getenv("SEMGEST_PORT");
  if (raw == nullptr) return fallback;
  const std::string s(raw);
  unsigned v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0 || v > 65535) return fallback;
  return static_cast<std::uint16_t>(v);
}

void serve(Service& service, const std::string& host, std::uint16_t port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) {
    throw Error("could not listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace semgest::service
