#pragma once

// HTTP front end for an Engine.
//
//   POST /classify  body: JSON {"dim": n, "components": [...]} when the
//                   content type is application/json, otherwise a binary
//                   PGM/PPM image that is toy-embedded server-side.
//                   200 -> ClassifyResponse JSON
//                   400 -> {"error": "validation", "reason": ...}
//                   503 -> {"error": "not_determinable", "reason": ...}
//                   500 -> {"error": "internal", "reason": ...}
//   GET  /health    store generations and ledger chain status.

#include <string>
#include <vector>

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#endif
#include <httplib.h>
#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "pipeline.hpp"

namespace provenance {

inline EmbeddingVector parse_vector_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("body is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array())
    throw ValidationError("body must be an object with a 'components' array");
  std::vector<float> comps;
  for (const auto& c : j["components"]) {
    if (!c.is_number()) throw ValidationError("components must be numbers");
    comps.push_back(c.get<float>());
  }
  if (j.contains("dim")) {
    if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() != comps.size())
      throw ValidationError("'dim' does not match the number of components");
  }
  return EmbeddingVector(std::move(comps));
}

inline nlohmann::json vector_body(const EmbeddingVector& v) {
  return {{"dim", v.dim()}, {"components", std::vector<float>(v.components().begin(), v.components().end())}};
}

class Service {
public:
  explicit Service(Engine& engine) : engine_(engine) {
    server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) { handle_classify(req, res); });
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      try {
        res.set_content(engine_.health().dump(), "application/json");
      } catch (const std::exception& e) {
        reply_error(res, 500, "internal", e.what());
      }
    });
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port
  /// or -1 on failure.
  int bind(const std::string& host, int port) {
    if (port == 0) return port_ = server_.bind_to_any_port(host);
    return port_ = server_.bind_to_port(host, port) ? port : -1;
  }

  int port() const noexcept { return port_; }

  // Blocks until stop().
  bool serve() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }

  void wait_until_ready() const { server_.wait_until_ready(); }

private:
  static void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& reason) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", kind}, {"reason", reason}}.dump(), "application/json");
  }

  void handle_classify(const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string type = req.get_header_value("Content-Type");
      ClassifyResponse out = type.find("json") != std::string::npos
                                 ? engine_.classify(parse_vector_body(req.body))
                                 : engine_.classify_image(decode_pnm(req.body));
      res.set_content(to_json(out).dump(), "application/json");
    } catch (const ValidationError& e) {
      reply_error(res, 400, "validation", e.what());
    } catch (const NotDeterminable& e) {
      reply_error(res, 503, "not_determinable", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  }

  Engine& engine_;
  httplib::Server server_;
  int port_ = -1;
};

} // namespace provenance
