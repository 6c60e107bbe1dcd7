#pragma once

// Stateless JSON API for the editor.
//
//   POST /api/validate               {model document}
//        200 {"valid": bool, "diagnostics": [...]}
//   POST /api/generate?target=epl|drl {model document}
//        200 {"target", "text"}; 422 {"diagnostics"} or {"error"}
//   POST /api/simulate               {"model": {model document}, "events": [records]}
//        200 {"outputs": [records]}; 422 {"diagnostics"} or {"error"}
//   GET  /healthz                    200 {"status": "ok"}
//
// Malformed bodies get 400 {"error": {"code", "message", "path"?, "line"?,
// "column"?}}. Every response is JSON and carries permissive CORS headers.

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "cepdsl/validator.hpp"

namespace cepdsl {

nlohmann::ordered_json diagnostic_to_json(const Diagnostic& d);

struct ApiResponse {
    int status = 200;
    std::string body;
};

/// Routes one request. `target` is the value of the target query parameter
/// (empty when absent). Never throws for user input.
ApiResponse handle_api(const std::string& method, const std::string& path, const std::string& target,
                       const std::string& body);

/// Serves handle_api over HTTP on a background thread.
class HttpService {
public:
    HttpService();
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds and starts listening; port 0 picks a free port. Returns the
    /// bound port. Throws std::runtime_error when binding fails.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called from elsewhere.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cepdsl
