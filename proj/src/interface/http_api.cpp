#include "cepdsl/interface/http_api.hpp"

#include <thread>

#include <httplib.h>

#include "cepdsl/codegen.hpp"
#include "cepdsl/engine.hpp"
#include "cepdsl/errors.hpp"
#include "cepdsl/interface/model_json.hpp"
#include "cepdsl/interface/stream_json.hpp"
#include "json_locations.hpp"

namespace cepdsl {

using Json = nlohmann::ordered_json;

Json diagnostic_to_json(const Diagnostic& d) {
    Json j = Json::object();
    j["code"] = d.code;
    j["severity"] = to_string(d.severity);
    j["path"] = d.path;
    j["message"] = d.message;
    return j;
}

namespace {

ApiResponse reply(int status, const Json& body) { return {status, body.dump()}; }

Json error_body(const std::string& code, const std::string& message, const std::string& path = {}) {
    Json e = Json::object();
    e["code"] = code;
    e["message"] = message;
    if (!path.empty()) e["path"] = path;
    Json j = Json::object();
    j["error"] = std::move(e);
    return j;
}

Json parse_error_body(const ParseError& p) {
    Json j = error_body("parse", p.message, p.path);
    if (p.line) {
        j["error"]["line"] = p.line;
        j["error"]["column"] = p.column;
    }
    return j;
}

Json diagnostics_body(const std::vector<Diagnostic>& diags) {
    Json j = Json::object();
    j["diagnostics"] = Json::array();
    for (const auto& d : diags) j["diagnostics"].push_back(diagnostic_to_json(d));
    return j;
}

// Request body failure, answered with 400.
struct BadRequest {
    Json body;
};

Json parse_body(const std::string& body) {
    try {
        return Json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        auto pos = detail::position_at(body, e.byte == 0 ? 0 : e.byte - 1);
        ParseError p{pos.line, pos.column, "", "malformed JSON body"};
        throw BadRequest{parse_error_body(p)};
    }
}

ModelDocument read_model(const std::string& body) {
    try {
        return parse_model(body);
    } catch (const ModelParseError& e) {
        throw BadRequest{parse_error_body(e.errors().front())};
    }
}

ApiResponse validate_endpoint(const std::string& body) {
    auto doc = read_model(body);
    auto diags = validate(doc.rule);
    Json j = Json::object();
    j["valid"] = diags.empty();
    j["diagnostics"] = diagnostics_body(diags)["diagnostics"];
    return reply(200, j);
}

ApiResponse generate_endpoint(const std::string& target, const std::string& body) {
    CodegenTarget t;
    if (target == "epl") t = CodegenTarget::Epl;
    else if (target == "drl") t = CodegenTarget::Drl;
    else throw BadRequest{error_body("bad_target", "target must be epl or drl", "target")};
    auto doc = read_model(body);
    try {
        auto src = generate(doc.rule, t);
        Json j = Json::object();
        j["target"] = to_string(t);
        j["text"] = src.text;
        return reply(200, j);
    } catch (const InvalidModel& e) {
        return reply(422, diagnostics_body(e.diagnostics()));
    } catch (const UnsupportedConstruct& e) {
        return reply(422, error_body("unsupported", e.detail(), e.path()));
    }
}

ApiResponse simulate_endpoint(const std::string& body) {
    Json request = parse_body(body);
    if (!request.is_object()) throw BadRequest{error_body("parse", "expected an object")};
    for (const auto& [key, value] : request.items())
        if (key != "model" && key != "events")
            throw BadRequest{error_body("parse", "unknown key '" + key + "'", key)};
    if (!request.contains("model")) throw BadRequest{error_body("parse", "missing key 'model'")};
    ModelDocument doc;
    try {
        doc = model_from_json(request.at("model"), "model.");
    } catch (const ModelParseError& e) {
        throw BadRequest{parse_error_body(e.errors().front())};
    }
    std::vector<TimedEvent> events;
    if (request.contains("events")) {
        const auto& arr = request.at("events");
        if (!arr.is_array()) throw BadRequest{error_body("parse", "expected an array", "events")};
        for (std::size_t i = 0; i < arr.size(); ++i) {
            try {
                events.push_back(event_from_json(arr[i]));
            } catch (const std::invalid_argument& e) {
                throw BadRequest{error_body("parse", e.what(), detail::index_path("events", i))};
            }
        }
    }
    try {
        Session session(doc.rule);
        Json outputs = Json::array();
        for (std::size_t i = 0; i < events.size(); ++i) {
            try {
                for (const auto& row : session.push(events[i])) outputs.push_back(output_to_json(row));
            } catch (const StreamError& e) {
                return reply(422, error_body("stream", e.what(), detail::index_path("events", i)));
            }
        }
        Json j = Json::object();
        j["outputs"] = std::move(outputs);
        return reply(200, j);
    } catch (const InvalidModel& e) {
        return reply(422, diagnostics_body(e.diagnostics()));
    } catch (const UnsupportedConstruct& e) {
        return reply(422, error_body("unsupported", e.detail(), e.path()));
    }
}

}  // namespace

ApiResponse handle_api(const std::string& method, const std::string& path, const std::string& target,
                       const std::string& body) {
    try {
        if (path == "/healthz") {
            if (method != "GET") return reply(405, error_body("method", "use GET"));
            Json j = Json::object();
            j["status"] = "ok";
            return reply(200, j);
        }
        bool known = path == "/api/validate" || path == "/api/generate" || path == "/api/simulate";
        if (!known) return reply(404, error_body("not_found", "no such endpoint", path));
        if (method != "POST") return reply(405, error_body("method", "use POST"));
        if (path == "/api/validate") return validate_endpoint(body);
        if (path == "/api/generate") return generate_endpoint(target, body);
        return simulate_endpoint(body);
    } catch (const BadRequest& e) {
        return reply(400, e.body);
    } catch (const std::exception& e) {
        return reply(422, error_body("rejected", e.what()));
    }
}

struct HttpService::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpService::HttpService() : impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    auto handler = [](const httplib::Request& req, httplib::Response& res) {
        auto r = handle_api(req.method, req.path, req.get_param_value("target"), req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    s.Get("/healthz", handler);
    s.Get("/api/.*", handler);
    s.Post(".*", handler);
    s.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
    auto& s = impl_->server;
    int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&s] { s.listen_after_bind(); });
    s.wait_until_ready();
    return bound;
}

void HttpService::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void HttpService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cepdsl
