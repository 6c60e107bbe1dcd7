#include "cepdsl/interface/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cepdsl/codegen.hpp"
#include "cepdsl/engine.hpp"
#include "cepdsl/errors.hpp"
#include "cepdsl/interface/http_api.hpp"
#include "cepdsl/interface/model_json.hpp"
#include "cepdsl/interface/stream_json.hpp"

namespace cepdsl {

namespace {

struct Failed {
    int code;
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    [[noreturn]] void fail(int code, const std::string& kind, const std::string& message) {
        err_ << kind << ": " << message << "\n";
        throw Failed{code};
    }

    std::string read_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail(kExitInput, "io", "cannot read '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write_file(const std::string& path, const std::string& text) {
        std::ofstream o(path, std::ios::binary);
        if (!(o << text)) fail(kExitInput, "io", "cannot write '" + path + "'");
    }

    RuleModel load_model(const std::string& path) {
        auto text = read_file(path);
        try {
            return parse_model(text).rule;
        } catch (const ModelParseError& e) {
            const auto& p = e.errors().front();
            std::string where = path + (p.line ? ":" + std::to_string(p.line) + ":" + std::to_string(p.column) : "");
            fail(kExitInput, "parse", where + ": " + (p.path.empty() ? "" : p.path + ": ") + p.message);
        }
    }

    void report(const std::vector<Diagnostic>& diags, std::ostream& to) {
        for (const auto& d : diags) to << format_diagnostic(d) << "\n";
    }

    int validate_cmd(const std::string& model_path) {
        auto diags = validate(load_model(model_path));
        report(diags, out_);
        if (!diags.empty()) return kExitDiagnostics;
        out_ << "ok\n";
        return kExitOk;
    }

    int gen_cmd(const std::string& target, const std::string& model_path, const std::string& out_path) {
        auto model = load_model(model_path);
        GeneratedSource src;
        try {
            src = generate(model, target == "drl" ? CodegenTarget::Drl : CodegenTarget::Epl);
        } catch (const InvalidModel& e) {
            report(e.diagnostics(), err_);
            return kExitDiagnostics;
        } catch (const UnsupportedConstruct& e) {
            fail(kExitUnsupported, "unsupported", e.path() + ": " + e.detail());
        }
        std::string text = src.text;
        if (text.empty() || text.back() != '\n') text += '\n';
        if (out_path.empty()) out_ << text;
        else write_file(out_path, text);
        return kExitOk;
    }

    int run_cmd(const std::string& model_path, const std::string& events_path, const std::string& out_path) {
        auto model = load_model(model_path);
        auto stream_text = read_file(events_path);
        std::optional<Session> session;
        try {
            session.emplace(model);
        } catch (const InvalidModel& e) {
            report(e.diagnostics(), err_);
            return kExitDiagnostics;
        } catch (const UnsupportedConstruct& e) {
            fail(kExitUnsupported, "unsupported", e.path() + ": " + e.detail());
        }
        std::vector<TimedEvent> events;
        try {
            events = parse_stream(stream_text);
        } catch (const StreamParseError& e) {
            fail(kExitStream, "stream", events_path + ": " + e.what());
        }
        std::vector<OutputRow> rows;
        for (std::size_t i = 0; i < events.size(); ++i) {
            try {
                auto got = session->push(events[i]);
                rows.insert(rows.end(), got.begin(), got.end());
            } catch (const StreamError& e) {
                fail(kExitStream, "stream", "event " + std::to_string(i + 1) + ": " + e.what());
            }
        }
        auto text = serialize_outputs(rows);
        if (out_path.empty()) out_ << text;
        else write_file(out_path, text);
        return kExitOk;
    }

    int serve_cmd(const std::string& host, int port) {
        HttpService service;
        int bound = 0;
        try {
            bound = service.start(host, port);
        } catch (const std::exception& e) {
            fail(kExitInput, "io", e.what());
        }
        out_ << "listening on " << host << ":" << bound << "\n";
        out_.flush();
        service.wait();
        return kExitOk;
    }

private:
    std::ostream& out_;
    std::ostream& err_;
};

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"CEP rule models: validate, generate EPL/DRL, execute"};
    app.name("cepdsl");
    app.require_subcommand(1);

    std::string model_path, target = "epl", out_path, events_path, host = "127.0.0.1";
    int port = 8080;

    auto* validate_cmd = app.add_subcommand("validate", "Check a model and print its diagnostics");
    validate_cmd->add_option("model", model_path, "Model file (.ceprule.json)")->required();

    auto* gen_cmd = app.add_subcommand("gen", "Generate EPL or DRL source");
    gen_cmd->add_option("--target", target, "epl or drl")->check(CLI::IsMember({"epl", "drl"}));
    gen_cmd->add_option("model", model_path, "Model file (.ceprule.json)")->required();
    gen_cmd->add_option("-o,--out", out_path, "Write the source here instead of standard output");

    auto* run_cmd = app.add_subcommand("run", "Execute a model over a newline-delimited event stream");
    run_cmd->add_option("model", model_path, "Model file (.ceprule.json)")->required();
    run_cmd->add_option("--events", events_path, "Stream file, one JSON record per line")->required();
    run_cmd->add_option("--out", out_path, "Write output records here instead of standard output");

    auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP API");
    serve_cmd->add_option("--host", host, "Address to bind");
    serve_cmd->add_option("--port", port, "Port to listen on (0 picks one)")->required()->check(CLI::Range(0, 65535));

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << "usage: " << e.what() << "\n";
        return kExitInput;
    }

    Runner runner(out, err);
    try {
        if (*validate_cmd) return runner.validate_cmd(model_path);
        if (*gen_cmd) return runner.gen_cmd(target, model_path, out_path);
        if (*run_cmd) return runner.run_cmd(model_path, events_path, out_path);
        return runner.serve_cmd(host, port);
    } catch (const Failed& f) {
        return f.code;
    }
}

}  // namespace cepdsl
