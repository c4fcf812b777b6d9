#include "smartnie/service.hpp"

#include <atomic>
#include <cmath>
#include <optional>

#include <httplib.h>

#include "smartnie/error.hpp"
#include "smartnie/json_io.hpp"
#include "smartnie/planning.hpp"
#include "smartnie/simulation.hpp"
#include "smartnie/trial_csv.hpp"

#ifndef SMARTNIE_VERSION
#define SMARTNIE_VERSION "0.0.0"
#endif

namespace smartnie {

std::string service_version() { return SMARTNIE_VERSION; }

namespace {

    int status_for(ErrorCode code)
    {
        return code == ErrorCode::positivity_violation ? 422 : 400;
    }

    HttpResponse error_response(int status, std::string_view code, const std::string& message)
    {
        Json body { { "error", Json { { "code", code }, { "message", message } } }, { "version", service_version() } };
        return { status, body.dump() };
    }

    HttpResponse ok(Json body, Json inputs)
    {
        body["inputs"] = std::move(inputs);
        body["version"] = service_version();
        return { 200, body.dump() };
    }

    // Parses the body and maps every failure onto a structured error.
    template <typename Fn>
    HttpResponse guarded(const std::string& body, Fn&& fn)
    {
        Json doc = Json::parse(body.empty() ? std::string("{}") : body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            return error_response(400, "parse_error", "request body must be a JSON object");
        }
        try {
            return fn(doc);
        } catch (const Error& e) {
            return error_response(status_for(e.code()), to_string(e.code()), e.what());
        } catch (const nlohmann::json::exception& e) {
            return error_response(400, "parse_error", std::string("malformed request: ") + e.what());
        }
    }

    std::uint64_t get_seed(const Json& doc, std::uint64_t fallback)
    {
        if (!doc.contains("seed") || doc.at("seed").is_null()) {
            return fallback;
        }
        const Json& v = doc.at("seed");
        if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
            return v.get<std::uint64_t>();
        }
        fail(ErrorCode::invalid_argument, "seed must be a non-negative integer");
    }

    Json plan_inputs_json(const PlanInput& in)
    {
        return Json { { "mode", to_string(in.mode) }, { "path", to_string(in.path) }, { "eta_theta", number(in.eta_theta) },
            { "eta_delta", number(in.eta_delta) }, { "alpha", number(in.alpha) }, { "beta", number(in.beta) } };
    }

    std::vector<TrialRecord> request_records(const Json& doc)
    {
        if (doc.contains("csv")) {
            return parse_trial_csv(doc.at("csv").get<std::string>());
        }
        if (!doc.contains("records") || !doc.at("records").is_array()) {
            fail(ErrorCode::parse_error, "analysis needs a records array or a csv string");
        }
        std::vector<TrialRecord> out;
        std::size_t i = 0;
        for (const auto& r : doc.at("records")) {
            ++i;
            try {
                out.push_back(record_from_json(r));
            } catch (const Error& e) {
                fail(ErrorCode::parse_error, "record " + std::to_string(i) + ": " + e.what());
            }
        }
        return out;
    }

} // namespace

HttpResponse handle_plan(const std::string& body, const ServiceConfig&)
{
    return guarded(body, [](const Json& doc) {
        PlanInput in = plan_input_from_json(doc);
        PlanResult r = plan(in);
        Json out = to_json(r);
        out["eta_theta"] = number(in.eta_theta);
        out["eta_delta"] = number(in.eta_delta);
        out["eta"] = number(in.eta());
        Json inputs = plan_inputs_json(in);
        if (auto d = get_optional(doc, "dropout")) {
            out["n_inflated"] = attrition_inflate(r.n, *d);
            inputs["dropout"] = number(*d);
        }
        return ok(out, inputs);
    });
}

HttpResponse handle_power(const std::string& body, const ServiceConfig&)
{
    return guarded(body, [](const Json& doc) {
        Json probe = doc;
        if (!probe.contains("eta") && !probe.contains("eta_theta") && !probe.contains("design")) {
            probe["eta_theta"] = 1.0; // grids carry their own effects
        }
        PlanInput in = plan_input_from_json(probe);
        if (doc.contains("ns") || doc.contains("points")) {
            auto ns = doc.at("ns").get<std::vector<std::size_t>>();
            std::vector<CurvePoint> grid;
            for (const auto& p : doc.at("points")) {
                grid.push_back({ read_number(p.at("eta_theta")), get_number(p, "eta_delta", 0.0) });
            }
            auto rows = power_curve(in.mode, in.path, ns, grid, in.alpha);
            Json out = Json::array();
            for (const auto& row : rows) {
                out.push_back(Json { { "n", row.n }, { "eta", number(row.eta) }, { "eta_theta", number(row.eta_theta) },
                    { "eta_delta", number(row.eta_delta) }, { "analytic_power", number(row.analytic_power) } });
            }
            Json inputs { { "mode", to_string(in.mode) }, { "path", to_string(in.path) }, { "alpha", number(in.alpha) },
                { "ns", ns }, { "points", doc.at("points") } };
            return ok(Json { { "rows", out } }, inputs);
        }
        const std::size_t n = get_count(doc, "n", 0);
        const double power = in.mode == TestMode::ni ? ni_power(n, in.eta(), in.alpha)
                                                     : eq_power(n, in.eta_theta, in.eta_delta, in.alpha);
        Json inputs = plan_inputs_json(in);
        inputs.erase("beta");
        inputs["n"] = n;
        return ok(Json { { "power", number(power) } }, inputs);
    });
}

HttpResponse handle_analyze(const std::string& body, const ServiceConfig&)
{
    return guarded(body, [](const Json& doc) {
        auto records = request_records(doc);
        const TestMode mode = parse_mode(get_string(doc, "mode", "ni"));
        AiPair pair(parse_ai(get_string(doc, "control", "d3")), parse_ai(get_string(doc, "new", "d1")));
        if (!doc.contains("theta")) {
            fail(ErrorCode::invalid_argument, "analysis needs theta");
        }
        const double theta = read_number(doc.at("theta"));
        const double alpha = get_number(doc, "alpha", 0.05);
        AnalysisOptions opts;
        opts.probs = { get_number(doc, "pi_a", 0.5), get_number(doc, "pi_a_v", 0.5), get_number(doc, "pi_ac_v", 0.5) };
        opts.empirical_probs = doc.value("empirical_probs", false);
        TestReport report = mode == TestMode::ni ? ni_test(records, pair, theta, alpha, opts)
                                                 : equivalence_test(records, pair, theta, alpha, opts);
        Json inputs { { "mode", to_string(mode) }, { "control", to_string(pair.control()) },
            { "new", to_string(pair.candidate()) }, { "theta", number(theta) }, { "alpha", number(alpha) },
            { "randomization", to_json(opts.probs) }, { "empirical_probs", opts.empirical_probs },
            { "records", records.size() } };
        return ok(Json { { "report", to_json(report) } }, inputs);
    });
}

HttpResponse handle_simulate(const std::string& body, const ServiceConfig& config)
{
    return guarded(body, [&](const Json& doc) {
        const Preset& preset = find_preset(get_string(doc, "preset", ""));
        const std::size_t row = get_count(doc, "row", 1);
        const std::size_t reps = get_count(doc, "reps", 1000);
        if (reps > config.reps_cap) {
            fail(ErrorCode::invalid_argument,
                "reps " + std::to_string(reps) + " exceeds the cap of " + std::to_string(config.reps_cap));
        }
        const std::uint64_t seed = get_seed(doc, 42);
        std::optional<std::size_t> n;
        if (doc.contains("n") && !doc.at("n").is_null()) {
            n = get_count(doc, "n", 0);
        }
        const bool robust = doc.value("robust", false);
        McEstimate est = simulate_preset(preset, row, n, reps, seed, robust, config.threads);
        const PresetRow& r = preset_row(preset, row);
        Json out = to_json(est);
        out["kind"] = preset.kind == PresetKind::type1 ? "type1_rate" : (robust ? "power_robust" : "power");
        out["published"] = number(robust ? r.published_robust.value_or(NAN) : r.published_power.value_or(NAN));
        if (!(robust ? r.published_robust : r.published_power) || n.value_or(r.n) != r.n) {
            out["published"] = nullptr;
        }
        Json inputs { { "preset", preset.name }, { "row", row }, { "reps", reps }, { "seed", seed },
            { "n", est.n }, { "robust", robust } };
        return ok(out, inputs);
    });
}

HttpResponse handle_presets(const ServiceConfig&)
{
    Json list = Json::array();
    for (const auto& p : presets()) {
        list.push_back(to_json(p));
    }
    return ok(Json { { "presets", list } }, Json::object());
}

struct HttpService::Impl {
    ServiceConfig config;
    httplib::Server server;
};

HttpService::HttpService(ServiceConfig config)
    : impl_(std::make_unique<Impl>())
{
    impl_->config = std::move(config);
    auto& srv = impl_->server;
    const ServiceConfig& cfg = impl_->config;

    srv.set_post_routing_handler([&cfg](const httplib::Request&, httplib::Response& res) {
        if (!cfg.cors_origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", cfg.cors_origin);
            res.set_header("Vary", "Origin");
        }
    });
    srv.Options(R"(/api/.*)", [&cfg](const httplib::Request&, httplib::Response& res) {
        if (!cfg.cors_origin.empty()) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
        res.status = 204;
    });

    auto post = [&srv, &cfg](const char* path, HttpResponse (*fn)(const std::string&, const ServiceConfig&)) {
        srv.Post(path, [fn, &cfg](const httplib::Request& req, httplib::Response& res) {
            HttpResponse r = fn(req.body, cfg);
            res.status = r.status;
            res.set_content(r.body, "application/json");
        });
    };
    post("/api/plan", handle_plan);
    post("/api/power", handle_power);
    post("/api/analyze", handle_analyze);
    post("/api/simulate", handle_simulate);
    srv.Get("/api/presets", [&cfg](const httplib::Request&, httplib::Response& res) {
        HttpResponse r = handle_presets(cfg);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
    if (!cfg.static_dir.empty()) {
        srv.set_mount_point("/", cfg.static_dir);
    }
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port)
{
    if (port == 0) {
        return impl_->server.bind_to_any_port(host);
    }
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::listen() { return impl_->server.listen_after_bind(); }

void HttpService::stop()
{
    if (impl_) {
        impl_->server.stop();
    }
}

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace smartnie
