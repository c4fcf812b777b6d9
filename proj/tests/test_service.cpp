#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "replay.hpp"
#include "smartnie/json_io.hpp"
#include "smartnie/planning.hpp"
#include "smartnie/service.hpp"
#include "smartnie/simulation.hpp"
#include "smartnie/trial_csv.hpp"

using namespace smartnie;

namespace {

Json body_of(const HttpResponse& r) { return Json::parse(r.body); }

std::string error_code(const HttpResponse& r) { return body_of(r)["error"]["code"].get<std::string>(); }

Json records_json(const std::vector<TrialRecord>& recs)
{
    Json arr = Json::array();
    for (const auto& r : recs) {
        arr.push_back(to_json(r));
    }
    return arr;
}

} // namespace

TEST_CASE("plan returns the table sizes")
{
    auto r = handle_plan(R"({"mode": "ni", "path": "distinct", "eta": 0.379, "alpha": 0.05, "beta": 0.20})");
    CHECK(r.status == 200);
    Json b = body_of(r);
    CHECK(b["n"] == 87);
    CHECK(b["achieved_power"].get<double>() == ni_power(87, 0.379, 0.05));
    CHECK(b["version"] == service_version());
    CHECK(b["inputs"]["eta_theta"].get<double>() == 0.379);
    CHECK(b["inputs"]["mode"] == "ni");

    b = body_of(handle_plan(R"({"mode": "eq", "eta_theta": 0.265, "eta_delta": 0})"));
    CHECK(b["n"] == 244);
    b = body_of(handle_plan(R"({"mode": "eq", "eta_theta": 0.265, "eta_delta": 0, "dropout": 0.2})"));
    CHECK(b["n_inflated"] == 305);
    b = body_of(handle_plan(R"({"mode": "eq", "eta_theta": 0.4, "eta_delta": 0.1})"));
    CHECK(b["n"] == plan({ TestMode::eq, PathKind::distinct, 0.4, 0.1, 0.05, 0.2 }).n);
}

TEST_CASE("plan errors are structured")
{
    auto r = handle_plan(R"({"mode": "ni", "eta": 0})");
    CHECK(r.status == 400);
    CHECK(error_code(r) == "eta_nonpositive");
    CHECK(body_of(r)["version"] == service_version());

    r = handle_plan("{not json");
    CHECK(r.status == 400);
    CHECK(error_code(r) == "parse_error");
    CHECK(handle_plan("[1, 2]").status == 400);
    CHECK(handle_plan(R"({"mode": "xx", "eta": 0.3})").status == 400);
    CHECK(handle_plan(R"({"eta": "abc"})").status == 400);
    CHECK(handle_plan(R"({"mode": "eq", "eta": 0.3})").status == 400);
    CHECK(handle_plan(R"({"eta": 0.3, "alpha": 2})").status == 400);
    CHECK(error_code(handle_plan(R"({"mode": "eq", "eta_theta": 0.2, "eta_delta": 0.3})")) == "eta_nonpositive");
}

TEST_CASE("plan accepts a raw design")
{
    Json req { { "mode", "ni" }, { "theta", 1.5 }, { "control", "d3" }, { "new", "d1" },
        { "design", { { "means", { { "a_a", 3 }, { "a_m", 2 }, { "a_v", 2.5 }, { "ac_ac", 3.2 }, { "ac_m", 2.1 }, { "ac_v", 2.4 } } },
                        { "sigma", 2 }, { "gamma_a", 0.3 }, { "gamma_ac", 0.4 } } } };
    auto r = handle_plan(req.dump());
    REQUIRE(r.status == 200);
    SmartDesign d = design_from_json(req["design"]);
    PlanInput in = plan_input_from_design(TestMode::ni, d, AiPair(AiId::d3, AiId::d1), 1.5, 0.0, 0.05, 0.2);
    CHECK(body_of(r)["n"] == plan(in).n);
    CHECK(body_of(r)["eta"].get<double>() == in.eta());
}

TEST_CASE("power endpoint matches the library")
{
    auto b = body_of(handle_power(R"({"mode": "ni", "eta": 0.3, "n": 120})"));
    CHECK(b["power"].get<double>() == ni_power(120, 0.3, 0.05));
    b = body_of(handle_power(R"({"mode": "eq", "eta_theta": 0.3, "eta_delta": -0.05, "n": 300})"));
    CHECK(b["power"].get<double>() == eq_power(300, 0.3, -0.05, 0.05));

    b = body_of(handle_power(R"({"mode": "ni", "ns": [100, 200], "points": [{"eta_theta": 0.2}, {"eta_theta": 0.4, "eta_delta": 0.1}]})"));
    REQUIRE(b["rows"].size() == 4);
    CHECK(b["rows"][3]["n"] == 200);
    CHECK(b["rows"][3]["analytic_power"].get<double>() == ni_power(200, 0.3, 0.05));
    CHECK(handle_power(R"({"mode": "ni", "eta": 0.3, "n": 0})").status == 400);
}

TEST_CASE("analyze replays the worked examples")
{
    for (const auto& s : replay::specs()) {
        Json req { { "records", records_json(replay::dataset(s.id)) }, { "mode", s.equivalence ? "eq" : "ni" },
            { "control", std::string(to_string(s.pair.control())) }, { "new", std::string(to_string(s.pair.candidate())) },
            { "theta", s.theta } };
        auto r = handle_analyze(req.dump());
        REQUIRE(r.status == 200);
        Json b = body_of(r);
        const TestReport rep = report_from_json(b["report"]);
        CHECK(rep.p_ni == doctest::Approx(s.p_ni).epsilon(1e-9));
        CHECK(*rep.bf_bound_ni == doctest::Approx(s.bf_ni).epsilon(0.01 / s.bf_ni));
        CHECK(rep.decision == Decision::reject_null);
        CHECK(b["inputs"]["records"] == s.n);
        if (s.equivalence) {
            CHECK(*rep.p_ns == doctest::Approx(s.p_ns).epsilon(1e-9));
        }
    }
}

TEST_CASE("analyze accepts csv text and reports positivity as 422")
{
    Json req { { "csv", write_trial_csv(replay::dataset(1)) }, { "theta", 2.5 } };
    auto r = handle_analyze(req.dump());
    REQUIRE(r.status == 200);
    CHECK(body_of(r)["report"]["p_ni"].get<double>() == doctest::Approx(0.0103).epsilon(1e-9));

    auto recs = replay::dataset(1);
    std::erase_if(recs, [](const TrialRecord& t) { return t.stage1 == Arm::ac && t.stage2 == Stage2::m; });
    r = handle_analyze(Json { { "records", records_json(recs) }, { "theta", 2.5 } }.dump());
    CHECK(r.status == 422);
    CHECK(error_code(r) == "positivity_violation");
    CHECK(body_of(r)["error"]["message"].get<std::string>().find("(ac,m)") != std::string::npos);

    r = handle_analyze(R"({"records": [{"id": "p1", "stage1": "a", "response": 1, "stage2": "v", "outcome": 1}], "theta": 1})");
    CHECK(r.status == 400);
    CHECK(handle_analyze(R"({"theta": 1})").status == 400);
    CHECK(handle_analyze(Json { { "csv", "id,stage1,response,stage2,outcome\np1,a,1,v,1\n" }, { "theta", 1 } }.dump()).status == 400);
}

TEST_CASE("analyze with a zero margin is a superiority test")
{
    Json req { { "records", records_json(replay::dataset(1)) }, { "theta", 0 } };
    auto r = handle_analyze(req.dump());
    REQUIRE(r.status == 200);
    Json rep = body_of(r)["report"];
    CHECK(rep["kind"] == "non_inferiority");
    CHECK(rep["theta"].get<double>() == 0.0);
    CHECK(rep["p_ns"].is_null());
    CHECK(handle_analyze(Json { { "records", records_json(replay::dataset(1)) }, { "theta", 0 }, { "mode", "eq" } }.dump()).status
        == 400);
}

TEST_CASE("simulate endpoint")
{
    auto r = handle_simulate(R"({"preset": "ni_distinct", "row": 1, "reps": 1000, "seed": 42})");
    REQUIRE(r.status == 200);
    Json b = body_of(r);
    CHECK(std::fabs(b["estimate"].get<double>() - 0.82) <= 0.03);
    CHECK(b["reps"] == 1000);
    CHECK(b["seed"] == 42);
    CHECK(b["se"].get<double>() > 0);
    const McEstimate lib = simulate_preset(find_preset("ni_distinct"), 1, std::nullopt, 1000, 42);
    CHECK(b["estimate"].get<double>() == lib.estimate);
    CHECK(b["se"].get<double>() == lib.se);

    r = handle_simulate(R"({"preset": "ni_distinct", "reps": 1000000000})");
    CHECK(r.status == 400);
    CHECK(error_code(r) == "invalid_argument");
    CHECK(handle_simulate(R"({"preset": "ni_distinct", "reps": 20, "seed": -1})").status == 400);
    CHECK(handle_simulate(R"({"preset": "unknown"})").status == 400);
    CHECK(handle_simulate(R"({"preset": "power_curve"})").status == 400); // curve rows need n
    CHECK(handle_simulate(R"({"preset": "power_curve", "n": 200, "reps": 50})").status == 200);

    ServiceConfig tight;
    tight.reps_cap = 10;
    CHECK(handle_simulate(R"({"preset": "ni_distinct", "reps": 11})", tight).status == 400);
    CHECK(handle_simulate(R"({"preset": "ni_distinct", "reps": 10})", tight).status == 200);
}

TEST_CASE("identical requests give identical responses")
{
    const std::string req = R"({"preset": "eq_distinct", "row": 2, "reps": 400, "seed": 11, "robust": true})";
    ServiceConfig many;
    many.threads = 4;
    const auto a = handle_simulate(req);
    CHECK(handle_simulate(req).body == a.body);
    CHECK(handle_simulate(req, many).body == a.body);
    const std::string plan_req = R"({"mode": "ni", "eta": 0.25})";
    CHECK(handle_plan(plan_req).body == handle_plan(plan_req).body);
}

TEST_CASE("presets endpoint lists the catalogue")
{
    Json b = body_of(handle_presets());
    bool found = false;
    for (const auto& p : b["presets"]) {
        found = found || p["name"] == "ni_distinct";
    }
    CHECK(found);
    CHECK(b["presets"].size() == presets().size());
}

TEST_CASE("live server routes, CORS and errors")
{
    ServiceConfig cfg;
    HttpService service(cfg);
    const int port = service.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread worker([&] { service.listen(); });
    service.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/api/plan", R"({"mode": "ni", "path": "distinct", "eta": 0.379})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(Json::parse(res->body)["n"] == 87);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == cfg.cors_origin);
    CHECK(res->get_header_value("Content-Type") == "application/json");

    res = client.Post("/api/plan", R"({"mode": "ni", "eta": 0})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(Json::parse(res->body)["error"]["code"] == "eta_nonpositive");

    res = client.Get("/api/presets");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.find("\"ni_distinct\"") != std::string::npos);

    res = client.Options("/api/plan");
    REQUIRE(res);
    CHECK(res->status == 204);
    CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    res = client.Post("/api/simulate", R"({"preset": "ni_distinct", "reps": 200, "seed": 3})", "application/json");
    REQUIRE(res);
    CHECK(res->body == handle_simulate(R"({"preset": "ni_distinct", "reps": 200, "seed": 3})").body);

    res = client.Get("/api/nothing");
    REQUIRE(res);
    CHECK(res->status == 404);

    service.stop();
    worker.join();
}
