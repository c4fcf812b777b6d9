#include "smartnie/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "smartnie/error.hpp"
#include "smartnie/format.hpp"
#include "smartnie/json_io.hpp"
#include "smartnie/planning.hpp"
#include "smartnie/report.hpp"
#include "smartnie/service.hpp"
#include "smartnie/simulation.hpp"
#include "smartnie/trial_csv.hpp"

namespace smartnie {

namespace {

    const std::vector<std::string> mode_names { "ni", "eq" };
    const std::vector<std::string> path_names { "distinct", "shared" };
    const std::vector<std::string> ai_names { "d1", "d2", "d3", "d4" };
    const std::vector<std::string> format_names { "text", "json" };

    struct PlanOpts {
        std::string mode = "ni";
        std::string path = "distinct";
        std::optional<double> eta;
        std::optional<double> eta_theta;
        std::optional<double> eta_delta;
        double alpha = 0.05;
        double beta = 0.20;
        std::optional<double> dropout;
        std::string design_file;
        std::string control = "d3";
        std::string candidate = "d1";
        std::optional<double> theta;
        double delta = 0.0;
        std::string preset;
        std::size_t row = 1;
        std::size_t n = 0;
        std::string format = "text";
    };

    struct AnalyzeOpts {
        std::string data;
        std::string mode = "ni";
        std::string control = "d3";
        std::string candidate = "d1";
        double theta = 0.0;
        double alpha = 0.05;
        double pi_a = 0.5;
        double pi_a_v = 0.5;
        double pi_ac_v = 0.5;
        bool empirical = false;
        std::string format = "text";
    };

    struct SimOpts {
        std::string preset;
        std::size_t row = 1;
        std::size_t reps = 1000;
        std::uint64_t seed = 42;
        std::optional<std::size_t> n;
        bool robust = false;
        unsigned threads = 0;
        std::string format = "text";
    };

    struct CurveOpts {
        std::string preset = "power_curve";
        std::optional<std::string> mode;
        std::optional<std::string> path;
        std::vector<std::size_t> ns;
        double alpha = 0.05;
        std::size_t mc_reps = 0;
        std::uint64_t seed = 42;
        unsigned threads = 0;
        std::string out;
    };

    struct ServeOpts {
        std::string host = "127.0.0.1";
        int port = 8080;
        ServiceConfig config;
    };

    unsigned resolve_threads(unsigned requested)
    {
        if (requested != 0) {
            return requested;
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }

    void kv(std::ostream& out, std::string_view key, const std::string& value) { out << key << '=' << value << '\n'; }

    std::string read_file(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            fail(ErrorCode::invalid_argument, "cannot open '" + path + "'");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    // The CLI builds the same request document the service accepts, so both
    // front ends share one validation path.
    Json plan_request(const PlanOpts& o, bool with_beta)
    {
        Json doc { { "mode", o.mode }, { "alpha", o.alpha } };
        if (with_beta) {
            doc["beta"] = o.beta;
        }
        if (!o.design_file.empty()) {
            Json design = Json::parse(read_file(o.design_file), nullptr, false);
            if (design.is_discarded()) {
                fail(ErrorCode::parse_error, "design file '" + o.design_file + "' is not valid JSON");
            }
            doc["design"] = design;
            doc["control"] = o.control;
            doc["new"] = o.candidate;
            if (o.theta) {
                doc["theta"] = *o.theta;
            }
            doc["delta"] = o.delta;
            return doc;
        }
        doc["path"] = o.path;
        if (!o.preset.empty()) {
            const Preset& preset = find_preset(o.preset);
            const PresetRow& row = preset_row(preset, o.row);
            const SimScenario sc = build_scenario(row.params);
            const auto& effect = effect_for(sc, parse_path(o.path));
            doc["eta_theta"] = effect.eta_theta;
            doc["eta_delta"] = effect.eta_delta;
            return doc;
        }
        if (o.eta) {
            doc["eta"] = *o.eta;
        }
        if (o.eta_theta) {
            doc["eta_theta"] = *o.eta_theta;
        }
        if (o.eta_delta) {
            doc["eta_delta"] = *o.eta_delta;
        }
        return doc;
    }

    void run_samplesize(const PlanOpts& o, std::ostream& out)
    {
        const PlanInput in = plan_input_from_json(plan_request(o, true));
        const PlanResult r = plan(in);
        std::optional<std::size_t> inflated;
        if (o.dropout) {
            inflated = attrition_inflate(r.n, *o.dropout);
        }
        if (o.format == "json") {
            Json doc = to_json(r);
            doc["eta_theta"] = number(in.eta_theta);
            doc["eta_delta"] = number(in.eta_delta);
            doc["eta"] = number(in.eta());
            if (inflated) {
                doc["n_inflated"] = *inflated;
            }
            out << doc.dump(2) << '\n';
            return;
        }
        kv(out, "N", std::to_string(r.n));
        if (inflated) {
            kv(out, "N_inflated", std::to_string(*inflated));
        }
        kv(out, "achieved_power", shortest(r.achieved_power));
        kv(out, "eta_theta", shortest(in.eta_theta));
        kv(out, "eta_delta", shortest(in.eta_delta));
    }

    void run_power(const PlanOpts& o, std::ostream& out)
    {
        const PlanInput in = plan_input_from_json(plan_request(o, false));
        const double p = in.mode == TestMode::ni ? ni_power(o.n, in.eta(), in.alpha)
                                                 : eq_power(o.n, in.eta_theta, in.eta_delta, in.alpha);
        if (o.format == "json") {
            out << Json { { "power", number(p) }, { "n", o.n }, { "eta_theta", number(in.eta_theta) },
                { "eta_delta", number(in.eta_delta) } }
                       .dump(2)
                << '\n';
            return;
        }
        kv(out, "power", shortest(p));
    }

    void run_analyze(const AnalyzeOpts& o, std::ostream& out)
    {
        const auto records = read_trial_csv(o.data);
        const AiPair pair(parse_ai(o.control), parse_ai(o.candidate));
        AnalysisOptions opts;
        opts.probs = { o.pi_a, o.pi_a_v, o.pi_ac_v };
        opts.empirical_probs = o.empirical;
        const TestReport report = parse_mode(o.mode) == TestMode::ni
            ? ni_test(records, pair, o.theta, o.alpha, opts)
            : equivalence_test(records, pair, o.theta, o.alpha, opts);
        out << render_report(report, parse_report_format(o.format));
    }

    void run_simulate(const SimOpts& o, std::ostream& out)
    {
        const Preset& preset = find_preset(o.preset);
        const PresetRow& row = preset_row(preset, o.row);
        const McEstimate est = simulate_preset(preset, o.row, o.n, o.reps, o.seed, o.robust, resolve_threads(o.threads));
        const std::string kind = preset.kind == PresetKind::type1 ? "type1_rate" : (o.robust ? "power_robust" : "power");
        const bool at_row_n = !o.n || *o.n == row.n;
        const double published = at_row_n ? (o.robust ? row.published_robust : row.published_power).value_or(NAN) : NAN;
        if (o.format == "json") {
            Json doc { { "preset", preset.name }, { "row", o.row }, { "label", row.label }, { "kind", kind } };
            const Json fields = to_json(est);
            for (const auto& [k, v] : fields.items()) {
                doc[k] = v;
            }
            doc["published"] = std::isnan(published) ? Json(nullptr) : number(published);
            out << doc.dump(2) << '\n';
            return;
        }
        kv(out, "preset", preset.name);
        kv(out, "row", std::to_string(o.row));
        kv(out, "label", row.label);
        kv(out, "kind", kind);
        kv(out, "n", std::to_string(est.n));
        kv(out, "realized_n", std::to_string(est.realized_n));
        kv(out, "reps", std::to_string(est.reps));
        kv(out, "seed", std::to_string(est.seed));
        kv(out, "estimate", shortest(est.estimate));
        kv(out, "se", shortest(est.se));
        if (!std::isnan(published)) {
            kv(out, "published", shortest(published));
        }
        out << kind << ": " << fixed(est.estimate, 4) << " +/- " << fixed(est.se, 4) << '\n';
    }

    std::string curves_csv(const CurveOpts& o)
    {
        const Preset& preset = find_preset(o.preset);
        if (preset.kind != PresetKind::curve) {
            fail(ErrorCode::invalid_argument, "preset '" + preset.name + "' is not a power-curve preset");
        }
        const TestMode mode = o.mode ? parse_mode(*o.mode) : preset.mode;
        const PathKind path = o.path ? parse_path(*o.path) : preset.path;
        const std::vector<std::size_t> ns = o.ns.empty() ? preset.curve_ns : o.ns;

        std::vector<SimScenario> scenarios;
        std::vector<CurvePoint> grid;
        for (const auto& row : preset.rows) {
            scenarios.push_back(build_scenario(row.params));
            const auto& effect = effect_for(scenarios.back(), path);
            grid.push_back({ effect.eta_theta, effect.eta_delta });
        }
        McHook hook;
        if (o.mc_reps > 0) {
            const unsigned threads = resolve_threads(o.threads);
            hook = [&](std::size_t n, std::size_t i) {
                const TestSpec spec { mode, Preset::default_pair(path), preset.rows[i].params.theta, o.alpha };
                const std::uint64_t point_seed = SeedSpec { o.seed, (static_cast<std::uint64_t>(n) << 20) + i }.stream_seed();
                const McEstimate est = mc_power(scenarios[i], spec, n, o.mc_reps, point_seed, { threads, false });
                return McPoint { est.estimate, est.se };
            };
        }
        const auto rows = power_curve(mode, path, ns, grid, o.alpha, hook);
        std::string csv = "n,eta,analytic_power,mc_power,se\n";
        for (const auto& r : rows) {
            csv += std::to_string(r.n) + ',' + shortest(r.eta) + ',' + shortest(r.analytic_power) + ',';
            if (r.mc_power) {
                csv += shortest(*r.mc_power) + ',' + shortest(r.se.value_or(0.0));
            } else {
                csv += ',';
            }
            csv += '\n';
        }
        return csv;
    }

    void run_curves(const CurveOpts& o, std::ostream& out)
    {
        const std::string csv = curves_csv(o);
        if (o.out.empty() || o.out == "-") {
            out << csv;
            return;
        }
        // Write next to the target and rename, so a failure never leaves a partial file.
        const std::filesystem::path target(o.out);
        std::filesystem::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) {
                fail(ErrorCode::invalid_argument, "cannot write '" + tmp.string() + "'");
            }
            f << csv;
            if (!f.flush()) {
                std::filesystem::remove(tmp);
                fail(ErrorCode::invalid_argument, "cannot write '" + tmp.string() + "'");
            }
        }
        std::filesystem::rename(tmp, target);
        out << "wrote " << (csv.empty() ? 0 : std::count(csv.begin(), csv.end(), '\n') - 1) << " rows to " << o.out << '\n';
    }

    void run_presets(const std::string& name, const std::string& format, std::ostream& out)
    {
        if (format == "json") {
            Json list = Json::array();
            for (const auto& p : presets()) {
                if (name.empty() || p.name == name) {
                    list.push_back(to_json(p));
                }
            }
            if (!name.empty() && list.empty()) {
                find_preset(name); // throws with the known names
            }
            out << list.dump(2) << '\n';
            return;
        }
        if (name.empty()) {
            for (const auto& p : presets()) {
                out << p.name << "  " << to_string(p.kind) << ' ' << to_string(p.mode) << ' ' << to_string(p.path) << "  "
                    << p.rows.size() << " rows  " << p.description << '\n';
            }
            return;
        }
        const Preset& p = find_preset(name);
        out << p.name << ": " << p.description << '\n';
        out << "row,label,n,theta,eta,published_eta,published,published_robust\n";
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            const auto& row = p.rows[i];
            const SimScenario sc = build_scenario(row.params);
            auto opt = [](const std::optional<double>& v) { return v ? shortest(*v) : std::string(); };
            out << i + 1 << ',' << row.label << ',' << row.n << ',' << shortest(row.params.theta) << ','
                << fixed(effect_for(sc, p.path).eta, 4) << ',' << opt(row.published_eta) << ','
                << opt(row.published_power) << ',' << opt(row.published_robust) << '\n';
        }
    }

    void run_serve(const ServeOpts& o, std::ostream& out)
    {
        HttpService service(o.config);
        const int port = service.bind(o.host, o.port);
        if (port < 0) {
            fail(ErrorCode::invalid_argument, "cannot bind " + o.host + ":" + std::to_string(o.port));
        }
        out << "listening on http://" << o.host << ':' << port << '\n' << std::flush;
        service.listen();
    }

    void add_plan_options(CLI::App* cmd, PlanOpts& o)
    {
        cmd->add_option("--mode", o.mode, "ni or eq")->check(CLI::IsMember(mode_names))->capture_default_str();
        cmd->add_option("--path", o.path, "distinct or shared")->check(CLI::IsMember(path_names))->capture_default_str();
        cmd->add_option("--eta", o.eta, "standardized effect eta = eta_theta - eta_delta (ni)");
        cmd->add_option("--eta-theta", o.eta_theta, "standardized margin");
        cmd->add_option("--eta-delta,--delta", o.eta_delta, "standardized true difference");
        cmd->add_option("--alpha", o.alpha, "one-sided significance level")->capture_default_str();
        cmd->add_option("--design", o.design_file, "JSON design file (cell means, sigma, response rates)");
        cmd->add_option("--control", o.control, "control AI (with --design)")->check(CLI::IsMember(ai_names));
        cmd->add_option("--new", o.candidate, "new AI (with --design)")->check(CLI::IsMember(ai_names));
        cmd->add_option("--theta", o.theta, "raw margin (with --design)");
        cmd->add_option("--true-delta", o.delta, "raw true difference (with --design)");
        cmd->add_option("--preset", o.preset, "take eta_theta and eta_delta from a preset row");
        cmd->add_option("--row", o.row, "1-based preset row")->capture_default_str();
        cmd->add_option("--format", o.format)->check(CLI::IsMember(format_names))->capture_default_str();
    }

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app { "Sample size, analysis and simulation for non-inferiority and equivalence tests of adaptive "
                   "interventions in two-stage SMARTs",
        "smartnie" };
    app.set_version_flag("--version", service_version());
    app.set_config("--config", "", "TOML config file; sections are subcommand names (flags override it)");
    app.require_subcommand(1);

    PlanOpts plan_opts;
    auto* samplesize = app.add_subcommand("samplesize", "Required N for a target power");
    add_plan_options(samplesize, plan_opts);
    samplesize->add_option("--beta", plan_opts.beta, "type-II error rate")->capture_default_str();
    samplesize->add_option("--dropout", plan_opts.dropout, "expected attrition fraction in [0, 1)");

    PlanOpts power_opts;
    auto* power = app.add_subcommand("power", "Analytic power at a given N");
    add_plan_options(power, power_opts);
    power->add_option("--n", power_opts.n, "total sample size")->required();

    AnalyzeOpts an;
    auto* analyze = app.add_subcommand("analyze", "Test a trial data file");
    analyze->add_option("--data", an.data, "CSV with header id,stage1,response,stage2,outcome")->required();
    analyze->add_option("--mode", an.mode)->check(CLI::IsMember(mode_names))->capture_default_str();
    analyze->add_option("--control", an.control)->check(CLI::IsMember(ai_names))->capture_default_str();
    analyze->add_option("--new", an.candidate)->check(CLI::IsMember(ai_names))->capture_default_str();
    analyze->add_option("--theta", an.theta, "margin on the outcome scale")->required();
    analyze->add_option("--alpha", an.alpha)->capture_default_str();
    analyze->add_option("--pi-a", an.pi_a, "P(stage 1 = a)")->capture_default_str();
    analyze->add_option("--pi-a-v", an.pi_a_v, "P(v | a, non-responder)")->capture_default_str();
    analyze->add_option("--pi-ac-v", an.pi_ac_v, "P(v | ac, non-responder)")->capture_default_str();
    analyze->add_flag("--empirical-probs", an.empirical, "weight with observed randomization fractions");
    analyze->add_option("--format", an.format)->check(CLI::IsMember(format_names))->capture_default_str();

    SimOpts sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo power or Type-I rate for a preset row");
    simulate->add_option("--preset", sim.preset)->required();
    simulate->add_option("--row", sim.row)->capture_default_str();
    simulate->add_option("--reps", sim.reps)->capture_default_str();
    simulate->add_option("--seed", sim.seed)->envname("SMARTNIE_SEED")->capture_default_str();
    simulate->add_option("--n", sim.n, "override the row's N");
    simulate->add_flag("--robust", sim.robust, "unequal per-cell variances");
    simulate->add_option("--threads", sim.threads, "0 = all cores")->capture_default_str();
    simulate->add_option("--format", sim.format)->check(CLI::IsMember(format_names))->capture_default_str();

    CurveOpts curve;
    auto* curves = app.add_subcommand("curves", "Power-versus-eta curves as CSV");
    curves->add_option("--preset", curve.preset)->capture_default_str();
    curves->add_option("--mode", curve.mode)->check(CLI::IsMember(mode_names));
    curves->add_option("--path", curve.path)->check(CLI::IsMember(path_names));
    curves->add_option("--ns", curve.ns, "sample sizes (default from the preset)")->delimiter(',');
    curves->add_option("--alpha", curve.alpha)->capture_default_str();
    curves->add_option("--mc-reps", curve.mc_reps, "Monte Carlo reps per point (0 = analytic only)")->capture_default_str();
    curves->add_option("--seed", curve.seed)->envname("SMARTNIE_SEED")->capture_default_str();
    curves->add_option("--threads", curve.threads, "0 = all cores")->capture_default_str();
    curves->add_option("--out", curve.out, "output file (default stdout)");

    std::string preset_name;
    std::string preset_format = "text";
    auto* list = app.add_subcommand("presets", "List simulation presets, or one preset's rows");
    list->add_option("name", preset_name);
    list->add_option("--format", preset_format)->check(CLI::IsMember(format_names))->capture_default_str();

    ServeOpts serve_opts;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--host", serve_opts.host)->capture_default_str();
    serve->add_option("--port", serve_opts.port, "0 picks a free port")->capture_default_str();
    serve->add_option("--cors-origin", serve_opts.config.cors_origin, "allowed origin (empty disables CORS)")
        ->capture_default_str();
    serve->add_option("--reps-cap", serve_opts.config.reps_cap)->capture_default_str();
    serve->add_option("--threads", serve_opts.config.threads, "Monte Carlo workers per request")->capture_default_str();
    serve->add_option("--static-dir", serve_opts.config.static_dir, "serve UI assets from this directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (*samplesize) {
            run_samplesize(plan_opts, out);
        } else if (*power) {
            run_power(power_opts, out);
        } else if (*analyze) {
            run_analyze(an, out);
        } else if (*simulate) {
            run_simulate(sim, out);
        } else if (*curves) {
            run_curves(curve, out);
        } else if (*list) {
            run_presets(preset_name, preset_format, out);
        } else if (*serve) {
            serve_opts.config.threads = resolve_threads(serve_opts.config.threads);
            run_serve(serve_opts, out);
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace smartnie
