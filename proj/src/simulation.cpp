#include "smartnie/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "smartnie/error.hpp"
#include "smartnie/format.hpp"
#include "smartnie/normal.hpp"

namespace smartnie {

void ScenarioParams::validate() const
{
    require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    require(std::isfinite(sigma_L) && sigma_L > 0.0, "sigma_L must be positive");
    require(std::isfinite(theta) && theta > 0.0, "theta must be positive");
    require(gamma_a > 0.0 && gamma_a < 1.0,
        "gamma_a must lie strictly inside (0, 1); the truncated non-responder mean is undefined otherwise");
    require(gamma_ac > 0.0 && gamma_ac < 1.0,
        "gamma_ac must lie strictly inside (0, 1); the truncated non-responder mean is undefined otherwise");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie strictly inside (0, 1)");
    require(beta > 0.0 && beta < 1.0, "beta must lie strictly inside (0, 1)");
    for (double x : { mu_La, zeta0, zeta1a, zeta1ac, xi0, xi1a, xi1ac, xi2_a_m, xi2_a_v, xi2_ac_m, xi2_ac_v }) {
        require(std::isfinite(x), "scenario coefficients must be finite");
    }
}

namespace {

    // Mean of Normal(mu, sd^2) truncated to values below cutoff.
    double truncated_below_mean(double mu, double sd, double cutoff)
    {
        const double u = (cutoff - mu) / sd;
        return mu - sd * normal_pdf(u) / normal_cdf(u);
    }

} // namespace

SimScenario build_scenario(const ScenarioParams& p)
{
    p.validate();
    SimScenario s;
    s.params = p;
    s.latent_cutoff = p.mu_La + p.sigma_L * normal_quantile(1.0 - p.gamma_a);
    s.mu_Lac = s.latent_cutoff - p.sigma_L * normal_quantile(1.0 - p.gamma_ac);
    s.mu_La_NR = truncated_below_mean(p.mu_La, p.sigma_L, s.latent_cutoff);
    s.mu_Lac_NR = truncated_below_mean(s.mu_Lac, p.sigma_L, s.latent_cutoff);

    CellMeans& m = s.design.means;
    m.a_a = p.zeta0 + p.zeta1a * p.mu_La;
    m.a_v = p.xi0 + p.xi1a * p.mu_La + p.xi2_a_v * s.mu_La_NR;
    m.a_m = p.xi0 + p.xi1a * p.mu_La + p.xi2_a_m * s.mu_La_NR;
    m.ac_ac = p.zeta0 + p.zeta1ac * s.mu_Lac;
    m.ac_v = p.xi0 + p.xi1ac * s.mu_Lac + p.xi2_ac_v * s.mu_Lac_NR;
    m.ac_m = p.xi0 + p.xi1ac * s.mu_Lac + p.xi2_ac_m * s.mu_Lac_NR;
    s.design.sigma = p.sigma;
    s.design.gamma_a = p.gamma_a;
    s.design.gamma_ac = p.gamma_ac;
    s.design.probs = {};
    s.design.validate();

    for (AiId id : all_ais) {
        s.ai_means[static_cast<std::size_t>(id)] = smartnie::ai_mean(s.design, id);
    }
    s.delta_dp = s.ai_mean(AiId::d3) - s.ai_mean(AiId::d1);
    s.delta_sp = s.ai_mean(AiId::d3) - s.ai_mean(AiId::d4);
    s.eta_dp = standardized_quantities(s.design, { AiId::d3, AiId::d1 }, p.theta, s.delta_dp);
    s.eta_sp = standardized_quantities(s.design, { AiId::d3, AiId::d4 }, p.theta, s.delta_sp);
    return s;
}

McEstimate simulate_preset(const Preset& preset, std::size_t row, std::optional<std::size_t> n, std::size_t reps,
    std::uint64_t seed, bool robust, unsigned threads)
{
    const PresetRow& r = preset_row(preset, row);
    std::size_t size = n.value_or(r.n);
    if (size == 0) {
        fail(ErrorCode::invalid_argument, "preset " + preset.name + " has no fixed N; pass n explicitly");
    }
    SimScenario scenario = build_scenario(r.params);
    TestSpec spec = preset.test_spec(r);
    if (preset.kind == PresetKind::type1) {
        require(!robust, "the unequal-variance variant applies to power presets only");
        return type1_rate(scenario, spec, size, reps, seed, threads);
    }
    return mc_power(scenario, spec, size, reps, seed, { threads, robust });
}

const StandardizedEffect& effect_for(const SimScenario& scenario, PathKind path) noexcept
{
    return path == PathKind::distinct ? scenario.eta_dp : scenario.eta_sp;
}

namespace {

    // ceil that ignores representation noise such as 50 * 0.3 = 15.000000000000002
    std::size_t ceil_count(double x)
    {
        const double r = std::round(x);
        if (std::fabs(x - r) < 1e-9) {
            return static_cast<std::size_t>(r);
        }
        return static_cast<std::size_t>(std::ceil(x));
    }

    double cell_mean(const CellMeans& m, Cell c)
    {
        switch (c) {
        case Cell::a_a: return m.a_a;
        case Cell::a_v: return m.a_v;
        case Cell::a_m: return m.a_m;
        case Cell::ac_ac: return m.ac_ac;
        case Cell::ac_v: return m.ac_v;
        case Cell::ac_m: return m.ac_m;
        }
        return 0.0;
    }

} // namespace

std::array<std::size_t, 6> cell_counts(std::size_t n, double gamma_a, double gamma_ac)
{
    require(n >= 4, "n must be at least 4 to populate both arms and both tactics");
    const double n_a = static_cast<double>((n + 1) / 2);
    const double n_ac = static_cast<double>(n - (n + 1) / 2);
    const std::size_t nr_a = ceil_count(n_a * (1.0 - gamma_a) / 2.0);
    const std::size_t nr_ac = ceil_count(n_ac * (1.0 - gamma_ac) / 2.0);
    return { ceil_count(n_a * gamma_a), nr_a, nr_a, ceil_count(n_ac * gamma_ac), nr_ac, nr_ac };
}

std::array<double, 6> draw_cell_sds(double sigma, Rng& rng)
{
    std::array<double, 6> sd {};
    const double lo = std::max(0.5, sigma - 1.0);
    for (double& s : sd) {
        s = rng.uniform(lo, sigma + 1.0);
    }
    return sd;
}

namespace {

    // Calls emit(cell, outcome) for every participant, cell by cell.
    template <typename Emit>
    void draw_outcomes(const SimScenario& scenario, std::size_t n, Rng& rng,
        const std::optional<std::array<double, 6>>& cell_sd, Emit&& emit)
    {
        const auto counts = cell_counts(n, scenario.params.gamma_a, scenario.params.gamma_ac);
        for (std::size_t i = 0; i < all_cells.size(); ++i) {
            const Cell c = all_cells[i];
            const double mu = cell_mean(scenario.design.means, c);
            const double sd = cell_sd ? (*cell_sd)[i] : scenario.params.sigma;
            for (std::size_t k = 0; k < counts[i]; ++k) {
                emit(c, rng.normal(mu, sd));
            }
        }
    }

    // Welford update, identical to summarize().
    struct Accumulator {
        CellStats stats;
        std::array<double, 6> running_mean {};

        void add(Cell c, double y)
        {
            auto i = static_cast<std::size_t>(c);
            ++stats.count[i];
            double delta = y - running_mean[i];
            running_mean[i] += delta / static_cast<double>(stats.count[i]);
            stats.sum_sq_dev[i] += delta * (y - running_mean[i]);
            stats.sum[i] += y;
        }
    };

} // namespace

std::vector<TrialRecord> generate_trial(const SimScenario& scenario, std::size_t n, SeedSpec seed,
    const GenerateOptions& options)
{
    Rng rng(seed);
    std::vector<TrialRecord> out;
    out.reserve(n + 6);
    draw_outcomes(scenario, n, rng, options.cell_sd, [&](Cell c, double y) {
        TrialRecord r;
        if (options.ids) {
            r.id = "p" + std::to_string(out.size() + 1);
        }
        r.stage1 = arm_of(c);
        r.stage2 = stage2_of(c);
        r.responder = is_responder_cell(c);
        r.outcome = y;
        out.push_back(std::move(r));
    });
    return out;
}

CellStats generate_cell_stats(const SimScenario& scenario, std::size_t n, SeedSpec seed,
    const std::optional<std::array<double, 6>>& cell_sd)
{
    Rng rng(seed);
    Accumulator acc;
    draw_outcomes(scenario, n, rng, cell_sd, [&](Cell c, double y) { acc.add(c, y); });
    return acc.stats;
}

CellStats generate_trial_randomized(const SmartDesign& design, std::size_t n, SeedSpec seed)
{
    design.validate();
    require(n >= 1, "n must be at least 1");
    Rng rng(seed);
    Accumulator acc;
    for (std::size_t k = 0; k < n; ++k) {
        const Arm arm = rng.bernoulli(design.probs.pi_a) ? Arm::a : Arm::ac;
        const bool responder = rng.bernoulli(design.gamma(arm));
        Stage2 stage2 = continuation(arm);
        double mu = design.means.responder(arm);
        if (!responder) {
            const Tactic t = rng.bernoulli(design.probs.stage2(arm, Tactic::v)) ? Tactic::v : Tactic::m;
            stage2 = as_stage2(t);
            mu = design.means.nonresponder(arm, t);
        }
        acc.add(cell_of(arm, stage2), rng.normal(mu, design.sigma));
    }
    return acc.stats;
}

std::vector<double> draw_latent(const SimScenario& scenario, Arm arm, std::size_t n, SeedSpec seed)
{
    Rng rng(seed);
    const double mu = arm == Arm::a ? scenario.params.mu_La : scenario.mu_Lac;
    std::vector<double> out(n);
    for (double& x : out) {
        x = rng.normal(mu, scenario.params.sigma_L);
    }
    return out;
}

bool rejects(const CellStats& stats, const TestSpec& spec)
{
    const DifferenceEstimate est = estimate_difference(stats, spec.pair, RandomizationProbs {});
    if (spec.mode == TestMode::ni) {
        return non_inferiority_subtest(est, spec.theta, spec.alpha).reject;
    }
    return equivalence_rejects(est, spec.theta, spec.alpha);
}

namespace {

    McEstimate run_mc(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
        std::uint64_t seed, const McOptions& options)
    {
        require(reps >= 1, "reps must be at least 1");
        require(spec.theta >= 0.0 && std::isfinite(spec.theta), "theta must be finite and non-negative");
        require(spec.alpha > 0.0 && spec.alpha < 1.0, "alpha must lie strictly inside (0, 1)");
        const auto counts = cell_counts(n, scenario.params.gamma_a, scenario.params.gamma_ac);
        std::size_t realized = 0;
        for (auto c : counts) {
            realized += c;
        }
        require(realized >= all_cells.size() + 1, "n is too small to estimate the pooled variance");

        std::vector<unsigned char> hit(reps, 0);
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                SeedSpec s { seed, r };
                std::optional<std::array<double, 6>> sd;
                Rng rng(s);
                if (options.robust) {
                    sd = draw_cell_sds(scenario.params.sigma, rng);
                }
                Accumulator acc;
                draw_outcomes(scenario, n, rng, sd, [&](Cell c, double y) { acc.add(c, y); });
                hit[r] = rejects(acc.stats, spec) ? 1 : 0;
            }
        };

        const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, reps);
        if (workers == 1) {
            work(0, reps);
        } else {
            std::vector<std::jthread> pool;
            const std::size_t chunk = (reps + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(reps, begin + chunk);
                if (begin < end) {
                    pool.emplace_back(work, begin, end);
                }
            }
        }

        std::size_t count = 0;
        for (auto h : hit) {
            count += h;
        }
        McEstimate out;
        out.reps = reps;
        out.seed = seed;
        out.n = n;
        out.realized_n = realized;
        out.estimate = static_cast<double>(count) / static_cast<double>(reps);
        out.se = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(reps));
        return out;
    }

} // namespace

McEstimate mc_power(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
    std::uint64_t seed, const McOptions& options)
{
    return run_mc(scenario, spec, n, reps, seed, options);
}

McEstimate mc_power_robust(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
    std::uint64_t seed, unsigned threads)
{
    return run_mc(scenario, spec, n, reps, seed, { threads, true });
}

McEstimate type1_rate(const SimScenario& scenario, const TestSpec& spec, std::size_t n, std::size_t reps,
    std::uint64_t seed, unsigned threads)
{
    require(spec.mode == TestMode::eq, "type1_rate evaluates the equivalence test");
    return run_mc(scenario, spec, n, reps, seed, { threads, false });
}

std::string_view to_string(PresetKind kind) noexcept
{
    switch (kind) {
    case PresetKind::curve: return "curve";
    case PresetKind::power: return "power";
    case PresetKind::type1: return "type1";
    }
    return "?";
}

namespace {

    ScenarioParams base_params()
    {
        ScenarioParams p;
        p.mu_La = 2.0;
        p.sigma_L = 0.2;
        p.zeta0 = 0.02;
        p.xi0 = 0.03;
        p.alpha = 0.05;
        p.beta = 0.20;
        return p;
    }

    ScenarioParams ni_params(double gamma_ac, double theta)
    {
        ScenarioParams p = base_params();
        p.sigma = 3.0;
        p.gamma_a = 0.30;
        p.gamma_ac = gamma_ac;
        p.zeta1a = 0.8;
        p.zeta1ac = 0.7;
        p.xi1a = 0.5;
        p.xi1ac = 0.4;
        p.xi2_a_m = 1.3;
        p.xi2_ac_v = 0.8;
        p.theta = theta;
        return p;
    }

    ScenarioParams eq_params(double gamma)
    {
        ScenarioParams p = base_params();
        p.sigma = 4.0;
        p.gamma_a = gamma;
        p.gamma_ac = gamma;
        p.zeta1a = 0.5;
        p.zeta1ac = 0.5;
        p.xi1a = 0.25;
        p.xi1ac = 0.25;
        p.theta = 2.0;
        return p;
    }

    std::string gamma_label(double ga, double gac)
    {
        return "gamma_a=" + fixed(ga, 2) + " gamma_ac=" + fixed(gac, 2);
    }

    constexpr std::array<double, 5> response_grid { 0.50, 0.45, 0.40, 0.35, 0.30 };

    std::vector<Preset> make_presets()
    {
        std::vector<Preset> out;

        {
            Preset p;
            p.name = "power_curve";
            p.description = "Power-curve sweep over xi2_ac_v at theta = 2 for N in {100, 200, 300, 500}";
            p.kind = PresetKind::curve;
            p.mode = TestMode::ni;
            p.path = PathKind::distinct;
            p.curve_ns = { 100, 200, 300, 500 };
            for (double x : { 3.4, 3.2, 3.0, 2.8, 2.6, 2.4, 2.2, 2.0, 1.8, 1.5, 1.3, 1.0, 0.8, 0.6, 0.4, 0.2, 0.0, -0.2,
                     -0.4, -0.6, -0.8, -2.0, -2.2, -2.4, -2.6 }) {
                ScenarioParams q = base_params();
                q.sigma = 2.0;
                q.gamma_a = 0.3;
                q.gamma_ac = 0.4;
                q.zeta1a = 0.5;
                q.zeta1ac = 0.8;
                q.xi1a = 0.25;
                q.xi1ac = 0.5;
                q.xi2_a_m = 1.3;
                q.xi2_a_v = 1.3;
                q.xi2_ac_m = 0.8;
                q.xi2_ac_v = x;
                q.theta = 2.0;
                p.rows.push_back({ "xi2_ac_v=" + fixed(x, 1), q, 0, std::nullopt, std::nullopt, std::nullopt });
            }
            out.push_back(std::move(p));
        }

        {
            Preset p;
            p.name = "ni_distinct";
            p.description = "Non-inferiority, distinct path (control d3, new d1)";
            p.mode = TestMode::ni;
            p.path = PathKind::distinct;
            const std::array<double, 10> eta { 0.379, 0.371, 0.362, 0.354, 0.347, 0.251, 0.243, 0.236, 0.230, 0.223 };
            const std::array<std::size_t, 10> n { 87, 90, 95, 99, 103, 197, 210, 223, 234, 249 };
            const std::array<double, 10> pw { 0.82, 0.80, 0.82, 0.82, 0.79, 0.80, 0.81, 0.80, 0.79, 0.84 };
            const std::array<double, 10> rb { 0.81, 0.80, 0.82, 0.81, 0.81, 0.79, 0.81, 0.80, 0.81, 0.82 };
            for (std::size_t i = 0; i < 10; ++i) {
                const double theta = i < 5 ? 3.0 : 2.5;
                ScenarioParams q = ni_params(response_grid[i % 5], theta);
                q.xi2_a_v = i < 5 ? 0.01 : -0.20;
                p.rows.push_back({ gamma_label(q.gamma_a, q.gamma_ac) + (i < 5 ? " theta=3.0" : " theta=2.5"), q,
                    n[i], eta[i], pw[i], rb[i] });
            }
            out.push_back(std::move(p));
        }

        {
            Preset p;
            p.name = "ni_shared";
            p.description = "Non-inferiority, shared path (control d3, new d4)";
            p.mode = TestMode::ni;
            p.path = PathKind::shared;
            const std::array<double, 10> eta { 0.384, 0.345, 0.312, 0.281, 0.254, 0.252, 0.215, 0.184, 0.157, 0.130 };
            const std::array<std::size_t, 10> n { 84, 104, 128, 157, 192, 195, 268, 366, 502, 732 };
            const std::array<double, 10> pw { 0.79, 0.78, 0.81, 0.84, 0.80, 0.77, 0.79, 0.79, 0.83, 0.82 };
            const std::array<double, 10> rb { 0.78, 0.78, 0.79, 0.84, 0.79, 0.76, 0.79, 0.79, 0.81, 0.82 };
            for (std::size_t i = 0; i < 10; ++i) {
                const double theta = i < 5 ? 3.0 : 2.5;
                ScenarioParams q = ni_params(response_grid[i % 5], theta);
                q.xi2_a_v = 0.3;
                q.xi2_ac_m = i < 5 ? -0.38 : -0.53;
                p.rows.push_back({ gamma_label(q.gamma_a, q.gamma_ac) + (i < 5 ? " theta=3.0" : " theta=2.5"), q,
                    n[i], eta[i], pw[i], rb[i] });
            }
            out.push_back(std::move(p));
        }

        auto eq_preset = [&](std::string name, PathKind path, double xi2_ac_m, std::array<double, 5> eta,
                             std::array<std::size_t, 5> n, std::array<double, 5> pw) {
            Preset p;
            p.name = std::move(name);
            p.description = path == PathKind::distinct ? "Equivalence, distinct path (control d3, new d1)"
                                                       : "Equivalence, shared path (control d3, new d4)";
            p.mode = TestMode::eq;
            p.path = path;
            for (std::size_t i = 0; i < 5; ++i) {
                ScenarioParams q = eq_params(response_grid[i]);
                q.xi2_a_m = 1.0;
                q.xi2_a_v = 1.0;
                q.xi2_ac_m = xi2_ac_m;
                q.xi2_ac_v = 0.95;
                p.rows.push_back({ gamma_label(q.gamma_a, q.gamma_ac), q, n[i], eta[i], pw[i], std::nullopt });
            }
            out.push_back(std::move(p));
        };
        eq_preset("eq_distinct", PathKind::distinct, 1.0, { 0.265, 0.259, 0.254, 0.249, 0.244 },
            { 244, 256, 266, 277, 288 }, { 0.83, 0.83, 0.82, 0.82, 0.84 });
        eq_preset("eq_shared", PathKind::shared, 0.94, { 0.307, 0.293, 0.280, 0.269, 0.258 },
            { 182, 200, 219, 237, 258 }, { 0.83, 0.85, 0.86, 0.86, 0.85 });

        auto type1_preset = [&](std::string name, PathKind path, double eta, std::array<std::size_t, 5> n,
                                std::array<double, 5> rate) {
            Preset p;
            p.name = std::move(name);
            p.description = path == PathKind::distinct
                ? "Equivalence with the true difference at the margin, distinct path (control d3, new d1)"
                : "Equivalence with the true difference at the margin, shared path (control d3, new d4)";
            p.kind = PresetKind::type1;
            p.mode = TestMode::eq;
            p.path = path;
            for (std::size_t i = 0; i < 5; ++i) {
                ScenarioParams q = eq_params(0.45);
                q.xi2_a_m = -1.01;
                q.xi2_a_v = 1.0;
                q.xi2_ac_m = 0.95;
                q.xi2_ac_v = -1.0;
                p.rows.push_back({ "N=" + std::to_string(n[i]), q, n[i], eta, rate[i], std::nullopt });
            }
            out.push_back(std::move(p));
        };
        type1_preset("type1_distinct", PathKind::distinct, 0.265, { 244, 500, 1000, 2000, 5000 },
            { 0.038, 0.037, 0.033, 0.043, 0.043 });
        type1_preset("type1_shared", PathKind::shared, 0.313, { 175, 500, 1000, 2000, 5000 },
            { 0.066, 0.039, 0.041, 0.055, 0.051 });
        return out;
    }

} // namespace

const std::vector<Preset>& presets()
{
    static const std::vector<Preset> all = make_presets();
    return all;
}

const Preset& find_preset(std::string_view name)
{
    std::string known;
    for (const auto& p : presets()) {
        if (p.name == name) {
            return p;
        }
        known += (known.empty() ? "" : ", ") + p.name;
    }
    fail(ErrorCode::invalid_argument, "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

const PresetRow& preset_row(const Preset& preset, std::size_t row)
{
    if (row < 1 || row > preset.rows.size()) {
        fail(ErrorCode::invalid_argument,
            "preset " + preset.name + " has rows 1.." + std::to_string(preset.rows.size()) + ", got "
                + std::to_string(row));
    }
    return preset.rows[row - 1];
}

} // namespace smartnie
