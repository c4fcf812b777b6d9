#include "smartnie/report.hpp"

#include <cmath>

#include "smartnie/error.hpp"
#include "smartnie/format.hpp"
#include "smartnie/json_io.hpp"

namespace smartnie {

ReportFormat parse_report_format(std::string_view text)
{
    if (text == "text") {
        return ReportFormat::text;
    }
    if (text == "json") {
        return ReportFormat::json;
    }
    fail(ErrorCode::parse_error, "invalid format '" + std::string(text) + "' (expected text or json)");
}

namespace {

    void line(std::string& out, std::string_view label, const std::string& value)
    {
        out += label;
        out += ": ";
        out += value;
        out += '\n';
    }

    std::string bound(const std::optional<double>& bf)
    {
        if (!bf) {
            return "n/a";
        }
        return *bf <= 1.0 ? fixed(*bf, 2) + " (p > 1/e, not informative)" : fixed(*bf, 2);
    }

    std::string render_text(const TestReport& r)
    {
        const bool eq = r.kind == TestKind::equivalence;
        std::string out;
        line(out, "Test", std::string(eq ? "equivalence" : "non-inferiority") + " (" + std::string(to_string(r.pair.path()))
                + " path)");
        line(out, "Control AI", std::string(to_string(r.pair.control())));
        line(out, "New AI", std::string(to_string(r.pair.candidate())));
        line(out, "N", std::to_string(r.n));
        line(out, "Margin (theta)", shortest(r.theta));
        line(out, "Alpha", shortest(r.alpha));
        line(out, "Mean outcome (new AI)", fixed(r.mean_candidate, 4));
        line(out, "Mean outcome (control AI)", fixed(r.mean_control, 4));
        line(out, "Difference (control - new)", fixed(r.mean_control - r.mean_candidate, 4));
        line(out, "Standard error", fixed(std::sqrt(r.variance), 4));
        line(out, "Z (non-inferiority)", fixed(r.z_ni, 4));
        line(out, "p-value (non-inferiority)", fixed(r.p_ni, 4));
        line(out, "BF upper bound (non-inferiority)", bound(r.bf_bound_ni));
        if (eq) {
            line(out, "Z (non-superiority)", r.z_ns ? fixed(*r.z_ns, 4) : "n/a");
            line(out, "p-value (non-superiority)", r.p_ns ? fixed(*r.p_ns, 4) : "n/a");
            line(out, "BF upper bound (non-superiority)", bound(r.bf_bound_ns));
        }
        line(out, "Decision", r.decision == Decision::reject_null ? "reject H0" : "fail to reject H0");
        for (const auto& w : r.warnings) {
            line(out, "Warning", w);
        }
        return out;
    }

} // namespace

std::string render_report(const TestReport& report, ReportFormat format)
{
    if (format == ReportFormat::text) {
        return render_text(report);
    }
    return to_json(report).dump(2) + "\n";
}

TestReport parse_report(std::string_view json_text)
{
    Json doc = Json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) {
        fail(ErrorCode::parse_error, "report is not valid JSON");
    }
    return report_from_json(doc);
}

} // namespace smartnie
