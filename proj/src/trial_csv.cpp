#include "smartnie/trial_csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "smartnie/error.hpp"
#include "smartnie/format.hpp"

namespace smartnie {

namespace {

    std::string_view trim(std::string_view s)
    {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
            s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
            s.remove_suffix(1);
        }
        return s;
    }

    std::vector<std::string_view> split(std::string_view line)
    {
        std::vector<std::string_view> out;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        return out;
    }

    double parse_outcome(std::string_view text)
    {
        double value = 0.0;
        if (!text.empty() && text.front() == '+') {
            text.remove_prefix(1);
        }
        auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
            fail(ErrorCode::parse_error, "outcome '" + std::string(text) + "' is not a number");
        }
        return value;
    }

    TrialRecord parse_row(std::string_view line)
    {
        auto fields = split(line);
        if (fields.size() != 5) {
            fail(ErrorCode::parse_error, "expected 5 fields, found " + std::to_string(fields.size()));
        }
        TrialRecord r;
        r.id = std::string(fields[0]);
        r.stage1 = parse_arm(fields[1]);
        if (fields[2] == "1") {
            r.responder = true;
        } else if (fields[2] == "0") {
            r.responder = false;
        } else {
            fail(ErrorCode::parse_error, "response must be 0 or 1, got '" + std::string(fields[2]) + "'");
        }
        r.stage2 = parse_stage2(fields[3]);
        r.outcome = parse_outcome(fields[4]);
        validate(r);
        return r;
    }

} // namespace

std::vector<TrialRecord> parse_trial_csv(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<TrialRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) {
            view.remove_prefix(3);
        }
        if (!have_header) {
            if (trim(view).empty()) {
                continue;
            }
            if (trim(view) != trial_csv_header) {
                fail(ErrorCode::parse_error, "line " + std::to_string(lineno) + ": malformed header (expected "
                        + std::string(trial_csv_header) + ")");
            }
            have_header = true;
            continue;
        }
        if (trim(view).empty()) {
            continue;
        }
        try {
            out.push_back(parse_row(view));
        } catch (const Error& e) {
            fail(ErrorCode::parse_error, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_header) {
        fail(ErrorCode::parse_error, "missing header");
    }
    return out;
}

std::vector<TrialRecord> parse_trial_csv(std::string_view text)
{
    std::istringstream in { std::string(text) };
    return parse_trial_csv(in);
}

std::vector<TrialRecord> read_trial_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::invalid_argument, "cannot open " + path.string());
    }
    return parse_trial_csv(in);
}

std::string write_trial_csv(std::span<const TrialRecord> records)
{
    std::string out(trial_csv_header);
    out += '\n';
    for (const auto& r : records) {
        out += r.id;
        out += ',';
        out += to_string(r.stage1);
        out += r.responder ? ",1," : ",0,";
        out += to_string(r.stage2);
        out += ',';
        out += shortest(r.outcome);
        out += '\n';
    }
    return out;
}

} // namespace smartnie
