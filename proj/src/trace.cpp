#include "bdlab/trace.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace bdlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::config_parse, "not a number in trace: '" + s + "'");
    return v;
}

std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return parse_number(s);
}

}  // namespace

void write_trace_csv(std::ostream& os, const FlowTrace& trace) {
    os << kTraceHeader << '\n';
    for (const FlowRecord& r : trace.records) {
        os << format_double(r.t) << ',' << format_double(r.V) << ',' << cell(r.gap) << ','
           << format_double(r.kl_pi) << ',' << cell(r.kl_mstar) << ',' << format_double(r.a_norm_sq) << ','
           << format_double(r.ratio_min_pi) << ',' << format_double(r.ratio_max_pi) << ','
           << cell(r.langevin_term) << ',' << cell(r.birth_death_term) << ','
           << format_double(r.boundary_mass) << '\n';
    }
}

void write_trace_extra_csv(std::ostream& os, const FlowTrace& trace) {
    os << kTraceExtraHeader << '\n';
    for (const FlowRecord& r : trace.records)
        os << format_double(r.t) << ',' << cell(r.ratio_min_mstar) << ',' << cell(r.ratio_max_mstar) << '\n';
}

FlowTrace read_trace_csv(std::istream& trace_csv, std::istream* extra_csv) {
    std::string line;
    if (!std::getline(trace_csv, line) || line != kTraceHeader)
        throw Error(ErrorCode::config_parse, "trace.csv header mismatch");
    FlowTrace trace;
    while (std::getline(trace_csv, line)) {
        if (line.empty()) continue;
        const auto f = split_row(line);
        if (f.size() != 11) throw Error(ErrorCode::config_parse, "trace.csv row with wrong column count");
        FlowRecord r;
        r.t = parse_number(f[0]);
        r.V = parse_number(f[1]);
        r.gap = parse_optional(f[2]);
        r.kl_pi = parse_number(f[3]);
        r.kl_mstar = parse_optional(f[4]);
        r.a_norm_sq = parse_number(f[5]);
        r.ratio_min_pi = parse_number(f[6]);
        r.ratio_max_pi = parse_number(f[7]);
        r.langevin_term = parse_optional(f[8]);
        r.birth_death_term = parse_optional(f[9]);
        r.boundary_mass = parse_number(f[10]);
        trace.records.push_back(r);
    }
    if (extra_csv != nullptr) {
        if (!std::getline(*extra_csv, line) || line != kTraceExtraHeader)
            throw Error(ErrorCode::config_parse, "trace_extra.csv header mismatch");
        std::size_t k = 0;
        while (std::getline(*extra_csv, line)) {
            if (line.empty()) continue;
            const auto f = split_row(line);
            if (f.size() != 3 || k >= trace.records.size())
                throw Error(ErrorCode::config_parse, "trace_extra.csv does not match trace.csv");
            trace.records[k].ratio_min_mstar = parse_optional(f[1]);
            trace.records[k].ratio_max_mstar = parse_optional(f[2]);
            ++k;
        }
        if (k != trace.records.size())
            throw Error(ErrorCode::config_parse, "trace_extra.csv row count differs from trace.csv");
    }
    return trace;
}

}  // namespace bdlab
