#ifndef BDLAB_TRACE_HPP
#define BDLAB_TRACE_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/grid_measure.hpp"

namespace bdlab {

/// One row of diagnostics along a flow.
struct FlowRecord {
    double t = 0.0;
    double V = 0.0;
    std::optional<double> gap;
    double kl_pi = 0.0;
    std::optional<double> kl_mstar;
    double a_norm_sq = 0.0;
    double ratio_min_pi = 0.0;
    double ratio_max_pi = 0.0;
    std::optional<double> langevin_term;
    std::optional<double> birth_death_term;
    double boundary_mass = 0.0;
    // Persisted separately from the CSV contract.
    std::optional<double> ratio_min_mstar;
    std::optional<double> ratio_max_mstar;
};

struct FlowTrace {
    std::vector<FlowRecord> records;
    /// Densities at the recorded times; empty unless requested.
    std::vector<GridMeasure> measures;

    bool empty() const { return records.empty(); }
    std::size_t size() const { return records.size(); }
};

inline constexpr const char* kTraceHeader =
    "t,V,gap,kl_pi,kl_mstar,a_norm_sq,ratio_min_pi,ratio_max_pi,langevin_term,birth_death_term,boundary_mass";
inline constexpr const char* kTraceExtraHeader = "t,ratio_min_mstar,ratio_max_mstar";

/// Full-precision decimal, shortest representation that round-trips.
std::string format_double(double v);

void write_trace_csv(std::ostream& os, const FlowTrace& trace);
void write_trace_extra_csv(std::ostream& os, const FlowTrace& trace);
/// Reads trace.csv and, when given, merges the mstar-ratio columns of trace_extra.csv.
FlowTrace read_trace_csv(std::istream& trace_csv, std::istream* extra_csv = nullptr);

}  // namespace bdlab

#endif  // BDLAB_TRACE_HPP
