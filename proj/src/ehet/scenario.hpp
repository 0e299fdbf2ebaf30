#pragma once

#include "ehet/arrivals.hpp"
#include "ehet/bounds.hpp"
#include "ehet/offline.hpp"
#include "ehet/online_mdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace ehet {

inline constexpr int kSchemaVersion = 1;

struct ConsumptionSpec {
    std::string kind = "linear"; ///< linear | log | piecewise_linear | piecewise_log
    double sigma = 1.0;
    double alpha = 1.0;
    std::optional<double> lambda; ///< defaults to the reward lambda
    double zeta = 0.0;
    double p_n = 0.01;

    ConsumptionModel build(double reward_lambda) const;
};

struct ArrivalSpec {
    /// deterministic{b} | bernoulli{b, p} | truncated_geometric{mean, b_max} | uniform{b_max}
    /// | empirical{pmf} | trace (histogram of the device trace)
    std::string kind = "deterministic";
    long b = 1;
    double p = 1.0;
    double mean = 1.0;
    long b_max = 1;
    std::vector<double> pmf;
};

struct TraceSpec {
    std::string path;
    double slot_seconds = 60.0;
    double panel_area_cm2 = 1.0;
    double quantum_uw_per_cm2 = 1.0;
    long stride = 1; ///< keep every stride-th slot
};

struct DeviceSpec {
    long battery = 1;                    ///< capacity in quanta
    std::optional<double> battery_joule; ///< capacity in Joule, for calibration
    ConsumptionSpec consumption;
    ArrivalSpec arrivals;
    std::string psi = "hull"; ///< hull | chord | cost
    std::optional<TraceSpec> trace;
};

/// Everything an experiment needs, as read from a JSON config document.
struct Scenario {
    int schema_version = kSchemaVersion;
    double lambda = 1.0;
    double beta = 0.0;
    bool transfer = true;
    Quantization quantization = Quantization::Lower;
    std::optional<double> rho_max; ///< defaults to the largest supportable power
    long horizon = 1000;
    std::uint64_t seed = 1;
    DeviceSpec tx, rc;
    bool finite_batteries = true; ///< offline solves use the battery caps
    double initial_tx = 0.0, initial_rc = 0.0;
    std::string base_dir; ///< relative trace paths resolve against this

    void validate() const;
    SystemConfig system() const;
    BoundInput bound_input() const;

    /// Horizon-length arrival traces: ingested files where configured, else seeded samples.
    std::pair<ArrivalTrace, ArrivalTrace> traces() const;

    OfflineInstance offline_instance(const ArrivalTrace& tx_trace, const ArrivalTrace& rc_trace) const;

    /// Joule per quantum when a Joule capacity is given.
    std::optional<double> quantum_joule() const;

    /// Normalized document with every field explicit; parse_scenario(to_json()) round-trips.
    std::string to_json(int indent = 2) const;
};

/// Throws ParseError for malformed JSON or a schema violation.
Scenario parse_scenario(std::string_view text, std::string base_dir = "");
Scenario load_scenario(const std::string& path);

/**
 * Reads a two-column irradiance file (time in seconds or ISO-8601, irradiance in uW/cm^2),
 * averages it over slots and converts each slot mean to whole quanta. Delimiters may be
 * comma, semicolon, tab or whitespace; '#' starts a comment; one header line is allowed.
 * Slots without samples repeat the previous slot mean.
 */
ArrivalTrace ingest_trace(std::istream& in, const TraceSpec& spec, std::string label = "");
ArrivalTrace ingest_trace(const std::string& path, double slot_seconds, double panel_area_cm2,
                          double quantum_uw_per_cm2);

/// Seconds since 1970-01-01T00:00:00Z; nullopt when text is not an ISO-8601 timestamp.
std::optional<double> parse_iso8601(std::string_view text);

} // namespace ehet
