#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "vsi/circlevsi.hpp"
#include "vsi/powerflow.hpp"

namespace vsi {

struct NoiseModel {
    double sigma_v = 0.0;          // p.u., additive on magnitude
    double sigma_theta_deg = 0.0;  // degrees, additive on angle
    std::uint64_t seed = 0;
};

struct PmuMeasurement {
    int bus = 0;
    Complex voltage;
    double timestamp = 0.0;
};

// Per-bus agent: holds only its own admittance row (neighbor entries plus the
// diagonal), its own injections, and its normalization constant. It has no
// access to the full matrix or to non-neighbor voltages.
struct BusAgent {
    int bus = 0;
    std::map<int, Complex> local_branch_admittances;  // neighbor id -> Y_dk
    Complex diagonal;                                 // Y_dd
    bool is_pv = false;
    double p_inj = 0.0;
    double q_inj = 0.0;
    double v_spec = 0.0;
    double no_load_reference = 0.0;
};

struct AgentResult {
    Vsi vsi;
    bool stale = false;  // inbox incomplete or admittance known out of date
    bool degenerate = false;
};

// Quasi-static event timeline; times in seconds, nondecreasing.
struct LoadRampEvent {
    double t_start = 0.0;
    double t_end = 0.0;
    double m_start = 1.0;   // load multiplier at t_start
    double m_end = 1.0;     // multiplier at t_end; held constant after
    std::set<int> scaled;   // empty = all loads
};

struct LineOutageEvent {
    int from = 0, to = 0;
    double time = 0.0;
};

struct EventTimeline {
    LoadRampEvent ramp;
    std::optional<LineOutageEvent> outage;
    std::optional<double> admittance_refresh_time;  // agents relearn rows here
    double t_end = 0.0;

    double multiplier_at(double t) const {
        if (t <= ramp.t_start) return ramp.m_start;
        if (t >= ramp.t_end) return ramp.m_end;
        const double f = (t - ramp.t_start) / (ramp.t_end - ramp.t_start);
        return ramp.m_start + f * (ramp.m_end - ramp.m_start);
    }
};

// One measurement per bus, perturbed in magnitude/angle. Deterministic per
// (seed, timestamp, bus) independent of draw order.
std::vector<PmuMeasurement> synthesize_measurements(const PhasorSnapshot& truth,
                                                    const NoiseModel& noise);

struct ExchangeLogEntry {
    int sender = 0;
    int receiver = 0;
    double timestamp = 0.0;
};

struct ExchangeResult {
    // receiver bus -> (sender bus -> measurement)
    std::map<int, std::map<int, PmuMeasurement>> inboxes;
    std::vector<ExchangeLogEntry> log;
    std::vector<int> starved;  // agents missing at least one neighbor measurement
};

ExchangeResult exchange(const std::vector<BusAgent>& agents,
                        const std::vector<PmuMeasurement>& measurements);

// Local VSI evaluation from agent state + inbox only. Throws
// DegenerateCircleError for lossless rows.
AgentResult agent_step(const BusAgent& agent, const std::map<int, PmuMeasurement>& inbox);

// Builds agents from a case: each gets its row of Y, its injections, and its
// no-load normalization constant (caller supplies the reference per bus so
// scenario-level normalization conventions stay in one place).
std::vector<BusAgent> make_agents(const NetworkCase& net, const AdmittanceMatrix& Y,
                                  const std::map<int, double>& references);

}  // namespace vsi
