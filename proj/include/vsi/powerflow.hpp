#pragma once

#include <optional>
#include <vector>

#include "vsi/netmodel.hpp"

namespace vsi {

struct PhasorSnapshot {
    std::vector<Complex> v;  // one entry per bus, index id-1
    double timestamp = 0.0;
    double lambda = 0.0;

    Complex at(int bus_id) const { return v[bus_id - 1]; }
    static PhasorSnapshot flat(int n) {
        PhasorSnapshot s;
        s.v.assign(n, Complex(1.0, 0.0));
        return s;
    }
};

struct PowerFlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class QLimitPolicy {
    Off,             // PV buses hold v_spec regardless of reactive output
    Full,            // PV -> PQ switching whenever limits are violated
    BaseViolations,  // demote only generators violating limits in the solved base case
};

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 30;
    QLimitPolicy qlim = QLimitPolicy::Off;
    // Buses pre-demoted to PQ with generator Q pinned (p.u.); filled by
    // base_violation_pins() for the BaseViolations policy.
    std::vector<std::pair<int, double>> pinned_q;
};

// Newton-Raphson in polar coordinates. Throws PowerFlowError on
// non-convergence or a singular Jacobian.
PhasorSnapshot solve_power_flow(const NetworkCase& net, const PhasorSnapshot& initial,
                                const SolveOptions& opts = {});

// Max power-flow mismatch (p.u.) of a snapshot; the per-point trajectory check.
double max_mismatch(const NetworkCase& net, const PhasorSnapshot& snap);

// Solves the base case with all PV buses holding setpoints and returns the
// (bus, pinned generator Q) list for generators outside their limits.
std::vector<std::pair<int, double>> base_violation_pins(const NetworkCase& net);

struct CpfTrajectory {
    std::vector<PhasorSnapshot> points;  // lambda stored on each snapshot
    double lambda_max = 0.0;
    int critical_bus_hint = 0;
};

struct CpfOptions {
    double initial_step = 0.05;
    double min_step = 1e-4;
    double max_step = 0.2;
    bool adaptive = true;
    SolveOptions solve;
    // Directional runs scale only these loads (empty set = all loads).
    std::set<int> scaled_buses;
};

// Tangent-predictor / corrector continuation from lambda = 0 up the PV curve
// to the nose. Local parameterization: the corrector pins lambda far from the
// fold and switches to pinning the fastest-moving voltage magnitude near it.
CpfTrajectory continuation_power_flow(const NetworkCase& net, const CpfOptions& opts = {});

std::pair<int, double> lowest_voltage_bus(const PhasorSnapshot& snap);

}  // namespace vsi
