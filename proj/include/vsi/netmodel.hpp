#pragma once

#include <complex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace vsi {

using Complex = std::complex<double>;

enum class BusKind { Slack, PV, PQ };

// Bus ids are the external 1-based ids from the case file; internal storage is
// positional (id i lives at index i-1, enforced on load).
struct Bus {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double p_inj = 0.0;   // net real injection, p.u. (generation positive, load negative)
    double q_inj = 0.0;   // net reactive injection, p.u.
    double v_spec = 0.0;  // magnitude setpoint, PV/Slack only
    double shunt_g = 0.0;
    double shunt_b = 0.0;
    // Load/generation split of the net injection; needed so partial load
    // scaling can move loads and generation independently.
    double p_load = 0.0;  // consumption, >= 0
    double q_load = 0.0;
    double qg_min = 0.0;  // generator reactive limits, p.u. (PV buses)
    double qg_max = 0.0;
};

enum class BranchStatus { InService, Outaged };

struct Branch {
    int from = 0;
    int to = 0;
    Complex series_admittance;  // g + jb, p.u.
    double charging_b = 0.0;    // total line charging susceptance, p.u.
    double tap = 0.0;           // off-nominal ratio on the from side; 0 means nominal
    BranchStatus status = BranchStatus::InService;
};

struct NetworkCase {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    double base_mva = 100.0;

    int size() const { return static_cast<int>(buses.size()); }
    const Bus& bus(int id) const;
    Bus& bus(int id);
    void validate() const;  // throws CaseError on invariant violation
};

struct CaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AdmittanceMatrix {
    Eigen::SparseMatrix<Complex> Y;          // column-major, N x N
    std::vector<std::vector<int>> adjacent;  // per-bus neighbor ids (1-based), sorted

    Complex at(int row_id, int col_id) const { return Y.coeff(row_id - 1, col_id - 1); }
};

// Standard bus admittance assembly. Off-diagonal Y_dk = -y_series (summed over
// parallel in-service branches, tap-adjusted); diagonal collects incident
// series terms, half charging, and bus shunts. Throws CaseError if the
// in-service graph is disconnected.
AdmittanceMatrix build_admittance(const NetworkCase& net);

std::set<int> neighbors(const NetworkCase& net, int bus_id);

// All loads and all non-slack generation scaled by lambda; lambda = 0 is the
// no-load case. Throws on negative lambda.
NetworkCase scale_loads(const NetworkCase& net, double lambda);

// Partial scaling: loads of buses in `scaled` and all non-slack generation get
// factor m; loads elsewhere stay at base.
NetworkCase scale_loads_directional(const NetworkCase& net, double m, const std::set<int>& scaled);

// Marks the (from,to) branch outaged. Throws if absent or already outaged.
NetworkCase apply_outage(const NetworkCase& net, int from, int to);

// Total real load (p.u.) over in-service buses; used to express partial
// scaling as a fraction of total system load.
double total_load(const NetworkCase& net);

}  // namespace vsi
