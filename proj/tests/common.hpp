#pragma once

#include <string>

#include "vsi/netmodel.hpp"

#ifndef DATA_DIR
#define DATA_DIR "data"
#endif

namespace vsi::testing {

inline std::string data_path(const std::string& name) {
    return std::string(DATA_DIR) + "/" + name;
}

// Complete triangle: slack at bus 1, PQ at 2 and 3, every branch 1 - j0.5.
inline NetworkCase three_bus(double p = 0.0, double q = 0.0) {
    NetworkCase net;
    Bus b1;
    b1.id = 1;
    b1.kind = BusKind::Slack;
    b1.v_spec = 1.0;
    net.buses.push_back(b1);
    for (int id : {2, 3}) {
        Bus b;
        b.id = id;
        b.kind = BusKind::PQ;
        b.p_inj = p;
        b.q_inj = q;
        b.p_load = -p;
        b.q_load = -q;
        net.buses.push_back(b);
    }
    for (auto [f, t] : {std::pair{1, 2}, {1, 3}, {2, 3}}) {
        Branch br;
        br.from = f;
        br.to = t;
        br.series_admittance = Complex(1.0, -0.5);
        net.branches.push_back(br);
    }
    return net;
}

// Slack feeding one reactive load over a pure reactance of 1 p.u.; the high
// solution of v^2 - v + 0.2 = 0 is (1 + sqrt(0.2)) / 2.
inline NetworkCase two_bus_reactive() {
    NetworkCase net;
    Bus b1;
    b1.id = 1;
    b1.kind = BusKind::Slack;
    b1.v_spec = 1.0;
    Bus b2;
    b2.id = 2;
    b2.kind = BusKind::PQ;
    b2.q_inj = -0.2;
    b2.q_load = 0.2;
    net.buses = {b1, b2};
    Branch br;
    br.from = 1;
    br.to = 2;
    br.series_admittance = Complex(0.0, -1.0);
    net.branches = {br};
    return net;
}

}  // namespace vsi::testing
