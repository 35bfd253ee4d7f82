#include "vsi/agents.hpp"

#include <cmath>
#include <cstring>
#include <random>

namespace vsi {

namespace {

// Stable 64-bit mix of (seed, timestamp bits, bus) so each measurement draws
// from its own stream regardless of evaluation order.
std::uint64_t mix_key(std::uint64_t seed, double timestamp, int bus) {
    std::uint64_t h = seed;
    std::uint64_t t;
    static_assert(sizeof(t) == sizeof(timestamp));
    std::memcpy(&t, &timestamp, sizeof(t));
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
    };
    mix(t);
    mix(static_cast<std::uint64_t>(bus));
    return h;
}

}  // namespace

std::vector<PmuMeasurement> synthesize_measurements(const PhasorSnapshot& truth,
                                                    const NoiseModel& noise) {
    std::vector<PmuMeasurement> out;
    out.reserve(truth.v.size());
    for (int i = 0; i < static_cast<int>(truth.v.size()); ++i) {
        const int bus = i + 1;
        PmuMeasurement m;
        m.bus = bus;
        m.timestamp = truth.timestamp;
        double mag = std::abs(truth.v[i]);
        double ang = std::arg(truth.v[i]);
        if (noise.sigma_v > 0.0 || noise.sigma_theta_deg > 0.0) {
            std::mt19937_64 rng(mix_key(noise.seed, truth.timestamp, bus));
            std::normal_distribution<double> gauss(0.0, 1.0);
            mag += noise.sigma_v * gauss(rng);
            ang += noise.sigma_theta_deg * (M_PI / 180.0) * gauss(rng);
        }
        m.voltage = std::polar(mag, ang);
        out.push_back(m);
    }
    return out;
}

ExchangeResult exchange(const std::vector<BusAgent>& agents,
                        const std::vector<PmuMeasurement>& measurements) {
    std::map<int, PmuMeasurement> by_bus;
    for (const PmuMeasurement& m : measurements) by_bus[m.bus] = m;
    ExchangeResult res;
    for (const BusAgent& a : agents) {
        auto& inbox = res.inboxes[a.bus];
        bool starved = false;
        for (const auto& [k, y] : a.local_branch_admittances) {
            const auto it = by_bus.find(k);
            if (it == by_bus.end()) {
                starved = true;
                continue;
            }
            inbox[k] = it->second;
            res.log.push_back({k, a.bus, it->second.timestamp});
        }
        if (starved) res.starved.push_back(a.bus);
    }
    return res;
}

AgentResult agent_step(const BusAgent& agent, const std::map<int, PmuMeasurement>& inbox) {
    AgentResult res;
    // same arithmetic path as the centralized t-parameter construction:
    // diagonal first, then neighbor sum in ascending bus order
    TParams t;
    t.bus = agent.bus;
    t.t1 = agent.diagonal.real();
    t.t4 = -agent.diagonal.imag();
    if (std::abs(t.t1) < 1e-9 || std::abs(t.t4) < 1e-9)
        throw DegenerateCircleError("degenerate circle at bus " + std::to_string(agent.bus) +
                                    " (lossless admittance row)");
    Complex a(0.0, 0.0);
    for (const auto& [k, y] : agent.local_branch_admittances) {
        const auto it = inbox.find(k);
        if (it == inbox.end()) {
            res.stale = true;
            continue;
        }
        a += y * it->second.voltage;
    }
    t.t2 = a.real();
    t.t3 = a.imag();

    if (agent.is_pv) {
        const auto cp = circles_from_t(t, agent.p_inj, 0.0).first;
        CircleGeometry vc;
        vc.center = {0.0, 0.0};
        vc.radius = agent.v_spec;
        const DeltaComponents dc = delta_components(circle_matrix(cp), circle_matrix(vc));
        res.vsi.bus = agent.bus;
        res.vsi.raw = dc.delta_star;
        res.vsi.reference = agent.no_load_reference;
        res.vsi.value = dc.delta_star / agent.no_load_reference;
        res.vsi.negative_flag = res.vsi.value < 0.0;
        return res;
    }
    const auto [cp, cq] = circles_from_t(t, agent.p_inj, agent.q_inj);
    const DeltaComponents dc = delta_components(circle_matrix(cp), circle_matrix(cq));
    res.vsi.bus = agent.bus;
    res.vsi.raw = dc.delta_star;
    res.vsi.reference = agent.no_load_reference;
    res.vsi.value = dc.delta_star / agent.no_load_reference;
    res.vsi.negative_flag = res.vsi.value < 0.0;
    return res;
}

std::vector<BusAgent> make_agents(const NetworkCase& net, const AdmittanceMatrix& Y,
                                  const std::map<int, double>& references) {
    std::vector<BusAgent> agents;
    agents.reserve(net.size());
    for (const Bus& b : net.buses) {
        BusAgent a;
        a.bus = b.id;
        a.diagonal = Y.at(b.id, b.id);
        for (int k : Y.adjacent[b.id - 1]) a.local_branch_admittances[k] = Y.at(b.id, k);
        a.is_pv = b.kind != BusKind::PQ;
        a.p_inj = b.p_inj;
        a.q_inj = b.q_inj;
        a.v_spec = b.v_spec;
        const auto it = references.find(b.id);
        a.no_load_reference = it != references.end() ? it->second : 1.0;
        agents.push_back(a);
    }
    return agents;
}

}  // namespace vsi
