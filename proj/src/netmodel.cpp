#include "vsi/netmodel.hpp"

#include <algorithm>
#include <queue>

namespace vsi {

const Bus& NetworkCase::bus(int id) const {
    if (id < 1 || id > size() || buses[id - 1].id != id)
        throw CaseError("unknown bus id " + std::to_string(id));
    return buses[id - 1];
}

Bus& NetworkCase::bus(int id) {
    return const_cast<Bus&>(static_cast<const NetworkCase*>(this)->bus(id));
}

void NetworkCase::validate() const {
    if (buses.empty()) throw CaseError("empty case");
    int slack_count = 0;
    for (int i = 0; i < size(); ++i) {
        const Bus& b = buses[i];
        if (b.id != i + 1) throw CaseError("bus ids must be dense 1..N in order");
        if (b.kind == BusKind::Slack) ++slack_count;
        if ((b.kind == BusKind::PV || b.kind == BusKind::Slack) && b.v_spec <= 0.0)
            throw CaseError("bus " + std::to_string(b.id) + ": PV/Slack requires v_spec > 0");
    }
    if (slack_count != 1)
        throw CaseError("case must have exactly one slack bus, found " +
                        std::to_string(slack_count));
    for (const Branch& br : branches) {
        if (br.from == br.to) throw CaseError("self-loop branch at bus " + std::to_string(br.from));
        bus(br.from);
        bus(br.to);
    }
}

AdmittanceMatrix build_admittance(const NetworkCase& net) {
    net.validate();
    const int n = net.size();
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(4 * net.branches.size() + n);
    for (const Branch& br : net.branches) {
        if (br.status != BranchStatus::InService) continue;
        const int i = br.from - 1, j = br.to - 1;
        const Complex ys = br.series_admittance;
        const Complex ysh(0.0, br.charging_b / 2.0);
        const double a = br.tap != 0.0 ? br.tap : 1.0;
        trip.emplace_back(i, i, (ys + ysh) / (a * a));
        trip.emplace_back(j, j, ys + ysh);
        trip.emplace_back(i, j, -ys / a);
        trip.emplace_back(j, i, -ys / a);
    }
    for (const Bus& b : net.buses)
        trip.emplace_back(b.id - 1, b.id - 1, Complex(b.shunt_g, b.shunt_b));

    AdmittanceMatrix out;
    out.Y.resize(n, n);
    out.Y.setFromTriplets(trip.begin(), trip.end());
    out.Y.prune([](int, int, const Complex& v) { return v != Complex(0.0, 0.0); });

    out.adjacent.assign(n, {});
    for (const Branch& br : net.branches) {
        if (br.status != BranchStatus::InService) continue;
        out.adjacent[br.from - 1].push_back(br.to);
        out.adjacent[br.to - 1].push_back(br.from);
    }
    for (auto& adj : out.adjacent) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }

    // connectivity over in-service branches
    std::vector<char> seen(n, 0);
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop();
        for (int v_id : out.adjacent[u])
            if (!seen[v_id - 1]) {
                seen[v_id - 1] = 1;
                ++reached;
                bfs.push(v_id - 1);
            }
    }
    if (reached != n) throw CaseError("in-service branch graph is disconnected");
    return out;
}

std::set<int> neighbors(const NetworkCase& net, int bus_id) {
    net.bus(bus_id);
    std::set<int> out;
    for (const Branch& br : net.branches) {
        if (br.status != BranchStatus::InService) continue;
        if (br.from == bus_id) out.insert(br.to);
        if (br.to == bus_id) out.insert(br.from);
    }
    return out;
}

NetworkCase scale_loads(const NetworkCase& net, double lambda) {
    if (lambda < 0.0) throw CaseError("negative load scale");
    NetworkCase out = net;
    for (Bus& b : out.buses) {
        const double p_gen = b.p_inj + b.p_load;
        const double q_gen = b.q_inj + b.q_load;
        const double gen_scale = b.kind == BusKind::Slack ? 1.0 : lambda;
        b.p_load *= lambda;
        b.q_load *= lambda;
        b.p_inj = gen_scale * p_gen - b.p_load;
        b.q_inj = gen_scale * q_gen - b.q_load;
    }
    return out;
}

NetworkCase scale_loads_directional(const NetworkCase& net, double m, const std::set<int>& scaled) {
    if (m < 0.0) throw CaseError("negative load scale");
    if (scaled.empty()) throw CaseError("nothing scaled: empty directional bus set");
    NetworkCase out = net;
    for (Bus& b : out.buses) {
        const double p_gen = b.p_inj + b.p_load;
        const double q_gen = b.q_inj + b.q_load;
        const double gen_scale = b.kind == BusKind::Slack ? 1.0 : m;
        const double load_scale = scaled.count(b.id) ? m : 1.0;
        b.p_load *= load_scale;
        b.q_load *= load_scale;
        b.p_inj = gen_scale * p_gen - b.p_load;
        b.q_inj = gen_scale * q_gen - b.q_load;
    }
    return out;
}

NetworkCase apply_outage(const NetworkCase& net, int from, int to) {
    NetworkCase out = net;
    bool found = false;
    for (Branch& br : out.branches) {
        const bool match = (br.from == from && br.to == to) || (br.from == to && br.to == from);
        if (!match) continue;
        found = true;
        if (br.status == BranchStatus::Outaged)
            throw CaseError("branch " + std::to_string(from) + "-" + std::to_string(to) +
                            " already outaged");
        br.status = BranchStatus::Outaged;
        return out;
    }
    if (!found)
        throw CaseError("no branch " + std::to_string(from) + "-" + std::to_string(to));
    return out;
}

double total_load(const NetworkCase& net) {
    double sum = 0.0;
    for (const Bus& b : net.buses) sum += b.p_load;
    return sum;
}

}  // namespace vsi
