#include "vsi/caseio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace vsi {
namespace {

using Json = nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Extracts the numeric rows of `mpc.<name> = [ ... ];`.
std::vector<std::vector<double>> parse_matrix(const std::string& text, const std::string& name) {
    const std::string key = "." + name;
    size_t pos = 0;
    size_t start = std::string::npos;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        size_t p = pos + key.size();
        while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
        if (p < text.size() && text[p] == '=') {
            start = text.find('[', p);
            break;
        }
        ++pos;
    }
    if (start == std::string::npos) throw CaseError("case file lacks table " + name);
    const size_t end = text.find(']', start);
    if (end == std::string::npos) throw CaseError("unterminated table " + name);

    std::vector<std::vector<double>> rows;
    std::string body = text.substr(start + 1, end - start - 1);
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line, ';')) {
        // strip % comments within the row
        const size_t c = line.find('%');
        if (c != std::string::npos) line.resize(c);
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

double parse_base_mva(const std::string& text) {
    const size_t pos = text.find(".baseMVA");
    if (pos == std::string::npos) throw CaseError("case file lacks baseMVA");
    const size_t eq = text.find('=', pos);
    if (eq == std::string::npos) throw CaseError("malformed baseMVA");
    return std::stod(text.substr(eq + 1));
}

}  // namespace

NetworkCase load_matpower_case(const std::string& path) {
    const std::string text = read_file(path);
    NetworkCase net;
    net.base_mva = parse_base_mva(text);
    const double base = net.base_mva;

    for (const auto& row : parse_matrix(text, "bus")) {
        if (row.size() < 13) throw CaseError("bus row too short");
        Bus b;
        b.id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        b.kind = type == 3 ? BusKind::Slack : (type == 2 ? BusKind::PV : BusKind::PQ);
        b.p_load = row[2] / base;
        b.q_load = row[3] / base;
        b.shunt_g = row[4] / base;
        b.shunt_b = row[5] / base;
        b.p_inj = -b.p_load;
        b.q_inj = -b.q_load;
        net.buses.push_back(b);
    }
    std::sort(net.buses.begin(), net.buses.end(),
              [](const Bus& a, const Bus& b) { return a.id < b.id; });

    for (const auto& row : parse_matrix(text, "gen")) {
        if (row.size() < 10) throw CaseError("gen row too short");
        Bus& b = net.bus(static_cast<int>(row[0]));
        b.p_inj += row[1] / base;
        b.qg_max = row[3] / base;
        b.qg_min = row[4] / base;
        b.v_spec = row[5];
    }

    for (const auto& row : parse_matrix(text, "branch")) {
        if (row.size() < 11) throw CaseError("branch row too short");
        Branch br;
        br.from = static_cast<int>(row[0]);
        br.to = static_cast<int>(row[1]);
        br.series_admittance = 1.0 / Complex(row[2], row[3]);
        br.charging_b = row[4];
        br.tap = row[8];
        br.status = row[10] != 0.0 ? BranchStatus::InService : BranchStatus::Outaged;
        net.branches.push_back(br);
    }
    net.validate();
    return net;
}

NetworkCase load_json_case(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw CaseError("malformed json case: " + std::string(e.what()));
    }
    NetworkCase net;
    net.base_mva = j.value("base_mva", 100.0);
    for (const auto& jb : j.at("buses")) {
        Bus b;
        b.id = jb.at("id").get<int>();
        const std::string kind = jb.at("kind").get<std::string>();
        b.kind = kind == "slack" ? BusKind::Slack : (kind == "pv" ? BusKind::PV : BusKind::PQ);
        b.p_inj = jb.at("p_inj").get<double>();
        b.q_inj = jb.at("q_inj").get<double>();
        b.v_spec = jb.value("v_spec", 0.0);
        b.shunt_g = jb.value("shunt_g", 0.0);
        b.shunt_b = jb.value("shunt_b", 0.0);
        b.p_load = jb.value("p_load", 0.0);
        b.q_load = jb.value("q_load", 0.0);
        b.qg_min = jb.value("qg_min", 0.0);
        b.qg_max = jb.value("qg_max", 0.0);
        net.buses.push_back(b);
    }
    for (const auto& jb : j.at("branches")) {
        Branch br;
        br.from = jb.at("from").get<int>();
        br.to = jb.at("to").get<int>();
        br.series_admittance =
            Complex(jb.at("series_g").get<double>(), jb.at("series_b").get<double>());
        br.charging_b = jb.value("charging_b", 0.0);
        br.tap = jb.value("tap", 0.0);
        br.status = jb.value("status", std::string("in_service")) == "in_service"
                        ? BranchStatus::InService
                        : BranchStatus::Outaged;
        net.branches.push_back(br);
    }
    net.validate();
    return net;
}

void save_json_case(const NetworkCase& net, const std::string& path) {
    Json j;
    j["base_mva"] = net.base_mva;
    j["buses"] = Json::array();
    for (const Bus& b : net.buses) {
        Json jb;
        jb["id"] = b.id;
        jb["kind"] =
            b.kind == BusKind::Slack ? "slack" : (b.kind == BusKind::PV ? "pv" : "pq");
        jb["p_inj"] = b.p_inj;
        jb["q_inj"] = b.q_inj;
        jb["v_spec"] = b.v_spec;
        jb["shunt_g"] = b.shunt_g;
        jb["shunt_b"] = b.shunt_b;
        jb["p_load"] = b.p_load;
        jb["q_load"] = b.q_load;
        jb["qg_min"] = b.qg_min;
        jb["qg_max"] = b.qg_max;
        j["buses"].push_back(jb);
    }
    j["branches"] = Json::array();
    for (const Branch& br : net.branches) {
        Json jb;
        jb["from"] = br.from;
        jb["to"] = br.to;
        jb["series_g"] = br.series_admittance.real();
        jb["series_b"] = br.series_admittance.imag();
        jb["charging_b"] = br.charging_b;
        jb["tap"] = br.tap;
        jb["status"] = br.status == BranchStatus::InService ? "in_service" : "outaged";
        j["branches"].push_back(jb);
    }
    std::ofstream out(path);
    if (!out) throw CaseError("cannot write " + path);
    out << j.dump(2) << "\n";
}

NetworkCase load_case(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return load_json_case(path);
    if (path.size() >= 2 && path.substr(path.size() - 2) == ".m") return load_matpower_case(path);
    throw CaseError("unrecognized case extension: " + path);
}

}  // namespace vsi
