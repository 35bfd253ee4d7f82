#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vsi/harness.hpp"

namespace {

int verbosity() {
    const char* env = std::getenv("VSI_LOG");
    if (!env) return 0;
    const std::string v = env;
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
}

vsi::ScenarioKind parse_kind(const std::string& name) {
    if (name == "proportional") return vsi::ScenarioKind::Proportional;
    if (name == "directional") return vsi::ScenarioKind::Directional;
    if (name == "noise") return vsi::ScenarioKind::NoiseStudy;
    if (name == "outage") return vsi::ScenarioKind::LineOutage;
    if (name == "threebus") return vsi::ScenarioKind::ThreeBusIllustration;
    throw CLI::ValidationError("scenario",
                               "unknown scenario '" + name +
                                   "' (expected proportional|directional|noise|outage|threebus)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed circle-geometry voltage stability index scenarios"};
    app.require_subcommand(1);

    vsi::ScenarioConfig cfg;
    std::string scenario;
    std::string qlim = "base-violations";
    std::vector<int> directional;
    double refresh_at = -1.0;

    CLI::App* run = app.add_subcommand("run", "Run a scenario and write CSV/JSON outputs");
    run->add_option("scenario", scenario,
                    "One of: proportional, directional, noise, outage, threebus")
        ->required();
    run->add_option("--case", cfg.case_path, "Case file (.m or .json)")->required();
    run->add_option("--out", cfg.out_dir, "Output directory (scenario.csv, summary.json)");
    run->add_option("--seed", cfg.noise.seed, "Measurement noise seed");
    run->add_option("--noise-sv", cfg.noise.sigma_v, "Magnitude noise sigma, p.u.");
    run->add_option("--noise-stheta", cfg.noise.sigma_theta_deg, "Angle noise sigma, degrees");
    run->add_option("--realizations", cfg.noise_realizations, "Noise study sample count");
    run->add_option("--monitored-bus", cfg.noise_monitored_bus, "Noise study bus");
    run->add_option("--lambda", cfg.noise_lambda, "Noise study operating point multiplier");
    run->add_option("--window", cfg.thevenin_window, "Thevenin regression window length");
    run->add_option("--scale-bus", directional, "Directional scaling bus (repeatable)");
    run->add_option("--outage-from", cfg.outage_from, "Outaged branch from-bus");
    run->add_option("--outage-to", cfg.outage_to, "Outaged branch to-bus");
    run->add_option("--outage-time", cfg.outage_time, "Outage instant, seconds");
    run->add_option("--t-end", cfg.t_end, "Timeline end, seconds");
    run->add_option("--ramp-end", cfg.ramp_m_end, "Load multiplier reached at the outage");
    run->add_option("--refresh-admittance-at", refresh_at,
                    "When agents relearn admittance rows (reported only)");
    run->add_option("--qlim", qlim, "Reactive limit policy: off | full | base-violations");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.kind = parse_kind(scenario);
        if (qlim == "off")
            cfg.qlim = vsi::QLimitPolicy::Off;
        else if (qlim == "full")
            cfg.qlim = vsi::QLimitPolicy::Full;
        else if (qlim == "base-violations")
            cfg.qlim = vsi::QLimitPolicy::BaseViolations;
        else
            throw vsi::CaseError("unknown qlim policy '" + qlim + "'");
        if (!directional.empty())
            cfg.directional_buses = std::set<int>(directional.begin(), directional.end());
        else if (cfg.kind == vsi::ScenarioKind::Directional)
            for (int b = 17; b <= 30; ++b) cfg.directional_buses.insert(b);

        if (verbosity() >= 1)
            std::cerr << "running " << scenario << " on " << cfg.case_path << "\n";
        const vsi::ScenarioResult res = vsi::run_scenario(cfg);
        if (verbosity() >= 2) std::cerr << res.csv_text;
        std::cout << res.summary.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        err["scenario"] = scenario;
        err["case"] = cfg.case_path;
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
