#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "vsi/agents.hpp"
#include "vsi/baselines.hpp"
#include "vsi/circlevsi.hpp"
#include "vsi/powerflow.hpp"

namespace vsi {

enum class ScenarioKind { Proportional, Directional, NoiseStudy, LineOutage, ThreeBusIllustration };

struct ScenarioConfig {
    std::string case_path;
    ScenarioKind kind = ScenarioKind::Proportional;
    std::string out_dir;  // empty = no files written

    QLimitPolicy qlim = QLimitPolicy::BaseViolations;

    // Directional: which loads grow. The reported lambda is the total system
    // load as a fraction of the base-case total.
    std::set<int> directional_buses;

    // Noise study
    NoiseModel noise;
    int noise_realizations = 1000;
    int noise_monitored_bus = 30;
    double noise_lambda = 2.0;  // stressed operating point for the comparison
    int thevenin_window = 10;

    // Line outage timeline (defaults reproduce the bundled 30-bus study)
    int outage_from = 15;
    int outage_to = 23;
    double outage_time = 138.0;
    double t_end = 160.0;
    double sample_rate = 1.0;  // samples per second
    std::set<int> ramp_buses = {14, 15, 18, 19};
    double ramp_m_end = 6.52;  // load multiplier reached at the outage instant
    std::vector<int> monitored_buses = {14, 15, 18, 19};
};

struct ScenarioRow {
    double x = 0.0;  // lambda or time
    int bus = 0;
    double vsi = 0.0;
    double lti = std::numeric_limits<double>::quiet_NaN();
    std::string flag;   // ok | pv | stale | negative | degenerate | unconverged
    std::string event;  // outage | collapse | classification tag | empty
};

struct ScenarioResult {
    std::vector<ScenarioRow> rows;
    nlohmann::json summary;
    std::string csv_text;  // long-form table, also written to <out_dir>/scenario.csv
};

ScenarioResult run_proportional(const ScenarioConfig& config);
ScenarioResult run_directional(const ScenarioConfig& config);
ScenarioResult run_noise_study(const ScenarioConfig& config);
ScenarioResult run_line_outage(const ScenarioConfig& config);
ScenarioResult run_three_bus(const ScenarioConfig& config);

ScenarioResult run_scenario(const ScenarioConfig& config);

// Trajectory export: "lambda,bus,v_re,v_im,v_mag" rows for every CPF point.
std::string trajectory_csv(const CpfTrajectory& traj);

}  // namespace vsi
