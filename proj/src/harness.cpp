#include "vsi/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vsi/caseio.hpp"

namespace vsi {
namespace {

using Json = nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string rows_to_csv(const std::vector<ScenarioRow>& rows) {
    std::string out = "time_or_lambda,bus,vsi,lti,flag,event\n";
    for (const ScenarioRow& r : rows) {
        out += fmt(r.x);
        out += ',' + std::to_string(r.bus) + ',';
        out += std::isnan(r.vsi) ? "" : fmt(r.vsi);
        out += ',';
        out += std::isnan(r.lti) ? "" : fmt(r.lti);
        out += ',' + r.flag + ',' + r.event + '\n';
    }
    return out;
}

void emit_files(const ScenarioConfig& cfg, ScenarioResult& res, const std::string& extra_name = "",
                const std::string& extra_text = "") {
    res.csv_text = rows_to_csv(res.rows);
    if (cfg.out_dir.empty()) return;
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream(cfg.out_dir + "/scenario.csv") << res.csv_text;
    std::ofstream(cfg.out_dir + "/summary.json") << res.summary.dump(2) << "\n";
    if (!extra_name.empty()) std::ofstream(cfg.out_dir + "/" + extra_name) << extra_text;
}

std::map<int, Complex> neighbor_voltages(const AdmittanceMatrix& Y, const PhasorSnapshot& snap,
                                         int d) {
    std::map<int, Complex> nv;
    for (int k : Y.adjacent[d - 1]) nv[k] = snap.at(k);
    return nv;
}

struct BusEval {
    double vsi = std::numeric_limits<double>::quiet_NaN();
    std::string flag = "ok";
};

// Injections seen by the index at a bus of an (already scaled) case, with
// reactive pins applied.
std::pair<double, double> bus_injections(const NetworkCase& net, int d,
                                         const std::vector<std::pair<int, double>>& pins) {
    const Bus& b = net.bus(d);
    double q = b.q_inj;
    for (const auto& [bus, pin] : pins)
        if (bus == d) q = pin - b.q_load;
    return {b.p_inj, q};
}

bool is_pinned(int d, const std::vector<std::pair<int, double>>& pins) {
    for (const auto& [bus, pin] : pins)
        if (bus == d) return true;
    return false;
}

// Raw delta_star of each bus at a solved state (its own trace-start
// normalization constants). NaN for degenerate rows.
std::map<int, double> state_references(const NetworkCase& scaled, const AdmittanceMatrix& Y,
                                       const PhasorSnapshot& snap,
                                       const std::vector<std::pair<int, double>>& pins) {
    std::map<int, double> refs;
    for (const Bus& b : scaled.buses) {
        try {
            const auto nv = neighbor_voltages(Y, snap, b.id);
            const TParams t = compute_t_params(Y, b.id, nv);
            if (b.kind == BusKind::PQ || is_pinned(b.id, pins)) {
                const auto [p, q] = bus_injections(scaled, b.id, pins);
                const auto [cp, cq] = circles_from_t(t, p, q);
                refs[b.id] = delta_star_of(cp, cq);
            } else {
                const auto cp = circles_from_t(t, b.p_inj, 0.0).first;
                CircleGeometry vc;
                vc.radius = b.v_spec;
                refs[b.id] = delta_star_of(cp, vc);
            }
        } catch (const DegenerateCircleError&) {
            refs[b.id] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return refs;
}

BusEval eval_bus(const NetworkCase& scaled, const AdmittanceMatrix& Y, const PhasorSnapshot& snap,
                 int d, const std::vector<std::pair<int, double>>& pins, double reference) {
    BusEval ev;
    if (std::isnan(reference)) {
        ev.flag = "degenerate";
        return ev;
    }
    const Bus& b = scaled.bus(d);
    const auto nv = neighbor_voltages(Y, snap, d);
    try {
        Vsi v;
        if (b.kind == BusKind::PQ || is_pinned(d, pins)) {
            const auto [p, q] = bus_injections(scaled, d, pins);
            v = vsi_index(scaled, Y, d, nv, p, q, reference);
        } else {
            v = pv_bus_vsi(scaled, Y, d, nv, b.p_inj, b.v_spec, reference);
            ev.flag = "pv";
        }
        ev.vsi = v.value;
        if (v.negative_flag) ev.flag = "negative";
    } catch (const DegenerateCircleError&) {
        ev.flag = "degenerate";
    } catch (const InfeasibleCircleError&) {
        ev.flag = "negative";  // local circle vanished; index below zero territory
        ev.vsi = std::numeric_limits<double>::quiet_NaN();
    }
    return ev;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 3) return 1.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0) return 1.0;
    const double slope = (n * sxy - sx * sy) / denom;
    const double icept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (int i = 0; i < n; ++i) {
        const double fit = icept + slope * x[i];
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0) return 1.0;
    return 1.0 - ss_res / ss_tot;
}

ScenarioResult run_sweep(const ScenarioConfig& cfg, bool directional) {
    NetworkCase base = load_case(cfg.case_path);
    std::vector<std::pair<int, double>> pins;
    if (cfg.qlim == QLimitPolicy::BaseViolations) pins = base_violation_pins(base);

    CpfOptions copts;
    copts.solve.qlim = cfg.qlim;
    copts.solve.pinned_q = pins;
    if (directional) copts.scaled_buses = cfg.directional_buses;
    const CpfTrajectory traj = continuation_power_flow(base, copts);

    // reported lambda: load multiplier for proportional runs, total-load
    // fraction for directional runs
    const double base_total = total_load(base);
    double fixed_load = 0.0, scaled_load = 0.0;
    for (const Bus& b : base.buses) {
        if (directional && !cfg.directional_buses.count(b.id))
            fixed_load += b.p_load;
        else
            scaled_load += b.p_load;
    }
    auto reported = [&](double m) {
        return directional ? (fixed_load + m * scaled_load) / base_total : m;
    };

    auto scale_at = [&](double m) {
        return directional ? scale_loads_directional(base, m, cfg.directional_buses)
                           : scale_loads(base, m);
    };

    const AdmittanceMatrix Y = build_admittance(base);
    const std::map<int, double> refs =
        state_references(scale_at(traj.points.front().lambda), Y, traj.points.front(), pins);

    ScenarioResult res;
    std::map<int, std::vector<double>> series_x, series_y;
    for (const PhasorSnapshot& snap : traj.points) {
        const NetworkCase scaled = scale_at(snap.lambda);
        const double x = reported(snap.lambda);
        for (const Bus& b : base.buses) {
            const BusEval ev = eval_bus(scaled, Y, snap, b.id, pins, refs.at(b.id));
            res.rows.push_back({x, b.id, ev.vsi, std::numeric_limits<double>::quiet_NaN(),
                                ev.flag, ""});
            if (!std::isnan(ev.vsi)) {
                series_x[b.id].push_back(x);
                series_y[b.id].push_back(ev.vsi);
            }
        }
    }

    // summary
    const PhasorSnapshot& nose = traj.points.back();
    int critical_bus = 0;
    double critical_vsi = std::numeric_limits<double>::infinity();
    for (const Bus& b : base.buses) {
        const auto& ys = series_y[b.id];
        if (ys.empty()) continue;
        if (series_x[b.id].back() == reported(traj.lambda_max) && ys.back() < critical_vsi) {
            critical_vsi = ys.back();
            critical_bus = b.id;
        }
    }
    const auto [lowest_bus, lowest_mag] = lowest_voltage_bus(nose);
    res.summary["scenario"] = directional ? "directional" : "proportional";
    res.summary["lambda_max"] = reported(traj.lambda_max);
    res.summary["multiplier_max"] = traj.lambda_max;
    res.summary["critical_bus"] = critical_bus;
    res.summary["critical_vsi"] = critical_vsi;
    res.summary["lowest_voltage_bus"] = lowest_bus;
    res.summary["lowest_voltage_mag"] = lowest_mag;
    Json final_vsi = Json::object();
    Json r2 = Json::object();
    for (const Bus& b : base.buses) {
        if (series_y[b.id].empty()) continue;
        final_vsi[std::to_string(b.id)] = series_y[b.id].back();
        r2[std::to_string(b.id)] = linear_fit_r2(series_x[b.id], series_y[b.id]);
    }
    res.summary["final_vsi"] = final_vsi;
    res.summary["r_squared"] = r2;
    Json start_vsi = Json::object();
    for (const Bus& b : base.buses)
        if (!series_y[b.id].empty()) start_vsi[std::to_string(b.id)] = series_y[b.id].front();
    res.summary["start_vsi"] = start_vsi;

    emit_files(cfg, res, "trajectory.csv", trajectory_csv(traj));
    return res;
}

}  // namespace

ScenarioResult run_proportional(const ScenarioConfig& cfg) { return run_sweep(cfg, false); }

ScenarioResult run_directional(const ScenarioConfig& cfg) {
    if (cfg.directional_buses.empty()) throw CaseError("nothing scaled: empty directional bus set");
    return run_sweep(cfg, true);
}

ScenarioResult run_noise_study(const ScenarioConfig& cfg) {
    NetworkCase base = load_case(cfg.case_path);
    std::vector<std::pair<int, double>> pins;
    if (cfg.qlim == QLimitPolicy::BaseViolations) pins = base_violation_pins(base);

    SolveOptions sopts;
    sopts.pinned_q = pins;
    const AdmittanceMatrix Y = build_admittance(base);

    const NetworkCase no_load = scale_loads(base, 0.0);
    const PhasorSnapshot ref_state =
        solve_power_flow(no_load, PhasorSnapshot::flat(base.size()), sopts);
    const std::map<int, double> refs = state_references(no_load, Y, ref_state, pins);

    const NetworkCase op = scale_loads(base, cfg.noise_lambda);
    PhasorSnapshot truth = solve_power_flow(op, ref_state, sopts);

    const int d = cfg.noise_monitored_bus;
    const auto [p_d, q_d] = bus_injections(op, d, pins);
    const int w = cfg.thevenin_window;

    ScenarioResult res;
    std::vector<double> vsis, ltis;
    for (int r = 0; r < cfg.noise_realizations; ++r) {
        truth.timestamp = static_cast<double>(r) * (w + 1);
        const auto meas = synthesize_measurements(truth, cfg.noise);
        PhasorSnapshot noisy = truth;
        for (const auto& m : meas) noisy.v[m.bus - 1] = m.voltage;
        const Vsi v = vsi_index(op, Y, d, neighbor_voltages(Y, noisy, d), p_d, q_d, refs.at(d));
        vsis.push_back(v.value);

        std::vector<std::pair<Complex, Complex>> window;
        for (int k = 0; k < w; ++k) {
            PhasorSnapshot t2 = truth;
            t2.timestamp = truth.timestamp + 1 + k;
            const auto meas_k = synthesize_measurements(t2, cfg.noise);
            PhasorSnapshot nk = t2;
            for (const auto& m : meas_k) nk.v[m.bus - 1] = m.voltage;
            Eigen::VectorXcd vv(base.size());
            for (int i = 0; i < base.size(); ++i) vv[i] = nk.v[i];
            const Complex I = (Y.Y * vv)(d - 1);
            window.emplace_back(nk.at(d), I);
        }
        const TheveninEstimate est = estimate_thevenin(window);
        const double lti = lti_index(est, window.back().first, window.back().second);
        ltis.push_back(lti);
        res.rows.push_back({static_cast<double>(r), d, v.value, lti,
                            v.negative_flag ? "negative" : "ok", ""});
    }

    auto stddev = [](const std::vector<double>& xs) {
        double mean = 0;
        for (double v : xs) mean += v;
        mean /= xs.size();
        double ss = 0;
        for (double v : xs) ss += (v - mean) * (v - mean);
        return std::sqrt(ss / xs.size());
    };
    const double sv = stddev(vsis), sl = stddev(ltis);
    res.summary["scenario"] = "noise_study";
    res.summary["monitored_bus"] = d;
    res.summary["lambda"] = cfg.noise_lambda;
    res.summary["realizations"] = cfg.noise_realizations;
    res.summary["vsi_std"] = sv;
    res.summary["lti_std"] = sl;
    res.summary["ratio"] = sl > 0 ? sv / sl : 0.0;
    emit_files(cfg, res);
    return res;
}

ScenarioResult run_line_outage(const ScenarioConfig& cfg) {
    NetworkCase base = load_case(cfg.case_path);
    std::vector<std::pair<int, double>> pins;
    if (cfg.qlim == QLimitPolicy::BaseViolations) pins = base_violation_pins(base);
    SolveOptions sopts;
    sopts.pinned_q = pins;

    const NetworkCase outaged = apply_outage(base, cfg.outage_from, cfg.outage_to);
    const AdmittanceMatrix Y_old = build_admittance(base);
    const AdmittanceMatrix Y_new = build_admittance(outaged);

    const NetworkCase no_load_old = scale_loads(base, 0.0);
    const NetworkCase no_load_new = scale_loads(outaged, 0.0);
    const PhasorSnapshot ref_old =
        solve_power_flow(no_load_old, PhasorSnapshot::flat(base.size()), sopts);
    const PhasorSnapshot ref_new =
        solve_power_flow(no_load_new, PhasorSnapshot::flat(base.size()), sopts);
    const std::map<int, double> refs_old = state_references(no_load_old, Y_old, ref_old, pins);
    const std::map<int, double> refs_new = state_references(no_load_new, Y_new, ref_new, pins);

    EventTimeline timeline;
    timeline.ramp = {0.0, cfg.outage_time, 1.0, cfg.ramp_m_end, cfg.ramp_buses};
    timeline.outage = LineOutageEvent{cfg.outage_from, cfg.outage_to, cfg.outage_time};
    timeline.t_end = cfg.t_end;

    ScenarioResult res;
    std::map<int, std::vector<double>> fresh, stale;
    PhasorSnapshot warm = PhasorSnapshot::flat(base.size());
    const double dt = 1.0 / cfg.sample_rate;
    bool collapsed = false;
    std::vector<double> times;
    for (double t = 0.0; t <= timeline.t_end + 1e-9; t += dt) {
        const bool after = t >= timeline.outage->time;
        const NetworkCase& topo = after ? outaged : base;
        const AdmittanceMatrix& Y_phys = after ? Y_new : Y_old;
        const std::map<int, double>& refs_phys = after ? refs_new : refs_old;
        const NetworkCase scaled =
            scale_loads_directional(topo, timeline.multiplier_at(t), timeline.ramp.scaled);
        PhasorSnapshot snap;
        try {
            snap = solve_power_flow(scaled, warm, sopts);
        } catch (const PowerFlowError&) {
            for (int b : cfg.monitored_buses)
                res.rows.push_back({t, b, std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN(), "ok", "collapse"});
            collapsed = true;
            continue;
        }
        warm = snap;
        times.push_back(t);
        const bool at_outage = std::abs(t - timeline.outage->time) < dt / 2;
        for (int b : cfg.monitored_buses) {
            const BusEval ev = eval_bus(scaled, Y_phys, snap, b, pins, refs_phys.at(b));
            res.rows.push_back({t, b, ev.vsi, std::numeric_limits<double>::quiet_NaN(), ev.flag,
                                at_outage ? "outage" : ""});
            fresh[b].push_back(ev.vsi);
            // stale agent: pre-outage row and pre-outage normalization
            const BusEval sv = eval_bus(scaled, Y_old, snap, b, pins, refs_old.at(b));
            res.rows.push_back({t, b, sv.vsi, std::numeric_limits<double>::quiet_NaN(),
                                "stale", at_outage ? "outage" : ""});
            stale[b].push_back(sv.vsi);
        }
    }

    // drop at the outage sample and stale-vs-refreshed agreement
    int outage_idx = -1;
    for (int i = 0; i < static_cast<int>(times.size()); ++i)
        if (std::abs(times[i] - timeline.outage->time) < dt / 2) outage_idx = i;
    Json drops = Json::object();
    Json gaps = Json::object();
    int localized = 0;
    double biggest = -std::numeric_limits<double>::infinity();
    for (int b : cfg.monitored_buses) {
        double drop = std::numeric_limits<double>::quiet_NaN();
        if (outage_idx > 0)
            drop = fresh[b][outage_idx - 1] - fresh[b][outage_idx];
        drops[std::to_string(b)] = drop;
        if (drop > biggest) {
            biggest = drop;
            localized = b;
        }
        double gap = 0;
        for (size_t i = 0; i < fresh[b].size(); ++i)
            gap = std::max(gap, std::abs(stale[b][i] - fresh[b][i]) /
                                    std::max(std::abs(fresh[b][i]), 1e-12));
        gaps[std::to_string(b)] = gap;
    }
    res.summary["scenario"] = "line_outage";
    res.summary["outage"] = {cfg.outage_from, cfg.outage_to};
    res.summary["outage_time"] = timeline.outage->time;
    res.summary["drops"] = drops;
    res.summary["localized_bus"] = localized;
    res.summary["stale_max_rel_gap"] = gaps;
    res.summary["collapsed"] = collapsed;
    emit_files(cfg, res);
    return res;
}

ScenarioResult run_three_bus(const ScenarioConfig& cfg) {
    NetworkCase base = load_case(cfg.case_path);
    const AdmittanceMatrix Y = build_admittance(base);
    const std::vector<Complex> sequence = {
        {-0.01, 0.33}, {-0.04, 0.40}, {-0.13, 0.44}, {-0.28, 0.45}, {-0.49, 0.43}};

    SolveOptions sopts;
    const double reference = no_load_reference(base, 3);

    ScenarioResult res;
    Json points = Json::array();
    Complex s_prev(0.0, 0.0);
    PhasorSnapshot warm = PhasorSnapshot::flat(base.size());
    for (int i = 0; i < static_cast<int>(sequence.size()); ++i) {
        const Complex target = sequence[i];
        auto with_load = [&](Complex s) {
            NetworkCase c = base;
            for (int bus : {2, 3}) {
                c.bus(bus).p_inj = s.real();
                c.bus(bus).q_inj = s.imag();
            }
            return c;
        };
        // direct solve, then ray continuation toward the target on failure
        bool converged = true;
        Complex s_reached = target;
        PhasorSnapshot snap;
        try {
            snap = solve_power_flow(with_load(target), warm, sopts);
        } catch (const PowerFlowError&) {
            converged = false;
            double lo = 0.0, hi = 1.0;
            PhasorSnapshot best = warm;
            for (int it = 0; it < 50; ++it) {
                const double mid = 0.5 * (lo + hi);
                try {
                    best = solve_power_flow(with_load(s_prev + mid * (target - s_prev)), best,
                                            sopts);
                    lo = mid;
                } catch (const PowerFlowError&) {
                    hi = mid;
                }
            }
            s_reached = s_prev + lo * (target - s_prev);
            snap = solve_power_flow(with_load(s_reached), best, sopts);
        }
        warm = snap;
        s_prev = s_reached;

        const NetworkCase loaded = with_load(s_reached);
        const auto nv = neighbor_voltages(Y, snap, 3);
        const TParams t = compute_t_params(Y, 3, nv);
        const auto [cp, cq] = circles_from_t(t, s_reached.real(), s_reached.imag());
        const double ds = delta_star_of(cp, cq);
        const double value = ds / reference;
        std::string cls;
        if (std::abs(value) < 0.02)
            cls = "OnePoint";
        else
            switch (classify_intersection(cp, cq)) {
                case Intersection::TwoPoints: cls = "TwoPoints"; break;
                case Intersection::OnePoint: cls = "OnePoint"; break;
                case Intersection::None: cls = "None"; break;
            }
        res.rows.push_back({static_cast<double>(i + 1), 3, value,
                            std::numeric_limits<double>::quiet_NaN(),
                            converged ? "ok" : "unconverged", cls});
        Json jp;
        jp["point"] = i + 1;
        jp["p"] = s_reached.real();
        jp["q"] = s_reached.imag();
        jp["converged"] = converged;
        jp["cp_center"] = {cp.center[0], cp.center[1]};
        jp["cq_center"] = {cq.center[0], cq.center[1]};
        jp["rp"] = cp.radius;
        jp["rq"] = cq.radius;
        jp["vsi"] = value;
        jp["classification"] = cls;
        points.push_back(jp);
        (void)loaded;
    }
    res.summary["scenario"] = "three_bus";
    res.summary["points"] = points;
    emit_files(cfg, res);
    return res;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    switch (cfg.kind) {
        case ScenarioKind::Proportional: return run_proportional(cfg);
        case ScenarioKind::Directional: return run_directional(cfg);
        case ScenarioKind::NoiseStudy: return run_noise_study(cfg);
        case ScenarioKind::LineOutage: return run_line_outage(cfg);
        case ScenarioKind::ThreeBusIllustration: return run_three_bus(cfg);
    }
    throw CaseError("unknown scenario kind");
}

std::string trajectory_csv(const CpfTrajectory& traj) {
    std::string out = "lambda,bus,v_re,v_im,v_mag\n";
    for (const PhasorSnapshot& p : traj.points) {
        for (int i = 0; i < static_cast<int>(p.v.size()); ++i) {
            out += fmt(p.lambda);
            out += ',' + std::to_string(i + 1) + ',' + fmt(p.v[i].real()) + ',' +
                   fmt(p.v[i].imag()) + ',' + fmt(std::abs(p.v[i])) + '\n';
        }
    }
    return out;
}

}  // namespace vsi
