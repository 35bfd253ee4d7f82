#include "vsi/powerflow.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace vsi {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct Indexing {
    int n = 0;
    int slack = 0;                    // 0-based
    std::vector<int> pv, pq;          // 0-based bus indices
    std::vector<double> q_pin;        // per-bus pinned generator Q (NaN if none)
    std::vector<double> vm_spec;      // setpoints for slack/PV

    int n_state() const { return static_cast<int>(pv.size() + 2 * pq.size()); }
};

Indexing make_indexing(const NetworkCase& net, const SolveOptions& opts) {
    Indexing ix;
    ix.n = net.size();
    ix.q_pin.assign(ix.n, std::numeric_limits<double>::quiet_NaN());
    ix.vm_spec.assign(ix.n, 1.0);
    for (const auto& [bus, qpin] : opts.pinned_q) ix.q_pin[bus - 1] = qpin;
    for (const Bus& b : net.buses) {
        const int i = b.id - 1;
        if (b.kind == BusKind::Slack) {
            ix.slack = i;
            ix.vm_spec[i] = b.v_spec;
        } else if (b.kind == BusKind::PV && std::isnan(ix.q_pin[i])) {
            ix.pv.push_back(i);
            ix.vm_spec[i] = b.v_spec;
        } else {
            ix.pq.push_back(i);
        }
    }
    return ix;
}

// Scheduled injections: p = p0 + lambda*p1 per bus (analogous for q); lambda
// here is the load/generation multiplier of the continuation.
struct InjectionSchedule {
    VectorXd p0, p1, q0, q1;

    static InjectionSchedule proportional(const NetworkCase& net, const std::set<int>& scaled,
                                          const Indexing& ix) {
        const int n = net.size();
        InjectionSchedule s;
        s.p0 = VectorXd::Zero(n);
        s.p1 = VectorXd::Zero(n);
        s.q0 = VectorXd::Zero(n);
        s.q1 = VectorXd::Zero(n);
        for (const Bus& b : net.buses) {
            const int i = b.id - 1;
            const double p_gen = b.p_inj + b.p_load;
            const double q_gen = b.q_inj + b.q_load;
            const bool in_set = scaled.empty() || scaled.count(b.id);
            if (b.kind == BusKind::Slack) continue;
            // generation always scales; loads scale only inside the set
            if (in_set) {
                s.p1[i] = p_gen - b.p_load;
                s.q1[i] = q_gen - b.q_load;
            } else {
                s.p1[i] = p_gen;
                s.p0[i] = -b.p_load;
                s.q1[i] = q_gen;
                s.q0[i] = -b.q_load;
            }
            if (!std::isnan(ix.q_pin[i])) {
                // pinned generator: q = q_pin - load draw
                s.q0[i] = ix.q_pin[i] + (in_set ? 0.0 : -b.q_load);
                s.q1[i] = in_set ? -b.q_load : 0.0;
            }
        }
        return s;
    }

    VectorXd p(double lam) const { return p0 + lam * p1; }
    VectorXd q(double lam) const { return q0 + lam * q1; }
};

// Fixed-lambda specification taken directly from the case's current injections.
InjectionSchedule fixed_schedule(const NetworkCase& net, const Indexing& ix) {
    const int n = net.size();
    InjectionSchedule s;
    s.p0 = VectorXd::Zero(n);
    s.p1 = VectorXd::Zero(n);
    s.q0 = VectorXd::Zero(n);
    s.q1 = VectorXd::Zero(n);
    for (const Bus& b : net.buses) {
        const int i = b.id - 1;
        s.p0[i] = b.p_inj;
        s.q0[i] = std::isnan(ix.q_pin[i]) ? b.q_inj : ix.q_pin[i] - b.q_load;
    }
    return s;
}

struct PolarState {
    VectorXd vm, va;

    VectorXcd phasors() const {
        VectorXcd v(vm.size());
        for (int i = 0; i < vm.size(); ++i) v[i] = std::polar(vm[i], va[i]);
        return v;
    }
};

PolarState from_snapshot(const PhasorSnapshot& snap, const Indexing& ix) {
    PolarState st;
    st.vm.resize(ix.n);
    st.va.resize(ix.n);
    for (int i = 0; i < ix.n; ++i) {
        st.vm[i] = std::abs(snap.v[i]);
        st.va[i] = std::arg(snap.v[i]);
    }
    st.vm[ix.slack] = ix.vm_spec[ix.slack];
    for (int i : ix.pv) st.vm[i] = ix.vm_spec[i];
    return st;
}

// Mismatch vector [dP(pv,pq); dQ(pq)] for given injections.
VectorXd mismatch(const Eigen::SparseMatrix<Complex>& Y, const PolarState& st,
                  const VectorXd& p, const VectorXd& q, const Indexing& ix) {
    const VectorXcd v = st.phasors();
    const VectorXcd s = v.array() * (Y * v).conjugate().array();
    VectorXd mis(ix.n_state());
    int k = 0;
    for (int i : ix.pv) mis[k++] = p[i] - s[i].real();
    for (int i : ix.pq) mis[k++] = p[i] - s[i].real();
    for (int i : ix.pq) mis[k++] = q[i] - s[i].imag();
    return mis;
}

// Dense power-flow Jacobian d(mismatch)/d(va_pvpq, vm_pq) (negative of dS).
MatrixXd jacobian(const Eigen::SparseMatrix<Complex>& Y, const PolarState& st,
                  const Indexing& ix) {
    const int n = ix.n;
    const VectorXcd v = st.phasors();
    const VectorXcd ibus = Y * v;
    Eigen::MatrixXcd Yd = Eigen::MatrixXcd(Y);
    Eigen::MatrixXcd dS_dVa = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd dS_dVm = Eigen::MatrixXcd::Zero(n, n);
    // dS/dVa = j diag(v) conj(diag(ibus) - Y diag(v))
    // dS/dVm = diag(v) conj(Y diag(v/|v|)) + conj(diag(ibus)) diag(v/|v|)
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            const Complex yrc = Yd(r, c);
            Complex term = -yrc * v[c];
            if (r == c) term += ibus[r];
            dS_dVa(r, c) = Complex(0, 1) * v[r] * std::conj(term);
            const Complex vnorm = v[c] / std::abs(v[c]);
            Complex mterm = v[r] * std::conj(yrc * vnorm);
            if (r == c) mterm += std::conj(ibus[r]) * vnorm;
            dS_dVm(r, c) = mterm;
        }
    }
    std::vector<int> pvpq = ix.pv;
    pvpq.insert(pvpq.end(), ix.pq.begin(), ix.pq.end());
    const int na = static_cast<int>(pvpq.size());
    const int nq = static_cast<int>(ix.pq.size());
    // J = +dS restricted to the state variables; Newton solves J dx = mismatch.
    MatrixXd J(na + nq, na + nq);
    for (int r = 0; r < na; ++r) {
        for (int c = 0; c < na; ++c) J(r, c) = dS_dVa(pvpq[r], pvpq[c]).real();
        for (int c = 0; c < nq; ++c) J(r, na + c) = dS_dVm(pvpq[r], ix.pq[c]).real();
    }
    for (int r = 0; r < nq; ++r) {
        for (int c = 0; c < na; ++c) J(na + r, c) = dS_dVa(ix.pq[r], pvpq[c]).imag();
        for (int c = 0; c < nq; ++c) J(na + r, na + c) = dS_dVm(ix.pq[r], ix.pq[c]).imag();
    }
    return J;
}

void apply_update(PolarState& st, const VectorXd& dx, const Indexing& ix) {
    int k = 0;
    for (int i : ix.pv) st.va[i] += dx[k++];
    for (int i : ix.pq) st.va[i] += dx[k++];
    for (int i : ix.pq) st.vm[i] += dx[k++];
}

bool newton(const Eigen::SparseMatrix<Complex>& Y, PolarState& st, const VectorXd& p,
            const VectorXd& q, const Indexing& ix, double tol, int max_iter) {
    for (int it = 0; it < max_iter; ++it) {
        const VectorXd mis = mismatch(Y, st, p, q, ix);
        if (mis.lpNorm<Eigen::Infinity>() < tol) return true;
        const MatrixXd J = jacobian(Y, st, ix);
        Eigen::PartialPivLU<MatrixXd> lu(J);
        const VectorXd dx = lu.solve(mis);
        if (!dx.allFinite()) return false;
        apply_update(st, dx, ix);
        if ((st.vm.array() <= 0.0).any()) return false;
    }
    return false;
}

PhasorSnapshot to_snapshot(const PolarState& st, double lambda) {
    PhasorSnapshot snap;
    const VectorXcd v = st.phasors();
    snap.v.assign(v.data(), v.data() + v.size());
    snap.lambda = lambda;
    return snap;
}

double gen_q_output(const NetworkCase& net, const Eigen::SparseMatrix<Complex>& Y,
                    const PhasorSnapshot& snap, int bus_id) {
    VectorXcd v(net.size());
    for (int i = 0; i < net.size(); ++i) v[i] = snap.v[i];
    const VectorXcd s = v.array() * (Y * v).conjugate().array();
    return s[bus_id - 1].imag() + net.buses[bus_id - 1].q_load;
}

}  // namespace

PhasorSnapshot solve_power_flow(const NetworkCase& net, const PhasorSnapshot& initial,
                                const SolveOptions& opts) {
    const AdmittanceMatrix adm = build_admittance(net);
    SolveOptions local = opts;
    if (local.qlim == QLimitPolicy::BaseViolations && local.pinned_q.empty())
        local.pinned_q = base_violation_pins(net);

    for (int outer = 0; outer < 12; ++outer) {
        const Indexing ix = make_indexing(net, local);
        const InjectionSchedule sched = fixed_schedule(net, ix);
        PolarState st = from_snapshot(initial, ix);
        if (!newton(adm.Y, st, sched.p(0), sched.q(0), ix, local.tol, local.max_iter))
            throw PowerFlowError("power flow did not converge");
        PhasorSnapshot snap = to_snapshot(st, 0.0);
        if (local.qlim != QLimitPolicy::Full) return snap;

        bool violated = false;
        for (int i : ix.pv) {
            const Bus& b = net.buses[i];
            if (b.qg_min >= b.qg_max) continue;  // no limits in data
            const double qg = gen_q_output(net, adm.Y, snap, b.id);
            if (qg > b.qg_max + 1e-9) {
                local.pinned_q.emplace_back(b.id, b.qg_max);
                violated = true;
            } else if (qg < b.qg_min - 1e-9) {
                local.pinned_q.emplace_back(b.id, b.qg_min);
                violated = true;
            }
        }
        if (!violated) return snap;
    }
    throw PowerFlowError("reactive limit switching did not settle");
}

double max_mismatch(const NetworkCase& net, const PhasorSnapshot& snap) {
    const AdmittanceMatrix adm = build_admittance(net);
    SolveOptions opts;
    const Indexing ix = make_indexing(net, opts);
    const InjectionSchedule sched = fixed_schedule(net, ix);
    const PolarState st = from_snapshot(snap, ix);
    return mismatch(adm.Y, st, sched.p(0), sched.q(0), ix).lpNorm<Eigen::Infinity>();
}

std::vector<std::pair<int, double>> base_violation_pins(const NetworkCase& net) {
    const AdmittanceMatrix adm = build_admittance(net);
    SolveOptions opts;  // all PV hold setpoints
    PhasorSnapshot snap = solve_power_flow(net, PhasorSnapshot::flat(net.size()), opts);
    std::vector<std::pair<int, double>> pins;
    for (const Bus& b : net.buses) {
        if (b.kind != BusKind::PV || b.qg_min >= b.qg_max) continue;
        const double qg = gen_q_output(net, adm.Y, snap, b.id);
        if (qg > b.qg_max + 1e-9)
            pins.emplace_back(b.id, b.qg_max);
        else if (qg < b.qg_min - 1e-9)
            pins.emplace_back(b.id, b.qg_min);
    }
    return pins;
}

CpfTrajectory continuation_power_flow(const NetworkCase& net, const CpfOptions& opts) {
    const AdmittanceMatrix adm = build_admittance(net);
    SolveOptions sopts = opts.solve;
    if (sopts.qlim == QLimitPolicy::BaseViolations && sopts.pinned_q.empty())
        sopts.pinned_q = base_violation_pins(net);
    const Indexing ix = make_indexing(net, sopts);
    const InjectionSchedule sched = InjectionSchedule::proportional(net, opts.scaled_buses, ix);
    const int ns = ix.n_state();

    CpfTrajectory traj;
    // corrected solution at lambda = 0
    PolarState st = from_snapshot(PhasorSnapshot::flat(net.size()), ix);
    if (!newton(adm.Y, st, sched.p(0), sched.q(0), ix, sopts.tol, sopts.max_iter))
        throw PowerFlowError("base (no-load) case infeasible");
    double lambda = 0.0;
    traj.points.push_back(to_snapshot(st, lambda));

    double h = opts.initial_step;
    VectorXd tangent_prev = VectorXd::Zero(ns + 1);
    tangent_prev[ns] = 1.0;

    while (true) {
        // tangent: [J | -dF/dlambda] t = 0, normalized against previous tangent
        const MatrixXd J = jacobian(adm.Y, st, ix);
        VectorXd dF_dlam(ns);
        {
            int k = 0;
            for (int i : ix.pv) dF_dlam[k++] = sched.p1[i];
            for (int i : ix.pq) dF_dlam[k++] = sched.p1[i];
            for (int i : ix.pq) dF_dlam[k++] = sched.q1[i];
        }
        MatrixXd A(ns + 1, ns + 1);
        A.topLeftCorner(ns, ns) = J;
        A.topRightCorner(ns, 1) = -dF_dlam;
        A.row(ns) = tangent_prev.transpose();
        VectorXd rhs = VectorXd::Zero(ns + 1);
        rhs[ns] = 1.0;
        Eigen::PartialPivLU<MatrixXd> lu(A);
        VectorXd t = lu.solve(rhs);
        if (!t.allFinite()) break;
        t.normalize();
        if (t.dot(tangent_prev) < 0) t = -t;
        tangent_prev = t;

        // local parameterization: continuation index = largest tangent component
        int par = ns;  // lambda by default
        double best = std::abs(t[ns]);
        for (int i = 0; i < ns; ++i)
            if (std::abs(t[i]) > best) {
                best = std::abs(t[i]);
                par = i;
            }

        bool stepped = false;
        while (h >= opts.min_step) {
            PolarState trial = st;
            double lam_trial = lambda + h * t[ns];
            apply_update(trial, (h * t.head(ns)).eval(), ix);
            const double target =
                par == ns ? lam_trial
                          : (par >= static_cast<int>(ix.pv.size() + ix.pq.size())
                                 ? trial.vm[ix.pq[par - ix.pv.size() - ix.pq.size()]]
                                 : trial.va[par < static_cast<int>(ix.pv.size())
                                                ? ix.pv[par]
                                                : ix.pq[par - ix.pv.size()]]);
            // corrector: Newton on F(x, lambda) with state component `par` pinned
            bool ok = false;
            for (int it = 0; it < sopts.max_iter; ++it) {
                VectorXd mis = mismatch(adm.Y, trial, sched.p(lam_trial), sched.q(lam_trial), ix);
                if (mis.lpNorm<Eigen::Infinity>() < sopts.tol) {
                    ok = true;
                    break;
                }
                MatrixXd Jc(ns + 1, ns + 1);
                Jc.topLeftCorner(ns, ns) = jacobian(adm.Y, trial, ix);
                VectorXd df(ns);
                int k = 0;
                for (int i : ix.pv) df[k++] = sched.p1[i];
                for (int i : ix.pq) df[k++] = sched.p1[i];
                for (int i : ix.pq) df[k++] = sched.q1[i];
                Jc.topRightCorner(ns, 1) = -df;
                Jc.row(ns).setZero();
                Jc(ns, par) = 1.0;
                VectorXd r(ns + 1);
                r.head(ns) = mis;
                r[ns] = 0.0;  // pinned component already at target
                Eigen::PartialPivLU<MatrixXd> luc(Jc);
                VectorXd dx = luc.solve(r);
                if (!dx.allFinite()) break;
                apply_update(trial, dx.head(ns).eval(), ix);
                lam_trial += dx[ns];
                if ((trial.vm.array() <= 0.0).any()) break;
            }
            (void)target;
            if (ok) {
                st = trial;
                lambda = lam_trial;
                traj.points.push_back(to_snapshot(st, lambda));
                stepped = true;
                if (opts.adaptive) h = std::min(h * 1.5, opts.max_step);
                break;
            }
            if (!opts.adaptive) break;
            h *= 0.5;
        }
        if (!stepped) break;                       // corrector exhausted at min step: fold reached
        if (t[ns] < 0 && lambda < traj.lambda_max) break;  // past the nose, heading down
        traj.lambda_max = std::max(traj.lambda_max, lambda);
        if (traj.points.size() > 100000) break;
        if (!opts.adaptive && lambda >= 0 && t[ns] <= 0) break;
    }

    // keep only the upper branch (strictly increasing lambda)
    while (traj.points.size() > 1 && traj.points.back().lambda < traj.lambda_max - 1e-12)
        traj.points.pop_back();
    traj.lambda_max = traj.points.back().lambda;
    const auto [bus, mag] = lowest_voltage_bus(traj.points.back());
    traj.critical_bus_hint = bus;
    (void)mag;
    return traj;
}

std::pair<int, double> lowest_voltage_bus(const PhasorSnapshot& snap) {
    if (snap.v.empty()) throw PowerFlowError("empty snapshot");
    int best = 1;
    double mag = std::abs(snap.v[0]);
    for (int i = 1; i < static_cast<int>(snap.v.size()); ++i) {
        const double m = std::abs(snap.v[i]);
        if (m < mag) {
            mag = m;
            best = i + 1;
        }
    }
    return {best, mag};
}

}  // namespace vsi
