#include "vsi/circlevsi.hpp"

#include <cmath>

namespace vsi {

namespace {
constexpr double kDegenerateTol = 1e-9;
}

TParams compute_t_params(const AdmittanceMatrix& Y, int d,
                         const std::map<int, Complex>& neighbor_voltages) {
    const auto& adj = Y.adjacent[d - 1];
    if (neighbor_voltages.size() != adj.size())
        throw CaseError("neighbor voltage set does not match neighbors of bus " +
                        std::to_string(d));
    TParams t;
    t.bus = d;
    const Complex diag = Y.at(d, d);
    t.t1 = diag.real();
    t.t4 = -diag.imag();
    if (std::abs(t.t1) < kDegenerateTol || std::abs(t.t4) < kDegenerateTol)
        throw DegenerateCircleError("degenerate circle at bus " + std::to_string(d) +
                                    " (lossless admittance row)");
    Complex a(0.0, 0.0);
    for (int k : adj) {
        const auto it = neighbor_voltages.find(k);
        if (it == neighbor_voltages.end())
            throw CaseError("missing neighbor voltage for bus " + std::to_string(k));
        a += Y.at(d, k) * it->second;
    }
    t.t2 = a.real();
    t.t3 = a.imag();
    return t;
}

std::pair<CircleGeometry, CircleGeometry> circles_from_t(const TParams& t, double p_d,
                                                         double q_d) {
    const double m2 = t.t2 * t.t2 + t.t3 * t.t3;
    CircleGeometry cp, cq;
    cp.center = {-t.t2 / (2 * t.t1), -t.t3 / (2 * t.t1)};
    cq.center = {t.t3 / (2 * t.t4), -t.t2 / (2 * t.t4)};
    const double rp2 = p_d / t.t1 + m2 / (4 * t.t1 * t.t1);
    const double rq2 = q_d / t.t4 + m2 / (4 * t.t4 * t.t4);
    if (rp2 < 0 || rq2 < 0)
        throw InfeasibleCircleError("negative radicand at bus " + std::to_string(t.bus) +
                                    " (local circle does not exist)");
    cp.radius = std::sqrt(rp2);
    cq.radius = std::sqrt(rq2);
    return {cp, cq};
}

CircleMatrix circle_matrix(const CircleGeometry& geom) {
    const Complex gamma(geom.center[0], geom.center[1]);
    CircleMatrix m;
    m.A = 1.0;
    m.B = -std::conj(gamma);
    m.C = -gamma;
    m.D = std::norm(gamma) - geom.radius * geom.radius;
    return m;
}

DeltaComponents delta_components(const CircleMatrix& cp, const CircleMatrix& cq) {
    // b = -2 center; with B = -conj(center), center = -conj(B)
    const Complex ctr_p = -std::conj(cp.B);
    const Complex ctr_q = -std::conj(cq.B);
    const double bp[2] = {-2 * ctr_p.real(), -2 * ctr_p.imag()};
    const double bq[2] = {-2 * ctr_q.real(), -2 * ctr_q.imag()};
    DeltaComponents d;
    d.delta_p = cp.D - (bp[0] * bp[0] + bp[1] * bp[1]) / 4.0;
    d.delta_q = cq.D - (bq[0] * bq[0] + bq[1] * bq[1]) / 4.0;
    d.delta_pq = (cp.D + cq.D) / 2.0 - (bp[0] * bq[0] + bp[1] * bq[1]) / 4.0;
    d.delta_star = d.delta_p * d.delta_q - d.delta_pq * d.delta_pq;
    return d;
}

double no_load_reference(const NetworkCase& net, int d) {
    const AdmittanceMatrix Y = build_admittance(net);
    std::map<int, Complex> flat;
    for (int k : Y.adjacent[d - 1]) flat[k] = Complex(1.0, 0.0);
    const TParams t = compute_t_params(Y, d, flat);
    const auto [cp, cq] = circles_from_t(t, 0.0, 0.0);
    return delta_components(circle_matrix(cp), circle_matrix(cq)).delta_star;
}

namespace {
Vsi finish(int d, const CircleGeometry& cp, const CircleGeometry& cq, double reference) {
    if (reference <= 0.0) throw CaseError("nonpositive normalization reference");
    const DeltaComponents dc = delta_components(circle_matrix(cp), circle_matrix(cq));
    Vsi v;
    v.bus = d;
    v.raw = dc.delta_star;
    v.reference = reference;
    v.value = dc.delta_star / reference;
    v.negative_flag = v.value < 0.0;
    return v;
}
}  // namespace

Vsi vsi_index(const NetworkCase& net, const AdmittanceMatrix& Y, int d,
              const std::map<int, Complex>& neighbor_voltages, double p_d, double q_d,
              double reference) {
    (void)net;
    const TParams t = compute_t_params(Y, d, neighbor_voltages);
    const auto [cp, cq] = circles_from_t(t, p_d, q_d);
    return finish(d, cp, cq, reference);
}

Vsi pv_bus_vsi(const NetworkCase& net, const AdmittanceMatrix& Y, int d,
               const std::map<int, Complex>& neighbor_voltages, double p_d, double v_spec,
               double reference) {
    (void)net;
    const TParams t = compute_t_params(Y, d, neighbor_voltages);
    const double m2 = t.t2 * t.t2 + t.t3 * t.t3;
    CircleGeometry cp;
    cp.center = {-t.t2 / (2 * t.t1), -t.t3 / (2 * t.t1)};
    const double rp2 = p_d / t.t1 + m2 / (4 * t.t1 * t.t1);
    if (rp2 < 0)
        throw InfeasibleCircleError("negative radicand at bus " + std::to_string(d));
    cp.radius = std::sqrt(rp2);
    CircleGeometry vc;
    vc.center = {0.0, 0.0};
    vc.radius = v_spec;
    return finish(d, cp, vc, reference);
}

Intersection classify_intersection(const CircleGeometry& a, const CircleGeometry& b) {
    const double dx = a.center[0] - b.center[0];
    const double dy = a.center[1] - b.center[1];
    const double d = std::hypot(dx, dy);
    const double scale = std::max({1.0, a.radius, b.radius, d});
    const double tol = 1e-9 * scale;
    const double outer = a.radius + b.radius;
    const double inner = std::abs(a.radius - b.radius);
    if (std::abs(d - outer) < tol || (std::abs(d - inner) < tol && d > tol))
        return Intersection::OnePoint;
    if (d > inner && d < outer) return Intersection::TwoPoints;
    return Intersection::None;
}

double delta_star_of(const CircleGeometry& a, const CircleGeometry& b) {
    return delta_components(circle_matrix(a), circle_matrix(b)).delta_star;
}

}  // namespace vsi
