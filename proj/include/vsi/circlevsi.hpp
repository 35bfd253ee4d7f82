#pragma once

#include <array>
#include <map>

#include "vsi/netmodel.hpp"

namespace vsi {

struct DegenerateCircleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleCircleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The four scalars making the bus's P and Q balance equations circles in its
// own (v_r, v_i) plane:
//   p = t1 (vr^2 + vi^2) + t2 vr + t3 vi
//   q = t4 (vr^2 + vi^2) - t3 vr + t2 vi
// t1, t4 come from the local diagonal admittance entry (shunts and charging
// included so the identities hold on solved cases); t2 + j t3 is the linear
// neighbor-voltage term sum_k Y_dk v_k.
struct TParams {
    int bus = 0;
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
};

struct CircleGeometry {
    std::array<double, 2> center{0.0, 0.0};
    double radius = 0.0;
};

// Hermitian 2x2 circle representation [[A, B], [C, D]], C = conj(B), A = 1 in
// normalized form. D is the constant term; B encodes the center.
struct CircleMatrix {
    double A = 1.0;
    Complex B, C;
    double D = 0.0;
};

struct DeltaComponents {
    int bus = 0;
    double delta_p = 0, delta_q = 0, delta_pq = 0, delta_star = 0;
};

struct Vsi {
    int bus = 0;
    double value = 0;      // raw / reference
    double raw = 0;        // delta_star
    double reference = 0;  // delta_star of the normalization state
    bool negative_flag = false;
};

enum class Intersection { TwoPoints, OnePoint, None };

// Neighbor voltages must cover exactly neighbors(d). Throws
// DegenerateCircleError when |t1| or |t4| < 1e-9 (lossless row).
TParams compute_t_params(const AdmittanceMatrix& Y, int d,
                         const std::map<int, Complex>& neighbor_voltages);

// P-circle and Q-circle for the given injections. Throws
// InfeasibleCircleError on a negative radicand.
std::pair<CircleGeometry, CircleGeometry> circles_from_t(const TParams& t, double p_d, double q_d);

CircleMatrix circle_matrix(const CircleGeometry& geom);

// delta_p = c_p - |b_p|^2/4, delta_q likewise, delta_pq = (c_p + c_q)/2 -
// (b_p . b_q)/4 with b = -2 center and c the constant term;
// delta_star = delta_p delta_q - delta_pq^2. Zero at external tangency.
DeltaComponents delta_components(const CircleMatrix& cp, const CircleMatrix& cq);

// delta_star evaluated at flat neighbor voltages (1 at angle 0) and zero
// injection; a topology constant per bus.
double no_load_reference(const NetworkCase& net, int d);

// Full pipeline: t-params -> circles -> matrices -> deltas, normalized.
Vsi vsi_index(const NetworkCase& net, const AdmittanceMatrix& Y, int d,
              const std::map<int, Complex>& neighbor_voltages, double p_d, double q_d,
              double reference);

// PV-bus variant: the Q circle is replaced by the voltage circle centered at
// the origin with radius v_spec.
Vsi pv_bus_vsi(const NetworkCase& net, const AdmittanceMatrix& Y, int d,
               const std::map<int, Complex>& neighbor_voltages, double p_d, double v_spec,
               double reference);

// Geometric classification by center distance (tolerance 1e-9 scaled).
Intersection classify_intersection(const CircleGeometry& a, const CircleGeometry& b);

// delta_star straight from two geometries (used by property tests and the
// scenario code path that already has geometries in hand).
double delta_star_of(const CircleGeometry& a, const CircleGeometry& b);

}  // namespace vsi
