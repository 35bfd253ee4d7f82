#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "vsi/caseio.hpp"
#include "vsi/circlevsi.hpp"
#include "vsi/powerflow.hpp"

using namespace vsi;
using vsi::testing::data_path;
using vsi::testing::three_bus;

namespace {
std::map<int, Complex> flat_neighbors(const AdmittanceMatrix& Y, int d) {
    std::map<int, Complex> nv;
    for (int k : Y.adjacent[d - 1]) nv[k] = Complex(1.0, 0.0);
    return nv;
}
}  // namespace

TEST_CASE("t-parameters on the complete triangle at flat voltages") {
    const NetworkCase net = three_bus();
    const AdmittanceMatrix Y = build_admittance(net);
    const TParams t = compute_t_params(Y, 3, flat_neighbors(Y, 3));
    CHECK(t.t1 == doctest::Approx(2.0));
    CHECK(t.t2 == doctest::Approx(-2.0));
    CHECK(t.t3 == doctest::Approx(1.0));
    CHECK(t.t4 == doctest::Approx(1.0));
}

TEST_CASE("zero neighbor voltages zero the linear terms only") {
    const NetworkCase net = three_bus();
    const AdmittanceMatrix Y = build_admittance(net);
    std::map<int, Complex> nv = {{1, {0, 0}}, {2, {0, 0}}};
    const TParams t = compute_t_params(Y, 3, nv);
    CHECK(t.t2 == 0.0);
    CHECK(t.t3 == 0.0);
    CHECK(t.t1 == doctest::Approx(2.0));
    CHECK(t.t4 == doctest::Approx(1.0));
}

TEST_CASE("neighbor set mismatches are rejected") {
    const NetworkCase net = three_bus();
    const AdmittanceMatrix Y = build_admittance(net);
    std::map<int, Complex> too_few = {{1, {1, 0}}};
    CHECK_THROWS_AS(compute_t_params(Y, 3, too_few), CaseError);
    std::map<int, Complex> wrong = {{1, {1, 0}}, {9, {1, 0}}};
    CHECK_THROWS_AS(compute_t_params(Y, 3, wrong), CaseError);
}

TEST_CASE("lossless rows are degenerate") {
    NetworkCase net = three_bus();
    for (Branch& br : net.branches) br.series_admittance = Complex(0.0, -5.0);
    const AdmittanceMatrix Y = build_admittance(net);
    CHECK_THROWS_AS(compute_t_params(Y, 3, flat_neighbors(Y, 3)), DegenerateCircleError);
}

TEST_CASE("circle construction from the triangle t-parameters") {
    TParams t;
    t.t1 = 2;
    t.t2 = -2;
    t.t3 = 1;
    t.t4 = 1;
    const auto [cp, cq] = circles_from_t(t, 0.0, 0.0);
    CHECK(cp.center[0] == doctest::Approx(0.5));
    CHECK(cp.center[1] == doctest::Approx(-0.25));
    CHECK(cp.radius == doctest::Approx(std::sqrt(5.0 / 16.0)));
    CHECK(cq.center[0] == doctest::Approx(0.5));
    CHECK(cq.center[1] == doctest::Approx(1.0));
    CHECK(cq.radius == doctest::Approx(std::sqrt(5.0 / 4.0)));

    // the known common point: both circles pass through the flat solution
    for (const CircleGeometry& c : {cp, cq}) {
        const double d = std::hypot(1.0 - c.center[0], 0.0 - c.center[1]);
        CHECK(d == doctest::Approx(c.radius).epsilon(1e-12));
    }

    CHECK_THROWS_AS(circles_from_t(t, -10.0, 0.0), InfeasibleCircleError);
}

TEST_CASE("matrix form encodes center and radius") {
    CircleGeometry g;
    g.center = {0.3, -0.7};
    g.radius = 1.25;
    const CircleMatrix m = circle_matrix(g);
    CHECK(m.A == 1.0);
    CHECK(m.B == Complex(-0.3, -0.7));
    CHECK(m.C == std::conj(m.B));
    CHECK(m.D == doctest::Approx(0.09 + 0.49 - 1.25 * 1.25));
    // det = AD - BC = -radius^2
    const double det = m.A * m.D - (m.B * m.C).real();
    CHECK(det == doctest::Approx(-g.radius * g.radius));
}

TEST_CASE("delta components on the no-load triangle") {
    TParams t;
    t.t1 = 2;
    t.t2 = -2;
    t.t3 = 1;
    t.t4 = 1;
    const auto [cp, cq] = circles_from_t(t, 0.0, 0.0);
    const DeltaComponents d = delta_components(circle_matrix(cp), circle_matrix(cq));
    CHECK(d.delta_p == doctest::Approx(-5.0 / 16.0));
    CHECK(d.delta_q == doctest::Approx(-5.0 / 4.0));
    CHECK(d.delta_pq == doctest::Approx(0.0));
    CHECK(d.delta_star == doctest::Approx(25.0 / 64.0));
    CHECK(no_load_reference(three_bus(), 3) == doctest::Approx(25.0 / 64.0));
}

TEST_CASE("30-bus no-load references match an independent implementation") {
    const NetworkCase net = load_case(data_path("ieee30.json"));
    CHECK(no_load_reference(net, 30) == doctest::Approx(0.364972297755).epsilon(1e-9));
    CHECK(no_load_reference(net, 14) == doctest::Approx(0.273218815064).epsilon(1e-9));
}

TEST_CASE("30-bus base-case t-parameters and index match an independent implementation") {
    const NetworkCase net = load_case(data_path("ieee30.json"));
    const AdmittanceMatrix Y = build_admittance(net);
    SolveOptions opts;
    opts.pinned_q = base_violation_pins(net);
    const PhasorSnapshot snap = solve_power_flow(net, PhasorSnapshot::flat(30), opts);
    std::map<int, Complex> nv;
    for (int k : Y.adjacent[29]) nv[k] = snap.at(k);
    const TParams t = compute_t_params(Y, 30, nv);
    CHECK(t.t1 == doctest::Approx(1.5995091099).epsilon(1e-8));
    CHECK(t.t2 == doctest::Approx(-0.7001559494).epsilon(1e-6));
    CHECK(t.t3 == doctest::Approx(3.3838866209).epsilon(1e-6));
    CHECK(t.t4 == doctest::Approx(3.0173300556).epsilon(1e-8));
    const Vsi v = vsi_index(net, Y, 30, nv, net.bus(30).p_inj, net.bus(30).q_inj,
                            no_load_reference(net, 30));
    CHECK(v.raw == doctest::Approx(0.352615555691).epsilon(1e-6));
    CHECK(v.value == doctest::Approx(0.966143342550).epsilon(1e-6));
    CHECK_FALSE(v.negative_flag);
}

TEST_CASE("intersection classification") {
    CircleGeometry a, b;
    a.center = {0, 0};
    a.radius = 1.0;
    b.radius = 1.0;

    b.center = {1.0, 0.0};
    CHECK(classify_intersection(a, b) == Intersection::TwoPoints);
    b.center = {2.0, 0.0};
    CHECK(classify_intersection(a, b) == Intersection::OnePoint);
    b.center = {3.0, 0.0};
    CHECK(classify_intersection(a, b) == Intersection::None);

    // internal tangency and containment
    b.radius = 0.25;
    b.center = {0.75, 0.0};
    CHECK(classify_intersection(a, b) == Intersection::OnePoint);
    b.center = {0.25, 0.0};
    CHECK(classify_intersection(a, b) == Intersection::None);
    // concentric
    b.center = {0.0, 0.0};
    CHECK(classify_intersection(a, b) == Intersection::None);
}

TEST_CASE("delta_star sign tracks the classification") {
    CircleGeometry a, b;
    a.center = {0, 0};
    a.radius = 1.0;
    b.radius = 1.0;
    b.center = {1.5, 0.0};
    CHECK(delta_star_of(a, b) > 0);
    b.center = {2.5, 0.0};
    CHECK(delta_star_of(a, b) < 0);
    b.center = {2.0, 0.0};
    CHECK(std::abs(delta_star_of(a, b)) < 1e-12);
}
