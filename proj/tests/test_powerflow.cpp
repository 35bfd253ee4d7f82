#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "vsi/caseio.hpp"
#include "vsi/powerflow.hpp"

using namespace vsi;
using vsi::testing::data_path;
using vsi::testing::three_bus;
using vsi::testing::two_bus_reactive;

TEST_CASE("two-bus reactive load matches the closed form") {
    const NetworkCase net = two_bus_reactive();
    const PhasorSnapshot snap = solve_power_flow(net, PhasorSnapshot::flat(2));
    const double expect = (1.0 + std::sqrt(0.2)) / 2.0;
    CHECK(std::abs(snap.at(2)) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(std::arg(snap.at(2)) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(max_mismatch(net, snap) < 1e-8);
}

TEST_CASE("solved base case matches an independent solver") {
    const NetworkCase net = load_case(data_path("ieee30.json"));
    SolveOptions opts;
    opts.pinned_q = base_violation_pins(net);
    const PhasorSnapshot snap = solve_power_flow(net, PhasorSnapshot::flat(30), opts);
    // reference magnitudes from a separate dense polar NR implementation
    const struct {
        int bus;
        double vm;
    } ref[] = {{1, 1.06000000}, {2, 1.04313408},  {5, 1.01000000}, {7, 1.00237709},
               {12, 1.05711954}, {14, 1.04228077}, {26, 0.99966079}, {30, 0.99193574}};
    for (const auto& r : ref) CHECK(std::abs(snap.at(r.bus)) == doctest::Approx(r.vm).epsilon(2e-7));
    CHECK(std::arg(snap.at(2)) * 180.0 / M_PI == doctest::Approx(-5.351885).epsilon(1e-4));
    NetworkCase pinned = net;
    Bus& g = pinned.bus(2);
    g.kind = BusKind::PQ;
    g.q_inj = 0.50 - g.q_load;
    CHECK(max_mismatch(pinned, snap) < 1e-6);
}

TEST_CASE("only the bus-2 generator violates its base-case reactive limit") {
    const NetworkCase net = load_case(data_path("ieee30.json"));
    const auto pins = base_violation_pins(net);
    REQUIRE(pins.size() == 1);
    CHECK(pins[0].first == 2);
    CHECK(pins[0].second == doctest::Approx(0.50));
}

TEST_CASE("re-solving from a solution converges immediately") {
    const NetworkCase net = load_case(data_path("ieee30.json"));
    SolveOptions opts;
    opts.pinned_q = base_violation_pins(net);
    const PhasorSnapshot first = solve_power_flow(net, PhasorSnapshot::flat(30), opts);
    opts.max_iter = 2;
    const PhasorSnapshot again = solve_power_flow(net, first, opts);
    for (int d = 1; d <= 30; ++d) CHECK(std::abs(again.at(d) - first.at(d)) < 1e-8);
}

TEST_CASE("non-convergence is reported, not returned") {
    NetworkCase net = two_bus_reactive();
    net.bus(2).q_inj = -2.0;  // far past maximum transfer
    CHECK_THROWS_AS(solve_power_flow(net, PhasorSnapshot::flat(2)), PowerFlowError);
}

TEST_CASE("continuation reaches the 30-bus nose with reactive pinning") {
    const NetworkCase net = load_case(data_path("ieee30.json"));
    CpfOptions opts;
    opts.solve.qlim = QLimitPolicy::BaseViolations;
    const CpfTrajectory traj = continuation_power_flow(net, opts);
    CHECK(traj.lambda_max > 2.7);
    CHECK(traj.lambda_max < 2.9);
    CHECK(traj.critical_bus_hint == 30);
    CHECK(traj.points.front().lambda == 0.0);
    // lambda is nondecreasing after trimming to the upper branch
    for (size_t i = 1; i < traj.points.size(); ++i)
        CHECK(traj.points[i].lambda >= traj.points[i - 1].lambda - 1e-12);
    // every kept point satisfies the scaled power flow
    for (const PhasorSnapshot& p : traj.points) {
        NetworkCase scaled = scale_loads(net, p.lambda);
        const auto pins = base_violation_pins(net);
        for (const auto& [bus, pin] : pins) {
            Bus& b = scaled.bus(bus);
            b.kind = BusKind::PQ;
            b.q_inj = pin - b.q_load;
        }
        CHECK(max_mismatch(scaled, p) < 1e-6);
    }
}

TEST_CASE("adaptive and fixed-step continuation agree on the nose") {
    const NetworkCase net = three_bus(-0.05, -0.05);
    CpfOptions a;
    const double nose_a = continuation_power_flow(net, a).lambda_max;
    CpfOptions f;
    f.adaptive = false;
    f.initial_step = 0.02;
    const double nose_f = continuation_power_flow(net, f).lambda_max;
    CHECK(std::abs(nose_a - nose_f) / nose_a < 0.005);
}

TEST_CASE("lowest voltage bus breaks ties toward the lower id") {
    PhasorSnapshot snap = PhasorSnapshot::flat(4);
    snap.v[1] = Complex(0.9, 0.0);
    snap.v[3] = Complex(0.9, 0.0);
    const auto [bus, vm] = lowest_voltage_bus(snap);
    CHECK(bus == 2);
    CHECK(vm == doctest::Approx(0.9));
}
