#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "vsi/netmodel.hpp"

using namespace vsi;
using vsi::testing::three_bus;

TEST_CASE("admittance assembly on the complete triangle") {
    const NetworkCase net = three_bus();
    const AdmittanceMatrix Y = build_admittance(net);
    CHECK(Y.at(3, 3) == Complex(2.0, -1.0));
    CHECK(Y.at(1, 1) == Complex(2.0, -1.0));
    CHECK(Y.at(3, 1) == Complex(-1.0, 0.5));
    CHECK(Y.at(1, 3) == Complex(-1.0, 0.5));
    CHECK(Y.adjacent[2] == std::vector<int>{1, 2});
}

TEST_CASE("shunts and charging land on the diagonal only") {
    NetworkCase net = three_bus();
    net.bus(3).shunt_b = 0.25;
    net.branches[1].charging_b = 0.1;  // branch 1-3
    const AdmittanceMatrix Y = build_admittance(net);
    CHECK(Y.at(3, 3) == Complex(2.0, -1.0 + 0.25 + 0.05));
    CHECK(Y.at(3, 1) == Complex(-1.0, 0.5));
}

TEST_CASE("off-nominal tap divides the from-side diagonal") {
    NetworkCase net = three_bus();
    net.branches[0].tap = 2.0;  // branch 1-2
    const AdmittanceMatrix Y = build_admittance(net);
    CHECK(Y.at(1, 1) == Complex(1.0, -0.5) + Complex(1.0, -0.5) / 4.0);
    CHECK(Y.at(1, 2) == Complex(-0.5, 0.25));
    CHECK(Y.at(2, 1) == Complex(-0.5, 0.25));
    CHECK(Y.at(2, 2) == Complex(2.0, -1.0));
}

TEST_CASE("outaged branches leave the matrix and adjacency") {
    const NetworkCase net = apply_outage(three_bus(), 2, 3);
    const AdmittanceMatrix Y = build_admittance(net);
    CHECK(Y.at(2, 3) == Complex(0.0, 0.0));
    CHECK(Y.at(2, 2) == Complex(1.0, -0.5));
    CHECK(neighbors(net, 2) == std::set<int>{1});
    CHECK_THROWS_AS(apply_outage(net, 2, 3), CaseError);
    CHECK_THROWS_AS(apply_outage(net, 1, 9), CaseError);
}

TEST_CASE("disconnected in-service graph is rejected") {
    NetworkCase net = three_bus();
    net.branches[1].status = BranchStatus::Outaged;
    net.branches[2].status = BranchStatus::Outaged;
    CHECK_THROWS_AS(build_admittance(net), CaseError);
}

TEST_CASE("case validation invariants") {
    NetworkCase net = three_bus();
    net.buses[1].kind = BusKind::Slack;
    CHECK_THROWS_AS(net.validate(), CaseError);

    net = three_bus();
    net.buses[2].id = 7;
    CHECK_THROWS_AS(net.validate(), CaseError);

    net = three_bus();
    net.buses[0].v_spec = 0.0;
    CHECK_THROWS_AS(net.validate(), CaseError);
}

TEST_CASE("load scaling moves loads and non-slack generation together") {
    NetworkCase net = three_bus(-0.1, -0.2);
    net.bus(2).p_inj = 0.3 - 0.1;  // generator of 0.3 behind the load
    net.bus(2).p_load = 0.1;

    const NetworkCase half = scale_loads(net, 0.5);
    CHECK(half.bus(3).p_inj == doctest::Approx(-0.05));
    CHECK(half.bus(3).q_inj == doctest::Approx(-0.1));
    CHECK(half.bus(2).p_inj == doctest::Approx(0.5 * 0.3 - 0.05));
    CHECK(half.bus(2).p_load == doctest::Approx(0.05));

    const NetworkCase none = scale_loads(net, 0.0);
    CHECK(none.bus(3).p_inj == 0.0);
    CHECK(none.bus(3).q_inj == 0.0);
    CHECK(total_load(none) == 0.0);

    CHECK_THROWS_AS(scale_loads(net, -1.0), CaseError);
}

TEST_CASE("directional scaling touches only the chosen loads") {
    NetworkCase net = three_bus(-0.1, 0.0);
    const NetworkCase out = scale_loads_directional(net, 2.0, {3});
    CHECK(out.bus(3).p_inj == doctest::Approx(-0.2));
    CHECK(out.bus(2).p_inj == doctest::Approx(-0.1));
    CHECK(total_load(out) == doctest::Approx(0.3));
    CHECK_THROWS_AS(scale_loads_directional(net, 2.0, {}), CaseError);
}
