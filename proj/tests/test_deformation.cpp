#include "doctest.h"

#include <cmath>

#include "anisosurf/deformation.hpp"
#include "anisosurf/mfbs.hpp"

using namespace anisosurf;

namespace {

// Analytic regularity field of the undeformed sheet with H = (0.3, 0.7):
// v(t) = t1^{2 H1} t2^{2 H2}, the low-exponent axis-1 constant is t2^{2 H2},
// the high-exponent axis-2 constant is t1^{2 H1}, and the cross constants
// vanish because the deformation is the identity.
LocalRegularity oracle_identity_reg(const Point& t) {
    LocalRegularity reg;
    reg.h_low = 0.3;
    reg.h_high = 0.7;
    reg.v = std::pow(t.t1, 0.6) * std::pow(t.t2, 1.4);
    reg.l1[0] = std::pow(t.t2, 1.4);
    reg.l1[1] = 0.0;
    reg.l2[0] = 0.0;
    reg.l2[1] = std::pow(t.t1, 0.6);
    return reg;
}

SurfaceDataset simulated_identity_dataset(int n_sheets, std::uint64_t seed) {
    const Domain domain(1.0, 2.0, 1.0, 2.0);
    const int n = 41;
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = 1.0 + i / (n - 1.0);
    const SeparableFactor factor = build_separable_factor(nodes, nodes, 0.3, 0.7);
    const Eigen::MatrixXd w = sample_sheets_separable(factor, n_sheets, seed);
    SurfaceDataset ds(domain);
    ds.sheets.resize(n_sheets);
    const std::vector<Point> grid = make_grid(domain, n, n);
    for (int j = 0; j < n_sheets; ++j) {
        ds.sheets[j].id = j;
        ds.sheets[j].points = grid;
        ds.sheets[j].values.assign(w.row(j).begin(), w.row(j).end());
    }
    return ds;
}

}  // namespace

TEST_CASE("f_ratio closed-form values and guards") {
    CHECK(f_ratio(4.0, 1.0, 0.5) == doctest::Approx(4.0));
    CHECK(f_ratio(1.0, 4.0, 0.5) == doctest::Approx(0.25));
    CHECK(f_ratio(0.0, 1.0, 0.5) == 0.0);
    CHECK_THROWS_AS(f_ratio(1.0, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(f_ratio(1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(f_ratio(-1.0, 1.0, 0.5), std::domain_error);
}

TEST_CASE("trapezoid_integral reference values") {
    CHECK(trapezoid_integral({1.0, 1.0, 1.0}, 0.5) == doctest::Approx(1.0));
    // linear integrand is integrated exactly
    CHECK(trapezoid_integral({0.0, 0.5, 1.0}, 0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(trapezoid_integral({1.0}, 0.5), TooFewNodes);
    CHECK_THROWS_AS(trapezoid_integral({1.0, 2.0}, 0.0), std::invalid_argument);
}

TEST_CASE("trapezoid_integral converges at second order") {
    const auto integral_of_inverse = [](int n_nodes) {
        std::vector<double> vals(n_nodes);
        const double step = 1.0 / (n_nodes - 1);
        for (int k = 0; k < n_nodes; ++k) vals[k] = 1.0 / (1.0 + step * k);
        return trapezoid_integral(vals, step);
    };
    const double truth = std::log(2.0);
    const double e1 = std::abs(integral_of_inverse(51) - truth);
    const double e2 = std::abs(integral_of_inverse(101) - truth);
    CHECK(e2 < 0.3 * e1);  // doubling the nodes divides the error by about 4
}

TEST_CASE("integration_nodes walk the requested segment, projected inward") {
    const Domain dom(1.0, 2.0, 1.0, 2.0);
    const auto nodes = integration_nodes(1.0, 2.0, 1.5, 1, dom, 0.05, 11);
    REQUIRE(nodes.size() == 11);
    // endpoints projected in by 2 * delta
    CHECK(nodes.front().t1 == doctest::Approx(1.1));
    CHECK(nodes.back().t1 == doctest::Approx(1.9));
    CHECK(nodes[5].t1 == doctest::Approx(1.5));
    for (const Point& p : nodes) CHECK(p.t2 == 1.5);
    // axis 2 moves the second coordinate
    const auto nodes2 = integration_nodes(1.2, 1.8, 1.5, 2, dom, 0.05, 7);
    for (const Point& p : nodes2) CHECK(p.t1 == 1.5);
    CHECK(integration_nodes(1.5, 1.5, 1.5, 1, dom, 0.05, 11).empty());
}

TEST_CASE("anchored point is recovered exactly") {
    const Domain dom(1.0, 2.0, 1.0, 2.0);
    DeformationAnchor anchor;
    anchor.t0 = 1.3;
    anchor.s0 = 1.6;
    anchor.lambda1 = 2.5;
    anchor.lambda2 = 0.75;
    const RegularityField field = oracle_identity_reg;
    const DeformationEstimate e1 =
        a_component_hat(1, field, dom, {1.3, 1.6}, anchor, 1e-6, 51);
    const DeformationEstimate e2 =
        a_component_hat(2, field, dom, {1.3, 1.6}, anchor, 1e-6, 51);
    CHECK(e1.a1_hat == 2.5);
    CHECK(e2.a2_hat == 0.75);
}

TEST_CASE("identity deformation is recovered from the analytic field") {
    const Domain dom(1.0, 2.0, 1.0, 2.0);
    DeformationAnchor anchor;
    anchor.t0 = 1.0;
    anchor.s0 = 1.0;
    anchor.lambda1 = 1.0;
    anchor.lambda2 = 1.0;
    const RegularityField field = oracle_identity_reg;
    for (const Point t : {Point{1.7, 1.4}, Point{1.2, 1.9}, Point{2.0, 2.0}}) {
        const DeformationEstimate e1 = a_component_hat(1, field, dom, t, anchor, 1e-6, 201);
        const DeformationEstimate e2 = a_component_hat(2, field, dom, t, anchor, 1e-6, 201);
        CHECK(e1.a1_hat == doctest::Approx(t.t1).epsilon(1e-5));
        CHECK(e2.a2_hat == doctest::Approx(t.t2).epsilon(1e-5));
        CHECK(e1.quadrature_nodes == 201);
    }
}

TEST_CASE("recovered component is monotone along its axis") {
    const Domain dom(1.0, 2.0, 1.0, 2.0);
    DeformationAnchor anchor;
    anchor.t0 = 1.0;
    anchor.s0 = 1.0;
    const RegularityField field = oracle_identity_reg;
    double prev = 0.0;
    for (double t1 = 1.1; t1 <= 2.0; t1 += 0.2) {
        const double a1 = a_component_hat(1, field, dom, {t1, 1.5}, anchor, 1e-6, 101).a1_hat;
        CHECK(a1 > prev);
        prev = a1;
    }
}

TEST_CASE("a_component_hat validates component, nodes and anchor") {
    const Domain dom(1.0, 2.0, 1.0, 2.0);
    DeformationAnchor anchor;
    anchor.t0 = 1.5;
    anchor.s0 = 1.5;
    const RegularityField field = oracle_identity_reg;
    CHECK_THROWS_AS(a_component_hat(3, field, dom, {1.5, 1.5}, anchor, 1e-6, 51),
                    std::invalid_argument);
    CHECK_THROWS_AS(a_component_hat(1, field, dom, {1.5, 1.5}, anchor, 1e-6, 1), TooFewNodes);
    DeformationAnchor outside = anchor;
    outside.t0 = 5.0;
    CHECK_THROWS_AS(a_component_hat(1, field, dom, {1.5, 1.5}, outside, 1e-6, 51),
                    std::invalid_argument);
    DeformationAnchor bad_scale = anchor;
    bad_scale.lambda1 = 0.0;
    CHECK_THROWS_AS(a_component_hat(1, field, dom, {1.5, 1.5}, bad_scale, 1e-6, 51),
                    std::invalid_argument);
}

TEST_CASE("DataRegularityField caches node estimates deterministically") {
    const SurfaceDataset ds = simulated_identity_dataset(120, 5);
    const DatasetIndex index(ds);
    RegParams params;
    params.delta = 0.05;
    const DataRegularityField field(index, params);
    const LocalRegularity a = field({1.5, 1.5});
    const LocalRegularity b = field({1.5, 1.5});
    CHECK(a.h_low == b.h_low);
    CHECK(a.v == b.v);
    CHECK(a.h_low > 0.0);
    CHECK(a.v > 0.0);
}

TEST_CASE("a1_hat from simulated data lands near the identity") {
    const SurfaceDataset ds = simulated_identity_dataset(800, 23);
    RegParams params;
    params.delta = 0.05;
    params.tau = 0.1;
    DeformationAnchor anchor;
    anchor.t0 = 1.5;
    anchor.s0 = 1.5;
    anchor.lambda1 = 1.5;
    anchor.lambda2 = 1.5;
    const Point t{1.7, 1.4};
    const DeformationEstimate e1 = a1_hat(ds, t, anchor, params, 61);
    CHECK(std::abs(e1.a1_hat - t.t1) / t.t1 < 0.2);
}
