#include "doctest.h"

#include <cmath>

#include "anisosurf/mfbs.hpp"
#include "anisosurf/regularity.hpp"

using namespace anisosurf;

namespace {

// Common design around (1.5, 1.5) carrying the four increment endpoints for
// delta = 0.2 plus the point itself.
SurfaceDataset cross_dataset(const std::vector<std::vector<double>>& sheet_values) {
    SurfaceDataset ds(Domain(1.0, 2.0, 1.0, 2.0));
    const std::vector<Point> design = {
        {1.4, 1.5}, {1.6, 1.5}, {1.5, 1.4}, {1.5, 1.6}, {1.5, 1.5}};
    for (std::size_t j = 0; j < sheet_values.size(); ++j) {
        Sheet s;
        s.id = static_cast<std::int64_t>(j);
        s.points = design;
        s.values = sheet_values[j];
        ds.sheets.push_back(s);
    }
    return ds;
}

// Grid dataset sampled from the exact constant-eta sheet law.
SurfaceDataset simulated_grid_dataset(double h1, double h2, int n_sheets,
                                      std::uint64_t seed, int n = 41) {
    const Domain domain(1.0, 2.0, 1.0, 2.0);
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = 1.0 + i / (n - 1.0);
    const SeparableFactor factor = build_separable_factor(nodes, nodes, h1, h2);
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

TEST_CASE("default_delta uses twice the design spacing with a domain floor") {
    SurfaceDataset ds(Domain(1.0, 2.0, 1.0, 2.0));
    Sheet s;
    s.id = 0;
    s.points = make_grid(ds.domain, 21, 21);  // spacing 0.05
    s.values.assign(s.points.size(), 0.0);
    ds.sheets.push_back(s);
    CHECK(default_delta(ds) == doctest::Approx(0.1).epsilon(1e-12));
    SurfaceDataset empty(ds.domain);
    CHECK_THROWS_AS(default_delta(empty), EmptyDataset);
}

TEST_CASE("default_tau is sqrt(delta) floored at 0.05") {
    CHECK(default_tau(0.04) == doctest::Approx(0.2));
    CHECK(default_tau(0.0004) == 0.05);
}

TEST_CASE("RegParams validation rejects out-of-range settings") {
    RegParams p;
    p.validate();
    p.delta = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = RegParams{};
    p.tau = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = RegParams{};
    p.beta_low = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("theta_hat is the mean squared centered increment") {
    const SurfaceDataset ds = cross_dataset({{0.0, 1.0, 0.0, 2.0, 5.0},
                                             {1.0, 4.0, 2.0, 0.0, 5.0}});
    // axis 1 differences: 1 and 3 -> mean of 1, 9 = 5
    CHECK(theta_hat(ds, {1.5, 1.5}, 0.2, 1, ApproxPolicy::nearest()) == doctest::Approx(5.0));
    // axis 2 differences: 2 and 2 -> 4
    CHECK(theta_hat(ds, {1.5, 1.5}, 0.2, 2, ApproxPolicy::nearest()) == doctest::Approx(4.0));
    CHECK(gamma_hat(ds, {1.5, 1.5}, 0.2, ApproxPolicy::nearest()) == doctest::Approx(9.0));
}

TEST_CASE("theta_hat rejects bad axes, scales and boundary points") {
    const SurfaceDataset ds = cross_dataset({{0.0, 1.0, 0.0, 2.0, 5.0}});
    CHECK_THROWS_AS(theta_hat(ds, {1.5, 1.5}, 0.2, 3, ApproxPolicy::nearest()),
                    std::invalid_argument);
    CHECK_THROWS_AS(theta_hat(ds, {1.5, 1.5}, 0.0, 1, ApproxPolicy::nearest()),
                    std::invalid_argument);
    CHECK_THROWS_AS(theta_hat(ds, {1.05, 1.5}, 0.2, 1, ApproxPolicy::nearest()),
                    BoundaryViolation);
}

TEST_CASE("h_low_hat recovers a pure power-law exponent exactly") {
    const double h = 0.35;
    const ValueWithFlag r =
        h_low_hat(2.0 * std::pow(0.01, 2.0 * h), 2.0 * std::pow(0.02, 2.0 * h));
    CHECK_FALSE(r.degenerate);
    CHECK(r.value == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("h_low_hat flags nonpositive gamma as degenerate") {
    const ValueWithFlag r = h_low_hat(2.0 * std::pow(0.01, 0.7), 0.0);
    CHECK(r.degenerate);
    CHECK(r.value == 1.0);
    CHECK(h_low_hat(0.0, 1.0).degenerate);
}

TEST_CASE("h_low_hat clamps to [beta_low, 1]") {
    // decreasing gamma: raw estimate is negative
    CHECK(h_low_hat(1.0, 0.5, 0.05).value == 0.05);
    // gamma growing faster than delta^2: raw estimate exceeds 1
    CHECK(h_low_hat(1.0, 32.0).value == 1.0);
}

TEST_CASE("h_low_hat two-term bias is positive and of order delta^(2 D)") {
    const double delta = 0.01;
    const double g1 = std::pow(delta, 0.6) + std::pow(delta, 1.4);
    const double g2 = std::pow(2.0 * delta, 0.6) + std::pow(2.0 * delta, 1.4);
    const ValueWithFlag r = h_low_hat(g1, g2);
    CHECK(r.value > 0.3);
    CHECK(r.value < 0.3 + std::pow(delta, 0.8));
}

TEST_CASE("alpha_hat is degenerate for a pure power law") {
    const double h = 0.35, delta = 0.01;
    const double g1 = 2.0 * std::pow(delta, 2.0 * h);
    const double g2 = 2.0 * std::pow(2.0 * delta, 2.0 * h);
    const ValueWithFlag r = alpha_hat(g1, g2, h, delta);
    CHECK(r.degenerate);
    CHECK(r.value == 1.0);
}

TEST_CASE("alpha_hat isolates the second-order term") {
    const double delta = 0.01, h = 0.3;
    const double g1 = std::pow(delta, 0.6) + std::pow(delta, 1.4);
    const double g2 = std::pow(2.0 * delta, 0.6) + std::pow(2.0 * delta, 1.4);
    const ValueWithFlag r = alpha_hat(g1, g2, h, delta);
    REQUIRE_FALSE(r.degenerate);
    // alpha = delta^{2 D} (2^{2 D} - 1) with D = 0.4
    const double expect = std::pow(delta, 0.8) * (std::pow(2.0, 0.8) - 1.0);
    CHECK(r.value == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(alpha_hat(g1, g2, h, 0.0), std::invalid_argument);
}

TEST_CASE("d_hat_and_detect recovers the gap from exact alpha power laws") {
    const double d = 0.4, c = 0.7;
    const ValueWithFlag a1{c * std::pow(0.01, 2.0 * d), false};
    const ValueWithFlag a2{c * std::pow(0.02, 2.0 * d), false};
    const DetectResult r = d_hat_and_detect(a1, a2, 0.1);
    CHECK(r.d_raw == doctest::Approx(d).epsilon(1e-12));
    CHECK(r.anisotropic);
}

TEST_CASE("d_hat_and_detect respects degeneracy and the tau threshold") {
    CHECK_FALSE(d_hat_and_detect({1.0, true}, {1.0, true}, 0.1).anisotropic);
    CHECK(d_hat_and_detect({1.0, true}, {1.0, true}, 0.1).d_raw == 0.0);
    // gap 0.05 below tau = 0.1: reported but not flagged
    const ValueWithFlag a1{std::pow(0.01, 0.1), false};
    const ValueWithFlag a2{std::pow(0.02, 0.1), false};
    const DetectResult r = d_hat_and_detect(a1, a2, 0.1);
    CHECK(r.d_raw == doctest::Approx(0.05).epsilon(1e-12));
    CHECK_FALSE(r.anisotropic);
    CHECK(d_hat_and_detect(a1, a2, 0.04).anisotropic);
    CHECK_THROWS_AS(d_hat_and_detect(a1, a2, 0.0), std::invalid_argument);
}

TEST_CASE("detection is monotone in tau") {
    const ValueWithFlag a1{std::pow(0.01, 0.5), false};
    const ValueWithFlag a2{std::pow(0.02, 0.5), false};
    bool prev = true;
    for (double tau = 0.05; tau < 0.9; tau += 0.05) {
        const bool now = d_hat_and_detect(a1, a2, tau).anisotropic;
        CHECK((prev || !now));  // once off it stays off as tau grows
        prev = now;
    }
}

TEST_CASE("l1_hat rescales theta and truncates at beta_high_L") {
    const double h = 0.3, delta = 0.01;
    CHECK(l1_hat(3.0 * std::pow(delta, 2.0 * h), h, delta, 1e6) == doctest::Approx(3.0));
    CHECK(l1_hat(10.0 * std::pow(delta, 2.0 * h), h, delta, 5.0) == 5.0);
    CHECK(l1_hat(0.0, h, delta, 1e6) == 0.0);
    CHECK_THROWS_AS(l1_hat(-1.0, h, delta, 1e6), std::invalid_argument);
    CHECK_THROWS_AS(l1_hat(1.0, h, 0.0, 1e6), std::invalid_argument);
}

TEST_CASE("l2_hat recovers the second constant from a two-term theta") {
    const double delta = 0.01, h = 0.3, d = 0.4;
    const double t1 = std::pow(delta, 0.6) + 4.0 * std::pow(delta, 1.4);
    const double t2 = std::pow(2.0 * delta, 0.6) + 4.0 * std::pow(2.0 * delta, 1.4);
    CHECK(l2_hat(t1, t2, h, d, delta) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("l2_hat is zero when no gap was detected or theta is pure") {
    const double delta = 0.01, h = 0.3;
    CHECK(l2_hat(1.0, 2.0, h, 0.0, delta) == 0.0);
    const double t1 = std::pow(delta, 0.6);
    const double t2 = std::pow(2.0 * delta, 0.6);
    CHECK(l2_hat(t1, t2, h, 0.4, delta) == 0.0);
}

TEST_CASE("v_hat is the mean square with a floor") {
    const SurfaceDataset ds = cross_dataset({{0, 0, 0, 0, 1.0},
                                             {0, 0, 0, 0, -1.0},
                                             {0, 0, 0, 0, 1.0},
                                             {0, 0, 0, 0, -1.0}});
    CHECK(v_hat(ds, {1.5, 1.5}, ApproxPolicy::nearest(), 0.1) == doctest::Approx(1.0));
    const SurfaceDataset zeros = cross_dataset({{0, 0, 0, 0, 0.0}});
    CHECK(v_hat(zeros, {1.5, 1.5}, ApproxPolicy::nearest(), 0.5) == 0.5);
}

TEST_CASE("estimate_from_moments on exact per-axis power laws") {
    RegParams params;
    params.delta = 0.01;
    params.tau = 0.1;
    double theta[2][3];
    for (int s = 0; s < 3; ++s) {
        const double d = params.delta * (1 << s);
        theta[0][s] = 2.0 * std::pow(d, 0.6);  // axis 1: exponent 0.3, constant 2
        theta[1][s] = std::pow(d, 1.4);        // axis 2: exponent 0.7
    }
    const RegularityEstimate est = estimate_from_moments({1.5, 1.5}, theta, 3.0, params);
    CHECK(est.d_hat == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(est.anisotropic);
    CHECK(est.h_low > 0.3);
    CHECK(est.h_low < 0.31);
    CHECK(est.h_high == doctest::Approx(est.h_low + est.d_hat));
    CHECK(est.axis1_is_low);
    CHECK(est.h1_hat == est.h_low);
    CHECK(est.h2_hat == est.h_high);
    CHECK(est.v_hat == 3.0);
    CHECK(est.degenerate_flags.empty());
}

TEST_CASE("estimate_from_moments is scale equivariant") {
    RegParams params;
    params.delta = 0.01;
    params.tau = 0.1;
    double theta[2][3], scaled[2][3];
    const double lambda2 = 9.0;
    for (int s = 0; s < 3; ++s) {
        const double d = params.delta * (1 << s);
        theta[0][s] = 2.0 * std::pow(d, 0.6) + 0.5 * std::pow(d, 1.4);
        theta[1][s] = std::pow(d, 1.4);
        scaled[0][s] = lambda2 * theta[0][s];
        scaled[1][s] = lambda2 * theta[1][s];
    }
    const RegularityEstimate a = estimate_from_moments({1.5, 1.5}, theta, 2.0, params);
    const RegularityEstimate b =
        estimate_from_moments({1.5, 1.5}, scaled, lambda2 * 2.0, params);
    CHECK(b.h_low == doctest::Approx(a.h_low).epsilon(1e-12));
    CHECK(b.d_hat == doctest::Approx(a.d_hat).epsilon(1e-12));
    CHECK(b.anisotropic == a.anisotropic);
    CHECK(b.axis1_is_low == a.axis1_is_low);
    for (int axis = 0; axis < 2; ++axis) {
        CHECK(b.l1[axis] == doctest::Approx(lambda2 * a.l1[axis]).epsilon(1e-10));
        CHECK(b.l2[axis] == doctest::Approx(lambda2 * a.l2[axis]).epsilon(1e-10));
    }
    CHECK(b.v_hat == doctest::Approx(lambda2 * a.v_hat).epsilon(1e-12));
}

TEST_CASE("constant sheets degrade gracefully") {
    std::vector<std::vector<double>> vals(3, std::vector<double>(5, 2.5));
    const SurfaceDataset ds = cross_dataset(vals);
    RegParams params;
    params.delta = 0.2;
    params.tau = 0.1;
    const RegularityEstimate est = estimate_regularity(ds, {1.5, 1.5}, params);
    CHECK(est.degenerate_flags.count(DegenerateFlag::GammaNonpositive) == 1);
    CHECK(est.degenerate_flags.count(DegenerateFlag::AlphaDegenerate) == 1);
    CHECK(est.h_low == 1.0);
    CHECK_FALSE(est.anisotropic);
    CHECK(est.d_hat == 0.0);
    CHECK(est.l1[0] == 0.0);
    CHECK(est.l1[1] == 0.0);
    CHECK(est.v_hat == doctest::Approx(2.5 * 2.5));
}

TEST_CASE("estimate_regularity enforces the interior margin") {
    const SurfaceDataset ds = cross_dataset({{0.0, 1.0, 0.0, 2.0, 5.0}});
    RegParams params;
    params.delta = 0.2;
    CHECK_THROWS_AS(estimate_regularity(ds, {1.1, 1.5}, params), BoundaryViolation);
}

TEST_CASE("isotropic simulated sheets concentrate around H = 1/2") {
    const SurfaceDataset ds = simulated_grid_dataset(0.5, 0.5, 300, 31);
    const DatasetIndex index(ds);
    RegParams params;
    params.delta = 0.05;  // two grid steps of the 41x41 design
    params.tau = 0.1;
    const std::vector<Point> evals = {{1.25, 1.25}, {1.5, 1.5}, {1.75, 1.75},
                                      {1.25, 1.75}, {1.75, 1.25}};
    double mean_h = 0.0;
    int false_alarms = 0;
    for (const Point& t : evals) {
        const RegularityEstimate est = estimate_regularity(index, t, params);
        mean_h += est.h_low;
        if (est.anisotropic) ++false_alarms;
    }
    mean_h /= static_cast<double>(evals.size());
    CHECK(std::abs(mean_h - 0.5) < 0.08);
    CHECK(false_alarms <= 1);
}

TEST_CASE("anisotropic simulated sheets are detected with the right labels") {
    // finer grid than the isotropic test: the low exponent picks up a two-term
    // bias of order delta^{2D}, so delta must be small; averaging over points
    // tames the per-point sampling noise of h_low
    const SurfaceDataset ds = simulated_grid_dataset(0.3, 0.7, 800, 77, 81);
    const DatasetIndex index(ds);
    RegParams params;
    params.delta = 0.025;
    params.tau = 0.1;
    const std::vector<Point> evals = {{1.25, 1.25}, {1.5, 1.5}, {1.75, 1.75},
                                      {1.25, 1.75}, {1.75, 1.25}};
    double mean_h = 0.0;
    for (const Point& t : evals) {
        const RegularityEstimate est = estimate_regularity(index, t, params);
        CHECK(est.anisotropic);
        CHECK(est.axis1_is_low);  // H1 < H2: axis 1 carries the low exponent
        CHECK(est.h1_hat == est.h_low);
        mean_h += est.h_low;
    }
    mean_h /= static_cast<double>(evals.size());
    CHECK(std::abs(mean_h - 0.3) < 0.1);
}

TEST_CASE("estimate_grid and its serial reference agree bitwise") {
    const SurfaceDataset ds = simulated_grid_dataset(0.5, 0.5, 60, 9);
    const DatasetIndex index(ds);
    RegParams params;
    params.delta = 0.05;
    std::vector<Point> pts;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) pts.push_back({1.2 + 0.2 * i, 1.2 + 0.2 * j});
    const auto a = estimate_grid(index, pts, params);
    const auto b = estimate_grid_serial(index, pts, params);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].h_low == b[i].h_low);
        CHECK(a[i].h_high == b[i].h_high);
        CHECK(a[i].d_hat == b[i].d_hat);
        CHECK(a[i].l1[0] == b[i].l1[0]);
        CHECK(a[i].l1[1] == b[i].l1[1]);
        CHECK(a[i].v_hat == b[i].v_hat);
    }
}
