#include "doctest.h"

#include <cmath>

#include "anisosurf/mfbs.hpp"
#include "anisosurf/rng.hpp"
#include "anisosurf/smoothing.hpp"

using namespace anisosurf;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Sheet constant_sheet(double c, int n_per_axis) {
    Sheet s;
    s.id = 0;
    s.points = make_grid(Domain(1.0, 2.0, 1.0, 2.0), n_per_axis, n_per_axis);
    s.values.assign(s.points.size(), c);
    return s;
}

}  // namespace

TEST_CASE("kernel_eval reference values") {
    const KernelSpec box = KernelSpec::boxcar();
    CHECK(kernel_eval(box, 0.0, 0.0) == 0.25);
    CHECK(kernel_eval(box, 1.0, -1.0) == 0.25);  // closed support
    CHECK(kernel_eval(box, 1.5, 0.0) == 0.0);
    CHECK(kernel_eval(box, 0.0, -1.01) == 0.0);

    const KernelSpec biw = KernelSpec::biweight_product();
    CHECK(kernel_eval(biw, 0.0, 0.0) == 0.87890625);  // (15/16)^2
    CHECK(kernel_eval(biw, 1.0, 0.0) == 0.0);
    CHECK(kernel_eval(biw, 0.5, 0.0) ==
          doctest::Approx((15.0 / 16.0) * 0.75 * 0.75 * (15.0 / 16.0)).epsilon(1e-12));
}

TEST_CASE("nw_predict on a single observation returns it") {
    Sheet s;
    s.id = 0;
    s.points = {{1.5, 1.5}};
    s.values = {7.0};
    const NwPrediction p = nw_predict(s, {1.5, 1.5}, 0.1, 0.1, KernelSpec::boxcar());
    CHECK(p.value == 7.0);
    CHECK(p.effective_n == 1);
}

TEST_CASE("nw_predict of a constant sheet is the constant") {
    const Sheet s = constant_sheet(3.25, 6);
    const NwPrediction p = nw_predict(s, {1.5, 1.5}, 0.3, 0.3, KernelSpec::biweight_product());
    CHECK(p.value == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(p.effective_n > 1);
}

TEST_CASE("nw_predict with no mass in the window reports zero weight") {
    Sheet s;
    s.id = 0;
    s.points = {{1.0, 1.0}};
    s.values = {5.0};
    const NwPrediction p = nw_predict(s, {2.0, 2.0}, 0.1, 0.1, KernelSpec::boxcar());
    CHECK(p.value == 0.0);
    CHECK(p.effective_n == 0);
    const NwPrediction empty = nw_predict(Sheet{}, {1.5, 1.5}, 0.1, 0.1, KernelSpec::boxcar());
    CHECK(empty.effective_n == 0);
}

TEST_CASE("nw_predict stays inside the observed value range") {
    Rng rng(55);
    Sheet s;
    s.id = 0;
    double lo = 1e300, hi = -1e300;
    for (int m = 0; m < 200; ++m) {
        s.points.push_back({rng.uniform(1.0, 2.0), rng.uniform(1.0, 2.0)});
        const double y = rng.normal();
        s.values.push_back(y);
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    for (const KernelSpec& k : {KernelSpec::boxcar(), KernelSpec::biweight_product()}) {
        const NwPrediction p = nw_predict(s, {1.4, 1.6}, 0.25, 0.4, k);
        REQUIRE(p.effective_n > 0);
        CHECK(p.value >= lo);
        CHECK(p.value <= hi);
    }
    CHECK_THROWS_AS(nw_predict(s, {1.5, 1.5}, 0.0, 0.1, KernelSpec::boxcar()),
                    std::invalid_argument);
}

TEST_CASE("effective_smoothness reference values") {
    CHECK(effective_smoothness(0.5, 0.5) == doctest::Approx(0.25));
    CHECK(effective_smoothness(0.3, 0.6) == doctest::Approx(0.2));
    CHECK(effective_smoothness(0.3, 0.7) ==
          doctest::Approx(effective_smoothness(0.7, 0.3)).epsilon(1e-14));
    CHECK_THROWS_AS(effective_smoothness(0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(effective_smoothness(0.5, 1.2), std::domain_error);
}

TEST_CASE("optimal_bandwidths symmetric closed form: unit Lambda gives M^(-1/3)") {
    // kappa^2 sigma^2 / (4 c pi H L) = 1 with kappa = sigma = L = 1, H = 1/2
    const double c = 1.0 / (2.0 * kPi);
    const BandwidthPlan plan =
        optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 1.0, 1.0, 1.0, c, 1.0, 1000, 10.0);
    CHECK(plan.lambda1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(plan.omega == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(plan.h1 == doctest::Approx(std::pow(1000.0, -1.0 / 3.0)).epsilon(1e-12));
    CHECK(plan.h2 == doctest::Approx(plan.h1).epsilon(1e-14));
}

TEST_CASE("optimal_bandwidths scale as the rate exponent predicts") {
    const double c = 1.0 / (2.0 * kPi);
    const BandwidthPlan p1 =
        optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 1.0, 1.0, 1.0, c, 1.0, 1000, 10.0);
    const BandwidthPlan p4 =
        optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 1.0, 1.0, 1.0, c, 1.0, 4000, 10.0);
    CHECK(p4.h1 == doctest::Approx(p1.h1 * std::pow(4.0, -1.0 / 3.0)).epsilon(1e-12));

    // anisotropic: m0^{alpha_i} h_i is constant in m0
    const auto alpha = [](double omega, double h) { return omega / ((2.0 * omega + 1.0) * h); };
    double prev1 = 0.0, prev2 = 0.0;
    bool first = true;
    for (int m0 : {100, 1000, 10000}) {
        const BandwidthPlan p =
            optimal_bandwidths({1.5, 1.5}, 0.3, 0.7, 2.0, 0.5, 0.8, 1.0, 2.0, m0, 100.0);
        const double omega = effective_smoothness(0.3, 0.7);
        const double inv1 = std::pow(m0, alpha(omega, 0.3)) * p.h1;
        const double inv2 = std::pow(m0, alpha(omega, 0.7)) * p.h2;
        if (!first) {
            CHECK(inv1 == doctest::Approx(prev1).epsilon(1e-10));
            CHECK(inv2 == doctest::Approx(prev2).epsilon(1e-10));
        }
        prev1 = inv1;
        prev2 = inv2;
        first = false;
    }
}

TEST_CASE("optimal_bandwidths clip at the domain side and validate inputs") {
    const BandwidthPlan p =
        optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 1e-9, 1e-9, 10.0, 0.01, 4.0, 2, 0.5);
    CHECK(p.h1 == 0.5);
    CHECK(p.h2 == 0.5);
    CHECK_THROWS_AS(optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 0.0, 1.0, 1.0, 1.0, 4.0, 10, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 1.0, 1.0, 0.0, 1.0, 4.0, 10, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(optimal_bandwidths({1.5, 1.5}, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 4.0, 0, 1.0),
                    std::domain_error);
}

TEST_CASE("rice_sigma_hat estimates the noise variance on pure-noise sheets") {
    SurfaceDataset ds(Domain(1.0, 2.0, 1.0, 2.0));
    Rng rng(71);
    for (int j = 0; j < 20; ++j) {
        Sheet s;
        s.id = j;
        for (int m = 0; m < 500; ++m) {
            s.points.push_back({rng.uniform(1.0, 2.0), rng.uniform(1.0, 2.0)});
            s.values.push_back(rng.normal());
        }
        ds.sheets.push_back(std::move(s));
    }
    CHECK(rice_sigma_hat(ds) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("rice_sigma_hat vanishes for noiseless smooth sheets") {
    SurfaceDataset ds(Domain(1.0, 2.0, 1.0, 2.0));
    Sheet s = constant_sheet(2.0, 10);
    ds.sheets.push_back(s);
    CHECK(rice_sigma_hat(ds) == 0.0);
    SurfaceDataset tiny(Domain(1.0, 2.0, 1.0, 2.0));
    Sheet single;
    single.id = 0;
    single.points = {{1.5, 1.5}};
    single.values = {1.0};
    tiny.sheets.push_back(single);
    CHECK_THROWS_AS(rice_sigma_hat(tiny), TooFewObservations);
}

TEST_CASE("plan_from_estimate routes the estimate fields by anisotropy labels") {
    RegularityEstimate est;
    est.t = {1.5, 1.5};
    est.h_low = 0.3;
    est.h_high = 0.7;
    est.anisotropic = true;
    est.axis1_is_low = true;
    est.l1[0] = 2.0;
    est.l1[1] = 0.9;
    est.l2[0] = 0.4;
    est.l2[1] = 0.5;
    const KernelSpec kernel = KernelSpec::boxcar();
    const BandwidthPlan plan = plan_from_estimate(est, 0.25, 1.0, kernel, 500, 1.0);
    const BandwidthPlan direct =
        optimal_bandwidths(est.t, 0.3, 0.7, 2.0, 0.5, 0.25, 1.0, kernel.kappa, 500, 1.0);
    CHECK(plan.h1 == direct.h1);
    CHECK(plan.h2 == direct.h2);

    est.axis1_is_low = false;
    const BandwidthPlan swapped = plan_from_estimate(est, 0.25, 1.0, kernel, 500, 1.0);
    const BandwidthPlan direct_swapped =
        optimal_bandwidths(est.t, 0.7, 0.3, 0.4, 0.9, 0.25, 1.0, kernel.kappa, 500, 1.0);
    CHECK(swapped.h1 == direct_swapped.h1);
    CHECK(swapped.h2 == direct_swapped.h2);

    est.anisotropic = false;
    const BandwidthPlan iso = plan_from_estimate(est, 0.25, 1.0, kernel, 500, 1.0);
    const BandwidthPlan direct_iso =
        optimal_bandwidths(est.t, 0.3, 0.3, 2.0, 0.9, 0.25, 1.0, kernel.kappa, 500, 1.0);
    CHECK(iso.h1 == direct_iso.h1);
    CHECK(iso.h2 == direct_iso.h2);
}

TEST_CASE("adaptive_predict of a constant new sheet is the constant") {
    const Domain domain(1.0, 2.0, 1.0, 2.0);
    const int n = 21;
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = 1.0 + i / (n - 1.0);
    const SeparableFactor factor = build_separable_factor(nodes, nodes, 0.5, 0.5);
    const Eigen::MatrixXd w = sample_sheets_separable(factor, 120, 8);
    SurfaceDataset learn(domain);
    learn.noise_known_sigma = 0.0;
    learn.sheets.resize(120);
    const std::vector<Point> grid = make_grid(domain, n, n);
    for (int j = 0; j < 120; ++j) {
        learn.sheets[j].id = j;
        learn.sheets[j].points = grid;
        learn.sheets[j].values.assign(w.row(j).begin(), w.row(j).end());
    }
    // known sigma of zero is degenerate for the plan; use a small positive one
    learn.noise_known_sigma = 0.1;

    RegParams params;
    params.delta = 0.1;
    const Sheet fresh = constant_sheet(4.5, 20);
    const AdaptivePrediction pred =
        adaptive_predict(learn, fresh, {1.5, 1.5}, params, KernelSpec::boxcar(), 1.0);
    REQUIRE(pred.effective_n > 0);
    CHECK(pred.value == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(pred.plan.m0 == static_cast<int>(fresh.points.size()));
    CHECK(pred.plan.sigma2 == doctest::Approx(0.01));

    Sheet empty;
    CHECK_THROWS_AS(
        adaptive_predict(learn, empty, {1.5, 1.5}, params, KernelSpec::boxcar(), 1.0),
        EmptySheet);
}
