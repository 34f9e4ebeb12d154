#include "anisosurf/smoothing.hpp"

#include <cmath>

namespace anisosurf {

double kernel_eval(const KernelSpec& spec, double u1, double u2) {
    if (std::abs(u1) > 1.0 || std::abs(u2) > 1.0) return 0.0;
    if (spec.kind == KernelSpec::Kind::Boxcar) return 0.25;
    const double a = 1.0 - u1 * u1;
    const double b = 1.0 - u2 * u2;
    const double c = 15.0 / 16.0;
    return (c * a * a) * (c * b * b);
}

NwPrediction nw_predict(const Sheet& obs, const Point& t, double h1, double h2,
                        const KernelSpec& kernel) {
    if (!(h1 > 0.0) || !(h2 > 0.0))
        throw std::invalid_argument("nw_predict: bandwidths must be > 0");
    double num = 0.0, den = 0.0;
    int n = 0;
    for (std::size_t m = 0; m < obs.points.size(); ++m) {
        const double w = kernel_eval(kernel, (obs.points[m].t1 - t.t1) / h1,
                                     (obs.points[m].t2 - t.t2) / h2);
        if (w > 0.0) {
            num += obs.values[m] * w;
            den += w;
            ++n;
        }
    }
    if (den == 0.0) return {0.0, 0};
    return {num / den, n};
}

double effective_smoothness(double h1_exp, double h2_exp) {
    if (!(h1_exp > 0.0 && h1_exp <= 1.0) || !(h2_exp > 0.0 && h2_exp <= 1.0))
        throw std::domain_error("effective_smoothness: exponents must lie in (0,1]");
    return h1_exp * h2_exp / (h1_exp + h2_exp);
}

BandwidthPlan optimal_bandwidths(const Point& t, double h1_exp, double h2_exp, double l1,
                                 double l2, double sigma2, double c_density, double kappa,
                                 int m0, double domain_side) {
    if (!(l1 > 0.0) || !(l2 > 0.0))
        throw std::domain_error("optimal_bandwidths: Hoelder constants must be > 0");
    if (!(sigma2 > 0.0)) throw std::domain_error("optimal_bandwidths: sigma2 must be > 0");
    if (!(c_density > 0.0)) throw std::domain_error("optimal_bandwidths: c must be > 0");
    if (!(kappa > 0.0)) throw std::domain_error("optimal_bandwidths: kappa must be > 0");
    if (m0 < 1) throw std::domain_error("optimal_bandwidths: m0 must be >= 1");
    if (!(domain_side > 0.0))
        throw std::domain_error("optimal_bandwidths: domain side must be > 0");

    BandwidthPlan plan;
    plan.t = t;
    plan.h1_exp = h1_exp;
    plan.h2_exp = h2_exp;
    plan.l1 = l1;
    plan.l2 = l2;
    plan.sigma2 = sigma2;
    plan.c_density = c_density;
    plan.m0 = m0;
    plan.omega = effective_smoothness(h1_exp, h2_exp);

    constexpr double kPi = 3.141592653589793238462643383279502884;
    plan.lambda1 = kappa * kappa * sigma2 / (4.0 * c_density * kPi * h1_exp * l1);
    plan.lambda2 = kappa * kappa * sigma2 / (4.0 * c_density * kPi * h2_exp * l2);

    const double script_h = 2.0 * h1_exp * h2_exp + h1_exp + h2_exp;
    const double alpha1 = plan.omega / ((2.0 * plan.omega + 1.0) * h1_exp);
    const double alpha2 = plan.omega / ((2.0 * plan.omega + 1.0) * h2_exp);
    const double m = static_cast<double>(m0);

    double h1 = std::pow(m, -alpha1) *
                std::pow(std::pow(plan.lambda1, 2.0 * h2_exp + 1.0) / plan.lambda2,
                         1.0 / (2.0 * script_h));
    double h2 = std::pow(m, -alpha2) *
                std::pow(std::pow(plan.lambda2, 2.0 * h1_exp + 1.0) / plan.lambda1,
                         1.0 / (2.0 * script_h));
    plan.h1 = std::min(h1, domain_side);
    plan.h2 = std::min(h2, domain_side);
    return plan;
}

double rice_sigma_hat(const SurfaceDataset& dataset) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Sheet& sheet : dataset.sheets) {
        if (sheet.points.size() < 2) continue;
        SpatialIndex index(sheet.points);
        for (std::size_t m = 0; m < sheet.points.size(); ++m) {
            const std::size_t nn = index.nearest_excluding(sheet.points[m], m);
            const double d = sheet.values[m] - sheet.values[nn];
            sum += d * d;
            ++count;
        }
    }
    if (count == 0)
        throw TooFewObservations("rice_sigma_hat: no sheet has 2 or more observations");
    return std::max(0.5 * sum / static_cast<double>(count), 0.0);
}

BandwidthPlan plan_from_estimate(const RegularityEstimate& est, double sigma2,
                                 double c_density, const KernelSpec& kernel, int m0,
                                 double domain_side) {
    double h1_exp, h2_exp, l1, l2;
    if (!est.anisotropic) {
        // isotropic plan: common exponent, L1 components carry the sums
        h1_exp = h2_exp = est.h_low;
        l1 = est.l1[0];
        l2 = est.l1[1];
    } else if (est.axis1_is_low) {
        h1_exp = est.h_low;
        l1 = est.l1[0];
        h2_exp = est.h_high;
        l2 = est.l2[1];
    } else {
        h1_exp = est.h_high;
        l1 = est.l2[0];
        h2_exp = est.h_low;
        l2 = est.l1[1];
    }
    return optimal_bandwidths(est.t, h1_exp, h2_exp, l1, l2, sigma2, c_density,
                              kernel.kappa, m0, domain_side);
}

AdaptivePrediction adaptive_predict(const DatasetIndex& learn_index, const Sheet& new_sheet,
                                    const Point& t, const RegParams& params,
                                    const KernelSpec& kernel, double c_density) {
    if (new_sheet.points.empty()) throw EmptySheet("adaptive_predict: empty new sheet");
    const RegularityEstimate est = estimate_regularity(learn_index, t, params);
    const SurfaceDataset& learn = learn_index.dataset();
    const double sigma2 = learn.noise_known_sigma
                              ? (*learn.noise_known_sigma) * (*learn.noise_known_sigma)
                              : rice_sigma_hat(learn);
    const BandwidthPlan plan =
        plan_from_estimate(est, sigma2, c_density, kernel,
                           static_cast<int>(new_sheet.points.size()), learn.domain.side());
    const NwPrediction pred = nw_predict(new_sheet, t, plan.h1, plan.h2, kernel);
    return {pred.value, pred.effective_n, plan};
}

AdaptivePrediction adaptive_predict(const SurfaceDataset& learn, const Sheet& new_sheet,
                                    const Point& t, const RegParams& params,
                                    const KernelSpec& kernel, double c_density) {
    return adaptive_predict(DatasetIndex(learn), new_sheet, t, params, kernel, c_density);
}

}  // namespace anisosurf
