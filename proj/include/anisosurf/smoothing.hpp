#pragma once

#include "anisosurf/regularity.hpp"

namespace anisosurf {

struct KernelSpec {
    enum class Kind { Boxcar, BiweightProduct };
    Kind kind = Kind::Boxcar;
    double kappa = 4.0;         // LP-style envelope bound
    double inner_radius_r = 1.0;

    static KernelSpec boxcar() { return {}; }
    static KernelSpec biweight_product() {
        // max value (15/16)^2; 1/kappa <= K on the ball of radius 1/2
        return {Kind::BiweightProduct, 2.03, 0.5};
    }
};

double kernel_eval(const KernelSpec& spec, double u1, double u2);

struct NwPrediction {
    double value = 0.0;
    int effective_n = 0;  // observations with positive weight
};

// Kernel-weighted average with bandwidth matrix diag(1/h1, 1/h2); an empty
// window returns (0, 0) (the 0/0 = 0 rule).
NwPrediction nw_predict(const Sheet& obs, const Point& t, double h1, double h2,
                        const KernelSpec& kernel);

// omega = H1 H2 / (H1 + H2)
double effective_smoothness(double h1_exp, double h2_exp);

struct BandwidthPlan {
    Point t;
    double h1 = 0.0, h2 = 0.0;
    double omega = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    double sigma2 = 0.0;
    double c_density = 1.0;
    int m0 = 0;
    double h1_exp = 0.5, h2_exp = 0.5;  // exponents the plan was built from
    double l1 = 0.0, l2 = 0.0;
};

// Rate-optimal bandwidths from the plug-in quantities; results are clipped
// to (0, domain_side].
BandwidthPlan optimal_bandwidths(const Point& t, double h1_exp, double h2_exp, double l1,
                                 double l2, double sigma2, double c_density, double kappa,
                                 int m0, double domain_side);

// Pooled first-difference noise variance: half the mean squared gap between
// each observation and its nearest in-sheet neighbor.
double rice_sigma_hat(const SurfaceDataset& dataset);

struct AdaptivePrediction {
    double value = 0.0;
    int effective_n = 0;
    BandwidthPlan plan;
};

// Plug-in pipeline: local regularity from the learning set, bandwidths from
// the corollary formulas with M0 = |new_sheet|, then NW on the new sheet.
AdaptivePrediction adaptive_predict(const SurfaceDataset& learn, const Sheet& new_sheet,
                                    const Point& t, const RegParams& params,
                                    const KernelSpec& kernel, double c_density);
AdaptivePrediction adaptive_predict(const DatasetIndex& learn_index, const Sheet& new_sheet,
                                    const Point& t, const RegParams& params,
                                    const KernelSpec& kernel, double c_density);

// Bandwidth plan from a regularity estimate (the plug-in step of
// adaptive_predict, exposed for auditing and for oracle bypass tests).
BandwidthPlan plan_from_estimate(const RegularityEstimate& est, double sigma2,
                                 double c_density, const KernelSpec& kernel, int m0,
                                 double domain_side);

}  // namespace anisosurf
