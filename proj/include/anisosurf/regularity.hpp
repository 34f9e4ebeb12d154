#pragma once

#include <set>

#include "anisosurf/approx.hpp"
#include "anisosurf/types.hpp"

namespace anisosurf {

struct RegParams {
    double delta = 0.05;       // increment half-scale
    double tau = 0.1;          // anisotropy detection threshold
    double beta_low = 0.05;    // lower truncation for H_low
    double beta_high_L = 100.0;  // upper truncation for the L1 components
    double v_floor = 1e-6;     // lower truncation for the variance estimate
    ApproxPolicy policy;

    void validate() const {
        if (!(delta > 0.0)) throw std::invalid_argument("RegParams: delta must be > 0");
        if (!(tau > 0.0 && tau < 1.0))
            throw std::invalid_argument("RegParams: tau must lie in (0,1)");
        if (!(beta_low > 0.0) || !(beta_low < 1.0))
            throw std::invalid_argument("RegParams: beta_low must lie in (0,1)");
        if (!(beta_high_L > 0.0))
            throw std::invalid_argument("RegParams: beta_high_L must be > 0");
        if (!(v_floor > 0.0)) throw std::invalid_argument("RegParams: v_floor must be > 0");
        policy.validate();
    }
};

// Twice the median nearest-neighbor spacing along each axis, floored at
// (domain side)/50.
double default_delta(const SurfaceDataset& dataset);

// max(0.05, sqrt(delta))
double default_tau(double delta);

enum class DegenerateFlag { GammaNonpositive, AlphaDegenerate, DhatZero };

struct RegularityEstimate {
    Point t;
    double h_low = 1.0;       // clamped to [beta_low, 1]
    double d_hat = 0.0;       // pre-gating exponent gap, >= 0
    bool anisotropic = false;
    double h_high = 1.0;      // h_low + d_hat * [anisotropic]
    double h1_hat = 1.0, h2_hat = 1.0;  // axis-labeled (convention, see below)
    double l1[2] = {0.0, 0.0};          // L1 components, axes 1 and 2
    double l2[2] = {0.0, 0.0};          // L2 components, axes 1 and 2
    double gamma_values[2] = {0.0, 0.0};     // gamma at delta, 2*delta
    double theta_values[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [axis][delta, 2*delta]
    double v_hat = 0.0;
    std::set<DegenerateFlag> degenerate_flags;
    bool axis1_is_low = true;  // which axis label carries h_low
};

// Mean of squared approximated increments across sheets along axis (1 or 2).
double theta_hat(const DatasetIndex& index, const Point& t, double delta, int axis,
                 const ApproxPolicy& policy);
double theta_hat(const SurfaceDataset& dataset, const Point& t, double delta, int axis,
                 const ApproxPolicy& policy);

double gamma_hat(const DatasetIndex& index, const Point& t, double delta,
                 const ApproxPolicy& policy);
double gamma_hat(const SurfaceDataset& dataset, const Point& t, double delta,
                 const ApproxPolicy& policy);

struct ValueWithFlag {
    double value = 1.0;
    bool degenerate = false;
};

// [log gamma(2D) - log gamma(D)] / (2 log 2), clamped to [beta_low, 1];
// (1, degenerate) when either input is <= 0.
ValueWithFlag h_low_hat(double gamma_d, double gamma_2d, double beta_low = 0.05);

// |gamma(2D)/(2D)^{2H} - gamma(D)/D^{2H}|; (1, degenerate) when the rescaled
// values agree to 1e-14 relative.
ValueWithFlag alpha_hat(double gamma_d, double gamma_2d, double h_low, double delta);

struct DetectResult {
    double d_raw = 0.0;
    bool anisotropic = false;
};

// D = [log alpha(2D) - log alpha(D)] / (2 log 2); gated at tau. Degenerate
// alphas or nonpositive log-ratio give (0, false).
DetectResult d_hat_and_detect(const ValueWithFlag& alpha_d, const ValueWithFlag& alpha_2d,
                              double tau);

// min(theta / delta^{2 h_low}, beta_high_L)
double l1_hat(double theta_d, double h_low, double delta, double beta_high_L);

// |theta(2D)/(2D)^{2H1} - theta(D)/D^{2H1}| / [(2^{2D}-1) D^{2D}]; 0 when
// d_raw == 0.
double l2_hat(double theta_d, double theta_2d, double h_low, double d_raw, double delta);

// max(v_floor, mean of X~^2 at t across sheets)
double v_hat(const DatasetIndex& index, const Point& t, const ApproxPolicy& policy,
             double v_floor);
double v_hat(const SurfaceDataset& dataset, const Point& t, const ApproxPolicy& policy,
             double v_floor);

// Estimator arithmetic alone: theta[axis][scale] holds the increment second
// moments at scales delta, 2*delta, 4*delta, v_mean is the pre-floor mean of
// X~(t)^2. estimate_regularity is this applied to moments measured from data;
// batch pipelines that maintain running moments call it directly.
RegularityEstimate estimate_from_moments(const Point& t, const double theta[2][3],
                                         double v_mean, const RegParams& params);

// Full per-location pipeline. Axis labels follow the convention that the axis
// with the larger rescaled theta(D)/D^{2 h_low} carries h_low; only
// (h_low, h_high) are identified quantities.
RegularityEstimate estimate_regularity(const DatasetIndex& index, const Point& t,
                                       const RegParams& params);
RegularityEstimate estimate_regularity(const SurfaceDataset& dataset, const Point& t,
                                       const RegParams& params);

// Batch evaluation over a point grid; parallel and serial reference versions
// produce identical results.
std::vector<RegularityEstimate> estimate_grid(const DatasetIndex& index,
                                              const std::vector<Point>& points,
                                              const RegParams& params);
std::vector<RegularityEstimate> estimate_grid_serial(const DatasetIndex& index,
                                                     const std::vector<Point>& points,
                                                     const RegParams& params);

}  // namespace anisosurf
