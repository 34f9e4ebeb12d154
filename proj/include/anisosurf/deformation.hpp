#pragma once

#include <mutex>
#include <unordered_map>

#include "anisosurf/regularity.hpp"

namespace anisosurf {

struct DeformationAnchor {
    double t0 = 0.0, s0 = 0.0;      // anchor location in the domain
    double lambda1 = 1.0, lambda2 = 1.0;  // A1, A2 at the anchor

    void validate(const Domain& domain) const {
        if (!domain.contains({t0, s0}))
            throw std::invalid_argument("DeformationAnchor: anchor outside the domain");
        if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
            throw std::invalid_argument("DeformationAnchor: lambdas must be > 0");
    }
};

struct DeformationEstimate {
    Point t;
    double a1_hat = 0.0;  // filled by the A1 path
    double a2_hat = 0.0;  // filled by the A2 path
    int quadrature_nodes = 0;
    std::vector<double> f_values, g_values;  // integrand diagnostics
};

// Local regularity snapshot consumed by the estimating-equation integrands.
struct LocalRegularity {
    double h_low = 0.5, h_high = 0.5;
    double l1[2] = {0.0, 0.0};
    double l2[2] = {0.0, 0.0};
    double v = 1.0;
};

using RegularityField = std::function<LocalRegularity(const Point&)>;

// (l/v)^{1/(2h)}; l == 0 maps to 0.
double f_ratio(double l_hat, double v_hat, double h_hat);

// Composite trapezoid over equispaced values.
double trapezoid_integral(const std::vector<double>& values, double step);

// The quadrature nodes one path integral evaluates: n_nodes equispaced points
// from `from` to `to` along `moving_axis` at `fixed_other`, each projected
// into the interior margin. Exposed so batch pipelines can precompute
// regularity at exactly these locations.
std::vector<Point> integration_nodes(double from, double to, double fixed_other,
                                     int moving_axis, const Domain& domain, double delta,
                                     int n_nodes);

// Estimating-equation exponentials; `component` selects (f1,g1,H_low,L1) or
// (f2,g2,H_high,L2). Quadrature nodes outside the interior margin are
// projected inward.
DeformationEstimate a_component_hat(int component, const RegularityField& field,
                                    const Domain& domain, const Point& t,
                                    const DeformationAnchor& anchor, double delta_margin,
                                    int n_nodes);

DeformationEstimate a1_hat(const SurfaceDataset& dataset, const Point& t,
                           const DeformationAnchor& anchor, const RegParams& params,
                           int n_nodes = 101);
DeformationEstimate a2_hat(const SurfaceDataset& dataset, const Point& t,
                           const DeformationAnchor& anchor, const RegParams& params,
                           int n_nodes = 101);

// Regularity field backed by the estimators, with a concurrent node cache so
// integration paths sharing nodes pay for each node once.
class DataRegularityField {
public:
    DataRegularityField(const DatasetIndex& index, const RegParams& params)
        : index_(&index), params_(params) {
        params_.validate();
    }

    LocalRegularity operator()(const Point& t) const;
    const RegParams& params() const { return params_; }

private:
    const DatasetIndex* index_;
    RegParams params_;

    mutable std::mutex mutex_;
    mutable std::unordered_map<std::uint64_t, LocalRegularity> cache_;
};

}  // namespace anisosurf
