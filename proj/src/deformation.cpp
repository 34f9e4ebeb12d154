#include "anisosurf/deformation.hpp"

#include <cmath>

namespace anisosurf {

double f_ratio(double l_hat, double v_hat, double h_hat) {
    if (!(v_hat > 0.0)) throw std::domain_error("f_ratio: v must be > 0");
    if (!(h_hat > 0.0)) throw std::domain_error("f_ratio: h must be > 0");
    if (l_hat == 0.0) return 0.0;
    if (l_hat < 0.0) throw std::domain_error("f_ratio: l must be >= 0");
    return std::pow(l_hat / v_hat, 1.0 / (2.0 * h_hat));
}

double trapezoid_integral(const std::vector<double>& values, double step) {
    if (values.size() < 2) throw TooFewNodes("trapezoid_integral: need at least 2 nodes");
    if (!(step > 0.0)) throw std::invalid_argument("trapezoid_integral: step must be > 0");
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
    return sum * step;
}

namespace {

// Project a coordinate inward so the 2*delta increment neighborhood fits.
double project_inward(double x, double lo, double hi, double delta) {
    return std::clamp(x, lo + 2.0 * delta, hi - 2.0 * delta);
}

Point admissible_node(const Point& p, const Domain& dom, double delta) {
    return {project_inward(p.t1, dom.t1_min, dom.t1_max, delta),
            project_inward(p.t2, dom.t2_min, dom.t2_max, delta)};
}

double integrand(int component, const RegularityField& field, const Point& node, int axis) {
    const LocalRegularity reg = field(node);
    if (component == 1) return f_ratio(reg.l1[axis - 1], reg.v, reg.h_low);
    return f_ratio(reg.l2[axis - 1], reg.v, reg.h_high);
}

// Signed line integral of the integrand from `from` to `to` along one axis.
double path_integral(int component, const RegularityField& field, const Domain& dom,
                     double from, double to, double fixed_other, int moving_axis,
                     double delta, int n_nodes, std::vector<double>& diag) {
    diag.clear();
    if (from == to) return 0.0;
    const double sign = (to >= from) ? 1.0 : -1.0;
    const double step = std::abs(to - from) / (n_nodes - 1);
    const std::vector<Point> nodes =
        integration_nodes(from, to, fixed_other, moving_axis, dom, delta, n_nodes);
    diag.reserve(nodes.size());
    for (const Point& node : nodes)
        diag.push_back(integrand(component, field, node, moving_axis));
    return sign * trapezoid_integral(diag, step);
}

}  // namespace

std::vector<Point> integration_nodes(double from, double to, double fixed_other,
                                     int moving_axis, const Domain& domain, double delta,
                                     int n_nodes) {
    std::vector<Point> nodes;
    if (from == to) return nodes;
    const double lo = std::min(from, to), hi = std::max(from, to);
    const double step = (hi - lo) / (n_nodes - 1);
    nodes.reserve(static_cast<std::size_t>(n_nodes));
    for (int k = 0; k < n_nodes; ++k) {
        const double s = lo + step * k;
        const Point raw = (moving_axis == 1) ? Point{s, fixed_other} : Point{fixed_other, s};
        nodes.push_back(admissible_node(raw, domain, delta));
    }
    return nodes;
}

DeformationEstimate a_component_hat(int component, const RegularityField& field,
                                    const Domain& domain, const Point& t,
                                    const DeformationAnchor& anchor, double delta_margin,
                                    int n_nodes) {
    if (component != 1 && component != 2)
        throw std::invalid_argument("a_component_hat: component must be 1 or 2");
    if (n_nodes < 2) throw TooFewNodes("a_component_hat: n_nodes must be >= 2");
    anchor.validate(domain);

    DeformationEstimate est;
    est.t = t;
    est.quadrature_nodes = n_nodes;

    // f path: (s, t2) for s in [t0, t1]; g path: (t0, s) for s in [s0, t2].
    const double f_int = path_integral(component, field, domain, anchor.t0, t.t1, t.t2, 1,
                                       delta_margin, n_nodes, est.f_values);
    const double g_int = path_integral(component, field, domain, anchor.s0, t.t2, anchor.t0,
                                       2, delta_margin, n_nodes, est.g_values);
    const double lambda = (component == 1) ? anchor.lambda1 : anchor.lambda2;
    const double value = lambda * std::exp(f_int + g_int);
    if (component == 1)
        est.a1_hat = value;
    else
        est.a2_hat = value;
    return est;
}

LocalRegularity DataRegularityField::operator()(const Point& t) const {
    // quantized key; nodes are generated deterministically so exact-hit reuse
    // is the common case
    const auto q = [](double x) {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(x * 1e12)));
    };
    const std::uint64_t key = q(t.t1) * 0x9e3779b97f4a7c15ULL ^ q(t.t2);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const RegularityEstimate est = estimate_regularity(*index_, t, params_);
    LocalRegularity reg;
    reg.h_low = est.h_low;
    reg.h_high = est.h_high;
    reg.l1[0] = est.l1[0];
    reg.l1[1] = est.l1[1];
    reg.l2[0] = est.l2[0];
    reg.l2[1] = est.l2[1];
    reg.v = est.v_hat;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(key, reg);
    }
    return reg;
}

namespace {

DeformationEstimate a_hat_from_dataset(int component, const SurfaceDataset& dataset,
                                       const Point& t, const DeformationAnchor& anchor,
                                       const RegParams& params, int n_nodes) {
    DatasetIndex index(dataset);
    DataRegularityField field(index, params);
    return a_component_hat(component, std::cref(field), dataset.domain, t, anchor,
                           params.delta, n_nodes);
}

}  // namespace

DeformationEstimate a1_hat(const SurfaceDataset& dataset, const Point& t,
                           const DeformationAnchor& anchor, const RegParams& params,
                           int n_nodes) {
    return a_hat_from_dataset(1, dataset, t, anchor, params, n_nodes);
}

DeformationEstimate a2_hat(const SurfaceDataset& dataset, const Point& t,
                           const DeformationAnchor& anchor, const RegParams& params,
                           int n_nodes) {
    return a_hat_from_dataset(2, dataset, t, anchor, params, n_nodes);
}

}  // namespace anisosurf
