#include "anisosurf/regularity.hpp"

#include <cmath>
#include <exception>

namespace anisosurf {

namespace {

constexpr double kHalfInvLog2 = 0.72134752044448170368; // 1 / (2 log 2)

Point offset(const Point& t, int axis, double d) {
    return axis == 1 ? Point{t.t1 + d, t.t2} : Point{t.t1, t.t2 + d};
}

void check_axis(int axis) {
    if (axis != 1 && axis != 2) throw std::invalid_argument("axis must be 1 or 2");
}

double median_axis_gap(std::vector<double> coords) {
    std::sort(coords.begin(), coords.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < coords.size(); ++i) {
        const double g = coords[i] - coords[i - 1];
        if (g > 0.0) gaps.push_back(g);
    }
    if (gaps.empty()) return 0.0;
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    return gaps[gaps.size() / 2];
}

}  // namespace

double default_delta(const SurfaceDataset& dataset) {
    if (dataset.sheets.empty()) throw EmptyDataset("default_delta: no sheets");
    const Sheet& sheet = dataset.sheets.front();
    std::vector<double> c1, c2;
    c1.reserve(sheet.points.size());
    c2.reserve(sheet.points.size());
    for (const Point& p : sheet.points) {
        c1.push_back(p.t1);
        c2.push_back(p.t2);
    }
    const double spacing = std::max(median_axis_gap(std::move(c1)), median_axis_gap(std::move(c2)));
    return std::max(2.0 * spacing, dataset.domain.side() / 50.0);
}

double default_tau(double delta) { return std::max(0.05, std::sqrt(delta)); }

double theta_hat(const DatasetIndex& index, const Point& t, double delta, int axis,
                 const ApproxPolicy& policy) {
    check_axis(axis);
    if (!(delta > 0.0)) throw std::invalid_argument("theta_hat: delta must be > 0");
    const Domain& dom = index.dataset().domain;
    const Point lo = offset(t, axis, -0.5 * delta);
    const Point hi = offset(t, axis, 0.5 * delta);
    if (!dom.contains(lo) || !dom.contains(hi))
        throw BoundaryViolation("theta_hat: increment endpoints leave the domain");

    static thread_local std::vector<double> vlo, vhi;
    index.values_at(lo, policy, vlo);
    index.values_at(hi, policy, vhi);
    double sum = 0.0;
    for (std::size_t j = 0; j < vlo.size(); ++j) {
        const double d = vlo[j] - vhi[j];
        sum += d * d;
    }
    return sum / static_cast<double>(vlo.size());
}

double theta_hat(const SurfaceDataset& dataset, const Point& t, double delta, int axis,
                 const ApproxPolicy& policy) {
    return theta_hat(DatasetIndex(dataset), t, delta, axis, policy);
}

double gamma_hat(const DatasetIndex& index, const Point& t, double delta,
                 const ApproxPolicy& policy) {
    return theta_hat(index, t, delta, 1, policy) + theta_hat(index, t, delta, 2, policy);
}

double gamma_hat(const SurfaceDataset& dataset, const Point& t, double delta,
                 const ApproxPolicy& policy) {
    return gamma_hat(DatasetIndex(dataset), t, delta, policy);
}

ValueWithFlag h_low_hat(double gamma_d, double gamma_2d, double beta_low) {
    if (!(gamma_d > 0.0) || !(gamma_2d > 0.0)) return {1.0, true};
    const double raw = (std::log(gamma_2d) - std::log(gamma_d)) * kHalfInvLog2;
    return {std::clamp(raw, beta_low, 1.0), false};
}

ValueWithFlag alpha_hat(double gamma_d, double gamma_2d, double h_low, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("alpha_hat: delta must be > 0");
    const double a = gamma_2d / std::pow(2.0 * delta, 2.0 * h_low);
    const double b = gamma_d / std::pow(delta, 2.0 * h_low);
    const double scale = std::max(std::abs(a), std::abs(b));
    if (std::abs(a - b) <= 1e-14 * scale) return {1.0, true};
    return {std::abs(a - b), false};
}

DetectResult d_hat_and_detect(const ValueWithFlag& alpha_d, const ValueWithFlag& alpha_2d,
                              double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("d_hat_and_detect: tau must be > 0");
    if (alpha_d.degenerate || alpha_2d.degenerate) return {0.0, false};
    const double raw = (std::log(alpha_2d.value) - std::log(alpha_d.value)) * kHalfInvLog2;
    if (!(raw > 0.0)) return {0.0, false};
    return {raw, raw >= tau};
}

double l1_hat(double theta_d, double h_low, double delta, double beta_high_L) {
    if (!(delta > 0.0)) throw std::invalid_argument("l1_hat: delta must be > 0");
    if (theta_d < 0.0) throw std::invalid_argument("l1_hat: theta must be >= 0");
    return std::min(theta_d / std::pow(delta, 2.0 * h_low), beta_high_L);
}

double l2_hat(double theta_d, double theta_2d, double h_low, double d_raw, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("l2_hat: delta must be > 0");
    if (d_raw == 0.0) return 0.0;
    const double a = theta_2d / std::pow(2.0 * delta, 2.0 * h_low);
    const double b = theta_d / std::pow(delta, 2.0 * h_low);
    const double denom = (std::pow(2.0, 2.0 * d_raw) - 1.0) * std::pow(delta, 2.0 * d_raw);
    return std::abs(a - b) / denom;
}

double v_hat(const DatasetIndex& index, const Point& t, const ApproxPolicy& policy,
             double v_floor) {
    static thread_local std::vector<double> vals;
    index.values_at(t, policy, vals);
    double sum = 0.0;
    for (double x : vals) sum += x * x;
    return std::max(v_floor, sum / static_cast<double>(vals.size()));
}

double v_hat(const SurfaceDataset& dataset, const Point& t, const ApproxPolicy& policy,
             double v_floor) {
    return v_hat(DatasetIndex(dataset), t, policy, v_floor);
}

RegularityEstimate estimate_from_moments(const Point& t, const double theta[2][3],
                                         double v_mean, const RegParams& params) {
    RegularityEstimate est;
    est.t = t;
    est.theta_values[0][0] = theta[0][0];
    est.theta_values[0][1] = theta[0][1];
    est.theta_values[1][0] = theta[1][0];
    est.theta_values[1][1] = theta[1][1];

    const double gamma_d = theta[0][0] + theta[1][0];
    const double gamma_2d = theta[0][1] + theta[1][1];
    est.gamma_values[0] = gamma_d;
    est.gamma_values[1] = gamma_2d;

    const ValueWithFlag h = h_low_hat(gamma_d, gamma_2d, params.beta_low);
    est.h_low = h.value;
    if (h.degenerate) est.degenerate_flags.insert(DegenerateFlag::GammaNonpositive);

    // Exponent gap. The textbook plug-in alpha(Delta) rescales gamma(Delta)
    // and gamma(2 Delta) by the very exponent fitted from that same pair, so
    // it cancels to zero identically and carries no information. The gap is
    // therefore estimated from per-axis exponent fits: each axis' increments
    // follow their own power law, and the spread of the two fitted exponents
    // estimates h_high - h_low directly, with noise on the stable log scale.
    // The fits span (delta, 4*delta) - two dyadic steps - which halves the
    // per-axis noise and keeps the false-alarm rate of the tau rule low.
    const auto axis_exponent = [&](int axis) -> ValueWithFlag {
        const double t_d = theta[axis][0], t_4d = theta[axis][2];
        if (!(t_d > 0.0) || !(t_4d > 0.0)) return {1.0, true};
        const double raw = (std::log(t_4d) - std::log(t_d)) * 0.5 * kHalfInvLog2;
        return {std::clamp(raw, params.beta_low, 1.0), false};
    };
    const ValueWithFlag h_ax1 = axis_exponent(0);
    const ValueWithFlag h_ax2 = axis_exponent(1);
    if (h_ax1.degenerate || h_ax2.degenerate)
        est.degenerate_flags.insert(DegenerateFlag::AlphaDegenerate);

    DetectResult det;
    if (!h_ax1.degenerate && !h_ax2.degenerate) {
        det.d_raw = std::abs(h_ax1.value - h_ax2.value);
        det.anisotropic = det.d_raw > 0.0 && det.d_raw >= params.tau;
    }
    est.d_hat = det.d_raw;
    est.anisotropic = det.anisotropic;
    if (det.d_raw == 0.0) est.degenerate_flags.insert(DegenerateFlag::DhatZero);
    est.h_high = est.h_low + (est.anisotropic ? est.d_hat : 0.0);

    for (int axis = 0; axis < 2; ++axis) {
        est.l1[axis] = l1_hat(theta[axis][0], est.h_low, params.delta, params.beta_high_L);
        est.l2[axis] =
            l2_hat(theta[axis][0], theta[axis][1], est.h_low, est.d_hat, params.delta);
    }

    est.v_hat = std::max(params.v_floor, v_mean);

    // Axis labels: the axis with the larger rescaled theta carries h_low.
    const double r1 = theta[0][0] / std::pow(params.delta, 2.0 * est.h_low);
    const double r2 = theta[1][0] / std::pow(params.delta, 2.0 * est.h_low);
    est.axis1_is_low = r1 >= r2;
    est.h1_hat = est.axis1_is_low ? est.h_low : est.h_high;
    est.h2_hat = est.axis1_is_low ? est.h_high : est.h_low;
    return est;
}

RegularityEstimate estimate_regularity(const DatasetIndex& index, const Point& t,
                                       const RegParams& params) {
    params.validate();
    const Domain& dom = index.dataset().domain;
    if (!interior_margin(dom, t, params.delta))
        throw BoundaryViolation("estimate_regularity: interior margin fails at t = (" +
                                std::to_string(t.t1) + ", " + std::to_string(t.t2) + ")");

    // theta at scales delta, 2*delta and (for alpha at 2*delta) 4*delta
    double theta[2][3];
    for (int axis = 1; axis <= 2; ++axis) {
        for (int s = 0; s < 3; ++s) {
            const double scale = params.delta * static_cast<double>(1 << s);
            theta[axis - 1][s] = theta_hat(index, t, scale, axis, params.policy);
        }
    }

    static thread_local std::vector<double> vals;
    index.values_at(t, params.policy, vals);
    double sq = 0.0;
    for (double x : vals) sq += x * x;
    const double v_mean = sq / static_cast<double>(vals.size());

    return estimate_from_moments(t, theta, v_mean, params);
}

RegularityEstimate estimate_regularity(const SurfaceDataset& dataset, const Point& t,
                                       const RegParams& params) {
    return estimate_regularity(DatasetIndex(dataset), t, params);
}

namespace {

std::vector<RegularityEstimate> estimate_grid_impl(const DatasetIndex& index,
                                                   const std::vector<Point>& points,
                                                   const RegParams& params, bool parallel) {
    std::vector<RegularityEstimate> out(points.size());
    // exceptions (e.g. BoundaryViolation) must not escape the parallel region
    std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                estimate_regularity(index, points[static_cast<std::size_t>(i)], params);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical(anisosurf_estimate_grid_failure)
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    (void)parallel;
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace

std::vector<RegularityEstimate> estimate_grid(const DatasetIndex& index,
                                              const std::vector<Point>& points,
                                              const RegParams& params) {
    return estimate_grid_impl(index, points, params, true);
}

std::vector<RegularityEstimate> estimate_grid_serial(const DatasetIndex& index,
                                                     const std::vector<Point>& points,
                                                     const RegParams& params) {
    return estimate_grid_impl(index, points, params, false);
}

}  // namespace anisosurf
