#pragma once

#include <memory>

#include "anisosurf/types.hpp"

namespace anisosurf {

struct ApproxPolicy {
    enum class Kind { NearestNeighbor, PilotLocalAverage };
    Kind kind = Kind::NearestNeighbor;
    std::optional<double> pilot_bandwidth;  // sup-norm half-width, required for pilot

    static ApproxPolicy nearest() { return {}; }
    static ApproxPolicy pilot(double bandwidth) {
        ApproxPolicy p;
        p.kind = Kind::PilotLocalAverage;
        p.pilot_bandwidth = bandwidth;
        return p;
    }
    void validate() const {
        if (kind == Kind::PilotLocalAverage &&
            (!pilot_bandwidth || !(*pilot_bandwidth > 0.0)))
            throw std::invalid_argument("ApproxPolicy: pilot requires pilot_bandwidth > 0");
    }
};

// Default pilot bandwidth: (domain side) * M^{-1/3}.
double default_pilot_bandwidth(const Domain& domain, std::size_t sheet_size);

// Uniform-bucket spatial index over one point set. Nearest neighbor uses the
// Euclidean metric with lowest-index tie-break.
class SpatialIndex {
public:
    explicit SpatialIndex(const std::vector<Point>& points);

    std::size_t nearest(const Point& t) const;
    // nearest point with index != self (requires >= 2 points)
    std::size_t nearest_excluding(const Point& t, std::size_t self) const;
    // indices of points with |t1-s1| <= b and |t2-s2| <= b
    void in_window(const Point& t, double b, std::vector<std::size_t>& out) const;
    std::size_t size() const { return points_.size(); }

private:
    std::vector<Point> points_;
    int nb1_ = 1, nb2_ = 1;
    double lo1_ = 0, lo2_ = 0, w1_ = 1, w2_ = 1;
    std::vector<std::vector<std::uint32_t>> buckets_;

    int bucket1(double x) const;
    int bucket2(double y) const;
    std::size_t nearest_impl(const Point& t, std::size_t exclude) const;
};

// Observable approximation of a single sheet at t.
double approx_value(const Sheet& sheet, const Point& t, const ApproxPolicy& policy);

// Immutable per-dataset index; sheets sharing one point set (common design)
// share one SpatialIndex so point resolution happens once per query.
class DatasetIndex {
public:
    explicit DatasetIndex(const SurfaceDataset& dataset);

    const SurfaceDataset& dataset() const { return *dataset_; }
    bool common_design() const { return common_design_; }

    // X~^{(j)}(t) for every sheet j, appended in sheet order.
    void values_at(const Point& t, const ApproxPolicy& policy, std::vector<double>& out) const;

private:
    const SurfaceDataset* dataset_;
    std::vector<std::shared_ptr<const SpatialIndex>> index_;
    bool common_design_ = false;

    double sheet_value(std::size_t j, const Point& t, const ApproxPolicy& policy) const;
};

}  // namespace anisosurf
