#include "anisosurf/approx.hpp"

#include <cmath>
#include <limits>

namespace anisosurf {

double default_pilot_bandwidth(const Domain& domain, std::size_t sheet_size) {
    if (sheet_size == 0) throw EmptySheet("default_pilot_bandwidth: empty sheet");
    return domain.side() * std::pow(static_cast<double>(sheet_size), -1.0 / 3.0);
}

SpatialIndex::SpatialIndex(const std::vector<Point>& points) : points_(points) {
    if (points_.empty()) throw EmptySheet("SpatialIndex: empty point set");
    double hi1 = -std::numeric_limits<double>::infinity(), hi2 = hi1;
    lo1_ = std::numeric_limits<double>::infinity();
    lo2_ = lo1_;
    for (const Point& p : points_) {
        lo1_ = std::min(lo1_, p.t1);
        lo2_ = std::min(lo2_, p.t2);
        hi1 = std::max(hi1, p.t1);
        hi2 = std::max(hi2, p.t2);
    }
    const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(points_.size()))));
    nb1_ = side;
    nb2_ = side;
    w1_ = (hi1 > lo1_) ? (hi1 - lo1_) / nb1_ : 1.0;
    w2_ = (hi2 > lo2_) ? (hi2 - lo2_) / nb2_ : 1.0;
    buckets_.assign(static_cast<std::size_t>(nb1_) * nb2_, {});
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const int b1 = bucket1(points_[i].t1);
        const int b2 = bucket2(points_[i].t2);
        buckets_[static_cast<std::size_t>(b1) * nb2_ + b2].push_back(
            static_cast<std::uint32_t>(i));
    }
}

int SpatialIndex::bucket1(double x) const {
    int b = static_cast<int>((x - lo1_) / w1_);
    return std::clamp(b, 0, nb1_ - 1);
}

int SpatialIndex::bucket2(double y) const {
    int b = static_cast<int>((y - lo2_) / w2_);
    return std::clamp(b, 0, nb2_ - 1);
}

std::size_t SpatialIndex::nearest(const Point& t) const {
    return nearest_impl(t, static_cast<std::size_t>(-1));
}

std::size_t SpatialIndex::nearest_excluding(const Point& t, std::size_t self) const {
    if (points_.size() < 2)
        throw TooFewObservations("nearest_excluding: need at least 2 points");
    return nearest_impl(t, self);
}

std::size_t SpatialIndex::nearest_impl(const Point& t, std::size_t exclude) const {
    const int c1 = bucket1(t.t1);
    const int c2 = bucket2(t.t2);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    const int max_ring = std::max(nb1_, nb2_);
    for (int ring = 0; ring <= max_ring; ++ring) {
        // Once a candidate is found, one extra ring guarantees correctness
        // (ring distance lower-bounds the point distance).
        if (best_d2 < std::numeric_limits<double>::infinity()) {
            const double ring_dist =
                (ring - 1) > 0 ? (ring - 1) * std::min(w1_, w2_) : 0.0;
            if (ring_dist * ring_dist > best_d2) break;
        }
        bool any_cell = false;
        for (int i = c1 - ring; i <= c1 + ring; ++i) {
            if (i < 0 || i >= nb1_) continue;
            for (int j = c2 - ring; j <= c2 + ring; ++j) {
                if (j < 0 || j >= nb2_) continue;
                if (std::max(std::abs(i - c1), std::abs(j - c2)) != ring) continue;
                any_cell = true;
                for (std::uint32_t idx : buckets_[static_cast<std::size_t>(i) * nb2_ + j]) {
                    if (idx == exclude) continue;
                    const double d1 = points_[idx].t1 - t.t1;
                    const double d2v = points_[idx].t2 - t.t2;
                    const double d2 = d1 * d1 + d2v * d2v;
                    if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                        best_d2 = d2;
                        best = idx;
                    }
                }
            }
        }
        if (!any_cell && ring > 0 && best_d2 < std::numeric_limits<double>::infinity()) break;
    }
    return best;
}

void SpatialIndex::in_window(const Point& t, double b, std::vector<std::size_t>& out) const {
    out.clear();
    const int i_lo = bucket1(t.t1 - b), i_hi = bucket1(t.t1 + b);
    const int j_lo = bucket2(t.t2 - b), j_hi = bucket2(t.t2 + b);
    for (int i = i_lo; i <= i_hi; ++i) {
        for (int j = j_lo; j <= j_hi; ++j) {
            for (std::uint32_t idx : buckets_[static_cast<std::size_t>(i) * nb2_ + j]) {
                if (std::abs(points_[idx].t1 - t.t1) <= b &&
                    std::abs(points_[idx].t2 - t.t2) <= b)
                    out.push_back(idx);
            }
        }
    }
    std::sort(out.begin(), out.end());
}

namespace {

double value_from_index(const Sheet& sheet, const SpatialIndex& index, const Point& t,
                        const ApproxPolicy& policy) {
    if (policy.kind == ApproxPolicy::Kind::PilotLocalAverage) {
        static thread_local std::vector<std::size_t> window;
        index.in_window(t, *policy.pilot_bandwidth, window);
        if (!window.empty()) {
            double sum = 0.0;
            for (std::size_t idx : window) sum += sheet.values[idx];
            return sum / static_cast<double>(window.size());
        }
        // empty pilot window falls back to the nearest neighbor
    }
    return sheet.values[index.nearest(t)];
}

}  // namespace

double approx_value(const Sheet& sheet, const Point& t, const ApproxPolicy& policy) {
    policy.validate();
    if (sheet.points.empty()) throw EmptySheet("approx_value: empty sheet");
    SpatialIndex index(sheet.points);
    return value_from_index(sheet, index, t, policy);
}

DatasetIndex::DatasetIndex(const SurfaceDataset& dataset) : dataset_(&dataset) {
    if (dataset.sheets.empty()) throw EmptyDataset("DatasetIndex: dataset has no sheets");
    index_.reserve(dataset.sheets.size());
    std::shared_ptr<const SpatialIndex> shared;
    common_design_ = true;
    for (const Sheet& sheet : dataset.sheets) {
        if (sheet.points.empty()) throw EmptySheet("DatasetIndex: sheet has no observations");
        if (!shared) {
            shared = std::make_shared<SpatialIndex>(sheet.points);
            index_.push_back(shared);
            continue;
        }
        const bool same = sheet.points.size() == dataset.sheets.front().points.size() &&
                          std::equal(sheet.points.begin(), sheet.points.end(),
                                     dataset.sheets.front().points.begin());
        if (same) {
            index_.push_back(shared);
        } else {
            common_design_ = false;
            index_.push_back(std::make_shared<SpatialIndex>(sheet.points));
        }
    }
}

double DatasetIndex::sheet_value(std::size_t j, const Point& t,
                                 const ApproxPolicy& policy) const {
    return value_from_index(dataset_->sheets[j], *index_[j], t, policy);
}

void DatasetIndex::values_at(const Point& t, const ApproxPolicy& policy,
                             std::vector<double>& out) const {
    policy.validate();
    out.clear();
    out.reserve(dataset_->sheets.size());
    if (common_design_) {
        // Resolve point indices once, then read every sheet's values.
        const SpatialIndex& index = *index_.front();
        if (policy.kind == ApproxPolicy::Kind::PilotLocalAverage) {
            std::vector<std::size_t> window;
            index.in_window(t, *policy.pilot_bandwidth, window);
            if (!window.empty()) {
                const double inv = 1.0 / static_cast<double>(window.size());
                for (const Sheet& sheet : dataset_->sheets) {
                    double sum = 0.0;
                    for (std::size_t idx : window) sum += sheet.values[idx];
                    out.push_back(sum * inv);
                }
                return;
            }
        }
        const std::size_t nn = index.nearest(t);
        for (const Sheet& sheet : dataset_->sheets) out.push_back(sheet.values[nn]);
        return;
    }
    for (std::size_t j = 0; j < dataset_->sheets.size(); ++j)
        out.push_back(sheet_value(j, t, policy));
}

}  // namespace anisosurf
