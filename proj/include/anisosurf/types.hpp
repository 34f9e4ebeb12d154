#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisosurf {

struct Point {
    double t1 = 0.0;
    double t2 = 0.0;
};

inline bool operator==(const Point& a, const Point& b) {
    return a.t1 == b.t1 && a.t2 == b.t2;
}

// Axis-aligned rectangle with closure in (0,inf)^2.
struct Domain {
    double t1_min, t1_max;
    double t2_min, t2_max;

    Domain(double a, double b, double c, double d)
        : t1_min(a), t1_max(b), t2_min(c), t2_max(d) {
        if (!(t1_min < t1_max) || !(t2_min < t2_max))
            throw std::invalid_argument("Domain: min must be < max on both axes");
        if (!(t1_min > 0.0) || !(t2_min > 0.0))
            throw std::invalid_argument("Domain: closure must lie in (0,inf)^2");
    }

    bool contains(const Point& t) const {
        return t.t1 >= t1_min && t.t1 <= t1_max && t.t2 >= t2_min && t.t2 <= t2_max;
    }

    double side1() const { return t1_max - t1_min; }
    double side2() const { return t2_max - t2_min; }
    double side() const { return std::max(side1(), side2()); }
    double area() const { return side1() * side2(); }
    Point center() const { return {0.5 * (t1_min + t1_max), 0.5 * (t2_min + t2_max)}; }
};

struct Sheet {
    std::int64_t id = 0;
    std::vector<Point> points;
    std::vector<double> values;
};

struct SurfaceDataset {
    std::vector<Sheet> sheets;
    Domain domain;
    std::optional<double> noise_known_sigma;

    explicit SurfaceDataset(Domain d) : domain(d) {}
    std::size_t n_sheets() const { return sheets.size(); }
};

struct Deformation {
    std::function<double(Point)> a1, a2;
    std::function<double(Point)> da1_dt1, da1_dt2, da2_dt1, da2_dt2;

    Point apply(const Point& t) const { return {a1(t), a2(t)}; }

    static Deformation identity() {
        Deformation d;
        d.a1 = [](Point t) { return t.t1; };
        d.a2 = [](Point t) { return t.t2; };
        d.da1_dt1 = [](Point) { return 1.0; };
        d.da1_dt2 = [](Point) { return 0.0; };
        d.da2_dt1 = [](Point) { return 0.0; };
        d.da2_dt2 = [](Point) { return 1.0; };
        return d;
    }

    // A(t) = (t1^p1, t2^p2), p1, p2 >= 1; satisfies the monotone-component regime
    // on domains in (0,inf)^2.
    static Deformation component_power(double p1, double p2) {
        Deformation d;
        d.a1 = [p1](Point t) { return std::pow(t.t1, p1); };
        d.a2 = [p2](Point t) { return std::pow(t.t2, p2); };
        d.da1_dt1 = [p1](Point t) { return p1 * std::pow(t.t1, p1 - 1.0); };
        d.da1_dt2 = [](Point) { return 0.0; };
        d.da2_dt1 = [](Point) { return 0.0; };
        d.da2_dt2 = [p2](Point t) { return p2 * std::pow(t.t2, p2 - 1.0); };
        return d;
    }
};

enum class DesignKind { CommonGrid, IndependentUniform, IndependentPoisson };

struct DesignLaw {
    DesignKind kind = DesignKind::CommonGrid;
    std::optional<std::pair<int, int>> grid_shape;
    double density_lower_bound_c = 1.0;
};

struct FieldSpec {
    std::function<double(Point)> eta1, eta2;   // values in (0,1) on the deformed domain
    Deformation deformation = Deformation::identity();
    std::function<double(Point, double)> sigma_fn = [](Point, double) { return 0.0; };
    DesignLaw design;
    double mean_points_m = 100.0;

    static FieldSpec constant_eta(double h1, double h2) {
        FieldSpec f;
        f.eta1 = [h1](Point) { return h1; };
        f.eta2 = [h2](Point) { return h2; };
        return f;
    }
};

struct ValidationIssue {
    std::string code;       // "out_of_domain", "duplicate_id", "empty_sheet", "length_mismatch"
    std::int64_t sheet_id = 0;
    std::size_t point_index = 0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

ValidationReport validate_dataset(const SurfaceDataset& dataset);

// True iff t +/- 2*delta*e_i stays in the closed domain for i = 1,2 (the largest
// offset the increment estimators evaluate).
bool interior_margin(const Domain& domain, const Point& t, double delta);

// Error types shared across modules.
struct BoundaryViolation : std::runtime_error {
    explicit BoundaryViolation(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& what) : std::runtime_error(what) {}
};
struct EmptySheet : std::runtime_error {
    explicit EmptySheet(const std::string& what) : std::runtime_error(what) {}
};
struct FactorizationFailed : std::runtime_error {
    explicit FactorizationFailed(const std::string& what) : std::runtime_error(what) {}
};
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct TooFewNodes : std::runtime_error {
    explicit TooFewNodes(const std::string& what) : std::runtime_error(what) {}
};
struct TooFewObservations : std::runtime_error {
    explicit TooFewObservations(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace anisosurf
