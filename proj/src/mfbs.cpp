#include "anisosurf/mfbs.hpp"

#include <cmath>

#include "anisosurf/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace anisosurf {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// log of G(x) = Gamma(2x+1) * sin(pi x)
double log_g(double x) { return std::lgamma(2.0 * x + 1.0) + std::log(std::sin(kPi * x)); }

void check_unit_interval(double x, const char* who) {
    if (!(x > 0.0) || !(x < 1.0))
        throw std::domain_error(std::string(who) + ": argument must lie in (0,1)");
}

}  // namespace

double c_norm(double x) {
    check_unit_interval(x, "c_norm");
    return std::sqrt(2.0 * kPi / (std::tgamma(2.0 * x + 1.0) * std::sin(kPi * x)));
}

double d_factor(double x, double y) {
    check_unit_interval(x, "d_factor");
    check_unit_interval(y, "d_factor");
    if (x == y) return 0.5;
    // C^2(m)/(2 C(x) C(y)) = 0.5 * sqrt(G(x) G(y)) / G(m), m = (x+y)/2
    return 0.5 * std::exp(0.5 * (log_g(x) + log_g(y)) - log_g(0.5 * (x + y)));
}

double mfbs_covariance(const Point& u, const Point& v,
                       const std::function<double(Point)>& eta1,
                       const std::function<double(Point)>& eta2) {
    if (!(u.t1 > 0.0) || !(u.t2 > 0.0) || !(v.t1 > 0.0) || !(v.t2 > 0.0))
        throw std::domain_error("mfbs_covariance: coordinates must be strictly positive");
    const double eu[2] = {eta1(u), eta2(u)};
    const double ev[2] = {eta1(v), eta2(v)};
    const double cu[2] = {u.t1, u.t2};
    const double cv[2] = {v.t1, v.t2};
    double prod = 1.0;
    for (int k = 0; k < 2; ++k) {
        const double s = eu[k] + ev[k];
        const double term =
            std::pow(cu[k], s) + std::pow(cv[k], s) - std::pow(std::abs(cu[k] - cv[k]), s);
        prod *= d_factor(eu[k], ev[k]) * term;
    }
    return prod;
}

CovarianceFactor build_covariance_factor(const std::vector<Point>& points,
                                         const std::function<double(Point)>& eta1,
                                         const std::function<double(Point)>& eta2,
                                         double jitter) {
    if (points.empty())
        throw std::invalid_argument("build_covariance_factor: empty point list");
    if (jitter < 0.0)
        throw std::invalid_argument("build_covariance_factor: jitter must be >= 0");

    const Eigen::Index p = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double c = mfbs_covariance(points[i], points[j], eta1, eta2);
            sigma(i, j) = c;
            sigma(j, i) = c;
        }
    }

    double used = 0.0;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        Eigen::MatrixXd trial = sigma;
        if (used > 0.0) trial.diagonal().array() += used;
        Eigen::LLT<Eigen::MatrixXd> llt(trial);
        if (llt.info() == Eigen::Success) {
            CovarianceFactor factor;
            factor.points = points;
            factor.lower_factor = llt.matrixL();
            factor.jitter_used = used;
            return factor;
        }
        if (jitter == 0.0) break;
        used = (used == 0.0) ? jitter : 2.0 * used;
    }
    throw FactorizationFailed(
        "build_covariance_factor: covariance not factorizable after jitter retries "
        "(invalid eta or duplicated points?)");
}

namespace {

// Per-sheet Gaussian vector, from substream (seed, first_sheet_id + j).
void fill_z_column(Eigen::MatrixXd& z, Eigen::Index j, std::uint64_t seed,
                   std::uint64_t first_sheet_id) {
    Rng rng(seed, first_sheet_id + static_cast<std::uint64_t>(j));
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
}

Eigen::MatrixXd sample_sheets_impl(const CovarianceFactor& factor, int n, std::uint64_t seed,
                                   std::uint64_t first_sheet_id, bool parallel) {
    if (n < 1) throw std::invalid_argument("sample_sheets: n must be >= 1");
    const Eigen::Index p = factor.lower_factor.rows();
    Eigen::MatrixXd z(p, n);
    Eigen::MatrixXd w(p, n);

    // Fixed column blocks keep the result identical for any thread count.
    constexpr Eigen::Index kBlock = 256;
    const Eigen::Index n_blocks = (n + kBlock - 1) / kBlock;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (Eigen::Index b = 0; b < n_blocks; ++b) {
        const Eigen::Index j0 = b * kBlock;
        const Eigen::Index len = std::min<Eigen::Index>(kBlock, n - j0);
        for (Eigen::Index j = j0; j < j0 + len; ++j) fill_z_column(z, j, seed, first_sheet_id);
        w.middleCols(j0, len).noalias() = factor.lower_factor * z.middleCols(j0, len);
    }
    (void)parallel;
    return w.transpose();
}

}  // namespace

Eigen::MatrixXd sample_sheets(const CovarianceFactor& factor, int n, std::uint64_t seed,
                              std::uint64_t first_sheet_id) {
    return sample_sheets_impl(factor, n, seed, first_sheet_id, true);
}

Eigen::MatrixXd sample_sheets_serial(const CovarianceFactor& factor, int n, std::uint64_t seed,
                                     std::uint64_t first_sheet_id) {
    return sample_sheets_impl(factor, n, seed, first_sheet_id, false);
}

namespace {

// 1-d fBm covariance at positive coordinates, the per-axis factor of the
// constant-eta sheet covariance.
Eigen::MatrixXd fbm_cov_1d(const std::vector<double>& nodes, double h) {
    check_unit_interval(h, "build_separable_factor");
    const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd sigma(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(nodes[i] > 0.0))
            throw std::domain_error("build_separable_factor: nodes must be > 0");
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double c = 0.5 * (std::pow(nodes[i], 2.0 * h) + std::pow(nodes[j], 2.0 * h) -
                                    std::pow(std::abs(nodes[i] - nodes[j]), 2.0 * h));
            sigma(i, j) = c;
            sigma(j, i) = c;
        }
    }
    return sigma;
}

Eigen::MatrixXd chol_with_jitter(const Eigen::MatrixXd& sigma, double jitter, double& used) {
    double add = 0.0;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        Eigen::MatrixXd trial = sigma;
        if (add > 0.0) trial.diagonal().array() += add;
        Eigen::LLT<Eigen::MatrixXd> llt(trial);
        if (llt.info() == Eigen::Success) {
            used = std::max(used, add);
            return llt.matrixL();
        }
        if (jitter == 0.0) break;
        add = (add == 0.0) ? jitter : 2.0 * add;
    }
    throw FactorizationFailed("build_separable_factor: axis covariance not factorizable");
}

}  // namespace

SeparableFactor build_separable_factor(const std::vector<double>& nodes1,
                                       const std::vector<double>& nodes2, double h1,
                                       double h2, double jitter) {
    if (nodes1.empty() || nodes2.empty())
        throw std::invalid_argument("build_separable_factor: empty node list");
    SeparableFactor factor;
    factor.nodes1 = nodes1;
    factor.nodes2 = nodes2;
    factor.l1 = chol_with_jitter(fbm_cov_1d(nodes1, h1), jitter, factor.jitter_used);
    factor.l2 = chol_with_jitter(fbm_cov_1d(nodes2, h2), jitter, factor.jitter_used);
    return factor;
}

Eigen::MatrixXd sample_sheets_separable(const SeparableFactor& factor, int n,
                                        std::uint64_t seed, std::uint64_t first_sheet_id) {
    if (n < 1) throw std::invalid_argument("sample_sheets_separable: n must be >= 1");
    const Eigen::Index n1 = factor.l1.rows();
    const Eigen::Index n2 = factor.l2.rows();
    Eigen::MatrixXd out(n, n1 * n2);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int j = 0; j < n; ++j) {
        Rng rng(seed, first_sheet_id + static_cast<std::uint64_t>(j));
        Eigen::MatrixXd z(n1, n2);
        for (Eigen::Index a = 0; a < n1; ++a)
            for (Eigen::Index b = 0; b < n2; ++b) z(a, b) = rng.normal();
        const Eigen::MatrixXd w = factor.l1 * z * factor.l2.transpose();
        for (Eigen::Index a = 0; a < n1; ++a)
            for (Eigen::Index b = 0; b < n2; ++b) out(j, a * n2 + b) = w(a, b);
    }
    return out;
}

std::vector<Point> make_grid(const Domain& domain, int n1, int n2) {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("make_grid: grid shape must be positive");
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i) {
        const double t1 =
            (n1 == 1) ? domain.t1_min : domain.t1_min + domain.side1() * i / (n1 - 1.0);
        for (int j = 0; j < n2; ++j) {
            const double t2 =
                (n2 == 1) ? domain.t2_min : domain.t2_min + domain.side2() * j / (n2 - 1.0);
            pts.push_back({t1, t2});
        }
    }
    return pts;
}

namespace {

// Disjoint substream namespaces for the three random ingredients.
constexpr std::uint64_t kDesignStreamBase = 0x4000000000000000ULL;
constexpr std::uint64_t kNoiseStreamBase = 0x8000000000000000ULL;

std::vector<Point> deform_points(const Deformation& a, const std::vector<Point>& pts) {
    std::vector<Point> out;
    out.reserve(pts.size());
    for (const Point& t : pts) out.push_back(a.apply(t));
    return out;
}

}  // namespace

SurfaceDataset generate_dataset(const SimConfig& config) {
    if (config.n_sheets < 1) throw ConfigError("generate_dataset: n_sheets must be >= 1");
    const FieldSpec& field = config.field;
    SurfaceDataset dataset(config.domain);
    dataset.sheets.reserve(config.n_sheets);

    if (field.design.kind == DesignKind::CommonGrid) {
        if (!field.design.grid_shape)
            throw ConfigError("generate_dataset: common-grid design requires grid_shape");
        const auto [n1, n2] = *field.design.grid_shape;
        if (static_cast<long long>(n1) * n2 > kMaxGridPoints)
            throw ConfigError("generate_dataset: common-grid design capped at 5000 points");
        const std::vector<Point> grid = make_grid(config.domain, n1, n2);
        const CovarianceFactor factor = build_covariance_factor(
            deform_points(field.deformation, grid), field.eta1, field.eta2, config.jitter);
        const Eigen::MatrixXd w = sample_sheets(factor, config.n_sheets, config.seed);

        for (int j = 0; j < config.n_sheets; ++j) {
            Sheet sheet;
            sheet.id = j;
            sheet.points = grid;
            sheet.values.resize(grid.size());
            Rng noise(config.seed, kNoiseStreamBase + static_cast<std::uint64_t>(j));
            for (std::size_t m = 0; m < grid.size(); ++m) {
                const double x = w(j, static_cast<Eigen::Index>(m));
                sheet.values[m] = x + field.sigma_fn(grid[m], x) * noise.normal();
            }
            dataset.sheets.push_back(std::move(sheet));
        }
        return dataset;
    }

    // Independent designs: per-sheet point sets, per-sheet factors.
    for (int j = 0; j < config.n_sheets; ++j) {
        Rng design(config.seed, kDesignStreamBase + static_cast<std::uint64_t>(j));
        std::size_t m_j;
        if (field.design.kind == DesignKind::IndependentUniform) {
            m_j = static_cast<std::size_t>(std::llround(field.mean_points_m));
        } else {
            m_j = static_cast<std::size_t>(design.poisson(field.mean_points_m));
        }
        m_j = std::max<std::size_t>(1, m_j);

        Sheet sheet;
        sheet.id = j;
        sheet.points.reserve(m_j);
        for (std::size_t m = 0; m < m_j; ++m) {
            sheet.points.push_back({design.uniform(config.domain.t1_min, config.domain.t1_max),
                                    design.uniform(config.domain.t2_min, config.domain.t2_max)});
        }

        const CovarianceFactor factor = build_covariance_factor(
            deform_points(field.deformation, sheet.points), field.eta1, field.eta2,
            config.jitter);
        const Eigen::MatrixXd w =
            sample_sheets_serial(factor, 1, config.seed, static_cast<std::uint64_t>(j));

        sheet.values.resize(m_j);
        Rng noise(config.seed, kNoiseStreamBase + static_cast<std::uint64_t>(j));
        for (std::size_t m = 0; m < m_j; ++m) {
            const double x = w(0, static_cast<Eigen::Index>(m));
            sheet.values[m] = x + field.sigma_fn(sheet.points[m], x) * noise.normal();
        }
        dataset.sheets.push_back(std::move(sheet));
    }
    return dataset;
}

}  // namespace anisosurf
