#pragma once

#include <Eigen/Dense>

#include "anisosurf/types.hpp"

namespace anisosurf {

// Normalization constant of the harmonizable representation,
// C(x) = sqrt(2*pi / (Gamma(2x+1) * sin(pi*x))), 0 < x < 1.
double c_norm(double x);

// D(x,y) = C^2((x+y)/2) / (2 C(x) C(y)); D(x,x) == 1/2 exactly, and
// D(x,y) < 1/2 off the diagonal (log-concavity of Gamma(2x+1)sin(pi x)).
double d_factor(double x, double y);

// Covariance of the multifractional Brownian sheet at deformed-domain points
// u, v with positive coordinates:
//   prod_k D(eta_k(u), eta_k(v)) * [u_k^s + v_k^s - |u_k - v_k|^s],
// s = eta_k(u) + eta_k(v).
double mfbs_covariance(const Point& u, const Point& v,
                       const std::function<double(Point)>& eta1,
                       const std::function<double(Point)>& eta2);

struct CovarianceFactor {
    std::vector<Point> points;        // deformed-domain locations
    Eigen::MatrixXd lower_factor;     // L with L L^T = Sigma (+ jitter I)
    double jitter_used = 0.0;
};

// Assembles Sigma_ij = mfbs_covariance(p_i, p_j) and Cholesky-factorizes it.
// On failure the jitter is added to the diagonal and doubled, up to 8 retries.
CovarianceFactor build_covariance_factor(const std::vector<Point>& points,
                                         const std::function<double(Point)>& eta1,
                                         const std::function<double(Point)>& eta2,
                                         double jitter = 1e-10);

// n sheets of W at the factor's points; row j is L z_j with z_j iid standard
// normal from substream (seed, first_sheet_id + j).
Eigen::MatrixXd sample_sheets(const CovarianceFactor& factor, int n, std::uint64_t seed,
                              std::uint64_t first_sheet_id = 0);
Eigen::MatrixXd sample_sheets_serial(const CovarianceFactor& factor, int n, std::uint64_t seed,
                                     std::uint64_t first_sheet_id = 0);

// For constant eta = (H1, H2) the covariance factorizes across axes into 1-d
// fractional-Brownian-motion covariances, so a sheet on an axis-aligned grid
// is L1 Z L2^T with per-axis Cholesky factors. This makes large Monte Carlo
// runs affordable where the dense factor would not be.
struct SeparableFactor {
    std::vector<double> nodes1, nodes2;  // deformed-domain axis nodes
    Eigen::MatrixXd l1, l2;
    double jitter_used = 0.0;
};

SeparableFactor build_separable_factor(const std::vector<double>& nodes1,
                                       const std::vector<double>& nodes2, double h1,
                                       double h2, double jitter = 1e-10);

// n sheets at the grid points flattened in make_grid order (axis-1 major);
// sheet j draws from substream (seed, first_sheet_id + j).
Eigen::MatrixXd sample_sheets_separable(const SeparableFactor& factor, int n,
                                        std::uint64_t seed,
                                        std::uint64_t first_sheet_id = 0);

struct SimConfig {
    FieldSpec field;
    Domain domain;
    int n_sheets = 1;
    std::uint64_t seed = 0;
    double jitter = 1e-10;

    explicit SimConfig(Domain d) : domain(d) {}
};

// Common-grid designs refuse more than this many points; the factorization
// cost is cubic.
inline constexpr int kMaxGridPoints = 5000;

std::vector<Point> make_grid(const Domain& domain, int n1, int n2);

// Full generative pipeline: design points, W sampled at A(points), then
// Y = W(A(t)) + sigma(t, W(A(t))) * e. Deterministic given the seed.
SurfaceDataset generate_dataset(const SimConfig& config);

}  // namespace anisosurf
