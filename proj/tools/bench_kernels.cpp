// Timing comparison between the parallel kernels and their serial reference
// implementations. The two must agree bitwise; this tool reports the speedup.

#include <chrono>
#include <cstdio>

#include "anisosurf/mfbs.hpp"
#include "anisosurf/regularity.hpp"

using namespace anisosurf;

namespace {

double seconds(const std::chrono::steady_clock::time_point& a,
               const std::chrono::steady_clock::time_point& b) {
    return std::chrono::duration<double>(b - a).count();
}

}  // namespace

int main() {
    const Domain domain(1.0, 2.0, 1.0, 2.0);
    const std::vector<Point> grid = make_grid(domain, 30, 30);
    const auto eta = [](Point) { return 0.5; };

    auto t0 = std::chrono::steady_clock::now();
    const CovarianceFactor factor = build_covariance_factor(grid, eta, eta);
    auto t1 = std::chrono::steady_clock::now();
    std::printf("covariance factor (%zu points): %.3f s, jitter %.3g\n", grid.size(),
                seconds(t0, t1), factor.jitter_used);

    const int n_sheets = 400;
    t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd wp = sample_sheets(factor, n_sheets, 7);
    t1 = std::chrono::steady_clock::now();
    const double t_par = seconds(t0, t1);
    t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd ws = sample_sheets_serial(factor, n_sheets, 7);
    t1 = std::chrono::steady_clock::now();
    const double t_ser = seconds(t0, t1);
    std::printf("sample_sheets x%d: parallel %.3f s, serial %.3f s, speedup %.2fx, %s\n",
                n_sheets, t_par, t_ser, t_ser / t_par,
                wp == ws ? "bitwise equal" : "MISMATCH");

    SurfaceDataset dataset(domain);
    dataset.sheets.resize(n_sheets);
    for (int j = 0; j < n_sheets; ++j) {
        dataset.sheets[j].id = j;
        dataset.sheets[j].points = grid;
        dataset.sheets[j].values.assign(wp.row(j).begin(), wp.row(j).end());
    }
    const DatasetIndex index(dataset);
    RegParams params;
    params.delta = 0.1;
    params.tau = default_tau(params.delta);

    std::vector<Point> targets;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            targets.push_back({1.25 + 0.5 * i / 19.0, 1.25 + 0.5 * j / 19.0});

    t0 = std::chrono::steady_clock::now();
    const auto est_par = estimate_grid(index, targets, params);
    t1 = std::chrono::steady_clock::now();
    const double e_par = seconds(t0, t1);
    t0 = std::chrono::steady_clock::now();
    const auto est_ser = estimate_grid_serial(index, targets, params);
    t1 = std::chrono::steady_clock::now();
    const double e_ser = seconds(t0, t1);

    bool equal = est_par.size() == est_ser.size();
    for (std::size_t i = 0; equal && i < est_par.size(); ++i)
        equal = est_par[i].h_low == est_ser[i].h_low && est_par[i].h_high == est_ser[i].h_high &&
                est_par[i].l1[0] == est_ser[i].l1[0] && est_par[i].l1[1] == est_ser[i].l1[1];
    std::printf("estimate_grid x%zu: parallel %.3f s, serial %.3f s, speedup %.2fx, %s\n",
                targets.size(), e_par, e_ser, e_ser / e_par,
                equal ? "bitwise equal" : "MISMATCH");
    return 0;
}
