#include "anisosurf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "anisosurf/deformation.hpp"
#include "anisosurf/rng.hpp"

namespace anisosurf {

void ResultTable::add_row(std::vector<std::string> row) {
    if (row.size() != schema.size())
        throw std::invalid_argument("ResultTable: row arity does not match schema");
    rows.push_back(std::move(row));
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string join_csv(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_field(fields[i]);
    }
    return line;
}

}  // namespace

std::string table_to_csv(const ResultTable& table) {
    std::string out;
    for (const std::string& m : table.metadata) out += "# " + m + "\n";
    out += join_csv(table.schema) + "\n";
    for (const auto& row : table.rows) out += join_csv(row) + "\n";
    return out;
}

void write_csv(const ResultTable& table, const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("write_csv: cannot open " + tmp.string());
        f << table_to_csv(table);
    }
    fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (replicates < 1) throw ConfigError("ExperimentConfig: replicates must be >= 1");
    if (!(h1 > 0.0 && h1 < 1.0) || !(h2 > 0.0 && h2 < 1.0))
        throw ConfigError("ExperimentConfig: h1, h2 must lie in (0,1)");
    if (sigma < 0.0) throw ConfigError("ExperimentConfig: sigma must be >= 0");
    if (grid_n1 < 2 || grid_n2 < 2) throw ConfigError("ExperimentConfig: grid too small");
    // sampling is per-axis separable here, so the cap applies per axis rather
    // than to the dense grid product
    if (grid_n1 > kMaxGridPoints || grid_n2 > kMaxGridPoints)
        throw ConfigError("ExperimentConfig: grid axis capped at 5000 nodes");
    if (!(delta > 0.0)) throw ConfigError("ExperimentConfig: delta must be > 0");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("ExperimentConfig: tau must lie in (0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("ExperimentConfig: epsilon must be > 0");
    for (int n : n_values)
        if (n < 1) throw ConfigError("ExperimentConfig: sweep values must be positive");
    for (double t : tau_values)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("ExperimentConfig: tau sweep out of range");
    for (int m : m0_values)
        if (m < 1) throw ConfigError("ExperimentConfig: sweep values must be positive");
    if (!(deform_p1 >= 1.0) || !(deform_p2 >= 1.0))
        throw ConfigError("ExperimentConfig: deformation powers must be >= 1");
    if (eval_n < 1 || deform_eval_n < 1) throw ConfigError("ExperimentConfig: eval lattice empty");
    if (n_nodes < 2) throw ConfigError("ExperimentConfig: n_nodes must be >= 2");
    if (learn_sheets < 1) throw ConfigError("ExperimentConfig: learn_sheets must be >= 1");
    if (!(learn_delta > 0.0)) throw ConfigError("ExperimentConfig: learn_delta must be > 0");
}

ExperimentConfig ExperimentConfig::concentration_defaults() {
    ExperimentConfig c;
    c.scenario = Scenario::Concentration;
    return c;
}

ExperimentConfig ExperimentConfig::anisotropy_defaults() {
    ExperimentConfig c;
    c.scenario = Scenario::Anisotropy;
    c.h1 = 0.3;
    c.h2 = 0.7;
    // much finer grid than the concentration run: the low-exponent Hoelder
    // constant inherits an O(delta^{2(h2-h1)}) bias through h_low that is
    // amplified by delta^{-2 h}, so the increment scale is pushed down hard;
    // sub-grid sampling keeps this cheap
    c.grid_n1 = 277;
    c.grid_n2 = 277;
    c.delta = 1.0 / 276.0;
    c.n_values = {500};
    c.tau_values = {0.05, 0.2, 0.4};
    return c;
}

ExperimentConfig ExperimentConfig::deformation_defaults() {
    ExperimentConfig c;
    c.scenario = Scenario::Deformation;
    c.replicates = 50;
    // the A1 estimating equation needs strictly separated exponents: its
    // g-integrand is driven by the axis-2 coefficient at the low exponent,
    // which vanishes only when h1 < h2
    c.h1 = 0.3;
    c.h2 = 0.7;
    c.grid_n1 = 51;
    c.grid_n2 = 51;
    c.delta = 0.04;
    c.n_values = {250, 1000, 4000};
    c.deform_p1 = 2.0;
    c.deform_p2 = 1.0;
    return c;
}

ExperimentConfig ExperimentConfig::risk_scaling_defaults() {
    ExperimentConfig c;
    c.scenario = Scenario::RiskScaling;
    c.sigma = 0.5;
    // each replicate contributes one squared error per sweep value, so the
    // fitted slope needs many replicates to stabilize
    c.replicates = 500;
    return c;
}

ExperimentConfig ExperimentConfig::expansion_defaults() {
    ExperimentConfig c;
    c.scenario = Scenario::ExpansionChecks;
    return c;
}

// ---------------------------------------------------------------------------
// Shared machinery for the common-grid Monte Carlo scenarios: sheets are
// sampled exactly on an axis-aligned grid, the nearest-neighbor observable
// approximation at increment offsets resolves to fixed grid indices, and the
// estimator arithmetic runs on running moment sums so one sheet matrix serves
// every N in the sweep.

namespace {

constexpr std::uint64_t kNoiseStream = 0x8000000000000000ULL;

std::vector<double> axis_nodes(double lo, double hi, int n) {
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = lo + (hi - lo) * i / (n - 1.0);
    return nodes;
}

std::vector<double> powered(const std::vector<double>& nodes, double p) {
    std::vector<double> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = std::pow(nodes[i], p);
    return out;
}

// Nearest grid node along one axis; equidistant ties take the lower index,
// matching the spatial index's lowest-index tie-break on the flattened grid.
int snap_axis(double x, double lo, double step, int n) {
    int k = static_cast<int>(std::floor((x - lo) / step));
    k = std::clamp(k, 0, n - 1);
    const int k2 = std::min(k + 1, n - 1);
    const double d1 = std::abs(x - (lo + step * k));
    const double d2 = std::abs(x - (lo + step * k2));
    return (d1 <= d2) ? k : k2;
}

struct GridGeom {
    Domain domain;
    int n1, n2;
    double step1, step2;

    explicit GridGeom(const Domain& d, int a, int b)
        : domain(d), n1(a), n2(b), step1(d.side1() / (a - 1)), step2(d.side2() / (b - 1)) {}

    int flat(const Point& t) const {
        const int i = snap_axis(t.t1, domain.t1_min, step1, n1);
        const int j = snap_axis(t.t2, domain.t2_min, step2, n2);
        return i * n2 + j;
    }
};

// Flattened grid indices behind the 13 observable values one regularity
// estimate reads: t itself, then +/- offsets at scales delta, 2d, 4d per axis.
// Offsets are resolved in whole grid steps around the snapped center so the
// realized increment separation is exactly delta * 2^s (snapping the offset
// points independently can hit equidistant ties, where floating-point noise
// would pick the node and silently stretch or shrink the separation).
struct MomentPlan {
    int center = 0;
    int minus[2][3], plus[2][3];

    MomentPlan(const GridGeom& g, const Point& t, double delta) {
        const int ci = snap_axis(t.t1, g.domain.t1_min, g.step1, g.n1);
        const int cj = snap_axis(t.t2, g.domain.t2_min, g.step2, g.n2);
        center = ci * g.n2 + cj;
        for (int axis = 0; axis < 2; ++axis) {
            const double step = axis == 0 ? g.step1 : g.step2;
            const int n = axis == 0 ? g.n1 : g.n2;
            const int c = axis == 0 ? ci : cj;
            for (int s = 0; s < 3; ++s) {
                const double sep = delta * static_cast<double>(1 << s);
                const int m = std::max(1, static_cast<int>(std::lround(sep / step)));
                const int lo = std::clamp(c - m / 2, 0, n - 1 - m);
                minus[axis][s] = axis == 0 ? lo * g.n2 + cj : ci * g.n2 + lo;
                plus[axis][s] = axis == 0 ? (lo + m) * g.n2 + cj : ci * g.n2 + (lo + m);
            }
        }
    }
};

// The moment plans read a handful of grid columns, so sheets are sampled only
// on the sub-grid of axis nodes actually referenced. A grid restriction of a
// separable Gaussian field is the separable field on the restricted axis node
// sets, so the sampled law is unchanged while replicates get far cheaper.
struct SubGrid {
    std::vector<double> nodes1, nodes2;
};

SubGrid restrict_to_plans(const GridGeom& g, std::vector<MomentPlan>& plans) {
    std::vector<int> rank1(g.n1, -1), rank2(g.n2, -1);
    const auto mark = [&](int flat) {
        rank1[flat / g.n2] = 0;
        rank2[flat % g.n2] = 0;
    };
    for (const MomentPlan& p : plans) {
        mark(p.center);
        for (int axis = 0; axis < 2; ++axis)
            for (int s = 0; s < 3; ++s) {
                mark(p.minus[axis][s]);
                mark(p.plus[axis][s]);
            }
    }
    SubGrid sub;
    for (int i = 0; i < g.n1; ++i)
        if (rank1[i] == 0) {
            rank1[i] = static_cast<int>(sub.nodes1.size());
            sub.nodes1.push_back(g.domain.t1_min + g.step1 * i);
        }
    for (int j = 0; j < g.n2; ++j)
        if (rank2[j] == 0) {
            rank2[j] = static_cast<int>(sub.nodes2.size());
            sub.nodes2.push_back(g.domain.t2_min + g.step2 * j);
        }
    const int m2 = static_cast<int>(sub.nodes2.size());
    const auto remap = [&](int flat) { return rank1[flat / g.n2] * m2 + rank2[flat % g.n2]; };
    for (MomentPlan& p : plans) {
        p.center = remap(p.center);
        for (int axis = 0; axis < 2; ++axis)
            for (int s = 0; s < 3; ++s) {
                p.minus[axis][s] = remap(p.minus[axis][s]);
                p.plus[axis][s] = remap(p.plus[axis][s]);
            }
    }
    return sub;
}

struct MomentSums {
    double inc[2][3] = {{0, 0, 0}, {0, 0, 0}};
    double sq = 0.0;
};

void accumulate(const Eigen::MatrixXd& w, const MomentPlan& plan, int r0, int r1,
                MomentSums& sums) {
    for (int axis = 0; axis < 2; ++axis) {
        for (int s = 0; s < 3; ++s) {
            const auto d = w.col(plan.minus[axis][s]).segment(r0, r1 - r0) -
                           w.col(plan.plus[axis][s]).segment(r0, r1 - r0);
            sums.inc[axis][s] += d.squaredNorm();
        }
    }
    sums.sq += w.col(plan.center).segment(r0, r1 - r0).squaredNorm();
}

RegularityEstimate estimate_at_cutoff(const Point& t, const MomentSums& sums, int n,
                                      const RegParams& params) {
    double theta[2][3];
    for (int axis = 0; axis < 2; ++axis)
        for (int s = 0; s < 3; ++s) theta[axis][s] = sums.inc[axis][s] / n;
    return estimate_from_moments(t, theta, sums.sq / n, params);
}

std::vector<Point> eval_lattice(const Domain& d, int n, double margin) {
    const double lo1 = d.t1_min + margin, hi1 = d.t1_max - margin;
    const double lo2 = d.t2_min + margin, hi2 = d.t2_max - margin;
    if (!(lo1 < hi1) || !(lo2 < hi2))
        throw ConfigError("eval_lattice: margin swallows the domain");
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const double t1 = (n == 1) ? 0.5 * (lo1 + hi1) : lo1 + (hi1 - lo1) * i / (n - 1.0);
        for (int j = 0; j < n; ++j) {
            const double t2 = (n == 1) ? 0.5 * (lo2 + hi2) : lo2 + (hi2 - lo2) * j / (n - 1.0);
            pts.push_back({t1, t2});
        }
    }
    return pts;
}

void add_noise(Eigen::MatrixXd& w, double sigma, std::uint64_t seed) {
    if (sigma == 0.0) return;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
        Rng rng(seed, kNoiseStream + static_cast<std::uint64_t>(j));
        for (Eigen::Index m = 0; m < w.cols(); ++m) w(j, m) += sigma * rng.normal();
    }
}

RegParams moment_params(const ExperimentConfig& cfg) {
    RegParams params;
    params.delta = cfg.delta;
    params.tau = cfg.tau;
    params.policy = ApproxPolicy::nearest();
    return params;
}

std::vector<std::string> base_metadata(const ExperimentConfig& cfg, const char* scenario) {
    std::vector<std::string> m;
    m.push_back(std::string("scenario=") + scenario);
    m.push_back("base_seed=" + std::to_string(cfg.base_seed));
    m.push_back("replicates=" + std::to_string(cfg.replicates));
    m.push_back("domain=" + format_double(cfg.domain.t1_min) + "," +
                format_double(cfg.domain.t1_max) + "," + format_double(cfg.domain.t2_min) +
                "," + format_double(cfg.domain.t2_max));
    m.push_back("h1=" + format_double(cfg.h1) + " h2=" + format_double(cfg.h2));
    m.push_back("sigma=" + format_double(cfg.sigma));
    m.push_back("grid=" + std::to_string(cfg.grid_n1) + "x" + std::to_string(cfg.grid_n2));
    m.push_back("delta=" + format_double(cfg.delta) + " tau=" + format_double(cfg.tau));
    return m;
}

double sample_sd(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (xs.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------------------

ResultTable run_concentration(const ExperimentConfig& cfg) {
    cfg.validate();
    const GridGeom geom(cfg.domain, cfg.grid_n1, cfg.grid_n2);
    const std::vector<Point> evals = eval_lattice(cfg.domain, cfg.eval_n, 3.0 * cfg.delta);
    std::vector<MomentPlan> plans;
    plans.reserve(evals.size());
    for (const Point& t : evals) plans.emplace_back(geom, t, cfg.delta);
    const SubGrid sub = restrict_to_plans(geom, plans);
    const SeparableFactor factor = build_separable_factor(sub.nodes1, sub.nodes2, cfg.h1, cfg.h2);

    std::vector<int> cutoffs = cfg.n_values;
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    const int n_max = cutoffs.back();
    const RegParams params = moment_params(cfg);

    const double h_true_low = std::min(cfg.h1, cfg.h2);
    const double h_true_high = std::max(cfg.h1, cfg.h2);

    struct Acc {
        double sum_low = 0, sum_high = 0;
        long n_dev_low = 0, n_dev_high = 0, count = 0;
        std::vector<double> rep_mean_low, rep_mean_high;
    };
    std::vector<Acc> acc(cutoffs.size());

    for (int r = 0; r < cfg.replicates; ++r) {
        const std::uint64_t seed_r = substream_seed(cfg.base_seed, static_cast<std::uint64_t>(r));
        Eigen::MatrixXd w = sample_sheets_separable(factor, n_max, seed_r);
        add_noise(w, cfg.sigma, seed_r);

        std::vector<double> rep_low(cutoffs.size(), 0.0), rep_high(cutoffs.size(), 0.0);
        for (std::size_t e = 0; e < evals.size(); ++e) {
            MomentSums sums;
            int prev = 0;
            for (std::size_t c = 0; c < cutoffs.size(); ++c) {
                accumulate(w, plans[e], prev, cutoffs[c], sums);
                prev = cutoffs[c];
                const RegularityEstimate est =
                    estimate_at_cutoff(evals[e], sums, cutoffs[c], params);
                Acc& a = acc[c];
                a.sum_low += est.h_low;
                a.sum_high += est.h_high;
                if (std::abs(est.h_low - h_true_low) >= cfg.epsilon) ++a.n_dev_low;
                if (std::abs(est.h_high - h_true_high) >= cfg.epsilon) ++a.n_dev_high;
                ++a.count;
                rep_low[c] += est.h_low;
                rep_high[c] += est.h_high;
            }
        }
        for (std::size_t c = 0; c < cutoffs.size(); ++c) {
            acc[c].rep_mean_low.push_back(rep_low[c] / evals.size());
            acc[c].rep_mean_high.push_back(rep_high[c] / evals.size());
        }
    }

    ResultTable table;
    table.metadata = base_metadata(cfg, "concentration");
    table.metadata.push_back("epsilon=" + format_double(cfg.epsilon));
    table.metadata.push_back("eval_lattice=" + std::to_string(cfg.eval_n) + "x" +
                             std::to_string(cfg.eval_n) + " margin=3*delta");
    table.schema = {"n",          "epsilon",  "phat_low",    "phat_high",
                    "mean_h_low", "sd_h_low", "mean_h_high", "sd_h_high"};
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
        const Acc& a = acc[c];
        table.add_row({std::to_string(cutoffs[c]), format_double(cfg.epsilon),
                       format_double(static_cast<double>(a.n_dev_low) / a.count),
                       format_double(static_cast<double>(a.n_dev_high) / a.count),
                       format_double(a.sum_low / a.count), format_double(sample_sd(a.rep_mean_low)),
                       format_double(a.sum_high / a.count),
                       format_double(sample_sd(a.rep_mean_high))});
    }
    return table;
}

// ---------------------------------------------------------------------------

ResultTable run_anisotropy(const ExperimentConfig& cfg) {
    cfg.validate();
    const GridGeom geom(cfg.domain, cfg.grid_n1, cfg.grid_n2);
    const std::vector<Point> evals = eval_lattice(cfg.domain, cfg.eval_n, 3.0 * cfg.delta);
    std::vector<MomentPlan> plans;
    for (const Point& t : evals) plans.emplace_back(geom, t, cfg.delta);
    const SubGrid sub = restrict_to_plans(geom, plans);

    std::vector<int> cutoffs = cfg.n_values;
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    const int n_max = cutoffs.back();
    const RegParams params = moment_params(cfg);

    std::vector<double> taus = cfg.tau_values;
    taus.push_back(cfg.tau);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

    ResultTable table;
    table.metadata = base_metadata(cfg, "anisotropy");
    table.metadata.push_back("eval_lattice=" + std::to_string(cfg.eval_n) + "x" +
                             std::to_string(cfg.eval_n) + " margin=3*delta");
    table.schema = {"n",          "tau",         "truth_anisotropic", "detection_rate",
                    "mean_h_low", "mean_h_high", "mean_rel_err_l_low"};

    struct Setting {
        double h1, h2;
        bool truth;
    };
    const double h_iso = 0.5 * (cfg.h1 + cfg.h2);
    const std::vector<Setting> settings = {{cfg.h1, cfg.h2, cfg.h1 != cfg.h2},
                                           {h_iso, h_iso, false}};

    for (const Setting& setting : settings) {
        const SeparableFactor factor =
            build_separable_factor(sub.nodes1, sub.nodes2, setting.h1, setting.h2);

        // true low-exponent axis and its Hoelder constant (identity A):
        // increments along axis i have exponent H_i and constant
        // (other coordinate)^{2 H_other}
        const bool axis1_low = setting.h1 <= setting.h2;
        const double h_big = std::max(setting.h1, setting.h2);

        struct Acc {
            std::vector<long> detected;  // per tau
            long count = 0;
            double sum_low = 0, sum_high = 0;
            // per eval point, log-domain pooling: L-hat is lognormal around
            // the truth (chi-square moment through a power of the fitted
            // exponent), so the geometric mean across replicates is the
            // pooled estimate that does not inherit the exp(var/2) inflation
            std::vector<double> sum_log_l;
            std::vector<long> n_log_l;
        };
        std::vector<Acc> acc(cutoffs.size());
        for (Acc& a : acc) {
            a.detected.assign(taus.size(), 0);
            a.sum_log_l.assign(evals.size(), 0.0);
            a.n_log_l.assign(evals.size(), 0);
        }

        for (int r = 0; r < cfg.replicates; ++r) {
            const std::uint64_t seed_r =
                substream_seed(cfg.base_seed, static_cast<std::uint64_t>(r));
            Eigen::MatrixXd w = sample_sheets_separable(factor, n_max, seed_r);
            add_noise(w, cfg.sigma, seed_r);

            for (std::size_t e = 0; e < evals.size(); ++e) {
                MomentSums sums;
                int prev = 0;
                for (std::size_t c = 0; c < cutoffs.size(); ++c) {
                    accumulate(w, plans[e], prev, cutoffs[c], sums);
                    prev = cutoffs[c];
                    const RegularityEstimate est =
                        estimate_at_cutoff(evals[e], sums, cutoffs[c], params);
                    Acc& a = acc[c];
                    ++a.count;
                    a.sum_low += est.h_low;
                    a.sum_high += est.h_high;
                    for (std::size_t k = 0; k < taus.size(); ++k)
                        if (est.d_hat > 0.0 && est.d_hat >= taus[k]) ++a.detected[k];
                    const double l_est = axis1_low ? est.l1[0] : est.l1[1];
                    if (l_est > 0.0) {
                        a.sum_log_l[e] += std::log(l_est);
                        ++a.n_log_l[e];
                    }
                }
            }
        }

        for (std::size_t c = 0; c < cutoffs.size(); ++c) {
            const Acc& a = acc[c];
            // relative error of the pooled (geometric-mean) L-hat, averaged
            // over the evaluation lattice; per-replicate noise averages out
            double rel_err = 0.0;
            for (std::size_t e = 0; e < evals.size(); ++e) {
                const double l_truth = axis1_low ? std::pow(evals[e].t2, 2.0 * h_big)
                                                 : std::pow(evals[e].t1, 2.0 * h_big);
                const double l_mean =
                    a.n_log_l[e] > 0 ? std::exp(a.sum_log_l[e] / a.n_log_l[e]) : 0.0;
                rel_err += std::abs(l_mean - l_truth) / l_truth;
            }
            rel_err /= static_cast<double>(evals.size());
            for (std::size_t k = 0; k < taus.size(); ++k) {
                table.add_row({std::to_string(cutoffs[c]), format_double(taus[k]),
                               setting.truth ? "1" : "0",
                               format_double(static_cast<double>(a.detected[k]) / a.count),
                               format_double(a.sum_low / a.count),
                               format_double(a.sum_high / a.count),
                               format_double(rel_err)});
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------

ResultTable run_deformation(const ExperimentConfig& cfg) {
    cfg.validate();
    const GridGeom geom(cfg.domain, cfg.grid_n1, cfg.grid_n2);
    const std::vector<double> n1 = axis_nodes(cfg.domain.t1_min, cfg.domain.t1_max, cfg.grid_n1);
    const std::vector<double> n2 = axis_nodes(cfg.domain.t2_min, cfg.domain.t2_max, cfg.grid_n2);
    // sheets live on the deformed grid A(t) = (t1^p1, t2^p2), which is again
    // separable, so the per-axis factorization applies
    const SeparableFactor factor = build_separable_factor(powered(n1, cfg.deform_p1),
                                                          powered(n2, cfg.deform_p2), cfg.h1,
                                                          cfg.h2);

    const Point center = cfg.domain.center();
    DeformationAnchor anchor;
    anchor.t0 = center.t1;
    anchor.s0 = center.t2;
    anchor.lambda1 = std::pow(center.t1, cfg.deform_p1);
    anchor.lambda2 = std::pow(center.t2, cfg.deform_p2);

    const std::vector<Point> evals =
        eval_lattice(cfg.domain, cfg.deform_eval_n, 3.0 * cfg.delta);

    // The two components of one estimate integrate over the same node
    // locations, so regularity per unique node is computed once per cutoff.
    std::vector<Point> nodes;
    std::unordered_map<std::uint64_t, std::size_t> node_index;
    const auto key_of = [](const Point& p) {
        const auto q = [](double x) {
            return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(x * 1e12)));
        };
        return q(p.t1) * 0x9e3779b97f4a7c15ULL ^ q(p.t2);
    };
    const auto collect = [&](const std::vector<Point>& path) {
        for (const Point& p : path) {
            const std::uint64_t key = key_of(p);
            if (node_index.emplace(key, nodes.size()).second) nodes.push_back(p);
        }
    };
    for (const Point& t : evals) {
        collect(integration_nodes(anchor.t0, t.t1, t.t2, 1, cfg.domain, cfg.delta, cfg.n_nodes));
        collect(
            integration_nodes(anchor.s0, t.t2, anchor.t0, 2, cfg.domain, cfg.delta, cfg.n_nodes));
    }
    std::vector<MomentPlan> plans;
    plans.reserve(nodes.size());
    for (const Point& p : nodes) plans.emplace_back(geom, p, cfg.delta);

    std::vector<int> cutoffs = cfg.n_values;
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    const int n_max = cutoffs.back();
    const RegParams params = moment_params(cfg);

    std::vector<double> err1(cutoffs.size(), 0.0), err2(cutoffs.size(), 0.0);

    for (int r = 0; r < cfg.replicates; ++r) {
        const std::uint64_t seed_r = substream_seed(cfg.base_seed, static_cast<std::uint64_t>(r));
        Eigen::MatrixXd w = sample_sheets_separable(factor, n_max, seed_r);
        add_noise(w, cfg.sigma, seed_r);

        // per cutoff, regularity at every unique node
        std::vector<std::vector<LocalRegularity>> reg(cutoffs.size());
        for (auto& v : reg) v.resize(nodes.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nodes.size()); ++i) {
            MomentSums sums;
            int prev = 0;
            for (std::size_t c = 0; c < cutoffs.size(); ++c) {
                accumulate(w, plans[i], prev, cutoffs[c], sums);
                prev = cutoffs[c];
                const RegularityEstimate est =
                    estimate_at_cutoff(nodes[i], sums, cutoffs[c], params);
                LocalRegularity& out = reg[c][i];
                out.h_low = est.h_low;
                out.h_high = est.h_high;
                out.l1[0] = est.l1[0];
                out.l1[1] = est.l1[1];
                out.l2[0] = est.l2[0];
                out.l2[1] = est.l2[1];
                out.v = est.v_hat;
            }
        }

        for (std::size_t c = 0; c < cutoffs.size(); ++c) {
            const auto& level = reg[c];
            const RegularityField field = [&](const Point& p) -> LocalRegularity {
                const auto it = node_index.find(key_of(p));
                if (it == node_index.end())
                    throw std::logic_error("run_deformation: unplanned quadrature node");
                return level[it->second];
            };
            for (const Point& t : evals) {
                const DeformationEstimate e1 = a_component_hat(
                    1, field, cfg.domain, t, anchor, cfg.delta, cfg.n_nodes);
                const DeformationEstimate e2 = a_component_hat(
                    2, field, cfg.domain, t, anchor, cfg.delta, cfg.n_nodes);
                const double a1_true = std::pow(t.t1, cfg.deform_p1);
                const double a2_true = std::pow(t.t2, cfg.deform_p2);
                err1[c] += std::abs(e1.a1_hat - a1_true) / a1_true;
                err2[c] += std::abs(e2.a2_hat - a2_true) / a2_true;
            }
        }
    }

    ResultTable table;
    table.metadata = base_metadata(cfg, "deformation");
    table.metadata.push_back("deform_p1=" + format_double(cfg.deform_p1) +
                             " deform_p2=" + format_double(cfg.deform_p2));
    table.metadata.push_back("anchor=center n_nodes=" + std::to_string(cfg.n_nodes));
    table.metadata.push_back("eval_lattice=" + std::to_string(cfg.deform_eval_n) + "x" +
                             std::to_string(cfg.deform_eval_n) + " margin=3*delta");
    table.schema = {"n", "mean_rel_err_a1", "mean_rel_err_a2"};
    const double denom = static_cast<double>(cfg.replicates) * evals.size();
    for (std::size_t c = 0; c < cutoffs.size(); ++c)
        table.add_row({std::to_string(cutoffs[c]), format_double(err1[c] / denom),
                       format_double(err2[c] / denom)});
    return table;
}

// ---------------------------------------------------------------------------

namespace {

// Exact Brownian sheet (cov = min * min, the constant eta = 1/2 MfBs) on the
// nodes of a fine lattice over [0, extent]^2, by cumulative sums of
// independent cell increments.
void fill_brownian_sheet(Eigen::MatrixXd& b, int k1, int k2, double step1, double step2,
                         Rng& rng) {
    b.resize(k1 + 1, k2 + 1);
    b.row(0).setZero();
    b.col(0).setZero();
    const double sd = std::sqrt(step1 * step2);
    for (int a = 1; a <= k1; ++a)
        for (int c = 1; c <= k2; ++c)
            b(a, c) = b(a - 1, c) + b(a, c - 1) - b(a - 1, c - 1) + sd * rng.normal();
}

double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace

ResultTable run_risk_scaling(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.h1 != 0.5 || cfg.h2 != 0.5)
        throw ConfigError("run_risk_scaling: the exact lattice construction needs h = 1/2");

    const Domain& dom = cfg.domain;
    const double side = dom.side();
    const double c_density = 1.0 / dom.area();
    const KernelSpec kernel = KernelSpec::boxcar();

    // fine lattice for the new sheets
    constexpr int kCells = 256;
    const double step1 = dom.t1_max / kCells;
    const double step2 = dom.t2_max / kCells;
    const int a_lo = static_cast<int>(std::ceil(dom.t1_min / step1 - 1e-9));
    const int b_lo = static_cast<int>(std::ceil(dom.t2_min / step2 - 1e-9));
    const int a_span = kCells - a_lo + 1;
    const int b_span = kCells - b_lo + 1;

    const Point t_raw = dom.center();
    const int a_t = snap_axis(t_raw.t1, 0.0, step1, kCells + 1);
    const int b_t = snap_axis(t_raw.t2, 0.0, step2, kCells + 1);
    const Point t{a_t * step1, b_t * step2};

    // oracle truth at t for identity A, constant H = 1/2
    const double h = 0.5;
    const double l1_true = std::pow(t.t2, 2.0 * h);
    const double l2_true = std::pow(t.t1, 2.0 * h);
    const double sigma2_true = cfg.sigma * cfg.sigma;

    // learning grid for the plug-in pipeline
    const SeparableFactor learn_factor =
        build_separable_factor(axis_nodes(dom.t1_min, dom.t1_max, cfg.grid_n1),
                               axis_nodes(dom.t2_min, dom.t2_max, cfg.grid_n2), h, h);
    const std::vector<Point> learn_grid = make_grid(dom, cfg.grid_n1, cfg.grid_n2);

    const std::size_t n_m0 = cfg.m0_values.size();
    std::vector<double> se_oracle(n_m0, 0.0), se_plugin(n_m0, 0.0);
    std::vector<double> plugin_h1(n_m0, 0.0), plugin_h2(n_m0, 0.0);
    std::vector<BandwidthPlan> oracle_plans(n_m0);
    for (std::size_t mi = 0; mi < n_m0; ++mi)
        oracle_plans[mi] = optimal_bandwidths(t, h, h, l1_true, l2_true, sigma2_true,
                                              c_density, kernel.kappa, cfg.m0_values[mi], side);

    for (int r = 0; r < cfg.replicates; ++r) {
        const std::uint64_t seed_r = substream_seed(cfg.base_seed, static_cast<std::uint64_t>(r));

        // learning set: exact MfBs on the common grid plus observation noise
        const std::uint64_t learn_seed = substream_seed(seed_r, 1);
        Eigen::MatrixXd wl = sample_sheets_separable(learn_factor, cfg.learn_sheets, learn_seed);
        add_noise(wl, cfg.sigma, learn_seed);
        SurfaceDataset learn(dom);
        learn.sheets.resize(cfg.learn_sheets);
        for (int j = 0; j < cfg.learn_sheets; ++j) {
            Sheet& sheet = learn.sheets[j];
            sheet.id = j;
            sheet.points = learn_grid;
            sheet.values.assign(wl.row(j).begin(), wl.row(j).end());
        }
        const DatasetIndex learn_index(learn);
        RegParams learn_params;
        learn_params.delta = cfg.learn_delta;
        learn_params.tau = default_tau(cfg.learn_delta);
        learn_params.policy =
            ApproxPolicy::pilot(default_pilot_bandwidth(dom, learn_grid.size()));
        const RegularityEstimate est = estimate_regularity(learn_index, t, learn_params);
        const double sigma2_hat = rice_sigma_hat(learn);

        Eigen::MatrixXd field;
        for (std::size_t mi = 0; mi < n_m0; ++mi) {
            const int m0 = cfg.m0_values[mi];
            Rng rng(seed_r, 2 + static_cast<std::uint64_t>(mi));
            fill_brownian_sheet(field, kCells, kCells, step1, step2, rng);
            const double truth = field(a_t, b_t);

            Sheet fresh;
            fresh.id = 0;
            fresh.points.reserve(m0);
            fresh.values.reserve(m0);
            for (int m = 0; m < m0; ++m) {
                const int a = a_lo + static_cast<int>(rng.below(a_span));
                const int b = b_lo + static_cast<int>(rng.below(b_span));
                fresh.points.push_back({a * step1, b * step2});
                fresh.values.push_back(field(a, b) + cfg.sigma * rng.normal());
            }

            const NwPrediction po =
                nw_predict(fresh, t, oracle_plans[mi].h1, oracle_plans[mi].h2, kernel);
            se_oracle[mi] += (po.value - truth) * (po.value - truth);

            const BandwidthPlan plan =
                plan_from_estimate(est, sigma2_hat, c_density, kernel, m0, side);
            const NwPrediction pp = nw_predict(fresh, t, plan.h1, plan.h2, kernel);
            se_plugin[mi] += (pp.value - truth) * (pp.value - truth);
            plugin_h1[mi] += plan.h1;
            plugin_h2[mi] += plan.h2;
        }
    }

    ResultTable table;
    table.metadata = base_metadata(cfg, "risk-scaling");
    table.metadata.push_back("eval_point=" + format_double(t.t1) + "," + format_double(t.t2));
    table.metadata.push_back("learn_sheets=" + std::to_string(cfg.learn_sheets) +
                             " learn_delta=" + format_double(cfg.learn_delta));
    table.metadata.push_back("new_sheet_lattice_cells=" + std::to_string(kCells));
    table.schema = {"variant", "m0", "empirical_mse", "plan_h1", "plan_h2"};

    std::vector<double> log_m0, log_mse_o, log_mse_p;
    for (std::size_t mi = 0; mi < n_m0; ++mi) {
        const double mse_o = se_oracle[mi] / cfg.replicates;
        const double mse_p = se_plugin[mi] / cfg.replicates;
        table.add_row({"oracle", std::to_string(cfg.m0_values[mi]), format_double(mse_o),
                       format_double(oracle_plans[mi].h1), format_double(oracle_plans[mi].h2)});
        table.add_row({"plugin", std::to_string(cfg.m0_values[mi]), format_double(mse_p),
                       format_double(plugin_h1[mi] / cfg.replicates),
                       format_double(plugin_h2[mi] / cfg.replicates)});
        log_m0.push_back(std::log(static_cast<double>(cfg.m0_values[mi])));
        log_mse_o.push_back(std::log(mse_o));
        log_mse_p.push_back(std::log(mse_p));
    }
    if (n_m0 >= 3) {
        table.add_row(
            {"oracle_slope", "", format_double(ols_slope(log_m0, log_mse_o)), "", ""});
        table.add_row(
            {"plugin_slope", "", format_double(ols_slope(log_m0, log_mse_p)), "", ""});
    }
    return table;
}

// ---------------------------------------------------------------------------

ResultTable run_expansion_checks(const ExperimentConfig& cfg) {
    cfg.validate();
    // smooth linear Hurst functions on [1,2]^2, identity deformation
    const auto eta1 = [](Point u) { return 0.4 + 0.1 * u.t1; };
    const auto eta2 = [](Point u) { return 0.45 + 0.05 * u.t2; };
    const Point t{1.4, 1.45};

    const double h1t = eta1(t), h2t = eta2(t);
    const double order =
        std::min({2.0, 2.0 * std::min(h1t, h2t) + 1.0, 2.0 * h1t + 2.0 * h2t});

    const auto b_of = [&](const Point& u, const Point& v) {
        return 2.0 * d_factor(eta1(u), eta1(v)) * d_factor(eta2(u), eta2(v));
    };
    const auto a_of = [&](const Point& u, const Point& v) {
        const double b = b_of(u, v);
        return (std::pow(u.t1, eta1(u) - eta1(v)) * std::pow(u.t2, eta2(u) - eta2(v)) - b) / b;
    };

    ResultTable table;
    table.metadata = {"scenario=expansion-checks",
                      "eta1=0.4+0.1*u1 eta2=0.45+0.05*u2 (identity deformation)",
                      "t=" + format_double(t.t1) + "," + format_double(t.t2),
                      "mprop_order=" + format_double(order)};
    table.schema = {"k", "dist", "ratio_b", "ratio_aa", "ratio_mprop"};

    const double inv_sqrt2 = 0.70710678118654752440;
    double min_b = 1e300, max_b = 0, min_aa = 1e300, max_aa = 0, min_m = 1e300, max_m = 0;
    for (int k = 2; k <= 10; ++k) {
        const double r = std::ldexp(1.0, -k);
        const Point s{t.t1 + r * inv_sqrt2, t.t2 + r * inv_sqrt2};

        const double ratio_b = std::abs(b_of(t, s) - 0.5) / (r * r);
        const double ratio_aa = std::abs(a_of(t, s) * a_of(s, t) - 1.0) / (r * r);

        const double theta = mfbs_covariance(t, t, eta1, eta2) +
                             mfbs_covariance(s, s, eta1, eta2) -
                             2.0 * mfbs_covariance(t, s, eta1, eta2);
        const double leading =
            std::pow(t.t1, 2.0 * h1t) * std::pow(std::abs(t.t2 - s.t2), 2.0 * h2t) +
            std::pow(t.t2, 2.0 * h2t) * std::pow(std::abs(t.t1 - s.t1), 2.0 * h1t);
        const double ratio_m = std::abs(theta - leading) / std::pow(r, order);

        min_b = std::min(min_b, ratio_b);
        max_b = std::max(max_b, ratio_b);
        min_aa = std::min(min_aa, ratio_aa);
        max_aa = std::max(max_aa, ratio_aa);
        min_m = std::min(min_m, ratio_m);
        max_m = std::max(max_m, ratio_m);

        table.add_row({std::to_string(k), format_double(r), format_double(ratio_b),
                       format_double(ratio_aa), format_double(ratio_m)});
    }
    table.add_row({"max_over_min", "", format_double(max_b / min_b),
                   format_double(max_aa / min_aa), format_double(max_m / min_m)});

    // D(x,y) <= 1/2 on a 99x99 grid of (0.01, 0.99)^2, equality only on the
    // diagonal
    double max_offdiag = 0.0;
    bool diag_half = true;
    for (int i = 0; i < 99; ++i) {
        const double x = 0.01 + 0.98 * i / 98.0;
        for (int j = 0; j < 99; ++j) {
            const double y = 0.01 + 0.98 * j / 98.0;
            const double d = d_factor(x, y);
            if (i == j) {
                if (d != 0.5) diag_half = false;
            } else {
                max_offdiag = std::max(max_offdiag, d);
            }
        }
    }
    table.add_row({"dfactor_max_offdiag", "", format_double(max_offdiag), "", ""});
    table.add_row({"dfactor_diag_exact_half", "", diag_half ? "1" : "0", "", ""});
    return table;
}

// ---------------------------------------------------------------------------

ResultTable run_experiment(const ExperimentConfig& config) {
    switch (config.scenario) {
        case ExperimentConfig::Scenario::Concentration:
            return run_concentration(config);
        case ExperimentConfig::Scenario::Anisotropy:
            return run_anisotropy(config);
        case ExperimentConfig::Scenario::Deformation:
            return run_deformation(config);
        case ExperimentConfig::Scenario::RiskScaling:
            return run_risk_scaling(config);
        case ExperimentConfig::Scenario::ExpansionChecks:
            return run_expansion_checks(config);
    }
    throw ConfigError("run_experiment: unknown scenario");
}

}  // namespace anisosurf
