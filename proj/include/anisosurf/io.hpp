#pragma once

#include <string>

#include "anisosurf/deformation.hpp"
#include "anisosurf/experiments.hpp"
#include "anisosurf/mfbs.hpp"
#include "anisosurf/smoothing.hpp"

namespace anisosurf {

// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// --- dataset files ----------------------------------------------------------
// CSV, one observation per row under the header `sheet_id,t1,t2,y`, preceded
// by '#'-comment metadata lines carrying the domain (required) and the known
// noise sigma (optional). Values are printed with 17 significant digits so a
// write -> read round trip is lossless.

std::string dataset_to_csv(const SurfaceDataset& dataset, const std::string& timestamp = "");
void write_dataset(const SurfaceDataset& dataset, const std::string& path, bool deterministic);
SurfaceDataset parse_dataset_csv(const std::string& text, const std::string& origin = "dataset");
SurfaceDataset read_dataset(const std::string& path);

// RFC-3339 UTC wall-clock stamp for non-deterministic metadata lines.
std::string current_timestamp();

// --- JSON-lines records -----------------------------------------------------

std::string estimate_to_json_line(const RegularityEstimate& est);
std::string deformation_to_json_line(const Point& t, const DeformationEstimate& e1,
                                     const DeformationEstimate& e2);
std::string prediction_to_json_line(const Point& t, const AdaptivePrediction& pred);

// --- job configs ------------------------------------------------------------
// JSON documents, strictly parsed: unknown keys are rejected with the full
// key path, and every numeric constraint of the underlying types is
// re-validated at parse time. All parse errors are ConfigError.

// Evaluation points: an explicit list, or an interior lattice excluding a
// margin of `margin_delta_mult * delta`.
struct PointsSpec {
    bool is_grid = true;
    int n1 = 5, n2 = 5;
    double margin_delta_mult = 3.0;
    std::vector<Point> list;

    std::vector<Point> resolve(const Domain& domain, double delta) const;
};

// RegParams with deferred defaults: delta falls back to default_delta(dataset),
// tau to default_tau(delta), the pilot bandwidth to the size-based default.
struct RegOptions {
    std::optional<double> delta, tau, beta_low, beta_high_l, v_floor;
    std::string policy = "nearest";  // "nearest" | "pilot"
    std::optional<double> pilot_bandwidth;

    RegParams resolve(const SurfaceDataset& dataset) const;
};

struct EstimateJob {
    std::string dataset_path;
    PointsSpec points;
    RegOptions reg;
};

struct DeformJob {
    std::string dataset_path;
    DeformationAnchor anchor;
    PointsSpec points;
    RegOptions reg;
    int n_nodes = 101;
};

struct SmoothJob {
    std::string learning_dataset_path;
    std::string new_sheet_path;
    PointsSpec points;
    RegOptions reg;
    std::string kernel = "boxcar";  // "boxcar" | "biweight_product"
    std::optional<double> c_density;  // default: 1 / domain area

    KernelSpec kernel_spec() const;
};

SimConfig parse_simulate_config(const std::string& json_text);
EstimateJob parse_estimate_config(const std::string& json_text);
DeformJob parse_deform_config(const std::string& json_text);
SmoothJob parse_smooth_config(const std::string& json_text);
ExperimentConfig parse_experiment_config(const std::string& json_text);

}  // namespace anisosurf
