#pragma once

#include <string>

#include "anisosurf/mfbs.hpp"
#include "anisosurf/regularity.hpp"
#include "anisosurf/smoothing.hpp"

namespace anisosurf {

// Plot-ready result rows plus the metadata needed to rerun the experiment
// bit-identically.
struct ResultTable {
    std::vector<std::string> schema;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> metadata;

    void add_row(std::vector<std::string> row);
};

std::string table_to_csv(const ResultTable& table);
void write_csv(const ResultTable& table, const std::string& path);

std::string format_double(double x);  // round-trippable decimal (17 significant digits)

struct ExperimentConfig {
    enum class Scenario { Concentration, Anisotropy, Deformation, RiskScaling, ExpansionChecks };

    Scenario scenario = Scenario::Concentration;
    int replicates = 200;
    std::uint64_t base_seed = 0;
    Domain domain{1.0, 2.0, 1.0, 2.0};

    // constant Hurst truth; the anisotropy scenario also runs an isotropic
    // control at (h1+h2)/2
    double h1 = 0.5, h2 = 0.5;
    double sigma = 0.0;

    int grid_n1 = 41, grid_n2 = 41;  // common observation grid
    double delta = 0.05;
    double tau = 0.1;
    double epsilon = 0.05;            // concentration deviation threshold
    std::vector<int> n_values = {400, 500, 1600};   // sheets per replicate
    std::vector<double> tau_values;                 // extra thresholds (anisotropy)
    std::vector<int> m0_values = {250, 500, 1000, 2000, 4000};  // new-sheet sizes

    // deformation scenario: truth A(t) = (t1^p1, t2^p2), anchor at the center
    double deform_p1 = 2.0, deform_p2 = 1.0;
    int eval_n = 7;         // evaluation lattice (concentration / anisotropy)
    int deform_eval_n = 5;
    int n_nodes = 101;

    // risk-scaling plug-in: learning set size and the (wider) increment scale
    // used for estimation under noise
    int learn_sheets = 400;
    double learn_delta = 0.2;

    void validate() const;

    static ExperimentConfig concentration_defaults();
    static ExperimentConfig anisotropy_defaults();
    static ExperimentConfig deformation_defaults();
    static ExperimentConfig risk_scaling_defaults();
    static ExperimentConfig expansion_defaults();
};

ResultTable run_concentration(const ExperimentConfig& config);
ResultTable run_anisotropy(const ExperimentConfig& config);
ResultTable run_deformation(const ExperimentConfig& config);
ResultTable run_risk_scaling(const ExperimentConfig& config);
ResultTable run_expansion_checks(const ExperimentConfig& config);

// Dispatch on config.scenario.
ResultTable run_experiment(const ExperimentConfig& config);

}  // namespace anisosurf
