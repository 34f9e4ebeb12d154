#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "anisosurf/experiments.hpp"

using namespace anisosurf;

namespace {

double field_as_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

// Row lookup helpers for the small smoke tables below.
std::vector<std::vector<std::string>> rows_where(const ResultTable& t, std::size_t col,
                                                 const std::string& value) {
    std::vector<std::vector<std::string>> out;
    for (const auto& row : t.rows)
        if (row[col] == value) out.push_back(row);
    return out;
}

}  // namespace

TEST_CASE("ResultTable enforces the schema arity") {
    ResultTable t;
    t.schema = {"a", "b"};
    t.add_row({"1", "2"});
    CHECK_THROWS_AS(t.add_row({"1"}), std::invalid_argument);
    CHECK_THROWS_AS(t.add_row({"1", "2", "3"}), std::invalid_argument);
}

TEST_CASE("format_double round-trips through strtod") {
    for (double x : {1.0 / 3.0, 0.1, -2.5e-17, 123456.789, 0.0}) {
        CHECK(field_as_double(format_double(x)) == x);
    }
}

TEST_CASE("table_to_csv quotes fields containing separators or quotes") {
    ResultTable t;
    t.metadata = {"note=hello"};
    t.schema = {"a", "b"};
    t.add_row({"x,y", "q\"z"});
    const std::string csv = table_to_csv(t);
    CHECK(csv == "# note=hello\na,b\n\"x,y\",\"q\"\"z\"\n");
}

TEST_CASE("write_csv writes exactly the serialized table") {
    ResultTable t;
    t.schema = {"k", "v"};
    t.add_row({"1", "2.5"});
    const std::string path = "test_experiments_write.csv";
    write_csv(t, path);
    std::ifstream f(path, std::ios::binary);
    std::ostringstream got;
    got << f.rdbuf();
    CHECK(got.str() == table_to_csv(t));
    std::filesystem::remove(path);
}

TEST_CASE("ExperimentConfig validation catches out-of-range settings") {
    ExperimentConfig c = ExperimentConfig::concentration_defaults();
    c.validate();
    c.replicates = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig::concentration_defaults();
    c.h1 = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig::concentration_defaults();
    c.grid_n1 = 6000;  // per-axis cap
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig::concentration_defaults();
    c.tau = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig::concentration_defaults();
    c.n_values = {0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("run_concentration smoke run: deterministic, sane columns") {
    ExperimentConfig c = ExperimentConfig::concentration_defaults();
    c.replicates = 2;
    c.base_seed = 5;
    c.grid_n1 = 41;
    c.grid_n2 = 41;
    c.delta = 0.05;
    c.n_values = {30, 60};
    c.eval_n = 2;
    const ResultTable a = run_concentration(c);
    const ResultTable b = run_concentration(c);
    CHECK(table_to_csv(a) == table_to_csv(b));
    REQUIRE(a.rows.size() == 2);  // one row per n cutoff
    CHECK(a.schema[0] == "n");
    CHECK(a.rows[0][0] == "30");
    CHECK(a.rows[1][0] == "60");
    for (const auto& row : a.rows) {
        const double phat_low = field_as_double(row[2]);
        CHECK(phat_low >= 0.0);
        CHECK(phat_low <= 1.0);
        const double mean_h_low = field_as_double(row[4]);
        CHECK(mean_h_low > 0.2);
        CHECK(mean_h_low < 0.8);
    }
}

TEST_CASE("run_concentration responds to the base seed") {
    ExperimentConfig c = ExperimentConfig::concentration_defaults();
    c.replicates = 1;
    c.grid_n1 = 41;
    c.grid_n2 = 41;
    c.delta = 0.05;
    c.n_values = {40};
    c.eval_n = 2;
    c.base_seed = 1;
    const ResultTable a = run_concentration(c);
    c.base_seed = 2;
    const ResultTable b = run_concentration(c);
    CHECK(a.rows[0][4] != b.rows[0][4]);
}

TEST_CASE("run_anisotropy smoke run covers both truth settings") {
    ExperimentConfig c = ExperimentConfig::anisotropy_defaults();
    c.replicates = 5;
    c.base_seed = 3;
    c.grid_n1 = 81;
    c.grid_n2 = 81;
    c.delta = 0.05;
    c.n_values = {100};
    c.tau_values = {0.05, 0.2};
    const ResultTable t = run_anisotropy(c);
    // 2 settings x 1 cutoff x 3 taus (the sweep plus cfg.tau = 0.1)
    REQUIRE(t.rows.size() == 6);
    const auto aniso = rows_where(t, 2, "1");
    const auto iso = rows_where(t, 2, "0");
    REQUIRE(aniso.size() == 3);
    REQUIRE(iso.size() == 3);
    // detection rate is nonincreasing in tau within one setting
    for (const auto* group : {&aniso, &iso}) {
        double prev = 1.0;
        for (const auto& row : *group) {
            const double rate = field_as_double(row[3]);
            CHECK(rate >= 0.0);
            CHECK(rate <= prev + 1e-15);
            prev = rate;
        }
    }
    // the anisotropic truth separates the exponents
    CHECK(field_as_double(aniso.front()[4]) < field_as_double(aniso.front()[5]));
}

TEST_CASE("run_deformation smoke run produces finite relative errors") {
    ExperimentConfig c = ExperimentConfig::deformation_defaults();
    c.replicates = 2;
    c.base_seed = 9;
    c.grid_n1 = 41;
    c.grid_n2 = 41;
    c.delta = 0.05;
    c.n_values = {60};
    c.n_nodes = 21;
    c.deform_eval_n = 2;
    const ResultTable t = run_deformation(c);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.schema == std::vector<std::string>{"n", "mean_rel_err_a1", "mean_rel_err_a2"});
    const double e1 = field_as_double(t.rows[0][1]);
    const double e2 = field_as_double(t.rows[0][2]);
    CHECK(e1 > 0.0);
    CHECK(e1 < 1.0);
    CHECK(e2 > 0.0);
}

TEST_CASE("run_risk_scaling adds slope rows only for 3 or more sweep points") {
    ExperimentConfig c = ExperimentConfig::risk_scaling_defaults();
    c.replicates = 2;
    c.base_seed = 4;
    c.grid_n1 = 21;
    c.grid_n2 = 21;
    c.learn_sheets = 40;
    c.m0_values = {100, 200};
    const ResultTable two = run_risk_scaling(c);
    CHECK(two.rows.size() == 4);  // oracle + plugin per m0, no slope rows
    CHECK(rows_where(two, 0, "oracle_slope").empty());

    c.m0_values = {100, 200, 400};
    const ResultTable three = run_risk_scaling(c);
    CHECK(three.rows.size() == 8);
    REQUIRE(rows_where(three, 0, "oracle_slope").size() == 1);
    REQUIRE(rows_where(three, 0, "plugin_slope").size() == 1);
    CHECK(three.schema ==
          std::vector<std::string>{"variant", "m0", "empirical_mse", "plan_h1", "plan_h2"});
    for (const auto& row : rows_where(three, 0, "oracle"))
        CHECK(field_as_double(row[2]) > 0.0);
}

TEST_CASE("run_risk_scaling requires the exact-lattice Hurst index") {
    ExperimentConfig c = ExperimentConfig::risk_scaling_defaults();
    c.h1 = 0.3;
    CHECK_THROWS_AS(run_risk_scaling(c), ConfigError);
}

TEST_CASE("run_expansion_checks ratios stay bounded and d_factor peaks on the diagonal") {
    const ResultTable t = run_expansion_checks(ExperimentConfig::expansion_defaults());
    REQUIRE(t.rows.size() == 12);  // k = 2..10, max_over_min, two d_factor rows
    const auto spread = rows_where(t, 0, "max_over_min");
    REQUIRE(spread.size() == 1);
    CHECK(field_as_double(spread[0][2]) <= 50.0);
    CHECK(field_as_double(spread[0][3]) <= 50.0);
    const auto offdiag = rows_where(t, 0, "dfactor_max_offdiag");
    REQUIRE(offdiag.size() == 1);
    CHECK(field_as_double(offdiag[0][2]) < 0.5);
    const auto diag = rows_where(t, 0, "dfactor_diag_exact_half");
    REQUIRE(diag.size() == 1);
    CHECK(diag[0][2] == "1");
}

TEST_CASE("run_experiment dispatches on the configured scenario") {
    const ExperimentConfig c = ExperimentConfig::expansion_defaults();
    CHECK(table_to_csv(run_experiment(c)) == table_to_csv(run_expansion_checks(c)));
}
