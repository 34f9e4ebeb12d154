// Command-line front end: subcommands wiring the library together.
//
//   anisosurf simulate   --config sim.json --out data.csv [--seed S] [--deterministic]
//   anisosurf estimate   --config est.json --out est.jsonl
//   anisosurf deform     --config def.json --out def.jsonl
//   anisosurf smooth     --config smo.json --out pred.jsonl
//   anisosurf experiment --config exp.json --out table.csv [--seed S]
//
// Exit codes: 0 success, 1 validation/config error, 2 runtime error.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "anisosurf/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace anisosurf;

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool deterministic = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_seed) {
    cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--out", args.out_path, "output path")->required();
    if (with_seed)
        cmd->add_option("--seed", args.seed, "seed override")
            ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_flag("--deterministic", args.deterministic,
                  "suppress wall-clock metadata for byte-identical reruns");
    cmd->add_option("--threads", args.threads, "worker threads (0 = auto)");
}

void apply_threads(int threads) {
    if (threads == 0) {
        if (const char* env = std::getenv("ANISO_SURF_THREADS")) threads = std::atoi(env);
    }
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

void run_simulate(const CommonArgs& args) {
    SimConfig config = parse_simulate_config(read_text_file(args.config_path));
    if (args.seed_given) config.seed = args.seed;
    const SurfaceDataset dataset = generate_dataset(config);
    write_dataset(dataset, args.out_path, args.deterministic);
}

void run_estimate(const CommonArgs& args) {
    const EstimateJob job = parse_estimate_config(read_text_file(args.config_path));
    const SurfaceDataset dataset = read_dataset(job.dataset_path);
    const RegParams params = job.reg.resolve(dataset);
    const std::vector<Point> points = job.points.resolve(dataset.domain, params.delta);
    const DatasetIndex index(dataset);
    std::string out;
    for (const RegularityEstimate& est : estimate_grid(index, points, params))
        out += estimate_to_json_line(est) + "\n";
    atomic_write_text(args.out_path, out);
}

void run_deform(const CommonArgs& args) {
    const DeformJob job = parse_deform_config(read_text_file(args.config_path));
    const SurfaceDataset dataset = read_dataset(job.dataset_path);
    try {
        job.anchor.validate(dataset.domain);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("anchor: ") + e.what());
    }
    const RegParams params = job.reg.resolve(dataset);
    const std::vector<Point> points = job.points.resolve(dataset.domain, params.delta);
    const DatasetIndex index(dataset);
    const DataRegularityField field(index, params);
    std::string out;
    for (const Point& t : points) {
        const DeformationEstimate e1 = a_component_hat(1, std::cref(field), dataset.domain, t,
                                                       job.anchor, params.delta, job.n_nodes);
        const DeformationEstimate e2 = a_component_hat(2, std::cref(field), dataset.domain, t,
                                                       job.anchor, params.delta, job.n_nodes);
        out += deformation_to_json_line(t, e1, e2) + "\n";
    }
    atomic_write_text(args.out_path, out);
}

void run_smooth(const CommonArgs& args) {
    const SmoothJob job = parse_smooth_config(read_text_file(args.config_path));
    const SurfaceDataset learn = read_dataset(job.learning_dataset_path);
    const SurfaceDataset fresh = read_dataset(job.new_sheet_path);
    if (fresh.sheets.empty()) throw ConfigError("new_sheet: file contains no observations");
    const Sheet& new_sheet = fresh.sheets.front();
    const RegParams params = job.reg.resolve(learn);
    const std::vector<Point> points = job.points.resolve(learn.domain, params.delta);
    const KernelSpec kernel = job.kernel_spec();
    const double c_density = job.c_density ? *job.c_density : 1.0 / learn.domain.area();
    const DatasetIndex index(learn);
    std::string out;
    for (const Point& t : points) {
        const AdaptivePrediction pred =
            adaptive_predict(index, new_sheet, t, params, kernel, c_density);
        out += prediction_to_json_line(t, pred) + "\n";
    }
    atomic_write_text(args.out_path, out);
}

void run_experiment_cmd(const CommonArgs& args) {
    ExperimentConfig config = parse_experiment_config(read_text_file(args.config_path));
    if (args.seed_given) config.base_seed = args.seed;
    const ResultTable table = run_experiment(config);
    write_csv(table, args.out_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisotropic surface toolkit"};
    app.require_subcommand(1);

    CommonArgs sim_args, est_args, def_args, smo_args, exp_args;
    add_common(app.add_subcommand("simulate", "sample a dataset"), sim_args, true);
    add_common(app.add_subcommand("estimate", "local regularity estimates"), est_args, false);
    add_common(app.add_subcommand("deform", "domain deformation recovery"), def_args, false);
    add_common(app.add_subcommand("smooth", "regularity-adaptive smoothing"), smo_args, false);
    add_common(app.add_subcommand("experiment", "Monte Carlo experiment table"), exp_args,
               true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand("simulate")) {
            apply_threads(sim_args.threads);
            run_simulate(sim_args);
        } else if (app.got_subcommand("estimate")) {
            apply_threads(est_args.threads);
            run_estimate(est_args);
        } else if (app.got_subcommand("deform")) {
            apply_threads(def_args.threads);
            run_deform(def_args);
        } else if (app.got_subcommand("smooth")) {
            apply_threads(smo_args.threads);
            run_smooth(smo_args);
        } else if (app.got_subcommand("experiment")) {
            apply_threads(exp_args.threads);
            run_experiment_cmd(exp_args);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const BoundaryViolation& e) {
        std::cerr << "BoundaryViolation: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
