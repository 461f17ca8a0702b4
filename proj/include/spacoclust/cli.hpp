#pragma once

// Command-line front end.  run_subcommand() receives the argument vector
// without the program name and returns the process exit code: 0 success,
// 1 usage error, 2 parse/config/data error, 3 numeric failure.  Failures
// print one machine-readable JSON line on stderr.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spacoclust/core.hpp"
#include "spacoclust/errors.hpp"
#include "spacoclust/estimation.hpp"
#include "spacoclust/evaluate.hpp"
#include "spacoclust/io.hpp"
#include "spacoclust/posterior.hpp"
#include "spacoclust/selection.hpp"
#include "spacoclust/simulate.hpp"
#include "spacoclust/version.hpp"

namespace spacoclust {
namespace cli {

inline int exit_code_for(Errc code) {
    switch (code) {
        case Errc::OptimizerFailure:
        case Errc::NotPositiveDefinite:
        case Errc::NotPositiveSemidefinite:
        case Errc::StaleCache:
        case Errc::UndefinedMean:
        case Errc::DegreesOfFreedomTooSmall:
        case Errc::EmptyColumnCluster:
        case Errc::SingleColumnCluster:
            return 3;
        default:
            return 2;
    }
}

inline void print_error_line(const std::string& code, const std::string& message) {
    nlohmann::json j{{"error", {{"code", code}, {"message", message}}}};
    std::cerr << j.dump() << '\n';
}

namespace detail {

namespace fs = std::filesystem;

inline void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(Errc::IoError, "cannot create output directory '" + dir + "': " + ec.message());
    }
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

inline nlohmann::json input_fingerprint(const std::string& path) {
    return nlohmann::json{{"path", path}, {"fnv1a64", io::fnv1a64_hex(io::read_file(path))}};
}

inline int cmd_simulate(const std::string& config_path, const std::string& scenario_flag,
                        bool seed_given, std::uint64_t seed, const std::string& out_dir) {
    io::ConfigMap cfg =
        config_path.empty() ? io::ConfigMap() : io::ConfigMap::from_file(config_path);
    const std::string cfg_scenario = cfg.get_string("scenario", "");
    const std::string name = scenario_flag.empty() ? cfg_scenario : scenario_flag;
    if (name.empty()) {
        throw Error(Errc::ConfigInvalid, "scenario required (--scenario or a 'scenario' config key)");
    }
    const Scenario scenario = parse_scenario(name);
    ScenarioConfig sc = io::scenario_config_from_config(cfg, scenario, 1);
    cfg.finish();
    if (seed_given) sc.seed = seed;

    const SimulatedExperiment exp = generate_experiment(sc);
    ensure_out_dir(out_dir);
    io::write_file(join_path(out_dir, "matrix.csv"), io::serialize_matrix(exp.data));
    io::write_file(join_path(out_dir, "coords.csv"), io::serialize_coords(exp.data));
    io::write_file(join_path(out_dir, "truth_row_labels.csv"),
                   io::serialize_labels(exp.data.row_ids, exp.truth.labels.rows));
    io::write_file(join_path(out_dir, "truth_col_labels.csv"),
                   io::serialize_labels(exp.data.col_ids, exp.truth.labels.cols));

    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : exp.truth.kernels) kernels.push_back(io::kernel_params_to_json(k));
    nlohmann::json echo{{"K", sc.K},
                        {"R", sc.R},
                        {"row_sizes", sc.row_sizes},
                        {"col_sizes", sc.col_sizes},
                        {"snr", io::matrix_to_json(sc.snr)},
                        {"c_delta", sc.c_delta},
                        {"spacing", sc.coord_spacing}};
    nlohmann::json truth{{"scenario", scenario_name(sc.scenario)},
                         {"seed", sc.seed},
                         {"row_ids", exp.data.row_ids},
                         {"col_ids", exp.data.col_ids},
                         {"row_labels", exp.truth.labels.rows},
                         {"col_labels", exp.truth.labels.cols},
                         {"mu", io::matrix_to_json(exp.truth.mu)},
                         {"tau", io::matrix_to_json(exp.truth.tau)},
                         {"xi", io::matrix_to_json(exp.truth.xi)},
                         {"kernels", std::move(kernels)},
                         {"config_echo", std::move(echo)}};
    if (!exp.truth.nested_rows.empty()) {
        truth["nested_rows"] = exp.truth.nested_rows;
        truth["intersection_classes"] = exp.truth.intersection_classes;
    }
    io::write_file(join_path(out_dir, "truth.json"), truth.dump(2) + "\n");

    std::printf("simulate: scenario=%s seed=%llu n=%lld p=%lld out=%s\n",
                scenario_name(sc.scenario).c_str(),
                static_cast<unsigned long long>(sc.seed),
                static_cast<long long>(exp.data.n_rows()),
                static_cast<long long>(exp.data.n_cols()), out_dir.c_str());
    return 0;
}

inline int cmd_fit(const std::string& matrix_path, const std::string& coords_path,
                   const std::string& config_path, bool seed_given, std::uint64_t seed,
                   const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    io::ConfigMap cfg = io::ConfigMap::from_file(config_path);
    const ModelSpec spec = io::model_spec_from_config(cfg);
    FitConfig fc = io::fit_config_from_config(cfg);
    cfg.finish();
    if (seed_given) fc.seed = seed;

    const ExpressionDataset ds = io::load_dataset(matrix_path, coords_path);
    const FitResult result = fit(ds, spec, fc);
    const double wallclock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json inputs{{"matrix", input_fingerprint(matrix_path)},
                          {"coords", input_fingerprint(coords_path)},
                          {"config", input_fingerprint(config_path)}};
    ensure_out_dir(out_dir);
    io::write_file(join_path(out_dir, "report.json"),
                   io::run_report(ds, spec, fc, result, inputs, wallclock).dump(2) + "\n");
    io::write_file(join_path(out_dir, "row_labels.csv"),
                   io::serialize_labels(ds.row_ids, result.labels.rows));
    io::write_file(join_path(out_dir, "col_labels.csv"),
                   io::serialize_labels(ds.col_ids, result.labels.cols));

    std::printf("fit: K=%d R=%d kernel=%s loglik=%.6f icl=%.6f best_start=%d out=%s\n", spec.K,
                spec.R, kernel_kind_name(spec.kernel).c_str(), result.best_loglik, result.icl,
                result.best_start, out_dir.c_str());
    return 0;
}

inline int cmd_select(const std::string& matrix_path, const std::string& coords_path,
                      const std::string& grid_path, bool seed_given, std::uint64_t seed,
                      const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    io::ConfigMap cfg = io::ConfigMap::from_file(grid_path);
    std::vector<int> k_grid;
    for (double v : cfg.get_double_list("K_grid")) k_grid.push_back(static_cast<int>(v));
    std::vector<int> r_grid;
    for (double v : cfg.get_double_list("R_grid")) r_grid.push_back(static_cast<int>(v));
    if (k_grid.empty() || r_grid.empty()) {
        throw Error(Errc::ConfigInvalid, grid_path + ": K_grid and R_grid are required");
    }
    std::vector<KernelKind> kernels;
    for (const auto& name : io::split(cfg.get_string("kernels", "exponential"), ',')) {
        kernels.push_back(parse_kernel_kind(io::trim(name)));
    }
    const double c_delta = cfg.get_double("c_delta", 10.0);
    FitConfig fc = io::fit_config_from_config(cfg);
    cfg.finish();
    if (seed_given) fc.seed = seed;

    std::vector<GridEntry> grid;
    for (int K : k_grid) {
        for (int R : r_grid) {
            for (KernelKind kind : kernels) grid.push_back(GridEntry{K, R, kind});
        }
    }
    const ExpressionDataset ds = io::load_dataset(matrix_path, coords_path);
    const SelectionResult sel = select(ds, grid, c_delta, fc);
    const double wallclock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ensure_out_dir(out_dir);
    io::write_file(join_path(out_dir, "selection_table.csv"),
                   io::serialize_selection_table(sel.table));
    const GridEntry best = sel.table[static_cast<std::size_t>(sel.best_index)].entry;
    ModelSpec best_spec;
    best_spec.K = best.K;
    best_spec.R = best.R;
    best_spec.kernel = best.kernel;
    best_spec.c_delta = c_delta;
    nlohmann::json inputs{{"matrix", input_fingerprint(matrix_path)},
                          {"coords", input_fingerprint(coords_path)},
                          {"grid", input_fingerprint(grid_path)}};
    io::write_file(join_path(out_dir, "best_report.json"),
                   io::run_report(ds, best_spec, fc, sel.best_fit, inputs, wallclock).dump(2) + "\n");
    io::write_file(join_path(out_dir, "row_labels.csv"),
                   io::serialize_labels(ds.row_ids, sel.best_fit.labels.rows));
    io::write_file(join_path(out_dir, "col_labels.csv"),
                   io::serialize_labels(ds.col_ids, sel.best_fit.labels.cols));

    std::printf("select: best K=%d R=%d kernel=%s icl=%.6f (%zu grid entries) out=%s\n", best.K,
                best.R, kernel_kind_name(best.kernel).c_str(), sel.best_fit.icl, sel.table.size(),
                out_dir.c_str());
    return 0;
}

struct ReportModel {
    CoClusterLabels labels;
    ThetaGrid theta;
    KernelKind kernel = KernelKind::Exponential;
    std::vector<Eigen::VectorXd> phi;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
};

inline ReportModel report_model(const nlohmann::json& report, const std::string& path) {
    ReportModel rm;
    try {
        const auto& res = report.at("result");
        rm.labels.n_row_clusters = report.at("model").at("K").get<int>();
        rm.labels.n_col_clusters = report.at("model").at("R").get<int>();
        rm.labels.rows = res.at("row_labels").get<std::vector<int>>();
        rm.labels.cols = res.at("col_labels").get<std::vector<int>>();
        rm.theta = io::theta_from_json(res.at("theta"));
        rm.kernel = parse_kernel_kind(report.at("model").at("kernel").get<std::string>());
        for (const auto& vec : res.at("phi")) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(vec.size()));
            for (std::size_t i = 0; i < vec.size(); ++i) {
                v[static_cast<Eigen::Index>(i)] = vec.at(i).get<double>();
            }
            rm.phi.push_back(std::move(v));
        }
        rm.row_ids = res.at("row_ids").get<std::vector<std::string>>();
        rm.col_ids = res.at("col_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, path + ": " + e.what());
    }
    return rm;
}

inline int cmd_posterior(const std::string& report_path, const std::string& matrix_path,
                         const std::string& coords_path, const std::string& block, int top_n,
                         double level) {
    const ReportModel rm = report_model(io::load_report(report_path), report_path);
    const ExpressionDataset ds = io::load_dataset(matrix_path, coords_path);
    if (ds.row_ids != rm.row_ids || ds.col_ids != rm.col_ids) {
        throw Error(Errc::ConfigInvalid, "dataset ids do not match the run report");
    }
    const std::vector<std::string> parts = io::split(block, ',');
    if (parts.size() != 2) {
        throw Error(Errc::ConfigInvalid, "--block expects k,r");
    }
    const int k = static_cast<int>(io::parse_long(parts[0], "--block"));
    const int r = static_cast<int>(io::parse_long(parts[1], "--block"));

    const std::vector<RankedGene> ranked =
        top_variable_genes(ds, rm.labels, rm.theta, rm.kernel, rm.phi, k, r, top_n, level);
    std::printf("rank,gene_id,mean,lower,upper\n");
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::printf("%zu,%s,%.6g,%.6g,%.6g\n", i + 1, ranked[i].gene_id.c_str(), ranked[i].mean,
                    ranked[i].lo, ranked[i].hi);
    }
    return 0;
}

struct AxisLabels {
    std::vector<std::string> ids;
    std::vector<int> labels;
};

/// Accepts a label CSV, a run report, or a truth file; picks the requested
/// axis out of the JSON forms.
inline AxisLabels load_axis_labels(const std::string& path, bool rows_axis) {
    const std::string content = io::read_file(path);
    std::size_t i = 0;
    while (i < content.size() && std::isspace(static_cast<unsigned char>(content[i]))) ++i;
    AxisLabels out;
    if (i < content.size() && content[i] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(content);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ParseError, path + ": " + e.what());
        }
        const nlohmann::json& root = j.contains("result") ? j.at("result") : j;
        const char* lkey = rows_axis ? "row_labels" : "col_labels";
        const char* ikey = rows_axis ? "row_ids" : "col_ids";
        if (!root.contains(lkey)) {
            throw Error(Errc::ParseError, path + ": missing '" + std::string(lkey) + "'");
        }
        try {
            out.labels = root.at(lkey).get<std::vector<int>>();
            if (root.contains(ikey)) out.ids = root.at(ikey).get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ParseError, path + ": " + e.what());
        }
    } else {
        for (const auto& [id, label] : io::parse_labels(content, path)) {
            out.ids.push_back(id);
            out.labels.push_back(label);
        }
    }
    return out;
}

inline int cmd_eval(const std::string& truth_path, const std::string& est_path, bool rows_axis) {
    const AxisLabels truth = load_axis_labels(truth_path, rows_axis);
    const AxisLabels est = load_axis_labels(est_path, rows_axis);
    std::vector<int> aligned;
    if (!truth.ids.empty() && !est.ids.empty()) {
        std::unordered_map<std::string, int> by_id;
        for (std::size_t i = 0; i < est.ids.size(); ++i) by_id[est.ids[i]] = est.labels[i];
        aligned.reserve(truth.ids.size());
        for (const auto& id : truth.ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw Error(Errc::ParseError, est_path + ": no label for id '" + id + "'");
            }
            aligned.push_back(it->second);
        }
    } else {
        aligned = est.labels; // positional match when ids are unavailable
    }
    std::printf("%.6f\n", cer(truth.labels, aligned));
    return 0;
}

inline int cmd_plot(const std::string& report_path, const std::string& coords_path,
                    const std::string& out_dir) {
    const ReportModel rm = report_model(io::load_report(report_path), report_path);
    std::unordered_map<std::string, Coord> by_id;
    for (const auto& [id, coord] : io::load_coords_list(coords_path)) by_id[id] = coord;
    std::vector<Coord> coords;
    coords.reserve(rm.col_ids.size());
    for (const auto& id : rm.col_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw Error(Errc::MissingCoordinate, coords_path + ": no coordinates for spot '" + id + "'");
        }
        coords.push_back(it->second);
    }
    ensure_out_dir(out_dir);
    io::write_file(join_path(out_dir, "block_summary.csv"), io::serialize_block_summary(rm.theta));
    io::write_file(join_path(out_dir, "spots.svg"), io::spot_map_svg(coords, rm.labels.cols));
    std::printf("plot: %zu spots, %dx%d blocks, out=%s\n", coords.size(), rm.theta.K, rm.theta.R,
                out_dir.c_str());
    return 0;
}

} // namespace detail

/// Parses and executes one subcommand.  args excludes the program name.
inline int run_subcommand(std::vector<std::string> args) {
    CLI::App app{"Spatially aware co-clustering of expression matrices"};
    app.name("spacoclust");
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    std::string sim_config;
    std::string sim_scenario;
    std::string sim_out;
    std::uint64_t sim_seed = 0;
    CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic experiment");
    sim->add_option("--config", sim_config, "Scenario config file");
    sim->add_option("--scenario", sim_scenario, "Scenario name s1..s5 (overrides the config)");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "Override the config seed");
    sim->add_option("--out", sim_out, "Output directory")->required();

    std::string fit_matrix;
    std::string fit_coords;
    std::string fit_config;
    std::string fit_out;
    std::uint64_t fit_seed = 0;
    CLI::App* fitc = app.add_subcommand("fit", "Fit the co-clustering model");
    fitc->add_option("--matrix", fit_matrix, "Expression matrix CSV")->required();
    fitc->add_option("--coords", fit_coords, "Spot coordinates CSV")->required();
    fitc->add_option("--config", fit_config, "Model and fit config file")->required();
    auto* fit_seed_opt = fitc->add_option("--seed", fit_seed, "Override the config seed");
    fitc->add_option("--out", fit_out, "Output directory")->required();

    std::string sel_matrix;
    std::string sel_coords;
    std::string sel_grid;
    std::string sel_out;
    std::uint64_t sel_seed = 0;
    CLI::App* selc = app.add_subcommand("select", "Sweep a (K, R, kernel) grid and pick by ICL");
    selc->add_option("--matrix", sel_matrix, "Expression matrix CSV")->required();
    selc->add_option("--coords", sel_coords, "Spot coordinates CSV")->required();
    selc->add_option("--grid", sel_grid, "Grid config file (K_grid, R_grid, kernels, fit keys)")
        ->required();
    auto* sel_seed_opt = selc->add_option("--seed", sel_seed, "Override the config seed");
    selc->add_option("--out", sel_out, "Output directory")->required();

    std::string post_report;
    std::string post_matrix;
    std::string post_coords;
    std::string post_block;
    int post_top = 5;
    double post_level = 0.95;
    CLI::App* post = app.add_subcommand("posterior", "Rank genes of a block by posterior variance");
    post->add_option("--report", post_report, "Run report JSON")->required();
    post->add_option("--matrix", post_matrix, "Expression matrix CSV")->required();
    post->add_option("--coords", post_coords, "Spot coordinates CSV")->required();
    post->add_option("--block", post_block, "Block as k,r (1-based)")->required();
    post->add_option("--top", post_top, "Number of genes to print");
    post->add_option("--level", post_level, "Credible level");

    std::string eval_truth;
    std::string eval_est;
    std::string eval_axis;
    CLI::App* evalc = app.add_subcommand("eval", "Clustering error rate between two labelings");
    evalc->add_option("--truth", eval_truth, "Reference labels (CSV or JSON)")->required();
    evalc->add_option("--est", eval_est, "Estimated labels (CSV or JSON)")->required();
    evalc->add_option("--axis", eval_axis, "rows or cols")
        ->required()
        ->check(CLI::IsMember({"rows", "cols"}));

    std::string plot_report;
    std::string plot_coords;
    std::string plot_out;
    CLI::App* plot = app.add_subcommand("plot", "Block summary table and spot map");
    plot->add_option("--report", plot_report, "Run report JSON")->required();
    plot->add_option("--coords", plot_coords, "Spot coordinates CSV")->required();
    plot->add_option("--out", plot_out, "Output directory")->required();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e); // --help / --version
        }
        print_error_line("Usage", e.what());
        return 1;
    }

    try {
        if (sim->parsed()) {
            return detail::cmd_simulate(sim_config, sim_scenario, sim_seed_opt->count() > 0,
                                        sim_seed, sim_out);
        }
        if (fitc->parsed()) {
            return detail::cmd_fit(fit_matrix, fit_coords, fit_config, fit_seed_opt->count() > 0,
                                   fit_seed, fit_out);
        }
        if (selc->parsed()) {
            return detail::cmd_select(sel_matrix, sel_coords, sel_grid, sel_seed_opt->count() > 0,
                                      sel_seed, sel_out);
        }
        if (post->parsed()) {
            return detail::cmd_posterior(post_report, post_matrix, post_coords, post_block,
                                         post_top, post_level);
        }
        if (evalc->parsed()) {
            return detail::cmd_eval(eval_truth, eval_est, eval_axis == "rows");
        }
        if (plot->parsed()) {
            return detail::cmd_plot(plot_report, plot_coords, plot_out);
        }
    } catch (const Error& e) {
        print_error_line(errc_name(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        print_error_line("Internal", e.what());
        return 3;
    }
    print_error_line("Usage", "no subcommand given");
    return 1;
}

} // namespace cli
} // namespace spacoclust
