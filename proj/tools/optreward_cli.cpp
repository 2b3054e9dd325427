#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "optreward/baselines.hpp"
#include "optreward/errors.hpp"
#include "optreward/harness.hpp"
#include "optreward/serialization.hpp"

using namespace optreward;
using nlohmann::json;

namespace {

// OPTREWARD_SEED overrides every seed argument and the sweep seed list.
std::optional<std::uint64_t> env_seed() {
    if (const char* env = std::getenv("OPTREWARD_SEED"))
        return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
    return std::nullopt;
}

struct InstanceFile {
    BanditInstance instance;
    ContextDistribution dist = ContextDistribution::standard_gaussian(1);
};

InstanceFile load_instance_file(const std::string& path) {
    json j = load_json_file(path);
    InstanceFile file;
    file.instance = instance_from_json(j.contains("instance") ? j.at("instance") : j);
    file.dist = j.contains("distribution")
                    ? distribution_from_json(j.at("distribution"))
                    : ContextDistribution::standard_gaussian(file.instance.dim);
    return file;
}

void write_trajectory_csv(const std::string& path, const LinUcbTrajectory& traj) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << "round,arm,reward,trailing_mean\n";
    for (Eigen::Index t = 0; t < traj.rewards.size(); ++t) {
        out << (t + 1) << ',' << traj.arms[static_cast<std::size_t>(t)] << ','
            << format_double(traj.rewards[t]) << ',' << format_double(traj.trailing_mean[t])
            << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal-reward estimation for disjoint linear contextual bandits"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "Create and save a synthetic instance");
    int sim_d = 10, sim_k = 2;
    double sim_beta_std = 1.0, sim_bias_lo = -1.0, sim_bias_hi = 1.0, sim_noise = 1.0;
    bool sim_normalize = false;
    std::uint64_t sim_seed = 1;
    std::string sim_out = "instance.json";
    simulate->add_option("--d", sim_d, "Context dimension");
    simulate->add_option("--K", sim_k, "Arm count");
    simulate->add_option("--beta-std", sim_beta_std, "Std of beta entries");
    simulate->add_option("--bias-lo", sim_bias_lo, "Bias range lower end");
    simulate->add_option("--bias-hi", sim_bias_hi, "Bias range upper end");
    simulate->add_option("--noise", sim_noise, "Reward noise std");
    simulate->add_flag("--normalize", sim_normalize, "Rescale beta rows to unit norm");
    simulate->add_option("--seed", sim_seed, "Instance seed");
    simulate->add_option("--out", sim_out, "Output JSON path");

    // ---- estimate ----
    auto* estimate = app.add_subcommand("estimate", "Run one estimator configuration");
    std::string est_instance, est_out = "estimate.json", est_mode = "known";
    int est_n = 100, est_reps = 0, est_poly = 6, est_pool_per_dim = 20;
    double est_delta = 0.05, est_sigma_min = 1.0, est_sigma_max = 1.0;
    std::int64_t est_mc = 100000;
    std::uint64_t est_seed = 1;
    estimate->add_option("--instance", est_instance, "Instance JSON path")->required();
    estimate->add_option("--mode", est_mode, "known|unknown|whitened|mixture");
    estimate->add_option("--n", est_n, "Samples per arm per repetition");
    estimate->add_option("--reps", est_reps, "Repetitions (0 = theory default)");
    estimate->add_option("--delta", est_delta, "Failure probability");
    estimate->add_option("--poly-degree", est_poly, "Polynomial degree k (unknown mode)");
    estimate->add_option("--sigma-min", est_sigma_min, "Spectrum lower end (unknown mode)");
    estimate->add_option("--sigma-max", est_sigma_max, "Spectrum upper end (unknown mode)");
    estimate->add_option("--unlabeled-per-dim", est_pool_per_dim,
                         "Whitened mode: pool size s = this * d");
    estimate->add_option("--mc", est_mc, "Monte Carlo samples for the Gaussian max");
    estimate->add_option("--seed", est_seed, "Run seed");
    estimate->add_option("--out", est_out, "Output JSON path");

    // ---- baseline ----
    auto* baseline = app.add_subcommand("baseline", "Run LinUCB or the plug-in baseline");
    std::string base_kind = "linucb", base_instance, base_out = "baseline.csv";
    double base_alpha = 1.0, base_lambda = 1.0;
    int base_rounds = 1000, base_window = 100, base_n = 100;
    std::int64_t base_mc = 200000;
    std::uint64_t base_seed = 1;
    std::vector<double> base_lambda_grid;
    baseline->add_option("--kind", base_kind, "linucb|plugin")->required();
    baseline->add_option("--instance", base_instance, "Instance JSON path")->required();
    baseline->add_option("--alpha", base_alpha, "LinUCB exploration weight");
    baseline->add_option("--lambda", base_lambda, "Ridge regularization");
    baseline->add_option("--lambda-grid", base_lambda_grid,
                         "Plugin: candidate lambdas (best value wins)");
    baseline->add_option("--rounds", base_rounds, "LinUCB rounds");
    baseline->add_option("--window", base_window, "LinUCB trailing window");
    baseline->add_option("--n", base_n, "Plugin: samples per arm");
    baseline->add_option("--mc", base_mc, "Plugin: policy evaluation MC budget");
    baseline->add_option("--seed", base_seed, "Run seed");
    baseline->add_option("--out", base_out, "Output path (CSV for linucb, JSON for plugin)");

    // ---- featurize ----
    auto* featurize = app.add_subcommand("featurize", "Project a ratings CSV to features");
    std::string feat_in, feat_out = "features.csv";
    int feat_target = 2000;
    bool feat_skip_header = false, feat_rescale = false;
    double feat_lo = 0.0, feat_hi = 200.0;
    std::uint64_t feat_seed = 1;
    featurize->add_option("--in", feat_in, "Ratings CSV (empty fields = missing)")->required();
    featurize->add_option("--target-d", feat_target, "Feature dimension");
    featurize->add_flag("--skip-header", feat_skip_header, "Skip the first line");
    featurize->add_flag("--rescale", feat_rescale, "Rescale values onto [lo, hi] first");
    featurize->add_option("--rescale-lo", feat_lo, "Rescale lower end");
    featurize->add_option("--rescale-hi", feat_hi, "Rescale upper end");
    featurize->add_option("--seed", feat_seed, "Projection seed");
    featurize->add_option("--out", feat_out, "Output CSV path");

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "Run an experiment sweep from a JSON config");
    std::string sweep_config;
    sweep->add_option("--config", sweep_config, "ExperimentConfig JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto seed_override = env_seed();
        if (simulate->parsed()) {
            if (seed_override) sim_seed = *seed_override;
            BanditInstance instance =
                make_synthetic_instance(sim_d, sim_k, sim_beta_std, {sim_bias_lo, sim_bias_hi},
                                        sim_noise, sim_normalize, sim_seed);
            json out{{"instance", to_json(instance)},
                     {"distribution",
                      to_json(ContextDistribution::standard_gaussian(sim_d))}};
            save_json_file(sim_out, out);
            std::cout << "wrote " << sim_out << "\n";
        } else if (estimate->parsed()) {
            if (seed_override) est_seed = *seed_override;
            InstanceFile file = load_instance_file(est_instance);
            EstimatorConfig config;
            config.delta = est_delta;
            config.repetitions = est_reps;
            config.samples_per_arm = est_n;
            config.poly_degree = est_poly;
            config.sigma_min = est_sigma_min;
            config.sigma_max = est_sigma_max;
            config.mc_samples = est_mc;
            config.seed = est_seed;
            BatchSampler sampler = make_batch_sampler(file.instance, file.dist);
            OptEstimate result;
            if (est_mode == "known") {
                result = estimate_opt_known(sampler, file.instance.num_arms, config);
            } else if (est_mode == "unknown") {
                result = estimate_opt_unknown(sampler, file.instance.num_arms, config);
            } else if (est_mode == "whitened") {
                Eigen::MatrixXd pool(
                    static_cast<Eigen::Index>(est_pool_per_dim) * file.instance.dim,
                    file.instance.dim);
                Rng rng(derive_seed(est_seed, Stream::kContexts, 0xDADA));
                file.dist.sample(rng, pool);
                result = estimate_opt_whitened(sampler, pool, file.instance.num_arms, config);
            } else if (est_mode == "mixture") {
                result = estimate_opt_mixture(sampler, file.dist, file.instance.num_arms, config);
            } else {
                throw InvalidArgument("unknown mode: " + est_mode);
            }
            save_json_file(est_out, to_json(result));
            std::cout << "OPT estimate: " << result.value << " (MC SE "
                      << result.mc_standard_error << ")\n";
        } else if (baseline->parsed()) {
            if (seed_override) base_seed = *seed_override;
            InstanceFile file = load_instance_file(base_instance);
            if (base_kind == "linucb") {
                auto traj = linucb_run(file.instance, file.dist, base_alpha, base_rounds,
                                       base_window, base_seed, base_lambda);
                write_trajectory_csv(base_out, traj);
                std::cout << "final trailing mean: " << traj.final_trailing_mean << "\n";
            } else if (base_kind == "plugin") {
                std::vector<SampleBatch> batches;
                for (int a = 0; a < file.instance.num_arms; ++a)
                    batches.push_back(sample_batch(
                        file.instance, file.dist, a, base_n,
                        derive_seed(base_seed, Stream::kRepetition,
                                    static_cast<std::uint64_t>(a))));
                double value =
                    base_lambda_grid.empty()
                        ? plugin_policy_value(batches, base_lambda, file.instance, file.dist,
                                              base_mc,
                                              derive_seed(base_seed, Stream::kTrueOpt, 0xBEEF))
                        : plugin_policy_value_best(
                              batches, base_lambda_grid, file.instance, file.dist, base_mc,
                              derive_seed(base_seed, Stream::kTrueOpt, 0xBEEF));
                save_json_file(base_out, json{{"plugin_policy_value", value}});
                std::cout << "plugin policy value: " << value << "\n";
            } else {
                throw InvalidArgument("unknown baseline kind: " + base_kind);
            }
        } else if (featurize->parsed()) {
            if (seed_override) feat_seed = *seed_override;
            Eigen::MatrixXd ratings = ingest_csv(feat_in, feat_skip_header);
            if (feat_rescale) ratings = rescale_rewards(ratings, feat_lo, feat_hi);
            Eigen::MatrixXd features = featurize_ratings(ratings, feat_target, feat_seed);
            write_matrix_csv(feat_out, features);
            std::cout << "wrote " << features.rows() << "x" << features.cols() << " features to "
                      << feat_out << "\n";
        } else if (sweep->parsed()) {
            ExperimentConfig config = experiment_from_json(load_json_file(sweep_config));
            if (seed_override) config.seeds = {*seed_override};
            std::vector<ResultRow> rows = run_sweep(config);
            write_result_csv(config.output_path, rows, config.record_timings);
            std::string plot_path = config.plot_output_path.empty()
                                        ? config.output_path + ".plot.csv"
                                        : config.plot_output_path;
            write_plot_csv(plot_path, rows);
            int failures = 0;
            for (const auto& row : rows)
                if (row.failed) {
                    ++failures;
                    std::cerr << "error row: " << row.method << " n=" << row.n
                              << " seed=" << row.seed << ": " << row.message << "\n";
                }
            std::cout << "wrote " << rows.size() << " rows to " << config.output_path << "\n";
            if (failures > 0) return 1;  // exit 0 iff no error rows
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
