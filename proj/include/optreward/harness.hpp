#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "optreward/bandit_model.hpp"
#include "optreward/opt_pipeline.hpp"

namespace optreward {

// One sweep cell outcome. abs_error = |estimate - true_opt| exactly;
// failed cells carry NaN estimates and a message, and the sweep continues.
struct ResultRow {
    std::string method;
    int n = 0;
    std::uint64_t seed = 0;
    double estimate = 0.0;
    double true_opt = 0.0;
    double abs_error = 0.0;
    double wall_time_ms = 0.0;
    bool failed = false;
    std::string message;
};

struct MethodSpec {
    std::string name;  // known | unknown | whitened | mixture | plugin | linucb
    EstimatorConfig estimator;           // pipeline methods; n filled per cell
    std::vector<double> lambda_grid{1.0};  // plugin
    std::int64_t plugin_mc = 200000;       // plugin policy evaluation budget
    double alpha = 1.0;                    // linucb
    int rounds_per_n = 0;                  // linucb rounds = rounds_per_n * n (0 -> K)
    int window = 100;                      // linucb trailing window
    int unlabeled_per_dim = 20;            // whitened pool size s = unlabeled_per_dim * d
};

struct ExperimentConfig {
    // Instance: either synthetic parameters or a saved instance file.
    std::optional<std::string> instance_path;
    int dim = 10;
    int num_arms = 2;
    double beta_entry_std = 1.0;
    std::pair<double, double> bias_range{-1.0, 1.0};
    double noise_std = 1.0;
    bool normalize_betas = false;
    std::uint64_t instance_seed = 1;

    std::optional<std::string> distribution_path;  // default: standard gaussian

    std::vector<MethodSpec> methods;
    std::vector<int> grid_n;           // strictly increasing
    std::vector<std::uint64_t> seeds;  // at least one
    std::int64_t true_opt_mc = 200000;
    std::uint64_t true_opt_seed = 1234567;  // fixed high-budget scoring stream
    std::string output_path = "results.csv";
    std::string plot_output_path;  // default: output stem + "_plot.csv"
    bool record_timings = false;   // measured times are not reproducible
    unsigned threads = 0;

    void validate() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Missing-entry imputation by user mean (all-missing rows -> 0), random
// N(0,1) projection to target_dim columns, entrywise logistic sigmoid.
Eigen::MatrixXd featurize_ratings(const Eigen::MatrixXd& ratings, int target_dim,
                                  std::uint64_t seed);

// Linear rescale of finite entries onto [lo, hi] (used for inhibition-style
// reward columns); NaN entries stay NaN.
Eigen::MatrixXd rescale_rewards(const Eigen::MatrixXd& values, double lo, double hi);

// Dense CSV with empty fields as NaN. Ragged rows raise ParseError with the
// line number. No header-row autodetection; set skip_header to drop line 1.
Eigen::MatrixXd ingest_csv(const std::string& path, bool skip_header = false);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

// Deterministic "%.17g" formatting, shared by every CSV writer so reruns
// are byte-identical.
std::string format_double(double v);

std::vector<ResultRow> run_sweep(const ExperimentConfig& config);

void write_result_csv(const std::string& path, const std::vector<ResultRow>& rows,
                      bool record_timings);
// Per (method, n): median and quartiles of abs_error across seeds.
void write_plot_csv(const std::string& path, const std::vector<ResultRow>& rows);

}  // namespace optreward
