#include "optreward/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "optreward/baselines.hpp"
#include "optreward/errors.hpp"
#include "optreward/parallel.hpp"
#include "optreward/serialization.hpp"

namespace optreward {

using nlohmann::json;

void ExperimentConfig::validate() const {
    if (methods.empty()) throw InvalidArgument("no methods configured");
    if (grid_n.empty()) throw InvalidArgument("empty n grid");
    for (std::size_t i = 1; i < grid_n.size(); ++i)
        if (grid_n[i] <= grid_n[i - 1]) throw InvalidArgument("grid must be strictly increasing");
    if (seeds.empty()) throw InvalidArgument("need at least one seed");
    if (true_opt_mc < 1) throw InvalidArgument("true_opt_mc must be >= 1");
    if (output_path.empty()) throw InvalidArgument("output path required");
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig config;
    const auto& inst = j.at("instance");
    if (inst.contains("path")) {
        config.instance_path = inst.at("path").get<std::string>();
    } else {
        const auto& syn = inst.at("synthetic");
        config.dim = syn.at("d").get<int>();
        config.num_arms = syn.at("K").get<int>();
        config.beta_entry_std = syn.value("beta_entry_std", 1.0);
        if (syn.contains("bias_range")) {
            config.bias_range = {syn.at("bias_range")[0].get<double>(),
                                 syn.at("bias_range")[1].get<double>()};
        }
        config.noise_std = syn.value("noise_std", 1.0);
        config.normalize_betas = syn.value("normalize_betas", false);
        config.instance_seed = syn.value("seed", static_cast<std::uint64_t>(1));
    }
    if (j.contains("distribution_path"))
        config.distribution_path = j.at("distribution_path").get<std::string>();
    for (const auto& mj : j.at("methods")) {
        MethodSpec spec;
        spec.name = mj.at("name").get<std::string>();
        spec.estimator = estimator_config_from_json(mj);
        if (mj.contains("lambda_grid"))
            spec.lambda_grid = mj.at("lambda_grid").get<std::vector<double>>();
        spec.plugin_mc = mj.value("plugin_mc", spec.plugin_mc);
        spec.alpha = mj.value("alpha", spec.alpha);
        spec.rounds_per_n = mj.value("rounds_per_n", spec.rounds_per_n);
        spec.window = mj.value("window", spec.window);
        spec.unlabeled_per_dim = mj.value("unlabeled_per_dim", spec.unlabeled_per_dim);
        config.methods.push_back(std::move(spec));
    }
    config.grid_n = j.at("grid_n").get<std::vector<int>>();
    config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    config.true_opt_mc = j.value("true_opt_mc", config.true_opt_mc);
    config.true_opt_seed = j.value("true_opt_seed", config.true_opt_seed);
    config.output_path = j.value("output", config.output_path);
    config.plot_output_path = j.value("plot_output", std::string());
    config.record_timings = j.value("record_timings", false);
    config.threads = j.value("threads", 0u);
    config.validate();
    return config;
}

Eigen::MatrixXd featurize_ratings(const Eigen::MatrixXd& ratings, int target_dim,
                                  std::uint64_t seed) {
    if (target_dim < 1) throw InvalidArgument("target_dim must be >= 1");
    const Eigen::Index users = ratings.rows();
    const Eigen::Index items = ratings.cols();
    if (users < 1 || items < 1) throw InvalidArgument("empty ratings matrix");

    Eigen::MatrixXd imputed = ratings;
    for (Eigen::Index u = 0; u < users; ++u) {
        double sum = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index i = 0; i < items; ++i) {
            if (std::isfinite(imputed(u, i))) {
                sum += imputed(u, i);
                ++seen;
            }
        }
        const double fill = seen > 0 ? sum / static_cast<double>(seen) : 0.0;
        for (Eigen::Index i = 0; i < items; ++i)
            if (!std::isfinite(imputed(u, i))) imputed(u, i) = fill;
    }

    Eigen::MatrixXd projection(items, target_dim);
    Rng rng(derive_seed(seed, Stream::kFeaturize));
    rng.fill_normal(projection);
    Eigen::MatrixXd features = imputed * projection;
    return features.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
}

Eigen::MatrixXd rescale_rewards(const Eigen::MatrixXd& values, double lo, double hi) {
    if (hi <= lo) throw InvalidArgument("need hi > lo");
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        double v = values.data()[i];
        if (std::isfinite(v)) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }
    if (!(vmax > vmin)) return Eigen::MatrixXd::Constant(values.rows(), values.cols(), lo);
    return values.unaryExpr([=](double v) {
        return std::isfinite(v) ? lo + (hi - lo) * (v - vmin) / (vmax - vmin) : v;
    });
}

Eigen::MatrixXd ingest_csv(const std::string& path, bool skip_header) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_number = 0;
    std::size_t cols = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (skip_header && line_number == 1) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<double> row;
        std::size_t start = 0;
        for (;;) {
            std::size_t comma = line.find(',', start);
            std::string field = line.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (field.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                char* end = nullptr;
                double v = std::strtod(field.c_str(), &end);
                if (end == field.c_str() || *end != '\0')
                    throw ParseError("unparseable field '" + field + "'", line_number);
                row.push_back(v);
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols == 0) cols = row.size();
        if (row.size() != cols) throw ParseError("ragged row", line_number);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty file", line_number);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            if (std::isnan(m(i, j)))
                ;  // missing entries serialize as empty fields
            else
                out << format_double(m(i, j));
        }
        out << '\n';
    }
}

namespace {

struct InstanceBundle {
    BanditInstance instance;
    ContextDistribution dist = ContextDistribution::standard_gaussian(1);
};

InstanceBundle load_bundle(const ExperimentConfig& config) {
    InstanceBundle bundle;
    if (config.instance_path) {
        json j = load_json_file(*config.instance_path);
        bundle.instance = instance_from_json(j.contains("instance") ? j.at("instance") : j);
        if (!config.distribution_path && j.contains("distribution")) {
            bundle.dist = distribution_from_json(j.at("distribution"));
            return bundle;
        }
    } else {
        bundle.instance = make_synthetic_instance(
            config.dim, config.num_arms, config.beta_entry_std, config.bias_range,
            config.noise_std, config.normalize_betas, config.instance_seed);
    }
    bundle.dist = config.distribution_path
                      ? distribution_from_json(load_json_file(*config.distribution_path))
                      : ContextDistribution::standard_gaussian(bundle.instance.dim);
    return bundle;
}

double run_cell(const MethodSpec& method, const InstanceBundle& bundle, int n,
                std::uint64_t seed) {
    const int num_arms = bundle.instance.num_arms;
    EstimatorConfig est = method.estimator;
    est.samples_per_arm = n;
    est.seed = seed;
    est.threads = 1;  // cells already run in parallel
    BatchSampler sampler = make_batch_sampler(bundle.instance, bundle.dist);

    if (method.name == "known") return estimate_opt_known(sampler, num_arms, est).value;
    if (method.name == "unknown") return estimate_opt_unknown(sampler, num_arms, est).value;
    if (method.name == "whitened") {
        const Eigen::Index pool_size =
            static_cast<Eigen::Index>(method.unlabeled_per_dim) * bundle.instance.dim;
        Eigen::MatrixXd pool(pool_size, bundle.instance.dim);
        Rng rng(derive_seed(seed, Stream::kContexts, 0xDADA));
        bundle.dist.sample(rng, pool);
        return estimate_opt_whitened(sampler, pool, num_arms, est).value;
    }
    if (method.name == "mixture")
        return estimate_opt_mixture(sampler, bundle.dist, num_arms, est).value;
    if (method.name == "plugin") {
        std::vector<SampleBatch> batches;
        for (int a = 0; a < num_arms; ++a)
            batches.push_back(sampler(a, n, derive_seed(seed, Stream::kRepetition,
                                                        static_cast<std::uint64_t>(a))));
        return plugin_policy_value_best(batches, method.lambda_grid, bundle.instance,
                                        bundle.dist, method.plugin_mc,
                                        derive_seed(seed, Stream::kTrueOpt, 0xBEEF));
    }
    if (method.name == "linucb") {
        int per_n = method.rounds_per_n > 0 ? method.rounds_per_n : num_arms;
        int rounds = per_n * n;
        auto traj = linucb_run(bundle.instance, bundle.dist, method.alpha, rounds,
                               std::min(method.window, rounds), seed);
        return traj.final_trailing_mean;
    }
    throw InvalidArgument("unknown method: " + method.name);
}

double quantile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& config) {
    config.validate();
    InstanceBundle bundle = load_bundle(config);

    // Ground truth once per instance, shared by every method and cell.
    MonteCarloValue opt =
        true_opt(bundle.instance, bundle.dist, config.true_opt_mc, config.true_opt_seed);

    struct Cell {
        int n;
        std::uint64_t seed;
        std::size_t method;
    };
    std::vector<Cell> cells;
    for (int n : config.grid_n)
        for (std::uint64_t seed : config.seeds)
            for (std::size_t m = 0; m < config.methods.size(); ++m) cells.push_back({n, seed, m});

    std::vector<ResultRow> rows(cells.size());
    parallel_for(cells.size(), config.threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        const MethodSpec& method = config.methods[cell.method];
        ResultRow row;
        row.method = method.name;
        row.n = cell.n;
        row.seed = cell.seed;
        row.true_opt = opt.value;
        auto start = std::chrono::steady_clock::now();
        try {
            row.estimate = run_cell(method, bundle, cell.n, cell.seed);
            row.abs_error = std::abs(row.estimate - opt.value);
        } catch (const std::exception& e) {
            row.failed = true;
            row.estimate = std::numeric_limits<double>::quiet_NaN();
            row.abs_error = std::numeric_limits<double>::quiet_NaN();
            row.message = e.what();
        }
        row.wall_time_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count();
        rows[i] = std::move(row);
    });
    return rows;
}

void write_result_csv(const std::string& path, const std::vector<ResultRow>& rows,
                      bool record_timings) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << "method,n,seed,estimate,true_opt,abs_error,wall_time_ms\n";
    for (const auto& row : rows) {
        out << row.method << ',' << row.n << ',' << row.seed << ',' << format_double(row.estimate)
            << ',' << format_double(row.true_opt) << ',' << format_double(row.abs_error) << ','
            << format_double(record_timings ? row.wall_time_ms : 0.0) << '\n';
    }
}

void write_plot_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << "method,n,median_error,q1,q3\n";
    std::vector<std::pair<std::string, int>> keys;
    for (const auto& row : rows) {
        std::pair<std::string, int> key{row.method, row.n};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    for (const auto& [method, n] : keys) {
        std::vector<double> errors;
        for (const auto& row : rows)
            if (row.method == method && row.n == n && !row.failed) errors.push_back(row.abs_error);
        std::sort(errors.begin(), errors.end());
        out << method << ',' << n << ',' << format_double(quantile(errors, 0.5)) << ','
            << format_double(quantile(errors, 0.25)) << ',' << format_double(quantile(errors, 0.75))
            << '\n';
    }
}

}  // namespace optreward
