#include "optreward/serialization.hpp"

#include <fstream>

#include "optreward/errors.hpp"

namespace optreward {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw InvalidArgument("matrix JSON must be a nested array");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw InvalidArgument("ragged matrix JSON");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw InvalidArgument("vector JSON must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json to_json(const BanditInstance& instance) {
    return json{{"K", instance.num_arms},
                {"d", instance.dim},
                {"betas", matrix_to_json(instance.betas)},
                {"biases", vector_to_json(instance.biases)},
                {"noise_std", vector_to_json(instance.noise_std)},
                {"noise_kind",
                 instance.noise_kind == NoiseKind::kGaussian ? "gaussian" : "uniform"}};
}

BanditInstance instance_from_json(const json& j) {
    BanditInstance instance;
    instance.num_arms = j.at("K").get<int>();
    instance.dim = j.at("d").get<int>();
    instance.betas = matrix_from_json(j.at("betas"));
    instance.biases = vector_from_json(j.at("biases"));
    instance.noise_std = vector_from_json(j.at("noise_std"));
    if (j.contains("noise_kind") && j.at("noise_kind") == "uniform")
        instance.noise_kind = NoiseKind::kUniform;
    instance.validate();
    return instance;
}

json to_json(const ContextDistribution& dist) {
    if (!dist.is_mixture()) {
        return json{{"kind", "gaussian"},
                    {"mean", vector_to_json(dist.mean())},
                    {"covariance", matrix_to_json(dist.covariance())}};
    }
    json components = json::array();
    for (const auto& c : dist.components())
        components.push_back(json{{"weight", c.weight},
                                  {"mean", vector_to_json(c.mean)},
                                  {"covariance", matrix_to_json(c.covariance)}});
    return json{{"kind", "mixture"}, {"components", std::move(components)}};
}

ContextDistribution distribution_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian")
        return ContextDistribution::gaussian(vector_from_json(j.at("mean")),
                                             matrix_from_json(j.at("covariance")));
    if (kind != "mixture") throw InvalidArgument("unknown distribution kind: " + kind);
    std::vector<MixtureComponent> components;
    for (const auto& c : j.at("components"))
        components.push_back({c.at("weight").get<double>(), vector_from_json(c.at("mean")),
                              matrix_from_json(c.at("covariance"))});
    return ContextDistribution::mixture(std::move(components));
}

json to_json(const OptEstimate& estimate) {
    return json{{"value", estimate.value},
                {"mc_standard_error", estimate.mc_standard_error},
                {"b_hat", vector_to_json(estimate.b_hat)},
                {"H_psd", matrix_to_json(estimate.h_psd)},
                {"diagnostics",
                 json{{"h_median", matrix_to_json(estimate.diagnostics.h_median)},
                      {"rep_spread", estimate.diagnostics.rep_spread},
                      {"projection_distance", estimate.diagnostics.projection_distance},
                      {"min_eigenvalue_before", estimate.diagnostics.min_eigenvalue_before},
                      {"bias_residual", estimate.diagnostics.bias_residual}}}};
}

json to_json(const EstimatorConfig& config) {
    const char* mode = config.mode == CovarianceMode::kKnown      ? "known"
                       : config.mode == CovarianceMode::kUnknown  ? "unknown"
                       : config.mode == CovarianceMode::kWhitened ? "whitened"
                                                                  : "mixture";
    return json{{"delta", config.delta},
                {"repetitions", config.repetitions},
                {"n_per_arm_per_rep", config.samples_per_arm},
                {"covariance_mode", mode},
                {"poly_degree", config.poly_degree},
                {"sigma_min", config.sigma_min},
                {"sigma_max", config.sigma_max},
                {"mc_samples", config.mc_samples},
                {"seed", config.seed}};
}

EstimatorConfig estimator_config_from_json(const json& j) {
    EstimatorConfig config;
    config.delta = j.value("delta", config.delta);
    config.repetitions = j.value("repetitions", config.repetitions);
    config.samples_per_arm = j.value("n_per_arm_per_rep", config.samples_per_arm);
    config.poly_degree = j.value("poly_degree", config.poly_degree);
    config.sigma_min = j.value("sigma_min", config.sigma_min);
    config.sigma_max = j.value("sigma_max", config.sigma_max);
    config.mc_samples = j.value("mc_samples", config.mc_samples);
    config.seed = j.value("seed", config.seed);
    const std::string mode = j.value("covariance_mode", std::string("known"));
    if (mode == "known")
        config.mode = CovarianceMode::kKnown;
    else if (mode == "unknown")
        config.mode = CovarianceMode::kUnknown;
    else if (mode == "whitened")
        config.mode = CovarianceMode::kWhitened;
    else if (mode == "mixture")
        config.mode = CovarianceMode::kMixture;
    else
        throw InvalidArgument("unknown covariance_mode: " + mode);
    return config;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace optreward
