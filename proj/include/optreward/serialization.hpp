#pragma once

#include <string>

#include <json.hpp>

#include "optreward/bandit_model.hpp"
#include "optreward/opt_pipeline.hpp"

namespace optreward {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);  // row-major nested arrays
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BanditInstance& instance);
BanditInstance instance_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ContextDistribution& dist);
ContextDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OptEstimate& estimate);

nlohmann::json to_json(const EstimatorConfig& config);
EstimatorConfig estimator_config_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace optreward
