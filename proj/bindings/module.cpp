#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optreward/baselines.hpp"
#include "optreward/harness.hpp"
#include "optreward/opt_pipeline.hpp"

namespace py = pybind11;
using namespace optreward;

namespace {

// Samplers stay on the C++ side so pipeline worker threads never touch
// Python state.
OptEstimate run_known(const BanditInstance& inst, const ContextDistribution& dist,
                      const EstimatorConfig& config) {
    return estimate_opt_known(make_batch_sampler(inst, dist), inst.num_arms, config);
}

OptEstimate run_unknown(const BanditInstance& inst, const ContextDistribution& dist,
                        const EstimatorConfig& config) {
    return estimate_opt_unknown(make_batch_sampler(inst, dist), inst.num_arms, config);
}

OptEstimate run_whitened(const BanditInstance& inst, const ContextDistribution& dist,
                         const Eigen::MatrixXd& pool, const EstimatorConfig& config) {
    return estimate_opt_whitened(make_batch_sampler(inst, dist), pool, inst.num_arms, config);
}

OptEstimate run_mixture(const BanditInstance& inst, const ContextDistribution& mixture,
                        const EstimatorConfig& config) {
    return estimate_opt_mixture(make_batch_sampler(inst, mixture), mixture, inst.num_arms,
                                config);
}

}  // namespace

PYBIND11_MODULE(_optreward, m) {
    m.doc() = "Optimal-policy-value estimation for disjoint linear contextual bandits";

    py::class_<BanditInstance>(m, "BanditInstance")
        .def(py::init<>())
        .def_readwrite("num_arms", &BanditInstance::num_arms)
        .def_readwrite("dim", &BanditInstance::dim)
        .def_readwrite("betas", &BanditInstance::betas)
        .def_readwrite("biases", &BanditInstance::biases)
        .def_readwrite("noise_std", &BanditInstance::noise_std)
        .def("validate", &BanditInstance::validate);

    py::class_<MixtureComponent>(m, "MixtureComponent")
        .def(py::init<>())
        .def_readwrite("weight", &MixtureComponent::weight)
        .def_readwrite("mean", &MixtureComponent::mean)
        .def_readwrite("covariance", &MixtureComponent::covariance);

    py::class_<ContextDistribution>(m, "ContextDistribution")
        .def_static("standard_gaussian", &ContextDistribution::standard_gaussian, py::arg("dim"))
        .def_static("gaussian", &ContextDistribution::gaussian, py::arg("mean"),
                    py::arg("covariance"))
        .def_static("mixture", &ContextDistribution::mixture, py::arg("components"))
        .def_property_readonly("dim", &ContextDistribution::dim)
        .def_property_readonly("is_mixture", &ContextDistribution::is_mixture)
        .def("is_normalized_mixture", &ContextDistribution::is_normalized_mixture,
             py::arg("tol") = 1e-8)
        .def("overall_mean", &ContextDistribution::overall_mean)
        .def("overall_covariance", &ContextDistribution::overall_covariance);

    py::class_<SampleBatch>(m, "SampleBatch")
        .def(py::init<>())
        .def_readwrite("arm", &SampleBatch::arm)
        .def_readwrite("contexts", &SampleBatch::contexts)
        .def_readwrite("rewards", &SampleBatch::rewards)
        .def_property_readonly("count", &SampleBatch::count);

    py::class_<MonteCarloValue>(m, "MonteCarloValue")
        .def_readonly("value", &MonteCarloValue::value)
        .def_readonly("standard_error", &MonteCarloValue::standard_error);

    py::class_<PolynomialApprox>(m, "PolynomialApprox")
        .def_readonly("degree", &PolynomialApprox::degree)
        .def_readonly("sigma_min", &PolynomialApprox::sigma_min)
        .def_readonly("sigma_max", &PolynomialApprox::sigma_max)
        .def_readonly("coeffs", &PolynomialApprox::coeffs)
        .def_readonly("sup_error", &PolynomialApprox::sup_error)
        .def("evaluate", &PolynomialApprox::evaluate, py::arg("x"));

    py::class_<KernelMatrices>(m, "KernelMatrices")
        .def_readonly("gram_upper", &KernelMatrices::gram_upper)
        .def_readonly("combined", &KernelMatrices::combined);

    py::class_<MogMoments>(m, "MogMoments")
        .def_readonly("b_hat", &MogMoments::b_hat)
        .def_readonly("h_hat", &MogMoments::h_hat);

    py::class_<MomentEstimate>(m, "MomentEstimate")
        .def_readonly("b_hat", &MomentEstimate::b_hat)
        .def_readonly("h_hat", &MomentEstimate::h_hat)
        .def_readonly("labeled_per_arm", &MomentEstimate::labeled_per_arm)
        .def_readonly("unlabeled_count", &MomentEstimate::unlabeled_count)
        .def_readonly("regime", &MomentEstimate::regime);

    py::enum_<CovarianceMode>(m, "CovarianceMode")
        .value("KNOWN", CovarianceMode::kKnown)
        .value("UNKNOWN", CovarianceMode::kUnknown)
        .value("WHITENED", CovarianceMode::kWhitened)
        .value("MIXTURE", CovarianceMode::kMixture);

    py::class_<EstimatorConfig>(m, "EstimatorConfig")
        .def(py::init<>())
        .def_readwrite("delta", &EstimatorConfig::delta)
        .def_readwrite("repetitions", &EstimatorConfig::repetitions)
        .def_readwrite("samples_per_arm", &EstimatorConfig::samples_per_arm)
        .def_readwrite("mode", &EstimatorConfig::mode)
        .def_readwrite("poly_degree", &EstimatorConfig::poly_degree)
        .def_readwrite("sigma_min", &EstimatorConfig::sigma_min)
        .def_readwrite("sigma_max", &EstimatorConfig::sigma_max)
        .def_readwrite("mc_samples", &EstimatorConfig::mc_samples)
        .def_readwrite("seed", &EstimatorConfig::seed)
        .def_readwrite("threads", &EstimatorConfig::threads);

    py::class_<PipelineDiagnostics>(m, "PipelineDiagnostics")
        .def_readonly("h_median", &PipelineDiagnostics::h_median)
        .def_readonly("rep_spread", &PipelineDiagnostics::rep_spread)
        .def_readonly("projection_distance", &PipelineDiagnostics::projection_distance)
        .def_readonly("min_eigenvalue_before", &PipelineDiagnostics::min_eigenvalue_before)
        .def_readonly("bias_residual", &PipelineDiagnostics::bias_residual);

    py::class_<OptEstimate>(m, "OptEstimate")
        .def_readonly("value", &OptEstimate::value)
        .def_readonly("mc_standard_error", &OptEstimate::mc_standard_error)
        .def_readonly("b_hat", &OptEstimate::b_hat)
        .def_readonly("h_psd", &OptEstimate::h_psd)
        .def_readonly("diagnostics", &OptEstimate::diagnostics);

    py::class_<LinUcbTrajectory>(m, "LinUcbTrajectory")
        .def_readonly("arms", &LinUcbTrajectory::arms)
        .def_readonly("rewards", &LinUcbTrajectory::rewards)
        .def_readonly("trailing_mean", &LinUcbTrajectory::trailing_mean)
        .def_readonly("final_trailing_mean", &LinUcbTrajectory::final_trailing_mean);

    py::class_<RidgeFit>(m, "RidgeFit")
        .def_readonly("coef", &RidgeFit::coef)
        .def_readonly("intercept", &RidgeFit::intercept);

    m.def("make_synthetic_instance", &make_synthetic_instance, py::arg("dim"),
          py::arg("num_arms"), py::arg("beta_entry_std"), py::arg("bias_range"),
          py::arg("noise_std"), py::arg("normalize_betas"), py::arg("seed"));
    m.def("sample_batch", &sample_batch, py::arg("instance"), py::arg("dist"), py::arg("arm"),
          py::arg("n"), py::arg("seed"));
    m.def("true_opt", &true_opt, py::arg("instance"), py::arg("dist"), py::arg("n_mc"),
          py::arg("seed"), py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());

    m.def("estimate_bias", &estimate_bias, py::arg("rewards"));
    m.def("h_identity", &h_identity, py::arg("centered_batches"));
    m.def("build_poly_approx", &build_poly_approx, py::arg("k"), py::arg("sigma_min"),
          py::arg("sigma_max"));
    m.def("build_kernel_matrices", &build_kernel_matrices, py::arg("unlabeled"), py::arg("poly"));
    m.def("h_general", &h_general, py::arg("centered_batches"), py::arg("kernel"));
    m.def("moment_power_estimate", &moment_power_estimate, py::arg("batch_a"), py::arg("batch_a2"),
          py::arg("unlabeled"), py::arg("t"));
    m.def("mog_moment_estimates", &mog_moment_estimates, py::arg("centered_batches"),
          py::arg("arm_biases"), py::arg("mixture"));

    m.def("default_repetitions", &default_repetitions, py::arg("num_arms"), py::arg("delta"));
    m.def("default_mc_samples", &default_mc_samples, py::arg("epsilon_target"));
    m.def("suggested_poly_degree", &suggested_poly_degree, py::arg("epsilon"),
          py::arg("num_arms"), py::arg("sigma_min"), py::arg("sigma_max"), py::arg("c1") = 1.0,
          py::arg("c2") = 1.0);
    m.def("median_combine",
          py::overload_cast<const std::vector<Eigen::MatrixXd>&>(&median_combine),
          py::arg("estimates"));
    m.def("median_moment_estimate", &median_moment_estimate, py::arg("bias_reps"),
          py::arg("h_reps"), py::arg("labeled_per_arm"), py::arg("unlabeled_count"),
          py::arg("regime"));
    m.def("psd_project_maxnorm", &psd_project_maxnorm, py::arg("h_hat"),
          py::arg("tolerance") = 1e-6);
    m.def("gaussian_max_expectation", &gaussian_max_expectation, py::arg("mean"), py::arg("cov"),
          py::arg("mc_samples"), py::arg("seed"), py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());

    m.def("estimate_opt_known", &run_known, py::arg("instance"), py::arg("dist"),
          py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("estimate_opt_unknown", &run_unknown, py::arg("instance"), py::arg("dist"),
          py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("estimate_opt_whitened", &run_whitened, py::arg("instance"), py::arg("dist"),
          py::arg("unlabeled_pool"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("estimate_opt_mixture", &run_mixture, py::arg("instance"), py::arg("mixture"),
          py::arg("config"), py::call_guard<py::gil_scoped_release>());

    m.def(
        "linucb_run",
        [](const BanditInstance& inst, const ContextDistribution& dist, double alpha, int rounds,
           int window, std::uint64_t seed, double lambda) {
            return linucb_run(inst, dist, alpha, rounds, window, seed, lambda);
        },
        py::arg("instance"), py::arg("dist"), py::arg("alpha"), py::arg("rounds"),
        py::arg("window"), py::arg("seed"), py::arg("lambda_") = 1.0,
        py::call_guard<py::gil_scoped_release>());
    m.def("ridge_fit", &ridge_fit, py::arg("contexts"), py::arg("rewards"), py::arg("lambda_"));
    m.def("plugin_policy_value", &plugin_policy_value, py::arg("batches"), py::arg("lambda_"),
          py::arg("instance"), py::arg("dist"), py::arg("n_mc"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("plugin_policy_value_best", &plugin_policy_value_best, py::arg("batches"),
          py::arg("lambda_grid"), py::arg("instance"), py::arg("dist"), py::arg("n_mc"),
          py::arg("seed"), py::call_guard<py::gil_scoped_release>());

    m.def("featurize_ratings", &featurize_ratings, py::arg("ratings"), py::arg("target_dim"),
          py::arg("seed"));
    m.def("rescale_rewards", &rescale_rewards, py::arg("values"), py::arg("lo"), py::arg("hi"));
    m.def("ingest_csv", &ingest_csv, py::arg("path"), py::arg("skip_header") = false);
    m.def("write_matrix_csv", &write_matrix_csv, py::arg("path"), py::arg("matrix"));

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "0.1.0";
#endif
}
