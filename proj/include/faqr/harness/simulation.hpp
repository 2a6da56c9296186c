#pragma once

#include "faqr/harness/dgp.hpp"
#include "faqr/harness/metrics.hpp"
#include "faqr/harness/pipeline.hpp"
#include "faqr/inference.hpp"

#include <cstdint>
#include <vector>

namespace faqr::harness {

/// Monte-Carlo accuracy study. Replicate r draws its data from
/// derive_seed(seed, 2r) and its lambda simulation from derive_seed(seed, 2r + 1);
/// the loadings stay fixed through dgp.loading_seed.
struct SimulationConfig {
    DgpSpec dgp;
    int reps = 100;
    std::vector<Method> methods{Method::faqr, Method::qr_plain};
    PipelineConfig pipeline;  // n_factors defaults to dgp.m
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct ReplicateRow {
    int replicate = 0;
    Method method = Method::faqr;
    MetricReport metrics;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = true;
};

struct MethodSummary {
    Method method = Method::faqr;
    int reps = 0;
    double median_l1 = 0.0;
    double iqr_l1 = 0.0;
    double mean_tpr = 0.0;
    double se_tpr = 0.0;
    double mean_fpr = 0.0;
    double se_fpr = 0.0;
};

struct SimulationResult {
    std::vector<ReplicateRow> rows;  // sorted by (replicate, method order)
    std::vector<MethodSummary> summary;
};

SimulationResult run_simulation(const SimulationConfig& cfg);

/// Size / power of the adequacy test over a grid of signal amplitudes w with
/// beta* = (w, w, w, 0, ...). Replicate r uses the same data seed for every w.
struct PowerConfig {
    DgpSpec dgp;  // beta* is rebuilt from each w
    std::vector<double> w_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    int reps = 200;
    int b = 200;
    BootstrapMethod method = BootstrapMethod::residual;
    double level = 0.05;  // reject when p < level
    double tau = 0.5;
    KernelFamily kernel = KernelFamily::gaussian;
    std::optional<double> bandwidth;
    LambdaRule lambda_rule;
    SolverConfig solver;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct PowerRow {
    double w = 0.0;
    int reps = 0;
    int rejections = 0;
    double rate = 0.0;
    double se = 0.0;  // binomial standard error
    std::vector<double> p_values;
};

std::vector<PowerRow> run_power_study(const PowerConfig& cfg);

}  // namespace faqr::harness
