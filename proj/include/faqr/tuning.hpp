#pragma once

#include "faqr/smoothed_loss.hpp"

#include <cstdint>
#include <vector>

namespace faqr {

/// lambda = c0 * Q_{1-alpha}(Lambda | Z) / n, Lambda simulated n_sim times.
struct LambdaRule {
    double c0 = 1.1;
    double alpha = 0.1;
    int n_sim = 1000;
    std::uint64_t seed = 0;
    // Divide by n so lambda lives on the scale of the (1/n)-averaged loss.
    bool normalize = true;
    unsigned threads = 1;

    void validate() const;
};

/// Lambda_b = max_j |sum_i z_ij (tau - 1{e_i <= tau})| / sigma_j with e_i ~ U(0, 1),
/// over the non-intercept columns. Replicate b draws from stream (seed, b).
std::vector<double> simulate_pivotal(const QuantileProblem& p, const LambdaRule& rule);

/// Type-1 empirical quantile: the ceil(level * count)-th order statistic.
double empirical_quantile(std::vector<double> values, double level);

double select_lambda(const QuantileProblem& p, const LambdaRule& rule);

/// Same as select_lambda, from already simulated draws.
double lambda_from_draws(const std::vector<double>& draws, const LambdaRule& rule, Index n);

}  // namespace faqr
