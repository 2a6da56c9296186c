#include "faqr/tuning.hpp"

#include "faqr/error.hpp"
#include "faqr/parallel.hpp"
#include "faqr/rng.hpp"

#include <algorithm>
#include <cmath>

namespace faqr {

namespace {

constexpr int kBatch = 128;

}  // namespace

void LambdaRule::validate() const {
    require(c0 > 1.0, ErrorCode::invalid_argument, "lambda scaling constant c0 must exceed 1");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
    require(n_sim >= 100, ErrorCode::invalid_argument, "need at least 100 pivotal simulations");
}

std::vector<double> simulate_pivotal(const QuantileProblem& p, const LambdaRule& rule) {
    rule.validate();
    const Index n = p.n();
    const Index cols = p.n_penalizable();
    const double tau = p.tau();
    const auto z = p.z().leftCols(cols);
    const Vector inv_sigma = p.sigma_hat().head(cols).cwiseInverse();

    std::vector<double> draws(static_cast<std::size_t>(rule.n_sim));
    const std::size_t batches = (draws.size() + kBatch - 1) / kBatch;
    parallel_for(batches, rule.threads, [&](std::size_t batch) {
        const std::size_t first = batch * kBatch;
        const std::size_t count = std::min<std::size_t>(kBatch, draws.size() - first);
        Matrix signs(n, static_cast<Index>(count));
        for (std::size_t b = 0; b < count; ++b) {
            RandomStream stream(rule.seed, StreamDomain::lambda_simulation, first + b);
            for (Index i = 0; i < n; ++i) {
                signs(i, static_cast<Index>(b)) = tau - (stream.uniform() <= tau ? 1.0 : 0.0);
            }
        }
        const Matrix sums = z.transpose() * signs;
        for (std::size_t b = 0; b < count; ++b) {
            draws[first + b] = sums.col(static_cast<Index>(b)).cwiseAbs().cwiseProduct(inv_sigma).maxCoeff();
        }
    });
    return draws;
}

double empirical_quantile(std::vector<double> values, double level) {
    require(!values.empty(), ErrorCode::invalid_argument, "quantile of an empty sample");
    require(level >= 0.0 && level <= 1.0, ErrorCode::invalid_argument, "quantile level must lie in [0, 1]");
    const auto count = static_cast<double>(values.size());
    // 1e-9 absorbs round-off such as 0.9 * 1000 = 900.0000000000001.
    auto rank = static_cast<std::ptrdiff_t>(std::ceil(level * count - 1e-9));
    rank = std::clamp<std::ptrdiff_t>(rank, 1, static_cast<std::ptrdiff_t>(values.size()));
    const auto pos = values.begin() + (rank - 1);
    std::nth_element(values.begin(), pos, values.end());
    return *pos;
}

double lambda_from_draws(const std::vector<double>& draws, const LambdaRule& rule, Index n) {
    const double q = empirical_quantile(draws, 1.0 - rule.alpha);
    return rule.c0 * (rule.normalize ? q / static_cast<double>(n) : q);
}

double select_lambda(const QuantileProblem& p, const LambdaRule& rule) {
    return lambda_from_draws(simulate_pivotal(p, rule), rule, p.n());
}

}  // namespace faqr
