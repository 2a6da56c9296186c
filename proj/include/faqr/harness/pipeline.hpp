#pragma once

#include "faqr/factor_model.hpp"
#include "faqr/smoothed_loss.hpp"
#include "faqr/solver.hpp"
#include "faqr/tuning.hpp"

#include <optional>
#include <string_view>

namespace faqr::harness {

/// faqr: factor step then penalized fit on [U_hat | F_hat].
/// qr_plain: the same penalized fit directly on X.
enum class Method { faqr, qr_plain };

std::string_view method_name(Method method) noexcept;
Method parse_method(std::string_view name);

struct PipelineConfig {
    Method method = Method::faqr;
    std::optional<int> n_factors;  // estimated by eigenvalue ratio when empty
    int max_factors = 0;           // 0: default_max_factors(n, d)
    double tau = 0.5;
    KernelFamily kernel = KernelFamily::gaussian;
    std::optional<double> bandwidth;  // default_bandwidth(n, d, m, tau) when empty
    bool center = false;
    bool intercept = false;
    std::optional<double> lambda;  // fixed penalty; simulated from lambda_rule when empty
    LambdaRule lambda_rule;
    SolverConfig solver;
};

/// Everything needed to predict new rows from one estimation window.
struct PipelineFit {
    Method method = Method::faqr;
    Vector column_means;  // empty unless centered
    std::optional<FactorModel> factors;
    KernelSpec kernel;
    double lambda = 0.0;
    FaqrFit fit;

    /// x^T beta + f^T varphi (+ intercept), f scored on the window's loadings.
    double predict(const Eigen::Ref<const Vector>& x_row) const;
};

PipelineFit fit_pipeline(const Matrix& x, const Vector& y, const PipelineConfig& cfg);

}  // namespace faqr::harness
