#pragma once

#include "faqr/factor_model.hpp"
#include "faqr/smoothed_loss.hpp"
#include "faqr/solver.hpp"
#include "faqr/tuning.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace faqr {

enum class BootstrapMethod { multiplier, residual };

std::string_view bootstrap_name(BootstrapMethod method) noexcept;
BootstrapMethod parse_bootstrap(std::string_view name);

/// Outcome of the test H0: beta = 0 (factor-only quantile regression suffices).
struct AdequacyResult {
    double t_n = 0.0;
    std::vector<double> boot_stats;
    double p_value = 1.0;  // (1/B) #{b : boot_stats_b > t_n}
    BootstrapMethod method = BootstrapMethod::multiplier;
    int b = 0;
    Vector gamma_null;  // factor-only fit
    std::uint64_t seed = 0;
    std::optional<double> lambda;  // residual bootstrap: penalty of the alternative fit
};

struct AdequacyOptions {
    int b = 200;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    // Residual bootstrap only.
    bool raw_residuals = false;              // skip centering residuals at their tau-quantile
    bool project_bootstrap_scores = false;   // use u* instead of u in the replicate score
    LambdaRule lambda_rule;                  // its seed is replaced by `seed`
    SolverConfig solver;
};

/// Unpenalized smoothed quantile regression of y on the factors (damped Newton).
/// Throws Singular if F^T F is rank-deficient.
Vector fit_factor_only(const Matrix& f_hat, const Vector& y, double tau, const KernelSpec& kernel,
                       const std::optional<Vector>& start = std::nullopt);

/// u*_{.j} = (I - K F (F^T K^2 F)^{-1} F^T K) u_{.j} with K = diag(k_weights),
/// so that F^T K u* = 0. Throws Singular when cond(F^T K^2 F) > 1e12.
Matrix weighted_project(const Matrix& u_hat, const Matrix& f_hat, const Vector& k_weights);

struct ScoreStatistic {
    Vector s;           // (1/n) sum [Kbar_h(-r_i) - tau] u*_i
    double t_n = 0.0;   // ||s||_inf
};

ScoreStatistic score_statistic(const Vector& gamma, const Matrix& u_star, const Matrix& f_hat, const Vector& y,
                               double tau, const KernelSpec& kernel);

/// Observed statistic plus its ingredients; shared by both bootstraps.
struct NullFit {
    Vector gamma;
    Vector residuals;  // y - F gamma
    Matrix u_star;
    ScoreStatistic score;
};

NullFit fit_null_model(const FactorModel& factor, const Vector& y, double tau, const KernelSpec& kernel);

AdequacyResult adequacy_test_multiplier(const DataMatrix& data, const FactorModel& factor, double tau,
                                        const KernelSpec& kernel, const AdequacyOptions& options);

AdequacyResult adequacy_test_residual(const DataMatrix& data, const FactorModel& factor, double tau,
                                      const KernelSpec& kernel, const AdequacyOptions& options);

AdequacyResult adequacy_test(BootstrapMethod method, const DataMatrix& data, const FactorModel& factor, double tau,
                             const KernelSpec& kernel, const AdequacyOptions& options);

}  // namespace faqr
