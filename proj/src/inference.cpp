#include "faqr/inference.hpp"

#include "faqr/error.hpp"
#include "faqr/parallel.hpp"
#include "faqr/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace faqr {

namespace {

constexpr int kBatch = 64;

double factor_loss(const Matrix& f, const Vector& y, const Vector& gamma, double tau, const KernelSpec& kernel) {
    return loss_from_residuals(kernel, tau, y - f * gamma);
}

void check_rank(const Matrix& gram, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    require(eig.info() == Eigen::Success && hi > 0.0 && lo > 1e-12 * hi, ErrorCode::singular,
            std::string(what) + " is singular or ill-conditioned");
}

double p_value_of(const std::vector<double>& boot, double t_n) {
    const auto exceed = std::count_if(boot.begin(), boot.end(), [&](double v) { return v > t_n; });
    return static_cast<double>(exceed) / static_cast<double>(boot.size());
}

std::size_t uniform_index(RandomStream& stream, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(stream()) * n) >> 64);
}

}  // namespace

std::string_view bootstrap_name(BootstrapMethod method) noexcept {
    return method == BootstrapMethod::multiplier ? "multiplier" : "residual";
}

BootstrapMethod parse_bootstrap(std::string_view name) {
    if (name == "multiplier") return BootstrapMethod::multiplier;
    if (name == "residual") return BootstrapMethod::residual;
    throw Error(ErrorCode::invalid_argument, "unknown bootstrap method '" + std::string(name) + "'");
}

Vector fit_factor_only(const Matrix& f_hat, const Vector& y, double tau, const KernelSpec& kernel,
                       const std::optional<Vector>& start) {
    const Index n = f_hat.rows();
    const Index m = f_hat.cols();
    require(m >= 1 && m <= n && y.size() == n, ErrorCode::dimension_error, "factor matrix and response disagree");
    const Matrix gram = f_hat.transpose() * f_hat;
    check_rank(gram, "F^T F");

    Vector gamma = start ? *start : Vector(gram.ldlt().solve(f_hat.transpose() * y));
    double value = factor_loss(f_hat, y, gamma, tau, kernel);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (int iter = 0; iter < 200; ++iter) {
        const Vector r = y - f_hat * gamma;
        const Vector grad = f_hat.transpose() * score_weights(kernel, tau, r) * inv_n;
        const double grad_norm = grad.cwiseAbs().maxCoeff();
        if (grad_norm <= 1e-12) break;

        Vector w(n);
        for (Index i = 0; i < n; ++i) w(i) = kernel_density(kernel.family, -r(i) / kernel.h) / kernel.h;
        Matrix hess = f_hat.transpose() * w.asDiagonal() * f_hat * inv_n;
        hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().maxCoeff());
        Vector dir = -hess.ldlt().solve(grad);
        if (!dir.allFinite() || grad.dot(dir) >= 0.0) dir = -grad;

        // Near the optimum the loss decrease drops below round-off, so a full
        // Newton step is accepted on gradient decrease alone.
        if (grad_norm < 1e-6) {
            const Vector trial = gamma + dir;
            const Vector trial_grad =
                f_hat.transpose() * score_weights(kernel, tau, y - f_hat * trial) * inv_n;
            if (trial_grad.cwiseAbs().maxCoeff() < grad_norm) {
                gamma = trial;
                value = factor_loss(f_hat, y, gamma, tau, kernel);
                continue;
            }
        }
        double step = 1.0;
        bool moved = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            const Vector trial = gamma + step * dir;
            const double trial_value = factor_loss(f_hat, y, trial, tau, kernel);
            if (trial_value <= value + 1e-4 * step * grad.dot(dir)) {
                gamma = trial;
                value = trial_value;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return gamma;
}

Matrix weighted_project(const Matrix& u_hat, const Matrix& f_hat, const Vector& k_weights) {
    require(u_hat.rows() == f_hat.rows() && k_weights.size() == f_hat.rows(), ErrorCode::dimension_error,
            "projection inputs have inconsistent row counts");
    require((k_weights.array() >= 0.0).all() && k_weights.allFinite(), ErrorCode::invalid_argument,
            "projection weights must be non-negative");
    const Matrix weighted_f = k_weights.asDiagonal() * f_hat;
    const Matrix gram = weighted_f.transpose() * weighted_f;
    check_rank(gram, "F^T K^2 F");
    const Matrix coef = gram.ldlt().solve(weighted_f.transpose() * u_hat);
    return u_hat - weighted_f * coef;
}

ScoreStatistic score_statistic(const Vector& gamma, const Matrix& u_star, const Matrix& f_hat, const Vector& y,
                               double tau, const KernelSpec& kernel) {
    require(u_star.rows() == y.size() && f_hat.rows() == y.size() && f_hat.cols() == gamma.size(),
            ErrorCode::dimension_error, "score inputs have inconsistent shapes");
    const Vector psi = score_weights(kernel, tau, y - f_hat * gamma);
    ScoreStatistic out;
    out.s = u_star.transpose() * psi / static_cast<double>(y.size());
    out.t_n = out.s.size() > 0 ? out.s.cwiseAbs().maxCoeff() : 0.0;
    return out;
}

NullFit fit_null_model(const FactorModel& factor, const Vector& y, double tau, const KernelSpec& kernel) {
    NullFit null;
    null.gamma = fit_factor_only(factor.f_hat, y, tau, kernel);
    null.residuals = y - factor.f_hat * null.gamma;
    Vector weights(y.size());
    for (Index i = 0; i < y.size(); ++i) {
        weights(i) = kernel_density(kernel.family, -null.residuals(i) / kernel.h) / kernel.h;
    }
    null.u_star = weighted_project(factor.u_hat, factor.f_hat, weights);
    null.score = score_statistic(null.gamma, null.u_star, factor.f_hat, y, tau, kernel);
    return null;
}

AdequacyResult adequacy_test_multiplier(const DataMatrix& data, const FactorModel& factor, double tau,
                                        const KernelSpec& kernel, const AdequacyOptions& options) {
    require(data.y.has_value(), ErrorCode::invalid_argument, "adequacy test needs a response");
    require(options.b >= 100, ErrorCode::invalid_argument, "need at least 100 bootstrap replicates");
    const Vector& y = *data.y;
    const NullFit null = fit_null_model(factor, y, tau, kernel);
    const Index n = y.size();

    boost::math::normal_distribution<double> standard;
    const double shift = -boost::math::quantile(standard, tau);

    AdequacyResult out;
    out.method = BootstrapMethod::multiplier;
    out.b = options.b;
    out.seed = options.seed;
    out.gamma_null = null.gamma;
    out.t_n = null.score.t_n;
    out.boot_stats.assign(static_cast<std::size_t>(options.b), 0.0);

    const std::size_t batches = (out.boot_stats.size() + kBatch - 1) / kBatch;
    parallel_for(batches, options.threads, [&](std::size_t batch) {
        const std::size_t first = batch * kBatch;
        const std::size_t count = std::min<std::size_t>(kBatch, out.boot_stats.size() - first);
        Matrix v(n, static_cast<Index>(count));
        for (std::size_t b = 0; b < count; ++b) {
            RandomStream stream(options.seed, StreamDomain::multiplier_bootstrap, first + b);
            std::normal_distribution<double> noise(shift, 1.0);
            for (Index i = 0; i < n; ++i) {
                const double w = stream.rademacher();
                const double e = noise(stream);
                v(i, static_cast<Index>(b)) = w * (tau - kernel_cdf(kernel.family, e / kernel.h));
            }
        }
        const Matrix stats = null.u_star.transpose() * v / static_cast<double>(n);
        for (std::size_t b = 0; b < count; ++b) {
            const auto col = stats.col(static_cast<Index>(b));
            out.boot_stats[first + b] = col.size() > 0 ? col.cwiseAbs().maxCoeff() : 0.0;
        }
    });
    out.p_value = p_value_of(out.boot_stats, out.t_n);
    return out;
}

AdequacyResult adequacy_test_residual(const DataMatrix& data, const FactorModel& factor, double tau,
                                      const KernelSpec& kernel, const AdequacyOptions& options) {
    require(data.y.has_value(), ErrorCode::invalid_argument, "adequacy test needs a response");
    require(options.b >= 100, ErrorCode::invalid_argument, "need at least 100 bootstrap replicates");
    const Vector& y = *data.y;
    const Index n = y.size();
    const NullFit null = fit_null_model(factor, y, tau, kernel);

    // Residuals of the full factor-augmented alternative.
    const QuantileProblem full = QuantileProblem::from_factors(factor, y, tau, kernel);
    LambdaRule rule = options.lambda_rule;
    rule.seed = options.seed;
    const double lambda = select_lambda(full, rule);
    const FaqrFit alt = fit_penalized(full, lambda, options.solver);
    Vector residuals = full.residuals(alt.theta);
    if (!options.raw_residuals) {
        std::vector<double> values(residuals.data(), residuals.data() + n);
        residuals.array() -= empirical_quantile(std::move(values), tau);
    }

    const Matrix& directions = options.project_bootstrap_scores ? null.u_star : factor.u_hat;
    const Vector fitted = factor.f_hat * null.gamma;

    AdequacyResult out;
    out.method = BootstrapMethod::residual;
    out.b = options.b;
    out.seed = options.seed;
    out.gamma_null = null.gamma;
    out.t_n = null.score.t_n;
    out.lambda = lambda;
    out.boot_stats.assign(static_cast<std::size_t>(options.b), 0.0);

    parallel_for(out.boot_stats.size(), options.threads, [&](std::size_t b) {
        RandomStream stream(options.seed, StreamDomain::residual_bootstrap, b);
        Vector y_star(n);
        for (Index i = 0; i < n; ++i) {
            y_star(i) = fitted(i) + residuals(static_cast<Index>(uniform_index(stream, static_cast<std::size_t>(n))));
        }
        const Vector gamma_star = fit_factor_only(factor.f_hat, y_star, tau, kernel, null.gamma);
        // tau - Kbar_h(f^T gamma* - y*) = -(Kbar_h(-r*) - tau); the sup-norm ignores the sign.
        const Vector psi = score_weights(kernel, tau, y_star - factor.f_hat * gamma_star);
        const Vector s = directions.transpose() * psi / static_cast<double>(n);
        out.boot_stats[b] = s.size() > 0 ? s.cwiseAbs().maxCoeff() : 0.0;
    });
    out.p_value = p_value_of(out.boot_stats, out.t_n);
    return out;
}

AdequacyResult adequacy_test(BootstrapMethod method, const DataMatrix& data, const FactorModel& factor, double tau,
                             const KernelSpec& kernel, const AdequacyOptions& options) {
    return method == BootstrapMethod::multiplier ? adequacy_test_multiplier(data, factor, tau, kernel, options)
                                                 : adequacy_test_residual(data, factor, tau, kernel, options);
}

}  // namespace faqr
