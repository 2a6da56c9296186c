#include "faqr/solver.hpp"

#include "faqr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace faqr {

namespace {

constexpr double kMajorizationSlack = 1e-12;

struct SmoothedCheck {
    KernelSpec kernel;
    double tau;

    Vector terms(const Vector& r) const {
        Vector out(r.size());
        for (Index i = 0; i < r.size(); ++i) out(i) = smoothed_check_loss(kernel, tau, r(i));
        return out;
    }
    Vector psi(const Vector& r) const { return score_weights(kernel, tau, r); }
};

// (1/n) sum w(r) H_c(r), w(r) = tau for r >= 0 and 1 - tau below.
struct HuberExpectile {
    double c;
    double tau;

    Vector terms(const Vector& r) const {
        Vector out(r.size());
        for (Index i = 0; i < r.size(); ++i) {
            const double a = std::abs(r(i));
            const double huber = a <= c ? 0.5 * a * a : c * a - 0.5 * c * c;
            out(i) = (r(i) < 0.0 ? 1.0 - tau : tau) * huber;
        }
        return out;
    }
    Vector psi(const Vector& r) const {
        Vector out(r.size());
        for (Index i = 0; i < r.size(); ++i) {
            const double w = r(i) < 0.0 ? 1.0 - tau : tau;
            out(i) = -w * std::clamp(r(i), -c, c);
        }
        return out;
    }
};

double weighted_l1(const Vector& theta, const Vector& penalty) { return penalty.cwiseProduct(theta.cwiseAbs()).sum(); }

Vector gradient_from_psi(const QuantileProblem& p, const Vector& psi) {
    return p.z().transpose() * psi / static_cast<double>(p.n());
}

struct LammResult {
    Vector theta;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;
};

// Generic LAMM loop on (1/n) sum loss(r_i) + sum penalty_j |theta_j|.
// The inner test compares per-observation loss differences without slack:
// an absolute slack lets steps of order sqrt(slack / curvature) pass
// indefinitely, which stalls the step-size stopping rule near the optimum.
template <class Loss>
LammResult run_lamm(const QuantileProblem& p, const Loss& loss, const Vector& penalty, Vector theta,
                    const SolverConfig& cfg) {
    LammResult out;
    const double inv_n = 1.0 / static_cast<double>(p.n());
    Vector r = p.residuals(theta);
    Vector terms = loss.terms(r);
    double f = terms.sum() * inv_n;
    require(std::isfinite(f), ErrorCode::non_finite, "loss not finite at the starting point");
    out.trace.push_back(f + weighted_l1(theta, penalty));

    double phi = cfg.phi0;
    for (int iter = 1; iter <= cfg.max_outer; ++iter) {
        const Vector grad = gradient_from_psi(p, loss.psi(r));
        if (!cfg.sticky_phi) phi = cfg.phi0;

        Vector candidate;
        Vector r_new;
        Vector terms_new;
        double step_sq = 0.0;
        for (int k = 0;; ++k) {
            require(k < cfg.max_inner, ErrorCode::inner_loop_stall,
                    "curvature escalation failed to majorize the loss after " + std::to_string(cfg.max_inner) +
                        " steps");
            candidate = soft_threshold(theta - grad / phi, penalty / phi);
            const Vector step = candidate - theta;
            r_new = p.residuals(candidate);
            terms_new = loss.terms(r_new);
            step_sq = step.squaredNorm();
            const double increase = (terms_new - terms).sum() * inv_n;
            if (std::isfinite(increase) && increase <= grad.dot(step) + 0.5 * phi * step_sq) break;
            phi *= cfg.c0_step;
        }

        theta = std::move(candidate);
        r = std::move(r_new);
        terms = std::move(terms_new);
        f = terms.sum() * inv_n;
        out.trace.push_back(f + weighted_l1(theta, penalty));
        out.iterations = iter;
        if (std::sqrt(step_sq) < cfg.tol) {
            out.converged = true;
            break;
        }
    }
    out.theta = std::move(theta);
    return out;
}

}  // namespace

void SolverConfig::validate() const {
    require(phi0 > 0.0, ErrorCode::invalid_argument, "phi0 must be positive");
    require(c0_step > 1.0, ErrorCode::invalid_argument, "curvature escalation factor must exceed 1");
    require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
    require(max_outer >= 1 && max_inner >= 1, ErrorCode::invalid_argument, "iteration limits must be positive");
    require(!huber_c || *huber_c > 0.0, ErrorCode::invalid_argument, "Huber cutoff must be positive");
}

Vector soft_threshold(const Vector& v, const Vector& t) {
    require(v.size() == t.size(), ErrorCode::dimension_error, "threshold length differs from vector length");
    Vector out(v.size());
    for (Index j = 0; j < v.size(); ++j) {
        const double shrunk = std::abs(v(j)) - t(j);
        out(j) = shrunk > 0.0 ? std::copysign(shrunk, v(j)) : 0.0;
    }
    return out;
}

Vector lamm_iterate(const QuantileProblem& p, double lambda, const Vector& theta_prev, double phi) {
    require(phi > 0.0, ErrorCode::invalid_argument, "phi must be positive");
    const Vector grad = loss_gradient(p, theta_prev);
    return soft_threshold(theta_prev - grad / phi, (lambda / phi) * p.penalty_weights());
}

bool majorization_holds(const QuantileProblem& p, const Vector& theta_new, const Vector& theta_prev, double phi) {
    const Vector step = theta_new - theta_prev;
    const double surrogate = loss_value(p, theta_prev) + loss_gradient(p, theta_prev).dot(step) +
                             0.5 * phi * step.squaredNorm();
    return surrogate >= loss_value(p, theta_new) - kMajorizationSlack;
}

double penalized_objective(const QuantileProblem& p, const Vector& theta, double lambda, const Vector& weights) {
    return loss_value(p, theta) + lambda * weighted_l1(theta, weights);
}

double kkt_residual(const QuantileProblem& p, const Vector& theta, double lambda, const Vector& weights) {
    const Vector grad = loss_gradient(p, theta);
    double worst = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
        const double bound = lambda * weights(j);
        const double violation = theta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - bound)
                                                 : std::abs(grad(j) + bound * (theta(j) > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, violation);
    }
    return worst;
}

FaqrFit fit_penalized(const QuantileProblem& p, double lambda, const SolverConfig& cfg,
                      const std::optional<Vector>& warm) {
    cfg.validate();
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::invalid_argument, "lambda must be non-negative");
    const Vector weights = p.penalty_weights(cfg.penalize_factors);

    Vector start;
    if (warm) {
        require(warm->size() == p.dim(), ErrorCode::dimension_error, "warm start length differs from design width");
        start = *warm;
    } else {
        start = warm_start_expectile(p, lambda, cfg);
    }

    const SmoothedCheck loss{p.kernel(), p.tau()};
    LammResult result = run_lamm(p, loss, lambda * weights, start, cfg);

    FaqrFit fit;
    fit.d = p.n_idiosyncratic();
    fit.m = p.n_factors();
    fit.intercept = p.has_intercept();
    fit.theta = std::move(result.theta);
    fit.lambda = lambda;
    fit.tau = p.tau();
    fit.h = p.kernel().h;
    fit.kernel = p.kernel().family;
    fit.sigma_hat = p.sigma_hat();
    fit.n_outer_iters = result.iterations;
    fit.warm_objective = result.trace.front();
    fit.final_objective = result.trace.back();
    fit.objective_trace = std::move(result.trace);
    fit.status = result.converged ? FitStatus::converged : FitStatus::max_iters_exceeded;
    fit.kkt_residual = kkt_residual(p, fit.theta, lambda, weights);
    if (p.loadings() && fit.m > 0) {
        fit.varphi = fit.gamma() - p.loadings()->transpose() * fit.beta();
    }
    return fit;
}

double default_huber_cutoff(const Vector& residuals) {
    const Index n = residuals.size();
    require(n >= 2, ErrorCode::invalid_argument, "Huber cutoff needs at least 2 residuals");
    auto median = [](std::vector<double> v) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        if (v.size() % 2 == 1) return *mid;
        const double upper = *mid;
        const double lower = *std::max_element(v.begin(), mid);
        return 0.5 * (lower + upper);
    };
    std::vector<double> values(residuals.data(), residuals.data() + n);
    const double center = median(values);
    for (auto& v : values) v = std::abs(v - center);
    const double mad = 1.4826 * median(values);
    const double mean = residuals.mean();
    const double sd = std::sqrt((residuals.array() - mean).square().sum() / static_cast<double>(n - 1));
    return 5.0 * std::min(mad, sd);
}

Vector warm_start_expectile(const QuantileProblem& p, double lambda, const SolverConfig& cfg) {
    cfg.validate();
    require(p.n() >= 2, ErrorCode::invalid_argument, "warm start needs n >= 2");
    double c = cfg.huber_c ? *cfg.huber_c : default_huber_cutoff(p.y());
    // A constant response gives c = 0; any positive cutoff then yields the same minimizer.
    if (!(c > 0.0)) c = 1.0;
    const HuberExpectile loss{c, p.tau()};
    const Vector penalty = lambda * p.penalty_weights(cfg.penalize_factors);
    return run_lamm(p, loss, penalty, Vector::Zero(p.dim()), cfg).theta;
}

}  // namespace faqr
