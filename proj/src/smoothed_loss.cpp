#include "faqr/smoothed_loss.hpp"

#include "faqr/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace faqr {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
// Exponential tails are evaluated at most 38 bandwidths out.
constexpr double kTailClamp = 38.0;

double clamp_tail(double a) noexcept { return std::clamp(a, -kTailClamp, kTailClamp); }

// 1 / (1 + exp(-a)) without overflow.
double logistic_sigmoid(double a) noexcept {
    a = clamp_tail(a);
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

}  // namespace

std::string_view kernel_name(KernelFamily family) noexcept {
    switch (family) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::laplacian: return "laplacian";
        case KernelFamily::epanechnikov: return "epanechnikov";
        case KernelFamily::logistic: return "logistic";
        case KernelFamily::uniform: return "uniform";
    }
    return "gaussian";
}

KernelFamily parse_kernel(std::string_view name) {
    for (auto family : {KernelFamily::gaussian, KernelFamily::laplacian, KernelFamily::epanechnikov,
                        KernelFamily::logistic, KernelFamily::uniform}) {
        if (kernel_name(family) == name) return family;
    }
    throw Error(ErrorCode::invalid_argument, "unknown kernel '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
    require(std::isfinite(h) && h > 0.0, ErrorCode::invalid_argument, "bandwidth must be positive");
}

double kernel_density(KernelFamily family, double t) noexcept {
    switch (family) {
        case KernelFamily::gaussian:
            return kInvSqrt2Pi * std::exp(-0.5 * t * t);
        case KernelFamily::laplacian:
            return 0.5 * std::exp(-std::abs(t));
        case KernelFamily::logistic: {
            const double e = std::exp(-std::abs(t));
            return e / ((1.0 + e) * (1.0 + e));
        }
        case KernelFamily::uniform:
            return std::abs(t) <= 1.0 ? 0.5 : 0.0;
        case KernelFamily::epanechnikov:
            return std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
    }
    return 0.0;
}

double kernel_cdf(KernelFamily family, double t) noexcept {
    if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
    switch (family) {
        case KernelFamily::gaussian:
            return 0.5 * std::erfc(-t / std::numbers::sqrt2);
        case KernelFamily::laplacian: {
            const double e = 0.5 * std::exp(-std::abs(clamp_tail(t)));
            return t < 0.0 ? e : 1.0 - e;
        }
        case KernelFamily::logistic:
            return logistic_sigmoid(t);
        case KernelFamily::uniform:
            return std::clamp(0.5 * (t + 1.0), 0.0, 1.0);
        case KernelFamily::epanechnikov: {
            if (t <= -1.0) return 0.0;
            if (t >= 1.0) return 1.0;
            return 0.5 + 0.75 * (t - t * t * t / 3.0);
        }
    }
    return 0.0;
}

double kernel_partial_moment(KernelFamily family, double t) noexcept {
    const double a = std::abs(t);
    switch (family) {
        case KernelFamily::gaussian:
            return -kInvSqrt2Pi * std::exp(-0.5 * a * a);
        case KernelFamily::laplacian: {
            const double c = std::min(a, kTailClamp);
            return -0.5 * std::exp(-c) * (c + 1.0);
        }
        case KernelFamily::logistic: {
            const double c = std::min(a, kTailClamp);
            return -c * logistic_sigmoid(-c) - std::log1p(std::exp(-c));
        }
        case KernelFamily::uniform:
            return a < 1.0 ? 0.25 * (a * a - 1.0) : 0.0;
        case KernelFamily::epanechnikov: {
            if (a >= 1.0) return 0.0;
            const double q = 1.0 - a * a;
            return -0.1875 * q * q;
        }
    }
    return 0.0;
}

double smoothed_check_loss(const KernelSpec& k, double tau, double r) noexcept {
    const double a = -r / k.h;
    return r * (tau - kernel_cdf(k.family, a)) - k.h * kernel_partial_moment(k.family, a);
}

double smoothed_check_loss_quadrature(const KernelSpec& k, double tau, double r) {
    using boost::math::quadrature::gauss_kronrod;
    // Substituting t = r + h s: l(r) = integral rho_tau(r + h s) K(s) ds, kink at s = -r/h.
    auto integrand = [&](double s) { return check_loss(tau, r + k.h * s) * kernel_density(k.family, s); };
    const double kink = -r / k.h;
    const bool compact = !k.smooth();
    const double lo = compact ? -1.0 : -std::numeric_limits<double>::infinity();
    const double hi = compact ? 1.0 : std::numeric_limits<double>::infinity();
    auto piece = [&](double a, double b) {
        if (!(a < b)) return 0.0;
        return gauss_kronrod<double, 61>::integrate(integrand, a, b, 25, 1e-14);
    };
    if (kink <= lo || kink >= hi) return piece(lo, hi);
    if (k.family == KernelFamily::laplacian && kink != 0.0) {
        const double first = std::min(kink, 0.0);
        const double second = std::max(kink, 0.0);
        return piece(lo, first) + piece(first, second) + piece(second, hi);
    }
    return piece(lo, kink) + piece(kink, hi);
}

QuantileProblem::QuantileProblem(Matrix z, Vector y, double tau, KernelSpec kernel, Index n_factors,
                                 bool intercept)
    : z_(std::move(z)), y_(std::move(y)), tau_(tau), kernel_(kernel), n_factors_(n_factors), intercept_(intercept) {
    require(tau_ > 0.0 && tau_ < 1.0, ErrorCode::invalid_argument, "tau must lie in (0, 1)");
    kernel_.validate();
    require(z_.rows() >= 1 && y_.size() == z_.rows(), ErrorCode::dimension_error,
            "response length differs from design rows");
    require(n_factors_ >= 0 && n_factors_ <= z_.cols(), ErrorCode::dimension_error, "bad factor count");
    if (intercept_) {
        z_.conservativeResize(Eigen::NoChange, z_.cols() + 1);
        z_.col(z_.cols() - 1).setOnes();
    }
    require(z_.cols() >= 1, ErrorCode::dimension_error, "empty design");
    require(z_.allFinite() && y_.allFinite(), ErrorCode::non_finite, "design or response not finite");

    const double n = static_cast<double>(z_.rows());
    sigma_hat_.resize(z_.cols());
    for (Index j = 0; j < z_.cols(); ++j) {
        if (intercept_ && j == z_.cols() - 1) {
            sigma_hat_(j) = 1.0;
            continue;
        }
        const auto col = z_.col(j);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
        require(sd > 1e-14 * scale, ErrorCode::degenerate_column,
                "design column " + std::to_string(j) + " has zero variance");
        sigma_hat_(j) = sd;
    }
}

QuantileProblem QuantileProblem::from_factors(const FactorModel& model, const Vector& y, double tau,
                                              KernelSpec kernel, bool intercept) {
    const Index n = model.u_hat.rows();
    Matrix z(n, model.u_hat.cols() + model.f_hat.cols());
    z << model.u_hat, model.f_hat;
    QuantileProblem p(std::move(z), y, tau, kernel, model.f_hat.cols(), intercept);
    p.loadings_ = model.b_hat;
    return p;
}

Vector QuantileProblem::penalty_weights(bool penalize_factors) const {
    Vector w = sigma_hat_;
    if (!penalize_factors) w.segment(n_idiosyncratic(), n_factors_).setZero();
    if (intercept_) w(dim() - 1) = 0.0;
    return w;
}

Vector QuantileProblem::residuals(const Vector& theta) const {
    require(theta.size() == dim(), ErrorCode::dimension_error, "coefficient length differs from design width");
    const Index nnz = (theta.array() != 0.0).count();
    if (2 * nnz > dim()) return y_ - z_ * theta;
    Vector r = y_;
    for (Index j = 0; j < dim(); ++j) {
        if (theta(j) != 0.0) r.noalias() -= theta(j) * z_.col(j);
    }
    return r;
}

double default_bandwidth(Index n, Index d, Index m, double tau) {
    require(n >= 2, ErrorCode::invalid_argument, "bandwidth rule needs n >= 2");
    require(tau > 0.0 && tau < 1.0, ErrorCode::invalid_argument, "tau must lie in (0, 1)");
    const double p = static_cast<double>(d + m);
    const double rate = std::pow(std::log(std::max(p, 1.0)) / static_cast<double>(n), 0.25);
    return std::max(0.05, std::sqrt(tau * (1.0 - tau)) * rate);
}

double loss_from_residuals(const KernelSpec& k, double tau, const Vector& r) {
    double total = 0.0;
    for (Index i = 0; i < r.size(); ++i) total += smoothed_check_loss(k, tau, r(i));
    const double value = total / static_cast<double>(r.size());
    require(std::isfinite(value), ErrorCode::non_finite, "smoothed loss overflowed");
    return value;
}

Vector score_weights(const KernelSpec& k, double tau, const Vector& r) {
    Vector psi(r.size());
    for (Index i = 0; i < r.size(); ++i) psi(i) = kernel_cdf(k.family, -r(i) / k.h) - tau;
    return psi;
}

double loss_value(const QuantileProblem& p, const Vector& theta) {
    require(theta.allFinite(), ErrorCode::non_finite, "coefficients not finite");
    const Vector r = p.residuals(theta);
    require(r.allFinite(), ErrorCode::non_finite, "residuals overflowed");
    return loss_from_residuals(p.kernel(), p.tau(), r);
}

Vector loss_gradient(const QuantileProblem& p, const Vector& theta) {
    require(theta.allFinite(), ErrorCode::non_finite, "coefficients not finite");
    const Vector r = p.residuals(theta);
    require(r.allFinite(), ErrorCode::non_finite, "residuals overflowed");
    return p.z().transpose() * score_weights(p.kernel(), p.tau(), r) / static_cast<double>(p.n());
}

Matrix loss_hessian(const QuantileProblem& p, const Vector& theta, bool strict) {
    const Vector r = p.residuals(theta);
    require(r.allFinite(), ErrorCode::non_finite, "residuals overflowed");
    const KernelSpec& k = p.kernel();
    Vector w(r.size());
    for (Index i = 0; i < r.size(); ++i) {
        const double a = -r(i) / k.h;
        if (strict && !k.smooth()) {
            require(std::abs(std::abs(a) - 1.0) > 1e-9, ErrorCode::non_smooth_kernel,
                    std::string(kernel_name(k.family)) + " kernel has no Hessian at a support boundary");
        }
        w(i) = kernel_density(k.family, a) / k.h;
    }
    const Matrix weighted = w.cwiseSqrt().asDiagonal() * p.z();
    Matrix hess = Matrix::Zero(p.dim(), p.dim());
    hess.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), 1.0 / static_cast<double>(p.n()));
    return hess.selfadjointView<Eigen::Lower>();
}

}  // namespace faqr
