#pragma once

#include "faqr/factor_model.hpp"

#include <optional>
#include <string_view>

namespace faqr {

enum class KernelFamily { gaussian, laplacian, epanechnikov, logistic, uniform };

std::string_view kernel_name(KernelFamily family) noexcept;
KernelFamily parse_kernel(std::string_view name);  // throws InvalidArgument

/// Kernel family plus bandwidth h > 0.
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double h = 1.0;

    /// False for the compact-support kernels, whose densities have kinks at +-1.
    bool smooth() const noexcept {
        return family != KernelFamily::uniform && family != KernelFamily::epanechnikov;
    }
    void validate() const;
};

// Unscaled kernel primitives. K_h(t) = K(t / h) / h and Kbar_h(t) = Kbar(t / h).
double kernel_density(KernelFamily family, double t) noexcept;
double kernel_cdf(KernelFamily family, double t) noexcept;
/// G(t) = integral_{-inf}^t s K(s) ds. Even in t, non-positive.
double kernel_partial_moment(KernelFamily family, double t) noexcept;

inline double kernel_density(const KernelSpec& k, double t) noexcept { return kernel_density(k.family, t); }
inline double kernel_cdf(const KernelSpec& k, double t) noexcept { return kernel_cdf(k.family, t); }

inline double check_loss(double tau, double r) noexcept { return r * (tau - (r < 0.0 ? 1.0 : 0.0)); }

/// l_{tau,h}(r) = integral rho_tau(t) K_h(t - r) dt, in closed form:
/// r (tau - Kbar(-r/h)) - h G(-r/h).
double smoothed_check_loss(const KernelSpec& k, double tau, double r) noexcept;

/// Same integral by adaptive Gauss-Kronrod quadrature. Slow; used to validate
/// the closed forms.
double smoothed_check_loss_quadrature(const KernelSpec& k, double tau, double r);

/// Design rows Z_i = (u_i, f_i[, 1]) and response for the smoothed quantile fit.
/// Column order: d idiosyncratic columns, then m factor columns, then an
/// optional unpenalized intercept column.
class QuantileProblem {
public:
    QuantileProblem(Matrix z, Vector y, double tau, KernelSpec kernel, Index n_factors = 0,
                    bool intercept = false);

    /// Z = [U_hat | F_hat]; keeps the loadings so fits can report varphi = gamma - B^T beta.
    static QuantileProblem from_factors(const FactorModel& model, const Vector& y, double tau,
                                        KernelSpec kernel, bool intercept = false);

    const Matrix& z() const noexcept { return z_; }
    const Vector& y() const noexcept { return y_; }
    double tau() const noexcept { return tau_; }
    const KernelSpec& kernel() const noexcept { return kernel_; }
    /// Column standard deviations (denominator n); 1 for the intercept column.
    const Vector& sigma_hat() const noexcept { return sigma_hat_; }
    const std::optional<Matrix>& loadings() const noexcept { return loadings_; }

    Index n() const noexcept { return z_.rows(); }
    Index dim() const noexcept { return z_.cols(); }
    Index n_idiosyncratic() const noexcept { return dim() - n_factors_ - (intercept_ ? 1 : 0); }
    Index n_factors() const noexcept { return n_factors_; }
    bool has_intercept() const noexcept { return intercept_; }
    /// Columns entering the pivotal statistic: all but the intercept.
    Index n_penalizable() const noexcept { return dim() - (intercept_ ? 1 : 0); }

    /// sigma_hat with zeros on unpenalized columns.
    Vector penalty_weights(bool penalize_factors = true) const;

    /// r = y - Z theta; loops over nonzero coefficients only.
    Vector residuals(const Vector& theta) const;

private:
    Matrix z_;
    Vector y_;
    double tau_;
    KernelSpec kernel_;
    Index n_factors_;
    bool intercept_;
    Vector sigma_hat_;
    std::optional<Matrix> loadings_;
};

double default_bandwidth(Index n, Index d, Index m, double tau);

double loss_value(const QuantileProblem& p, const Vector& theta);
Vector loss_gradient(const QuantileProblem& p, const Vector& theta);
/// (1/n) sum K_h(-r_i) Z_i Z_i^T. With strict = true, non-smooth kernels throw
/// NonSmoothKernel when a scaled residual sits on a kink of the density.
Matrix loss_hessian(const QuantileProblem& p, const Vector& theta, bool strict = false);

// Residual-level forms used inside the solvers.
double loss_from_residuals(const KernelSpec& k, double tau, const Vector& r);
/// psi_i = Kbar_h(-r_i) - tau, so that the gradient is (1/n) Z^T psi.
Vector score_weights(const KernelSpec& k, double tau, const Vector& r);

}  // namespace faqr
