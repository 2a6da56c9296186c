#pragma once

#include "faqr/smoothed_loss.hpp"

#include <optional>
#include <vector>

namespace faqr {

struct SolverConfig {
    double phi0 = 0.1;       // initial isotropic curvature
    double c0_step = 2.0;    // curvature escalation factor
    double tol = 1e-6;       // stop when ||theta_l - theta_{l-1}||_2 < tol
    int max_outer = 5000;
    int max_inner = 60;
    std::optional<double> huber_c;  // warm-start cutoff; default 5 min(mad, sd) of y
    bool sticky_phi = false;        // carry the accepted curvature into the next iteration
    bool penalize_factors = true;

    void validate() const;
};

enum class FitStatus { converged, max_iters_exceeded };

struct FaqrFit {
    Vector theta;
    Index d = 0;  // idiosyncratic block length
    Index m = 0;  // factor block length
    bool intercept = false;

    Vector varphi;  // gamma - B^T beta; empty when the problem carries no loadings
    double lambda = 0.0;
    double tau = 0.5;
    double h = 1.0;
    KernelFamily kernel = KernelFamily::gaussian;
    Vector sigma_hat;

    int n_outer_iters = 0;
    double warm_objective = 0.0;
    double final_objective = 0.0;
    double kkt_residual = 0.0;
    FitStatus status = FitStatus::converged;
    std::vector<double> objective_trace;  // penalized objective after every accepted step

    auto beta() const { return theta.head(d); }
    auto gamma() const { return theta.segment(d, m); }
    double intercept_value() const { return intercept ? theta(theta.size() - 1) : 0.0; }
};

/// sign(v_j) max(|v_j| - t_j, 0).
Vector soft_threshold(const Vector& v, const Vector& t);

/// One proximal step S(theta - grad / phi; lambda sigma / phi), using the
/// problem's default penalty weights.
Vector lamm_iterate(const QuantileProblem& p, double lambda, const Vector& theta_prev, double phi);

/// Q(prev) + <grad Q(prev), new - prev> + (phi/2)||new - prev||^2 >= Q(new) - 1e-12.
/// The l1 terms appear on both sides of the test and are left out.
bool majorization_holds(const QuantileProblem& p, const Vector& theta_new, const Vector& theta_prev, double phi);

double penalized_objective(const QuantileProblem& p, const Vector& theta, double lambda, const Vector& weights);

/// Largest violation of the l1 subgradient optimality conditions.
double kkt_residual(const QuantileProblem& p, const Vector& theta, double lambda, const Vector& weights);

/// l1-penalized smoothed quantile regression by LAMM. Runs the expectile warm
/// start when `warm` is empty. Throws InnerLoopStall if curvature escalation
/// never majorizes the loss; hitting max_outer sets status instead of throwing.
FaqrFit fit_penalized(const QuantileProblem& p, double lambda, const SolverConfig& cfg = {},
                      const std::optional<Vector>& warm = std::nullopt);

/// 5 min(mad, sd) of the given residuals, mad scaled by 1.4826 and sd with denominator n - 1.
double default_huber_cutoff(const Vector& residuals);

/// Penalized asymmetric-Huber (robust expectile) fit from theta = 0.
Vector warm_start_expectile(const QuantileProblem& p, double lambda, const SolverConfig& cfg = {});

}  // namespace faqr
