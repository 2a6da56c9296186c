#pragma once

#include "faqr/factor_model.hpp"
#include "faqr/solver.hpp"

#include <vector>

namespace faqr::harness {

struct MetricReport {
    double l1_error = 0.0;
    double tpr = 0.0;  // |S_hat & S*| / |S*|
    double fpr = 0.0;  // |S_hat \ S*| / (d - |S*|)
    std::vector<Index> support_hat;
};

/// Support is {j : beta_hat_j != 0}; soft-thresholding produces exact zeros.
MetricReport evaluate_beta(const Vector& beta_hat, const Vector& beta_star);
inline MetricReport evaluate_fit(const FaqrFit& fit, const Vector& beta_star) {
    return evaluate_beta(fit.beta(), beta_star);
}

/// Smallest canonical correlation between the column spaces of a and b.
double min_canonical_correlation(const Matrix& a, const Matrix& b);

double median(std::vector<double> values);
/// Interquartile range with linear interpolation between order statistics.
double interquartile_range(std::vector<double> values);

}  // namespace faqr::harness
