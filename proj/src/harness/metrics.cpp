#include "faqr/harness/metrics.hpp"

#include "faqr/error.hpp"

#include <algorithm>
#include <cmath>

namespace faqr::harness {

namespace {

double interpolated_quantile(std::vector<double>& sorted, double level) {
    const double pos = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

MetricReport evaluate_beta(const Vector& beta_hat, const Vector& beta_star) {
    require(beta_hat.size() == beta_star.size(), ErrorCode::dimension_error, "beta lengths differ");
    MetricReport report;
    report.l1_error = (beta_hat - beta_star).cwiseAbs().sum();
    Index true_pos = 0;
    Index false_pos = 0;
    Index n_true = 0;
    for (Index j = 0; j < beta_star.size(); ++j) {
        const bool truth = beta_star(j) != 0.0;
        const bool found = beta_hat(j) != 0.0;
        n_true += truth ? 1 : 0;
        if (found) {
            report.support_hat.push_back(j);
            (truth ? true_pos : false_pos) += 1;
        }
    }
    const Index n_false = beta_star.size() - n_true;
    report.tpr = n_true > 0 ? static_cast<double>(true_pos) / static_cast<double>(n_true) : 1.0;
    report.fpr = n_false > 0 ? static_cast<double>(false_pos) / static_cast<double>(n_false) : 0.0;
    return report;
}

double min_canonical_correlation(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), ErrorCode::dimension_error, "canonical correlation needs equal row counts");
    const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
    const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
    const Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
    return svd.singularValues().minCoeff();
}

double median(std::vector<double> values) {
    require(!values.empty(), ErrorCode::invalid_argument, "median of an empty sample");
    std::sort(values.begin(), values.end());
    return interpolated_quantile(values, 0.5);
}

double interquartile_range(std::vector<double> values) {
    require(!values.empty(), ErrorCode::invalid_argument, "IQR of an empty sample");
    std::sort(values.begin(), values.end());
    return interpolated_quantile(values, 0.75) - interpolated_quantile(values, 0.25);
}

}  // namespace faqr::harness
