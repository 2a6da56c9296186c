#include "faqr/factor_model.hpp"

#include "faqr/error.hpp"

#include <algorithm>
#include <cmath>

namespace faqr {

namespace {

// Lower triangle of the smaller Gram matrix: X X^T when n <= d, X^T X otherwise.
Matrix smaller_gram(const Matrix& x) {
    const bool row_space = x.rows() <= x.cols();
    const Index k = row_space ? x.rows() : x.cols();
    Matrix gram = Matrix::Zero(k, k);
    if (row_space) {
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    } else {
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    }
    return gram;
}

void check_finite(const Matrix& x) {
    require(x.allFinite(), ErrorCode::non_finite, "observation matrix contains non-finite entries");
}

}  // namespace

void DataMatrix::validate() const {
    require(x.rows() >= 2, ErrorCode::dimension_error, "need at least 2 observations");
    require(x.cols() >= 1, ErrorCode::dimension_error, "need at least 1 covariate");
    check_finite(x);
    if (y) {
        require(y->size() == x.rows(), ErrorCode::dimension_error, "response length differs from row count");
        require(y->allFinite(), ErrorCode::non_finite, "response contains non-finite entries");
    }
    require(column_names.empty() || static_cast<Index>(column_names.size()) == x.cols(),
            ErrorCode::dimension_error, "column name count differs from column count");
}

Matrix FactorModel::score(const Matrix& x_new) const {
    const Matrix gram = b_hat.transpose() * b_hat;
    return gram.ldlt().solve(b_hat.transpose() * x_new.transpose()).transpose();
}

Vector gram_eigenvalues(const Matrix& x, Index count) {
    check_finite(x);
    const Matrix gram = smaller_gram(x);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    require(eig.info() == Eigen::Success, ErrorCode::non_finite, "eigendecomposition failed");
    const Index k = gram.rows();
    count = std::min(count, k);
    Vector out(count);
    for (Index i = 0; i < count; ++i) out(i) = std::max(0.0, eig.eigenvalues()(k - 1 - i));
    return out;
}

FactorModel estimate_factors(const Matrix& x, int m) {
    const Index n = x.rows();
    const Index d = x.cols();
    require(m >= 1 && m <= std::min(n, d), ErrorCode::dimension_error,
            "number of factors must lie in [1, min(n, d)]");
    check_finite(x);

    const bool row_space = n <= d;
    const Matrix gram = smaller_gram(x);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    require(eig.info() == Eigen::Success, ErrorCode::non_finite, "eigendecomposition failed");
    const Index k = gram.rows();

    FactorModel model;
    model.m = m;
    model.eigenvalues.resize(k);
    for (Index i = 0; i < k; ++i) model.eigenvalues(i) = std::max(0.0, eig.eigenvalues()(k - 1 - i));

    const double leading = model.eigenvalues(0);
    require(leading > 0.0 && model.eigenvalues(m - 1) >= 1e-12 * leading, ErrorCode::rank_deficient,
            "eigenvalue " + std::to_string(m) + " of X X^T is numerically zero; factor space not identified");

    // Top-m eigenvectors of X X^T, either directly or through v = X w / sqrt(lambda).
    Matrix vectors(n, m);
    for (int j = 0; j < m; ++j) {
        const auto w = eig.eigenvectors().col(k - 1 - j);
        if (row_space) {
            vectors.col(j) = w;
        } else {
            vectors.col(j) = (x * w) / std::sqrt(model.eigenvalues(j));
        }
    }

    const double root_n = std::sqrt(static_cast<double>(n));
    model.f_hat = root_n * vectors;
    for (int j = 0; j < m; ++j) {
        Index arg = 0;
        model.f_hat.col(j).cwiseAbs().maxCoeff(&arg);
        if (model.f_hat(arg, j) < 0.0) model.f_hat.col(j) *= -1.0;
    }
    model.b_hat = x.transpose() * model.f_hat / static_cast<double>(n);
    model.u_hat = x - model.f_hat * model.b_hat.transpose();
    return model;
}

int select_num_factors(const Matrix& x, int m_max) {
    const Index limit = std::min(x.rows(), x.cols()) - 1;
    require(m_max >= 1 && m_max <= limit, ErrorCode::dimension_error,
            "m_max must lie in [1, min(n, d) - 1]");
    const Vector ev = gram_eigenvalues(x, m_max + 1);
    const double floor = 1e-14 * ev(0);
    int best = 1;
    double best_ratio = -1.0;
    for (int m = 1; m <= m_max; ++m) {
        require(ev(m) >= floor && ev(m) > 0.0, ErrorCode::degenerate_spectrum,
                "eigenvalue " + std::to_string(m + 1) + " is numerically zero; reduce m_max");
        const double ratio = ev(m - 1) / ev(m);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = m;
        }
    }
    return best;
}

int default_max_factors(Index n, Index d) noexcept {
    const Index half = std::min(n, d) / 2;
    return static_cast<int>(std::max<Index>(1, std::min<Index>(20, half)));
}

Vector center_columns(Matrix& x) {
    const Vector means = x.colwise().mean();
    x.rowwise() -= means.transpose();
    return means;
}

}  // namespace faqr
