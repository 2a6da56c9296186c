#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace faqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// n x d observations with an optional response.
struct DataMatrix {
    Matrix x;
    std::optional<Vector> y;
    std::vector<std::string> column_names;

    Index n() const noexcept { return x.rows(); }
    Index d() const noexcept { return x.cols(); }

    /// Throws DimensionError / NonFinite when the invariants do not hold.
    void validate() const;
};

/// PCA decomposition X = F B^T + U with (1/n) F^T F = I and B^T B diagonal.
struct FactorModel {
    Matrix f_hat;        // n x m
    Matrix b_hat;        // d x m
    Matrix u_hat;        // n x d
    int m = 0;
    Vector eigenvalues;  // leading eigenvalues of X X^T, non-increasing

    /// Factor scores for new observations (rows of x_new) by least squares on
    /// the loadings: f = (B^T B)^{-1} B^T x.
    Matrix score(const Matrix& x_new) const;
};

/// Leading `count` eigenvalues of X X^T in non-increasing order, computed on
/// whichever of X X^T / X^T X is smaller. Negative round-off is clamped to 0.
Vector gram_eigenvalues(const Matrix& x, Index count);

FactorModel estimate_factors(const Matrix& x, int m);
inline FactorModel estimate_factors(const DataMatrix& data, int m) { return estimate_factors(data.x, m); }

/// Eigenvalue-ratio estimate argmax_{m <= m_max} lambda_m / lambda_{m+1}; ties go to the smaller m.
int select_num_factors(const Matrix& x, int m_max);
inline int select_num_factors(const DataMatrix& data, int m_max) { return select_num_factors(data.x, m_max); }

/// min(20, floor(min(n, d) / 2)), and at least 1.
int default_max_factors(Index n, Index d) noexcept;

/// Subtracts column means in place and returns them.
Vector center_columns(Matrix& x);

}  // namespace faqr
