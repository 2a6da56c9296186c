#include "faqr/error.hpp"
#include "faqr/rng.hpp"
#include "faqr/smoothed_loss.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace faqr;

namespace {

constexpr KernelFamily kAll[] = {KernelFamily::gaussian, KernelFamily::laplacian, KernelFamily::epanechnikov,
                                 KernelFamily::logistic, KernelFamily::uniform};

bool throws_code(ErrorCode code, auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

struct Instance {
    Matrix z;
    Vector y;
    Vector theta;
};

Instance random_instance(Index n, Index p, std::uint64_t seed, double theta_scale = 0.5) {
    RandomStream s(seed, StreamDomain::generic, 0);
    std::normal_distribution<double> g;
    Instance out{Matrix(n, p), Vector(n), Vector(p)};
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) out.z(i, j) = g(s);
    for (Index i = 0; i < n; ++i) out.y(i) = g(s);
    for (Index j = 0; j < p; ++j) out.theta(j) = theta_scale * g(s);
    return out;
}

// Piecewise integration with breakpoints at the kinks of every family. Each
// piece sees one-sided limits at its ends, so jumps at +-1 are harmless.
double integrate(const std::function<double(double)>& f, double a, double b) {
    auto piece = [&](double lo, double hi) {
        const double in_lo = std::nextafter(lo, hi);
        const double in_hi = std::nextafter(hi, lo);
        return oracle::simpson([&](double s) { return f(std::clamp(s, in_lo, in_hi)); }, lo, hi, 200000);
    };
    double total = 0.0;
    double lo = a;
    for (double cut : {-1.0, 0.0, 1.0}) {
        if (cut <= lo || cut >= b) continue;
        total += piece(lo, cut);
        lo = cut;
    }
    return total + piece(lo, b);
}

Vector fd_gradient(const QuantileProblem& p, const Vector& theta, double step) {
    Vector g(theta.size());
    for (Index j = 0; j < theta.size(); ++j) {
        Vector up = theta;
        Vector down = theta;
        up(j) += step;
        down(j) -= step;
        g(j) = (loss_value(p, up) - loss_value(p, down)) / (2.0 * step);
    }
    return g;
}

}  // namespace

TEST_CASE("kernel density examples and symmetry") {
    CHECK(kernel_density(KernelFamily::gaussian, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(kernel_density(KernelFamily::uniform, 2.0) == 0.0);
    CHECK(kernel_density(KernelFamily::epanechnikov, 0.5) == doctest::Approx(0.5625));
    for (auto family : kAll) {
        for (double t : {0.0, 0.3, 0.99, 1.5, 4.0, 40.0}) {
            CHECK(kernel_density(family, t) >= 0.0);
            CHECK(kernel_density(family, t) == kernel_density(family, -t));
        }
    }
}

TEST_CASE("kernel cdf examples") {
    for (auto family : kAll) CHECK(kernel_cdf(family, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kernel_cdf(KernelFamily::uniform, 0.5) == doctest::Approx(0.75));
    CHECK(kernel_cdf(KernelFamily::gaussian, 1.0) == doctest::Approx(0.841344746068543).epsilon(1e-12));
    const double quad = oracle::simpson([](double s) { return kernel_density(KernelFamily::gaussian, s); }, -40.0, 1.0, 400000);
    CHECK(kernel_cdf(KernelFamily::gaussian, 1.0) == doctest::Approx(quad).epsilon(1e-10));
}

TEST_CASE("kernel cdf is monotone, symmetric and has the right limits") {
    const double inf = std::numeric_limits<double>::infinity();
    for (auto family : kAll) {
        CAPTURE(kernel_name(family));
        CHECK(kernel_cdf(family, -inf) == 0.0);
        CHECK(kernel_cdf(family, inf) == 1.0);
        double prev = 0.0;
        for (double t = -45.0; t <= 45.0; t += 0.01) {
            const double c = kernel_cdf(family, t);
            REQUIRE(c >= prev);
            REQUIRE(c <= 1.0);
            REQUIRE(c + kernel_cdf(family, -t) == doctest::Approx(1.0).epsilon(1e-14));
            prev = c;
        }
    }
}

TEST_CASE("kernels integrate to one and the cdf matches quadrature") {
    for (auto family : kAll) {
        CAPTURE(kernel_name(family));
        auto k = [family](double s) { return kernel_density(family, s); };
        CHECK(std::abs(integrate(k, -60.0, 60.0) - 1.0) <= 1e-8);
        for (double t : {-2.5, -0.7, 0.2, 0.9, 3.0}) {
            CHECK(kernel_cdf(family, t) == doctest::Approx(integrate(k, -60.0, t)).epsilon(1e-9));
        }
        for (double t : {-2.5, -0.7, 0.2, 0.9, 3.0}) {
            const double g = integrate([&](double s) { return s * k(s); }, -60.0, t);
            CHECK(kernel_partial_moment(family, t) == doctest::Approx(g).epsilon(1e-8));
        }
    }
}

TEST_CASE("closed-form smoothed check loss matches quadrature") {
    for (auto family : kAll) {
        CAPTURE(kernel_name(family));
        for (double tau : {0.1, 0.5, 0.8}) {
            for (double r : {-3.0, -0.4, 0.0, 0.25, 1.0, 7.0}) {
                const KernelSpec k{family, 0.7};
                CHECK(smoothed_check_loss(k, tau, r) == doctest::Approx(smoothed_check_loss_quadrature(k, tau, r)).epsilon(1e-10));
                CHECK(smoothed_check_loss(k, tau, r) >= check_loss(tau, r) - 1e-15);
            }
        }
    }
    for (double r : {-1.3, 0.0, 0.6}) {
        CHECK(smoothed_check_loss(KernelSpec{KernelFamily::gaussian, 0.5}, 0.3, r) ==
              doctest::Approx(oracle::smoothed_loss_numeric(0.3, 0.5, r)).epsilon(1e-9));
    }
}

TEST_CASE("loss value examples") {
    Matrix z(2, 2);
    z << 1, 0, 0, 1;
    const QuantileProblem p(z, Vector::Zero(2), 0.5, KernelSpec{KernelFamily::gaussian, 1.0});
    CHECK(loss_value(p, Vector::Zero(2)) == doctest::Approx(0.5 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));

    const double r = 1e6;
    CHECK(smoothed_check_loss(KernelSpec{KernelFamily::gaussian, 1.0}, 0.3, r) == doctest::Approx(0.3 * r).epsilon(1e-14));
    for (auto family : kAll) {
        CHECK(smoothed_check_loss(KernelSpec{family, 1.0}, 0.3, -r) == doctest::Approx(0.7 * r).epsilon(1e-14));
    }
}

TEST_CASE("smoothing gap at least halves when h halves") {
    const Instance inst = random_instance(40, 3, 31);
    const auto check_sum = [&](const Vector& theta) {
        const Vector r = inst.y - inst.z * theta;
        double total = 0.0;
        for (Index i = 0; i < r.size(); ++i) total += check_loss(0.5, r(i));
        return total / static_cast<double>(r.size());
    };
    for (auto family : kAll) {
        CAPTURE(kernel_name(family));
        double prev_gap = -1.0;
        for (double h : {0.1, 0.05, 0.025}) {
            const QuantileProblem p(inst.z, inst.y, 0.5, KernelSpec{family, h});
            const double gap = loss_value(p, inst.theta) - check_sum(inst.theta);
            CHECK(gap >= 0.0);
            if (prev_gap > 0.0) CHECK(gap <= 0.5 * 1.2 * prev_gap);
            prev_gap = gap;
        }
    }
}

TEST_CASE("gradient saturates when every residual is far above zero") {
    Instance inst = random_instance(30, 4, 5);
    inst.y.array() += 1000.0;
    const QuantileProblem p(inst.z, inst.y, 0.3, KernelSpec{KernelFamily::gaussian, 0.5});
    const Vector expected = -0.3 * inst.z.colwise().mean().transpose();
    CHECK((loss_gradient(p, Vector::Zero(4)) - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gradient matches central finite differences") {
    const Instance inst = random_instance(12, 4, 77);
    const QuantileProblem p(inst.z, inst.y, 0.4, KernelSpec{KernelFamily::gaussian, 0.5});
    const Vector g = loss_gradient(p, inst.theta);
    const Vector fd = fd_gradient(p, inst.theta, 1e-6);
    CHECK((g - fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("gradient check for every family over random draws") {
    for (auto family : kAll) {
        CAPTURE(kernel_name(family));
        for (std::uint64_t draw = 0; draw < 50; ++draw) {
            const Instance inst = random_instance(15, 3, 1000 + draw);
            const QuantileProblem p(inst.z, inst.y, 0.25 + 0.01 * static_cast<double>(draw), KernelSpec{family, 0.6});
            const Vector g = loss_gradient(p, inst.theta);
            const Vector fd = fd_gradient(p, inst.theta, 1e-6);
            REQUIRE((g - fd).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff()) <= 1e-5);
            const double bound = std::max(p.tau(), 1.0 - p.tau()) * inst.z.cwiseAbs().maxCoeff();
            REQUIRE(g.cwiseAbs().maxCoeff() <= bound + 1e-15);
        }
    }
}

TEST_CASE("gradient vanishes at the smoothed sample quantile") {
    const Instance inst = random_instance(25, 1, 3);
    const Matrix ones = Matrix::Ones(25, 1);
    const double tau = 0.3;
    const KernelSpec k{KernelFamily::gaussian, 0.4};
    // Bisection on the estimating equation mean Kbar((theta - y_i) / h) = tau.
    auto eq = [&](double t) {
        double total = 0.0;
        for (Index i = 0; i < 25; ++i) total += oracle::big_phi((t - inst.y(i)) / k.h);
        return total / 25.0 - tau;
    };
    double lo = -10.0;
    double hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eq(mid) < 0.0 ? lo : hi) = mid;
    }
    const Vector root = Vector::Constant(1, 0.5 * (lo + hi));
    // QuantileProblem rejects the constant column, so evaluate through the residual form.
    const Vector psi = score_weights(k, tau, inst.y - ones * root);
    CHECK(std::abs(psi.mean()) <= 1e-10);
}

TEST_CASE("hessian single-point formula and strict gating") {
    Matrix z(2, 2);
    z << 1, 0, 0, 1;
    const QuantileProblem p(z, Vector::Zero(2), 0.5, KernelSpec{KernelFamily::gaussian, 1.0});
    const Matrix h = loss_hessian(p, Vector::Zero(2), true);
    Matrix expected = Matrix::Identity(2, 2) * 0.5 / std::sqrt(2.0 * std::numbers::pi);
    CHECK((h - expected).cwiseAbs().maxCoeff() <= 1e-15);

    Vector y(2);
    y << 0.5, 0.0;
    const QuantileProblem uniform(z, y, 0.5, KernelSpec{KernelFamily::uniform, 0.5});
    CHECK(throws_code(ErrorCode::non_smooth_kernel, [&] { loss_hessian(uniform, Vector::Zero(2), true); }));
    CHECK_NOTHROW(loss_hessian(uniform, Vector::Zero(2), false));
    const QuantileProblem epa(z, y, 0.5, KernelSpec{KernelFamily::epanechnikov, 0.5});
    CHECK(throws_code(ErrorCode::non_smooth_kernel, [&] { loss_hessian(epa, Vector::Zero(2), true); }));
}

TEST_CASE("hessian is PSD and matches finite differences of the gradient") {
    for (auto family : {KernelFamily::gaussian, KernelFamily::logistic, KernelFamily::laplacian}) {
        const Instance inst = random_instance(12, 4, 404);
        const QuantileProblem p(inst.z, inst.y, 0.6, KernelSpec{family, 0.5});
        const Matrix h = loss_hessian(p, inst.theta);
        CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().minCoeff() >= -1e-10);
        const double step = 1e-6;
        for (Index j = 0; j < 4; ++j) {
            Vector up = inst.theta;
            Vector down = inst.theta;
            up(j) += step;
            down(j) -= step;
            const Vector col = (loss_gradient(p, up) - loss_gradient(p, down)) / (2.0 * step);
            CHECK((col - h.col(j)).cwiseAbs().maxCoeff() <= 1e-5);
        }
    }
}

TEST_CASE("smoothed loss is convex along random chords") {
    for (auto family : kAll) {
        const Instance inst = random_instance(20, 3, 55);
        const QuantileProblem p(inst.z, inst.y, 0.35, KernelSpec{family, 0.3});
        RandomStream s(9, StreamDomain::generic, 1);
        std::normal_distribution<double> g;
        for (int trial = 0; trial < 200; ++trial) {
            Vector a(3), b(3);
            for (Index j = 0; j < 3; ++j) {
                a(j) = 2.0 * g(s);
                b(j) = 2.0 * g(s);
            }
            const double w = s.uniform();
            const double lhs = loss_value(p, w * a + (1.0 - w) * b);
            REQUIRE(lhs <= w * loss_value(p, a) + (1.0 - w) * loss_value(p, b) + 1e-12);
        }
    }
}

TEST_CASE("default bandwidth") {
    CHECK(default_bandwidth(500, 200, 2, 0.5) == doctest::Approx(0.5 * std::pow(std::log(202.0) / 500.0, 0.25)));
    CHECK(default_bandwidth(500, 200, 2, 0.5) == doctest::Approx(0.1605).epsilon(1e-3));
    CHECK(default_bandwidth(100000000, 10, 2, 0.001) == 0.05);
    CHECK(default_bandwidth(2000000000, 3, 0, 0.5) == 0.05);
}

TEST_CASE("quantile problem construction") {
    Instance inst = random_instance(10, 3, 8);
    const QuantileProblem p(inst.z, inst.y, 0.5, KernelSpec{});
    for (Index j = 0; j < 3; ++j) {
        const double mean = inst.z.col(j).mean();
        const double sd = std::sqrt((inst.z.col(j).array() - mean).square().mean());
        CHECK(p.sigma_hat()(j) == doctest::Approx(sd).epsilon(1e-14));
    }
    const QuantileProblem with_icpt(inst.z, inst.y, 0.5, KernelSpec{}, 1, true);
    CHECK(with_icpt.dim() == 4);
    CHECK(with_icpt.n_idiosyncratic() == 2);
    CHECK(with_icpt.n_penalizable() == 3);
    CHECK(with_icpt.sigma_hat()(3) == 1.0);
    CHECK(with_icpt.penalty_weights()(3) == 0.0);
    CHECK(with_icpt.penalty_weights(false)(2) == 0.0);
    CHECK(with_icpt.penalty_weights(false)(1) == p.sigma_hat()(1));

    Matrix bad = inst.z;
    bad.col(1).setConstant(2.0);
    CHECK(throws_code(ErrorCode::degenerate_column, [&] { QuantileProblem(bad, inst.y, 0.5, KernelSpec{}); }));
    CHECK(throws_code(ErrorCode::invalid_argument, [&] { QuantileProblem(inst.z, inst.y, 1.0, KernelSpec{}); }));
    CHECK(throws_code(ErrorCode::invalid_argument, [&] { QuantileProblem(inst.z, inst.y, 0.5, KernelSpec{KernelFamily::gaussian, 0.0}); }));
    CHECK(throws_code(ErrorCode::dimension_error, [&] { QuantileProblem(inst.z, Vector::Zero(4), 0.5, KernelSpec{}); }));

    Vector huge = Vector::Constant(3, 1e308);
    CHECK(throws_code(ErrorCode::non_finite, [&] { loss_value(p, huge); }));
}

TEST_CASE("kernel names round-trip") {
    for (auto family : kAll) CHECK(parse_kernel(kernel_name(family)) == family);
    CHECK(throws_code(ErrorCode::invalid_argument, [] { parse_kernel("triangular"); }));
}
