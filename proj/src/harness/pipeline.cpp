#include "faqr/harness/pipeline.hpp"

#include "faqr/error.hpp"

#include <algorithm>
#include <string>

namespace faqr::harness {

std::string_view method_name(Method method) noexcept { return method == Method::faqr ? "faqr" : "qr_plain"; }

Method parse_method(std::string_view name) {
    if (name == "faqr") return Method::faqr;
    if (name == "qr_plain" || name == "qr") return Method::qr_plain;
    throw Error(ErrorCode::invalid_argument, "unknown method '" + std::string(name) + "'");
}

double PipelineFit::predict(const Eigen::Ref<const Vector>& x_row) const {
    Vector x = x_row;
    if (column_means.size() > 0) x -= column_means;
    double out = x.dot(fit.beta()) + fit.intercept_value();
    if (method == Method::faqr) {
        const Vector f = factors->score(x.transpose()).row(0).transpose();
        out += f.dot(fit.varphi);
    }
    return out;
}

PipelineFit fit_pipeline(const Matrix& x_in, const Vector& y, const PipelineConfig& cfg) {
    require(y.size() == x_in.rows(), ErrorCode::dimension_error, "response length differs from row count");
    PipelineFit out;
    out.method = cfg.method;

    Matrix x = x_in;
    if (cfg.center) out.column_means = center_columns(x);
    const Index n = x.rows();
    const Index d = x.cols();

    std::optional<QuantileProblem> problem;
    if (cfg.method == Method::faqr) {
        int m = 0;
        if (cfg.n_factors) {
            m = *cfg.n_factors;
        } else {
            const int limit = static_cast<int>(std::min(n, d)) - 1;
            const int m_max = std::min(cfg.max_factors > 0 ? cfg.max_factors : default_max_factors(n, d), limit);
            m = select_num_factors(x, m_max);
        }
        out.factors = estimate_factors(x, m);
        const double h = cfg.bandwidth ? *cfg.bandwidth : default_bandwidth(n, d, m, cfg.tau);
        out.kernel = KernelSpec{cfg.kernel, h};
        problem.emplace(QuantileProblem::from_factors(*out.factors, y, cfg.tau, out.kernel, cfg.intercept));
    } else {
        const double h = cfg.bandwidth ? *cfg.bandwidth : default_bandwidth(n, d, 0, cfg.tau);
        out.kernel = KernelSpec{cfg.kernel, h};
        problem.emplace(x, y, cfg.tau, out.kernel, 0, cfg.intercept);
    }

    out.lambda = cfg.lambda ? *cfg.lambda : select_lambda(*problem, cfg.lambda_rule);
    out.fit = fit_penalized(*problem, out.lambda, cfg.solver);
    return out;
}

}  // namespace faqr::harness
