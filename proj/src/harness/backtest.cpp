#include "faqr/harness/backtest.hpp"

#include "faqr/error.hpp"
#include "faqr/parallel.hpp"
#include "faqr/rng.hpp"
#include "faqr/tuning.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace faqr::harness {

double quantile_pseudo_r2(const Vector& y, const Vector& yhat, const Vector& benchmark, double tau) {
    require(y.size() == yhat.size() && y.size() == benchmark.size() && y.size() > 0, ErrorCode::dimension_error,
            "pseudo-R2 inputs differ in length");
    double model = 0.0;
    double base = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        model += check_loss(tau, y(i) - yhat(i));
        base += check_loss(tau, y(i) - benchmark(i));
    }
    if (base == 0.0) return model == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - model / base;
}

double mean_absolute_error(const Vector& y, const Vector& yhat) {
    require(y.size() == yhat.size() && y.size() > 0, ErrorCode::dimension_error, "MAPE inputs differ in length");
    return (y - yhat).cwiseAbs().mean();
}

BacktestReport rolling_backtest(const DataMatrix& data, const BacktestConfig& cfg) {
    require(data.y.has_value(), ErrorCode::invalid_argument, "backtest needs a response");
    data.validate();
    require(cfg.window >= 2, ErrorCode::invalid_argument, "window must be at least 2");
    const Index n = data.n();
    require(n > cfg.window, ErrorCode::window_too_large, "series length must exceed the window");
    const Vector& y = *data.y;
    const Index window = cfg.window;
    const Index steps = n - window;

    std::vector<std::optional<PipelineFit>> fits(static_cast<std::size_t>(steps));
    std::vector<std::string> errors(static_cast<std::size_t>(steps));
    parallel_for(static_cast<std::size_t>(steps), cfg.threads, [&](std::size_t k) {
        const Index t = window + static_cast<Index>(k);
        PipelineConfig pipe = cfg.pipeline;
        pipe.lambda_rule.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        pipe.lambda_rule.threads = 1;
        try {
            fits[k] = fit_pipeline(data.x.middleRows(t - window, window), y.segment(t - window, window), pipe);
        } catch (const Error& e) {
            errors[k] = e.what();
        }
    });

    BacktestReport report;
    report.window = cfg.window;
    report.tau = cfg.pipeline.tau;
    report.predictions.resize(steps);
    report.actual = y.tail(steps);
    report.benchmark.resize(steps);
    const PipelineFit* last = nullptr;
    for (Index k = 0; k < steps; ++k) {
        const Index t = window + k;
        const Vector train = y.segment(t - window, window);
        report.benchmark(k) = empirical_quantile(std::vector<double>(train.data(), train.data() + window), report.tau);
        const auto idx = static_cast<std::size_t>(k);
        if (fits[idx]) {
            last = &*fits[idx];
        } else {
            report.failures.push_back({t, errors[idx]});
        }
        report.predictions(k) = last ? last->predict(data.x.row(t).transpose()) : report.benchmark(k);
    }
    report.mape = mean_absolute_error(report.actual, report.predictions);
    report.pseudo_r2 = quantile_pseudo_r2(report.actual, report.predictions, report.benchmark, report.tau);
    return report;
}

}  // namespace faqr::harness
