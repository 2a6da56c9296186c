#pragma once

#include "faqr/harness/pipeline.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace faqr::harness {

struct BacktestConfig {
    int window = 90;
    PipelineConfig pipeline;
    std::uint64_t seed = 1;  // window t simulates lambda with derive_seed(seed, t)
    unsigned threads = 1;
};

struct WindowFailure {
    Index t = 0;
    std::string message;
};

/// One-step-ahead predictions for rows window .. n-1.
struct BacktestReport {
    int window = 90;
    double tau = 0.5;
    Vector predictions;
    Vector actual;
    Vector benchmark;  // training-window sample tau-quantile of y
    double mape = 0.0;       // mean absolute prediction error
    double pseudo_r2 = 0.0;
    std::vector<WindowFailure> failures;
};

/// 1 - sum rho_tau(y - yhat) / sum rho_tau(y - benchmark).
double quantile_pseudo_r2(const Vector& y, const Vector& yhat, const Vector& benchmark, double tau);
double mean_absolute_error(const Vector& y, const Vector& yhat);

/// Refits the full pipeline on rows [t - window, t) and predicts row t. A window
/// whose fit fails is logged and predicted with the last successful fit.
BacktestReport rolling_backtest(const DataMatrix& data, const BacktestConfig& cfg);

}  // namespace faqr::harness
