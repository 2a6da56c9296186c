#include "faqr/harness/simulation.hpp"

#include "faqr/error.hpp"
#include "faqr/parallel.hpp"
#include "faqr/rng.hpp"

#include <algorithm>
#include <cmath>

namespace faqr::harness {

namespace {

double mean_of(const std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& cfg) {
    require(cfg.reps >= 10, ErrorCode::invalid_argument, "need at least 10 replicates");
    require(!cfg.methods.empty(), ErrorCode::invalid_argument, "no methods requested");
    cfg.dgp.validate();

    const std::size_t n_methods = cfg.methods.size();
    std::vector<ReplicateRow> rows(static_cast<std::size_t>(cfg.reps) * n_methods);
    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
        DgpSpec spec = cfg.dgp;
        spec.replicate_seed = derive_seed(cfg.seed, 2 * r);
        const DgpSample sample = generate_dgp(spec);
        for (std::size_t k = 0; k < n_methods; ++k) {
            PipelineConfig pipe = cfg.pipeline;
            pipe.method = cfg.methods[k];
            if (!pipe.n_factors) pipe.n_factors = spec.m;
            pipe.lambda_rule.seed = derive_seed(cfg.seed, 2 * r + 1);
            pipe.lambda_rule.threads = 1;
            const PipelineFit fit = fit_pipeline(sample.data.x, *sample.data.y, pipe);

            ReplicateRow& row = rows[r * n_methods + k];
            row.replicate = static_cast<int>(r);
            row.method = cfg.methods[k];
            row.metrics = evaluate_fit(fit.fit, sample.truth.beta_star);
            row.lambda = fit.lambda;
            row.iterations = fit.fit.n_outer_iters;
            row.converged = fit.fit.status == FitStatus::converged;
        }
    });

    SimulationResult result;
    result.rows = std::move(rows);
    for (std::size_t k = 0; k < n_methods; ++k) {
        std::vector<double> l1, tpr, fpr;
        for (const auto& row : result.rows) {
            if (row.method != cfg.methods[k]) continue;
            l1.push_back(row.metrics.l1_error);
            tpr.push_back(row.metrics.tpr);
            fpr.push_back(row.metrics.fpr);
        }
        MethodSummary s;
        s.method = cfg.methods[k];
        s.reps = static_cast<int>(l1.size());
        s.median_l1 = median(l1);
        s.iqr_l1 = interquartile_range(l1);
        s.mean_tpr = mean_of(tpr);
        s.se_tpr = standard_error(tpr);
        s.mean_fpr = mean_of(fpr);
        s.se_fpr = standard_error(fpr);
        result.summary.push_back(s);
    }
    return result;
}

std::vector<PowerRow> run_power_study(const PowerConfig& cfg) {
    require(cfg.reps >= 1, ErrorCode::invalid_argument, "need at least one replicate");
    require(std::find(cfg.w_grid.begin(), cfg.w_grid.end(), 0.0) != cfg.w_grid.end(), ErrorCode::invalid_argument,
            "signal grid must include w = 0");

    std::vector<PowerRow> rows;
    for (double w : cfg.w_grid) {
        PowerRow row;
        row.w = w;
        row.reps = cfg.reps;
        row.p_values.assign(static_cast<std::size_t>(cfg.reps), 1.0);
        parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
            DgpSpec spec = DgpSpec::power(cfg.dgp.n, cfg.dgp.d, w, cfg.dgp.noise);
            spec.m = cfg.dgp.m;
            spec.gamma_star = cfg.dgp.gamma_star.size() == spec.m ? cfg.dgp.gamma_star : Vector::Constant(spec.m, 0.5);
            spec.loading_seed = cfg.dgp.loading_seed;
            spec.replicate_seed = derive_seed(cfg.seed, 2 * r);
            const DgpSample sample = generate_dgp(spec);
            const FactorModel factor = estimate_factors(sample.data.x, spec.m);
            const double h = cfg.bandwidth ? *cfg.bandwidth : default_bandwidth(spec.n, spec.d, spec.m, cfg.tau);
            AdequacyOptions options;
            options.b = cfg.b;
            options.seed = derive_seed(cfg.seed, 2 * r + 1);
            options.lambda_rule = cfg.lambda_rule;
            options.solver = cfg.solver;
            const AdequacyResult test =
                adequacy_test(cfg.method, sample.data, factor, cfg.tau, KernelSpec{cfg.kernel, h}, options);
            row.p_values[r] = test.p_value;
        });
        for (double p : row.p_values) row.rejections += p < cfg.level ? 1 : 0;
        row.rate = static_cast<double>(row.rejections) / static_cast<double>(row.reps);
        row.se = std::sqrt(row.rate * (1.0 - row.rate) / static_cast<double>(row.reps));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace faqr::harness
