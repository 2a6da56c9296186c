#include "faqr/error.hpp"
#include "faqr/factor_model.hpp"
#include "faqr/harness/backtest.hpp"
#include "faqr/harness/dgp.hpp"
#include "faqr/harness/io.hpp"
#include "faqr/harness/pipeline.hpp"
#include "faqr/harness/simulation.hpp"
#include "faqr/inference.hpp"
#include "faqr/smoothed_loss.hpp"
#include "faqr/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace faqr;
using namespace faqr::harness;

namespace {

struct GlobalOptions {
    double tau = 0.5;
    std::uint64_t seed = 1;
    std::string kernel = "gaussian";
    std::optional<double> bandwidth;
    unsigned threads = 1;
    bool center = false;
    bool raw_residuals = false;
    double lambda_c0 = 1.1;
    double lambda_alpha = 0.1;
    int lambda_sims = 1000;
};

struct InputOptions {
    std::string path;
    std::string response = "y";
    std::optional<Index> response_index;
    bool no_header = false;
};

void add_input(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("-i,--input", in.path, "Input CSV file")->required();
    cmd->add_option("--response", in.response, "Response column name")->capture_default_str();
    cmd->add_option("--response-index", in.response_index, "Zero-based response column (overrides --response)");
    cmd->add_flag("--no-header", in.no_header, "The CSV has no header row");
}

DataMatrix load_input(const InputOptions& in, bool need_response) {
    ResponseColumn column;
    if (in.response_index) {
        column = *in.response_index;
    } else if (!in.response.empty() && !in.no_header) {
        column = in.response;
    }
    DataMatrix data = load_csv(in.path, column, !in.no_header);
    require(!need_response || data.y.has_value(), ErrorCode::invalid_argument,
            "a response column is required (--response or --response-index)");
    return data;
}

LambdaRule lambda_rule(const GlobalOptions& g) {
    LambdaRule rule;
    rule.c0 = g.lambda_c0;
    rule.alpha = g.lambda_alpha;
    rule.n_sim = g.lambda_sims;
    rule.seed = g.seed;
    rule.threads = g.threads;
    return rule;
}

NoiseSpec parse_noise(const std::string& kind, std::optional<double> scale) {
    if (kind == "gaussian" || kind == "normal") return NoiseSpec::gaussian(scale.value_or(0.5));
    if (kind == "t" || kind == "student_t") return NoiseSpec::student_t(scale.value_or(2.0));
    throw Error(ErrorCode::invalid_argument, "unknown noise '" + kind + "' (gaussian or t)");
}

// Writes to `path`, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write '" + path + "'");
    out << text;
    require(static_cast<bool>(out), ErrorCode::io_error, "write failed for '" + path + "'");
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

// Keys the root does not own belong to the subcommand being run, so one flat
// file can carry both global and subcommand settings.
class FlatConfig : public CLI::ConfigINI {
public:
    FlatConfig(const CLI::App* root, std::string subcommand) : root_(root), subcommand_(std::move(subcommand)) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigINI::from_config(input);
        for (auto& item : items) {
            if (!item.parents.empty() || subcommand_.empty()) continue;
            if (root_->get_option_no_throw("--" + item.name) == nullptr) item.parents = {subcommand_};
        }
        return items;
    }

private:
    const CLI::App* root_;
    std::string subcommand_;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factor-augmented quantile regression", "faqr"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");

    GlobalOptions g;
    std::string kernel_help = "Smoothing kernel: gaussian, laplacian, logistic, epanechnikov, uniform";
    app.add_option("--tau", g.tau, "Quantile level in (0, 1)")->capture_default_str();
    app.add_option("--seed", g.seed, "Master seed for every random stream")->capture_default_str();
    app.add_option("--kernel", g.kernel, kernel_help)->capture_default_str();
    app.add_option("--bandwidth", g.bandwidth, "Smoothing bandwidth h (default: rate-based rule)");
    app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_flag("--center", g.center, "Center the columns of X before fitting");
    app.add_flag("--raw-residuals", g.raw_residuals, "Residual bootstrap: resample uncentered residuals");
    app.add_option("--lambda-c0", g.lambda_c0, "Penalty inflation constant c0 > 1")->capture_default_str();
    app.add_option("--lambda-alpha", g.lambda_alpha, "Penalty level alpha")->capture_default_str();
    app.add_option("--lambda-sims", g.lambda_sims, "Pivotal simulations for lambda")->capture_default_str();
    for (const char* name : {"--tau", "--seed", "--kernel", "--bandwidth", "--threads", "--center", "--raw-residuals",
                             "--lambda-c0", "--lambda-alpha", "--lambda-sims"})
        app.get_option(name)->configurable(true);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit the penalized model; writes fit JSON");
    InputOptions fit_in;
    add_input(fit_cmd, fit_in);
    std::string fit_method = "faqr";
    std::optional<int> fit_m;
    int fit_max_m = 0;
    std::optional<double> fit_lambda;
    bool fit_intercept = false;
    std::string fit_out;
    fit_cmd->add_option("--method", fit_method, "faqr or qr")->capture_default_str();
    fit_cmd->add_option("--factors", fit_m, "Number of factors (default: eigenvalue ratio)");
    fit_cmd->add_option("--max-factors", fit_max_m, "Upper bound for the eigenvalue ratio (0: default)");
    fit_cmd->add_option("--lambda", fit_lambda, "Fixed penalty (skips the simulated rule)");
    fit_cmd->add_flag("--intercept", fit_intercept, "Add an unpenalized intercept");
    fit_cmd->add_option("-o,--output", fit_out, "Output JSON (default stdout)");

    // select-factors
    auto* sel_cmd = app.add_subcommand("select-factors", "Estimate the factor model; writes factor JSON");
    InputOptions sel_in;
    sel_in.response.clear();  // every column is a covariate unless a response is named
    add_input(sel_cmd, sel_in);
    std::optional<int> sel_m;
    int sel_max_m = 0;
    std::string sel_out;
    sel_cmd->add_option("--factors", sel_m, "Use this many factors instead of the eigenvalue ratio");
    sel_cmd->add_option("--max-factors", sel_max_m, "Upper bound for the eigenvalue ratio (0: default)");
    sel_cmd->add_option("-o,--output", sel_out, "Output JSON (default stdout)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo accuracy or power study; writes CSV");
    std::string study = "accuracy";
    Index sim_n = 200;
    Index sim_d = 200;
    int sim_m = 2;
    std::string noise = "gaussian";
    std::optional<double> noise_scale;
    int sim_reps = 100;
    std::uint64_t loading_seed = 1;
    std::vector<double> w_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    int sim_b = 200;
    std::string sim_boot = "residual";
    double level = 0.05;
    std::string sim_out;
    std::string sim_rows;
    sim_cmd->add_option("--study", study, "accuracy or power")->capture_default_str();
    sim_cmd->add_option("--n", sim_n, "Sample size")->capture_default_str();
    sim_cmd->add_option("--d", sim_d, "Number of covariates")->capture_default_str();
    sim_cmd->add_option("--m", sim_m, "Number of factors")->capture_default_str();
    sim_cmd->add_option("--noise", noise, "gaussian or t")->capture_default_str();
    sim_cmd->add_option("--noise-scale", noise_scale, "Gaussian sd (default 0.5) or t degrees of freedom (default 2)");
    sim_cmd->add_option("--reps", sim_reps, "Monte-Carlo replicates")->capture_default_str();
    sim_cmd->add_option("--loading-seed", loading_seed, "Seed of the fixed loadings")->capture_default_str();
    sim_cmd->add_option("--w-grid", w_grid, "Power study signal amplitudes")->delimiter(',');
    sim_cmd->add_option("--b", sim_b, "Power study bootstrap replicates")->capture_default_str();
    sim_cmd->add_option("--bootstrap", sim_boot, "Power study bootstrap: multiplier or residual")->capture_default_str();
    sim_cmd->add_option("--level", level, "Power study rejection level")->capture_default_str();
    sim_cmd->add_option("-o,--output", sim_out, "Summary CSV (default stdout)");
    sim_cmd->add_option("--rows", sim_rows, "Per-replicate CSV (accuracy study)");

    // adequacy
    auto* adq_cmd = app.add_subcommand("adequacy", "Bootstrap test that the factors alone suffice; writes JSON");
    InputOptions adq_in;
    add_input(adq_cmd, adq_in);
    std::string adq_method = "multiplier";
    int adq_b = 200;
    std::optional<int> adq_m;
    int adq_max_m = 0;
    bool project_scores = false;
    std::string adq_out;
    std::string adq_hist;
    adq_cmd->add_option("--method", adq_method, "multiplier or residual")->capture_default_str();
    adq_cmd->add_option("--reps", adq_b, "Bootstrap replicates B (at least 100)")->capture_default_str();
    adq_cmd->add_option("--factors", adq_m, "Number of factors (default: eigenvalue ratio)");
    adq_cmd->add_option("--max-factors", adq_max_m, "Upper bound for the eigenvalue ratio (0: default)");
    adq_cmd->add_flag("--project-scores", project_scores, "Residual bootstrap: score with the replicate's projection");
    adq_cmd->add_option("-o,--output", adq_out, "Output JSON (default stdout)");
    adq_cmd->add_option("--histogram", adq_hist, "Histogram CSV of the bootstrap statistics");

    // backtest
    auto* bt_cmd = app.add_subcommand("backtest", "Rolling one-step-ahead backtest; writes report JSON");
    InputOptions bt_in;
    add_input(bt_cmd, bt_in);
    int window = 90;
    std::string bt_method = "faqr";
    std::optional<int> bt_m;
    std::string bt_out;
    std::string bt_pred;
    bt_cmd->add_option("--window", window, "Estimation window length")->capture_default_str();
    bt_cmd->add_option("--method", bt_method, "faqr or qr")->capture_default_str();
    bt_cmd->add_option("--factors", bt_m, "Number of factors per window (default: eigenvalue ratio)");
    bt_cmd->add_option("-o,--output", bt_out, "Output JSON (default stdout)");
    bt_cmd->add_option("--predictions", bt_pred, "Per-period predictions CSV");

    std::string chosen;
    for (int a = 1; a < argc && chosen.empty(); ++a) {
        for (const auto* sub : app.get_subcommands({})) {
            if (sub->get_name() == argv[a]) chosen = sub->get_name();
        }
    }
    app.config_formatter(std::make_shared<FlatConfig>(&app, chosen));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const KernelFamily kernel = parse_kernel(g.kernel);
        const RunMetadata meta{g.seed, g.threads};

        auto pipeline = [&](const std::string& method, std::optional<int> m) {
            PipelineConfig cfg;
            cfg.method = parse_method(method);
            cfg.n_factors = m;
            cfg.tau = g.tau;
            cfg.kernel = kernel;
            cfg.bandwidth = g.bandwidth;
            cfg.center = g.center;
            cfg.lambda_rule = lambda_rule(g);
            return cfg;
        };

        if (*fit_cmd) {
            const DataMatrix data = load_input(fit_in, true);
            PipelineConfig cfg = pipeline(fit_method, fit_m);
            cfg.max_factors = fit_max_m;
            cfg.lambda = fit_lambda;
            cfg.intercept = fit_intercept;
            const PipelineFit fit = fit_pipeline(data.x, *data.y, cfg);
            nlohmann::json doc = to_json(fit, cfg);
            doc["metadata"] = metadata_json(meta);
            emit(fit_out, dump(doc));
        } else if (*sel_cmd) {
            DataMatrix data = load_input(sel_in, false);
            if (g.center) center_columns(data.x);
            const int m_max = sel_max_m > 0 ? sel_max_m : default_max_factors(data.n(), data.d());
            const int m = sel_m ? *sel_m : select_num_factors(data.x, m_max);
            nlohmann::json doc = to_json(estimate_factors(data.x, m));
            doc["max_factors"] = m_max;
            doc["version"] = std::string(version);
            emit(sel_out, dump(doc));
        } else if (*sim_cmd) {
            const NoiseSpec noise_spec = parse_noise(noise, noise_scale);
            std::ostringstream out;
            out << metadata_comment(meta);
            if (study == "accuracy") {
                SimulationConfig cfg;
                cfg.dgp = DgpSpec::accuracy(sim_n, sim_d, noise_spec);
                cfg.dgp.m = sim_m;
                cfg.dgp.gamma_star = Vector::Constant(sim_m, 0.5);
                cfg.dgp.loading_seed = loading_seed;
                cfg.reps = sim_reps;
                cfg.pipeline = pipeline("faqr", std::nullopt);
                cfg.seed = g.seed;
                cfg.threads = g.threads;
                const SimulationResult result = run_simulation(cfg);
                write_simulation_summary(out, result);
                if (!sim_rows.empty()) {
                    std::ostringstream rows;
                    rows << metadata_comment(meta);
                    write_simulation_rows(rows, result);
                    emit(sim_rows, rows.str());
                }
            } else if (study == "power") {
                PowerConfig cfg;
                cfg.dgp = DgpSpec::power(sim_n, sim_d, 0.0, noise_spec);
                cfg.dgp.m = sim_m;
                cfg.dgp.gamma_star = Vector::Constant(sim_m, 0.5);
                cfg.dgp.loading_seed = loading_seed;
                cfg.w_grid = w_grid;
                cfg.reps = sim_reps;
                cfg.b = sim_b;
                cfg.method = parse_bootstrap(sim_boot);
                cfg.level = level;
                cfg.tau = g.tau;
                cfg.kernel = kernel;
                cfg.bandwidth = g.bandwidth;
                cfg.lambda_rule = lambda_rule(g);
                cfg.seed = g.seed;
                cfg.threads = g.threads;
                write_power_table(out, run_power_study(cfg));
            } else {
                throw Error(ErrorCode::invalid_argument, "unknown study '" + study + "' (accuracy or power)");
            }
            emit(sim_out, out.str());
        } else if (*adq_cmd) {
            DataMatrix data = load_input(adq_in, true);
            if (g.center) center_columns(data.x);
            const int m_max = adq_max_m > 0 ? adq_max_m : default_max_factors(data.n(), data.d());
            const int m = adq_m ? *adq_m : select_num_factors(data.x, m_max);
            const FactorModel factor = estimate_factors(data.x, m);
            const double h = g.bandwidth ? *g.bandwidth : default_bandwidth(data.n(), data.d(), m, g.tau);
            AdequacyOptions options;
            options.b = adq_b;
            options.seed = g.seed;
            options.threads = g.threads;
            options.raw_residuals = g.raw_residuals;
            options.project_bootstrap_scores = project_scores;
            options.lambda_rule = lambda_rule(g);
            const AdequacyResult result =
                adequacy_test(parse_bootstrap(adq_method), data, factor, g.tau, KernelSpec{kernel, h}, options);
            nlohmann::json doc = to_json(result);
            doc["m"] = m;
            doc["tau"] = g.tau;
            doc["h"] = h;
            doc["metadata"] = metadata_json(meta);
            emit(adq_out, dump(doc));
            if (!adq_hist.empty()) {
                std::ostringstream hist;
                hist << metadata_comment(meta);
                write_histogram(hist, result.boot_stats);
                emit(adq_hist, hist.str());
            }
        } else if (*bt_cmd) {
            const DataMatrix data = load_input(bt_in, true);
            BacktestConfig cfg;
            cfg.window = window;
            cfg.pipeline = pipeline(bt_method, bt_m);
            cfg.seed = g.seed;
            cfg.threads = g.threads;
            const BacktestReport report = rolling_backtest(data, cfg);
            nlohmann::json doc = to_json(report);
            doc["method"] = std::string(method_name(cfg.pipeline.method));
            doc["metadata"] = metadata_json(meta);
            emit(bt_out, dump(doc));
            if (!bt_pred.empty()) {
                std::ostringstream pred;
                pred << metadata_comment(meta);
                write_predictions(pred, report);
                emit(bt_pred, pred.str());
            }
        }
    } catch (const Error& e) {
        std::cerr << "faqr: " << e.what() << "\n";
        return is_input_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "faqr: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
