#include "faqr/harness/io.hpp"

#include "faqr/error.hpp"
#include "faqr/rng.hpp"
#include "faqr/version.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace faqr::harness {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string location(std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

bool is_missing(std::string_view cell) {
    if (cell.empty()) return true;
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "nan" || lower == "na" || lower == "-nan" || lower == "null";
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
    if (is_missing(cell)) throw Error(ErrorCode::missing_value, "missing value at " + location(line, column));
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw Error(ErrorCode::parse_error,
                    "cannot parse '" + std::string(cell) + "' as a finite number at " + location(line, column));
    }
    return value;
}

bool skip_line(std::string_view line) {
    const std::string_view t = trim(line);
    return t.empty() || t.front() == '#';
}

template <class Stream>
Stream open_file(const std::filesystem::path& path) {
    Stream s(path);
    if (!s) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    return s;
}

}  // namespace

DataMatrix read_csv(std::istream& in, const ResponseColumn& response, bool has_header) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const auto cells = split(line);
        if (has_header && header.empty()) {
            for (auto c : cells) header.emplace_back(c);
            width = header.size();
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width) {
            throw Error(ErrorCode::parse_error, "expected " + std::to_string(width) + " cells, found " +
                                                    std::to_string(cells.size()) + " at " + location(line_no, 1));
        }
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) row[j] = parse_cell(cells[j], line_no, j + 1);
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorCode::parse_error, "no data rows");

    std::optional<std::size_t> ycol;
    if (const auto* name = std::get_if<std::string>(&response)) {
        require(has_header, ErrorCode::invalid_argument, "response given by name but the file has no header");
        const auto it = std::find(header.begin(), header.end(), *name);
        require(it != header.end(), ErrorCode::invalid_argument, "no column named '" + *name + "'");
        ycol = static_cast<std::size_t>(it - header.begin());
    } else if (const auto* idx = std::get_if<Index>(&response)) {
        require(*idx >= 0 && static_cast<std::size_t>(*idx) < width, ErrorCode::invalid_argument,
                "response index out of range");
        ycol = static_cast<std::size_t>(*idx);
    }

    const Index n = static_cast<Index>(rows.size());
    const Index d = static_cast<Index>(width) - (ycol ? 1 : 0);
    DataMatrix data;
    data.x.resize(n, d);
    if (ycol) data.y = Vector(n);
    for (Index i = 0; i < n; ++i) {
        Index k = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (ycol && j == *ycol) {
                (*data.y)(i) = rows[static_cast<std::size_t>(i)][j];
            } else {
                data.x(i, k++) = rows[static_cast<std::size_t>(i)][j];
            }
        }
    }
    for (std::size_t j = 0; j < width; ++j) {
        if (ycol && j == *ycol) continue;
        data.column_names.push_back(has_header ? header[j] : "x" + std::to_string(j + 1));
    }
    data.validate();
    return data;
}

DataMatrix load_csv(const std::filesystem::path& path, const ResponseColumn& response, bool has_header) {
    auto in = open_file<std::ifstream>(path);
    return read_csv(in, response, has_header);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const DataMatrix& data, const std::string& response_name) {
    for (Index j = 0; j < data.d(); ++j) {
        if (j > 0) out << ',';
        const auto uj = static_cast<std::size_t>(j);
        out << (uj < data.column_names.size() ? data.column_names[uj] : "x" + std::to_string(j + 1));
    }
    if (data.y) out << (data.d() > 0 ? "," : "") << response_name;
    out << '\n';
    for (Index i = 0; i < data.n(); ++i) {
        for (Index j = 0; j < data.d(); ++j) {
            if (j > 0) out << ',';
            out << format_double(data.x(i, j));
        }
        if (data.y) out << (data.d() > 0 ? "," : "") << format_double((*data.y)(i));
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const DataMatrix& data, const std::string& response_name) {
    auto out = open_file<std::ofstream>(path);
    write_csv(out, data, response_name);
}

nlohmann::json metadata_json(const RunMetadata& meta) {
    return {{"seed", meta.seed},
            {"rng", std::string(Philox4x32::algorithm_id)},
            {"version", std::string(version)},
            {"threads", meta.threads}};
}

std::string metadata_comment(const RunMetadata& meta) {
    std::ostringstream s;
    s << "# seed=" << meta.seed << "\n# rng=" << Philox4x32::algorithm_id << "\n# version=" << version
      << "\n# threads=" << meta.threads << '\n';
    return s.str();
}

nlohmann::json to_json(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        const Vector r = m.row(i).transpose();
        rows.push_back(to_json(r));
    }
    return rows;
}

nlohmann::json to_json(const FactorModel& model) {
    return {{"m", model.m},
            {"eigenvalues", to_json(model.eigenvalues)},
            {"loadings", to_json(model.b_hat)},
            {"factors", to_json(model.f_hat)},
            {"idiosyncratic", to_json(model.u_hat)}};
}

nlohmann::json to_json(const FaqrFit& fit) {
    nlohmann::json j{{"theta", to_json(fit.theta)},
                     {"beta", to_json(Vector(fit.beta()))},
                     {"gamma", to_json(Vector(fit.gamma()))},
                     {"varphi", to_json(fit.varphi)},
                     {"lambda", fit.lambda},
                     {"tau", fit.tau},
                     {"h", fit.h},
                     {"kernel", std::string(kernel_name(fit.kernel))},
                     {"objective", fit.final_objective},
                     {"warm_objective", fit.warm_objective},
                     {"kkt", fit.kkt_residual},
                     {"iters", fit.n_outer_iters},
                     {"converged", fit.status == FitStatus::converged}};
    if (fit.intercept) j["intercept"] = fit.intercept_value();
    return j;
}

nlohmann::json to_json(const PipelineFit& fit, const PipelineConfig& cfg) {
    nlohmann::json j = to_json(fit.fit);
    j["method"] = std::string(method_name(fit.method));
    j["m"] = fit.factors ? fit.factors->m : 0;
    j["lambda_rule"] = {{"fixed", cfg.lambda.has_value()},
                        {"c0", cfg.lambda_rule.c0},
                        {"alpha", cfg.lambda_rule.alpha},
                        {"n_sim", cfg.lambda_rule.n_sim},
                        {"normalize", cfg.lambda_rule.normalize}};
    if (fit.column_means.size() > 0) j["column_means"] = to_json(fit.column_means);
    return j;
}

nlohmann::json to_json(const AdequacyResult& result) {
    nlohmann::json j{{"method", std::string(bootstrap_name(result.method))},
                     {"t_n", result.t_n},
                     {"p_value", result.p_value},
                     {"b", result.b},
                     {"gamma_null", to_json(result.gamma_null)},
                     {"boot_stats", result.boot_stats}};
    if (result.lambda) j["lambda"] = *result.lambda;
    return j;
}

nlohmann::json to_json(const BacktestReport& report) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : report.failures) failures.push_back({{"t", f.t}, {"message", f.message}});
    return {{"window", report.window},
            {"tau", report.tau},
            {"n_predictions", report.predictions.size()},
            {"mape", report.mape},
            {"pseudo_r2", report.pseudo_r2},
            {"failures", failures}};
}

void write_simulation_summary(std::ostream& out, const SimulationResult& result) {
    out << "method,reps,median_l1,iqr_l1,mean_tpr,se_tpr,mean_fpr,se_fpr\n";
    for (const auto& s : result.summary) {
        out << method_name(s.method) << ',' << s.reps << ',' << format_double(s.median_l1) << ','
            << format_double(s.iqr_l1) << ',' << format_double(s.mean_tpr) << ',' << format_double(s.se_tpr) << ','
            << format_double(s.mean_fpr) << ',' << format_double(s.se_fpr) << '\n';
    }
}

void write_simulation_rows(std::ostream& out, const SimulationResult& result) {
    out << "replicate,method,l1_error,tpr,fpr,support_size,lambda,iterations,converged\n";
    for (const auto& r : result.rows) {
        out << r.replicate << ',' << method_name(r.method) << ',' << format_double(r.metrics.l1_error) << ','
            << format_double(r.metrics.tpr) << ',' << format_double(r.metrics.fpr) << ','
            << r.metrics.support_hat.size() << ',' << format_double(r.lambda) << ',' << r.iterations << ','
            << (r.converged ? 1 : 0) << '\n';
    }
}

void write_power_table(std::ostream& out, const std::vector<PowerRow>& rows) {
    out << "w,reps,rejections,rate,se\n";
    for (const auto& r : rows) {
        out << format_double(r.w) << ',' << r.reps << ',' << r.rejections << ',' << format_double(r.rate) << ','
            << format_double(r.se) << '\n';
    }
}

void write_histogram(std::ostream& out, const std::vector<double>& values, int bins) {
    require(bins >= 1, ErrorCode::invalid_argument, "need at least one bin");
    out << "bin_lo,bin_hi,count\n";
    if (values.empty()) return;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
    const double width = (hi - lo) / bins;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        auto k = static_cast<int>((v - lo) / width);
        counts[static_cast<std::size_t>(std::clamp(k, 0, bins - 1))]++;
    }
    for (int k = 0; k < bins; ++k) {
        out << format_double(lo + k * width) << ',' << format_double(lo + (k + 1) * width) << ','
            << counts[static_cast<std::size_t>(k)] << '\n';
    }
}

void write_predictions(std::ostream& out, const BacktestReport& report) {
    out << "t,actual,prediction,benchmark\n";
    for (Index k = 0; k < report.predictions.size(); ++k) {
        out << report.window + k << ',' << format_double(report.actual(k)) << ','
            << format_double(report.predictions(k)) << ',' << format_double(report.benchmark(k)) << '\n';
    }
}

}  // namespace faqr::harness
