#pragma once

#include "faqr/factor_model.hpp"
#include "faqr/harness/backtest.hpp"
#include "faqr/harness/pipeline.hpp"
#include "faqr/harness/simulation.hpp"
#include "faqr/inference.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace faqr::harness {

/// Response column by header name or zero-based index; monostate for none.
using ResponseColumn = std::variant<std::monostate, std::string, Index>;

/// Comma-separated numeric table. Lines starting with '#' are skipped.
/// Throws ParseError (with 1-based line/column) or MissingValue for NaN/NA/empty cells.
DataMatrix read_csv(std::istream& in, const ResponseColumn& response, bool has_header);
DataMatrix load_csv(const std::filesystem::path& path, const ResponseColumn& response, bool has_header);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double value);

/// Writes x columns then the response (named `response_name`) when present.
void write_csv(std::ostream& out, const DataMatrix& data, const std::string& response_name = "y");
void save_csv(const std::filesystem::path& path, const DataMatrix& data, const std::string& response_name = "y");

/// {seed, rng, version} stamped on every randomized output.
struct RunMetadata {
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

nlohmann::json metadata_json(const RunMetadata& meta);
/// "# key=value" comment lines for CSV outputs.
std::string metadata_comment(const RunMetadata& meta);

nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const Matrix& m);  // array of rows
nlohmann::json to_json(const FactorModel& model);
nlohmann::json to_json(const FaqrFit& fit);
nlohmann::json to_json(const PipelineFit& fit, const PipelineConfig& cfg);
nlohmann::json to_json(const AdequacyResult& result);
nlohmann::json to_json(const BacktestReport& report);

void write_simulation_summary(std::ostream& out, const SimulationResult& result);
void write_simulation_rows(std::ostream& out, const SimulationResult& result);
void write_power_table(std::ostream& out, const std::vector<PowerRow>& rows);
/// Equal-width histogram of bootstrap statistics: bin_lo,bin_hi,count.
void write_histogram(std::ostream& out, const std::vector<double>& values, int bins = 30);
void write_predictions(std::ostream& out, const BacktestReport& report);

}  // namespace faqr::harness
