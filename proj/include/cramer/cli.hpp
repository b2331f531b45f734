#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cramer/cumulant.hpp"
#include "cramer/ruin.hpp"

namespace cramer {

// Parsed model file:
//   lambda = 1
//   c = 1.25
//   severity {
//     type = exponential
//     rate = 1
//   }
// Keys are also addressable as "severity.<name>" for overrides.
struct ModelSpec {
    double lambda = 0.0;
    double c = 0.0;
    double u = 0.0;
    SeverityModel severity = SeverityModel::exponential(1.0);

    double span = 0.01;
    std::optional<std::size_t> n_out;
    double tau = 0.0;
    double tail_tol = default_tail_tol;

    std::uint64_t mc_seed = 1;
    std::size_t mc_paths = 100000;
    double mc_horizon = 100.0;
    unsigned mc_workers = 1;
    double mc_budget = 1e10;

    CompoundModel model() const { return CompoundModel(lambda, severity); }
    RiskSystem system() const { return RiskSystem(model(), c, u); }
};

using SpecOverrides = std::vector<std::pair<std::string, std::string>>;

ModelSpec parse_model_spec(std::string_view text, const std::filesystem::path& base_dir = {},
                           const SpecOverrides& overrides = {});
ModelSpec load_model_spec(const std::filesystem::path& path, const SpecOverrides& overrides = {});

// Two columns (sum at risk, probability); '#' comments and a header line allowed.
Portfolio parse_portfolio(std::string_view text);

enum class OutputFormat { table, csv, kv };

struct ReportSection {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct Report {
    std::vector<std::pair<std::string, std::string>> summary;
    std::vector<ReportSection> sections;
};

void render(std::ostream& os, const Report& report, OutputFormat format);
std::string format_number(double v);  // 12 significant digits

// Whole command line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cramer
