#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sglq/model.hpp"

namespace sglq::cli {

/// Every flag of every command. Serialized into each output so a run can be repeated with
/// `sglq run --manifest FILE`.
struct RunManifest {
    std::string format_version = "1";
    std::string command;

    // data
    std::string data;
    std::string response;
    std::string groups;
    bool center = true;

    // outputs
    std::string output;
    std::string diagnostics;
    std::string summary;
    std::string data_out;
    bool timing = false;

    // penalty; with alpha set, lambda is lambda_common
    double tau = 0.5;
    std::optional<double> alpha;
    double lambda = 0.0;
    double mu = 0.0;
    std::vector<double> element_weights;
    std::vector<double> group_weights;

    // path
    std::size_t nlambda = 100;
    std::optional<double> min_ratio;
    std::vector<double> lambdas;

    // solver
    double varpi = 1.0;
    double gamma = 1.0;
    double eps1 = 1e-3;
    double eps2 = 1e-3;
    std::size_t max_iters = 20000;
    std::size_t check_every = 10;
    std::string linsolver = "auto";
    double cg_tol = 1e-10;
    std::size_t cg_max_iters = 5000;

    // simulation
    std::string design = "timing";
    std::vector<std::string> dists{"normal3"};
    std::vector<double> taus{0.5};
    std::int64_t n = 100;
    std::int64_t p = 500;
    std::uint64_t seed = 1;
    std::size_t reps = 1;
    std::size_t tune_nlambda = 50;
    std::vector<double> alphas{1.0};
    bool adaptive = false;
    double adaptive_power = 1.0;
    double adaptive_floor = 1e-3;
    bool standardize = true;
    unsigned threads = 0;

    bool operator==(const RunManifest&) const = default;
};

void to_json(nlohmann::ordered_json& j, const RunManifest& m);
void from_json(const nlohmann::ordered_json& j, RunManifest& m);

/// Numeric table read from an RFC 4180 CSV file with a header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Parses CSV text; `source` names the input in error messages.
Table parse_csv(const std::string& text, const std::string& source);
Table read_csv(const std::string& path);

struct Dataset {
    std::vector<std::string> columns;  // design columns, in file order
    Matrix X;
    Vector y;
};

Dataset load_dataset(const std::string& path, const std::string& response);

/// {"groups": [[names...], ...]}; listed groups come first in file order, every unlisted
/// column then becomes its own group in column order.
GroupPartition read_groups(const std::string& path, const std::vector<std::string>& columns);
GroupPartition parse_groups(const std::string& text, const std::vector<std::string>& columns,
                            const std::string& source);

/// Runs the command line; returns the process exit code. 0 converged, 2 stopped at the
/// iteration cap, 1 bad input or a failed run.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Executes a manifest directly.
int execute(const RunManifest& manifest, std::ostream& out, std::ostream& err);

} // namespace sglq::cli
