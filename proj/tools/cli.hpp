#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mobility::cli {

/// Parsed and validated options shared by the subcommands.
struct RunConfig {
  std::string command;
  std::int64_t n = 0;
  std::optional<double> b;
  std::optional<double> d;
  double mu = 0.05;
  double kappa = 0.1;
  double eta = 0.5;
  int r = 0;
  int k_top = 10;
  std::vector<std::uint64_t> seeds;
  double tol = 1e-10;
  std::string out;
  std::string format = "csv";
};

/// `a..b` (inclusive) or a comma-separated list of ranges and values.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// Exit codes: 0 success, 2 invalid parameters or inputs, 3 solver failure.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace mobility::cli
