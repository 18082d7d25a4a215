#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "poisnet/counts.hpp"
#include "poisnet/omii.hpp"
#include "poisnet/sim.hpp"
#include "poisnet/stats.hpp"

namespace poisnet {

/// Bad input data or configuration (exit code 1). Anything else that fails
/// while running is a runtime error (exit code 2).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a CSV whose rows are variables: label, then one integer count per
/// sample. One optional header row is recognized by a non-integer sample field.
CountMatrix load_counts(const std::filesystem::path& path);

/// Writes a header `variable,s1,...,st` and one row per variable.
void write_counts(const std::filesystem::path& path, const CountMatrix& counts);

enum class Screen { none, poisson, negbin };
std::string to_string(Screen s);
Screen parse_screen(const std::string& s);

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = ".";
  std::int64_t min_total_count = 100;
  bool scale = false;
  Screen screen = Screen::none;
  double screen_alpha = 0.05;
  std::size_t screen_boot = 200;
  InferenceConfig inference;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ScreenRecord {
  std::string label;
  GofResult result;
  bool flagged = false;  // p_value <= screen_alpha
};

struct Preprocessed {
  CountMatrix counts;
  std::vector<std::string> dropped;
  std::vector<ScreenRecord> screening;
};

/// Drops rows whose total is not strictly above min_total_count, optionally
/// replaces each row by floor(x / mean(x)), then optionally screens each row.
/// Screening only flags rows. Throws InputError if no row survives.
Preprocessed preprocess(const CountMatrix& counts, const PipelineConfig& config);

/// Writes edges.csv and report.json into config.output_dir.
void run_infer(const PipelineConfig& config);

struct BenchmarkConfig {
  std::vector<std::size_t> n{50};
  std::vector<double> p{0.04};
  std::vector<std::size_t> t{100, 250, 500, 1000};
  std::vector<Estimator> methods{Estimator::poisson, Estimator::gaussian};
  std::size_t realizations = 50;
  std::uint64_t seed = 0;
  InferenceConfig inference;  // estimator and seed are set per run
  SimConfig sim;              // n, t, er_p and seed are set per run
  std::size_t workers = 1;

  void validate() const;
};

struct BenchmarkCell {
  Estimator method = Estimator::poisson;
  std::size_t n = 0;
  double p = 0.0;
  std::size_t t = 0;
  double tpr_mean = 0.0;
  double tpr_se = 0.0;
  double fpr_mean = 0.0;
  double fpr_se = 0.0;
  std::size_t realizations = 0;  // realizations with at least one true edge
  std::string error;             // nonempty when no realization could be scored
};

/// One cell per (method, n, p, t). Every method sees the same simulated data.
/// Realizations are distributed over `workers` threads.
std::vector<BenchmarkCell> run_benchmark(const BenchmarkConfig& config);

/// Scored cells go to `path`; errored cells to benchmark_errors.csv beside it.
void write_benchmark(const std::filesystem::path& path, const std::vector<BenchmarkCell>& cells);

/// Writes counts.csv and truth_edges.csv (header `source,target`, each
/// undirected edge once with source < target) into output_dir.
void run_simulate(const SimConfig& config, const std::filesystem::path& output_dir);

/// Formats a double with enough digits to round-trip.
std::string format_number(double v);

}  // namespace poisnet
