#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poisnet/entropy.hpp"
#include "poisnet/parallel.hpp"
#include "poisnet/pipeline.hpp"

namespace {

using namespace poisnet;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kRuntimeError = 2;

struct EntropyArgs {
  std::optional<double> rate;
  std::optional<double> l11, l22, l12;
  std::string out;
};

void run_entropy(const EntropyArgs& args) {
  nlohmann::ordered_json j;
  if (args.rate) {
    j["rate"] = *args.rate;
    j["entropy_nats"] = poisson_entropy(*args.rate);
  }
  if (args.l11 || args.l22 || args.l12) {
    if (!(args.l11 && args.l22 && args.l12))
      throw InputError("--l11, --l22 and --l12 must be given together");
    const double a = *args.l11, b = *args.l22, c = *args.l12;
    RateMatrix rates(2);
    rates.set(0, 0, a);
    rates.set(1, 1, b);
    rates.set(0, 1, c);
    j["l11"] = a;
    j["l22"] = b;
    j["l12"] = c;
    const double exact = bivariate_joint_entropy_exact(a, b, c);
    const double approx = joint_entropy_approx(rates);
    j["joint_exact_nats"] = exact;
    j["joint_approx_nats"] = approx;
    j["relative_error"] = std::abs(approx - exact) / exact;
    j["mutual_information_nats"] = mutual_information_poisson(a, b, c);
    j["naive_mutual_information_nats"] = naive_mutual_information_poisson(a, b, c);
  }
  if (j.empty()) throw InputError("entropy: give --rate and/or --l11 --l22 --l12");
  const std::string text = j.dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(args.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + args.out);
    f << text;
  }
}

class FlatConfig : public CLI::ConfigBase {
 public:
  explicit FlatConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    const auto subs = app_.get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items)
      if (item.parents.empty()) item.parents = {subs.front()->get_name()};
    return items;
  }

 private:
  const CLI::App& app_;
};

template <class T>
CLI::Option* add_seed(CLI::App* app, T& target) {
  return app->add_option("--seed", target, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Count-data network inference with Poisson conditional mutual information"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "poisnet 1.0");
  // CLI11 only reads config files at the top level; the formatter hands flat
  // keys to whichever subcommand ran, so `poisnet infer --config f` works.
  app.set_config("--config", "", "key=value file of subcommand options; flags override it");
  app.config_formatter(std::make_shared<FlatConfig>(app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  // simulate
  SimConfig sim;
  std::string sim_out = ".";
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a random network and its counts");
  simulate_cmd->fallthrough();
  simulate_cmd->add_option("--n", sim.n, "Number of variables")->capture_default_str();
  simulate_cmd->add_option("--t", sim.t, "Number of samples")->capture_default_str();
  simulate_cmd->add_option("--p", sim.er_p, "Edge probability")->capture_default_str();
  simulate_cmd->add_option("--edge-rate", sim.edge_rate, "Coupling rate")->capture_default_str();
  simulate_cmd->add_option("--base-rate", sim.base_rate, "Private rate")->capture_default_str();
  simulate_cmd->add_option("--noise-rate", sim.noise_rate, "Noise rate")->capture_default_str();
  add_seed(simulate_cmd, sim.seed)->capture_default_str();
  simulate_cmd->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // infer
  PipelineConfig pipe;
  std::string estimator = "poisson", screen = "none", forward_null = "max", infer_in, infer_out = ".";
  std::optional<std::size_t> max_parents;
  std::size_t infer_workers = default_workers();
  auto* infer_cmd = app.add_subcommand("infer", "Infer a network from a counts CSV");
  infer_cmd->fallthrough();
  infer_cmd->add_option("--input", infer_in, "Counts CSV")->required();
  infer_cmd->add_option("--out", infer_out, "Output directory")->capture_default_str();
  add_seed(infer_cmd, pipe.seed)->capture_default_str();
  infer_cmd->add_option("--alpha", pipe.inference.alpha, "Significance level")->capture_default_str();
  infer_cmd->add_option("--shuffles", pipe.inference.n_shuffles, "Shuffle replicates")
      ->capture_default_str();
  infer_cmd->add_option("--estimator", estimator, "poisson or gaussian")->capture_default_str();
  infer_cmd->add_option("--lag", pipe.inference.lag, "0 or 1")->capture_default_str();
  infer_cmd->add_option("--max-parents", max_parents, "Cap on parents per target");
  infer_cmd->add_option("--forward-null", forward_null, "max or candidate")->capture_default_str();
  infer_cmd->add_option("--min-count", pipe.min_total_count, "Keep rows with total > this")
      ->capture_default_str();
  infer_cmd->add_flag("--scale,!--no-scale", pipe.scale, "Replace rows by floor(x / mean)");
  infer_cmd->add_option("--screen", screen, "none, poisson or negbin")->capture_default_str();
  infer_cmd->add_option("--screen-alpha", pipe.screen_alpha, "Screening level")
      ->capture_default_str();
  infer_cmd->add_option("--bootstrap", pipe.screen_boot, "Screening bootstrap replicates")
      ->capture_default_str();
  infer_cmd->add_option("--workers", infer_workers, "Worker threads");

  // benchmark
  BenchmarkConfig bench;
  std::vector<std::string> methods{"poisson", "gaussian"};
  std::string bench_out = "benchmark.csv", bench_null = "max";
  bench.workers = default_workers();
  auto* bench_cmd = app.add_subcommand("benchmark", "Score inference on simulated networks");
  bench_cmd->fallthrough();
  bench_cmd->add_option("--n", bench.n, "Network sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--p", bench.p, "Edge probabilities")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--t", bench.t, "Sample sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--methods", methods, "Estimators")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--realizations", bench.realizations, "Realizations per cell")
      ->capture_default_str();
  add_seed(bench_cmd, bench.seed)->capture_default_str();
  bench_cmd->add_option("--alpha", bench.inference.alpha, "Significance level")->capture_default_str();
  bench_cmd->add_option("--shuffles", bench.inference.n_shuffles, "Shuffle replicates")
      ->capture_default_str();
  bench_cmd->add_option("--forward-null", bench_null, "max or candidate")->capture_default_str();
  bench_cmd->add_option("--workers", bench.workers, "Worker threads");
  bench_cmd->add_option("--out", bench_out, "Output CSV")->capture_default_str();

  // entropy
  EntropyArgs ent;
  auto* entropy_cmd = app.add_subcommand("entropy", "Evaluate the entropy estimators");
  entropy_cmd->add_option("--rate", ent.rate, "Poisson rate");
  entropy_cmd->add_option("--l11", ent.l11, "Private rate of X1");
  entropy_cmd->add_option("--l22", ent.l22, "Private rate of X2");
  entropy_cmd->add_option("--l12", ent.l12, "Coupling rate");
  entropy_cmd->add_option("--out", ent.out, "Write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*simulate_cmd) {
      run_simulate(sim, sim_out);
    } else if (*infer_cmd) {
      pipe.input = infer_in;
      pipe.output_dir = infer_out;
      pipe.screen = parse_screen(screen);
      pipe.inference.estimator = parse_estimator(estimator);
      pipe.inference.forward_null = parse_forward_null(forward_null);
      pipe.inference.max_parents = max_parents;
      pipe.inference.workers = infer_workers;
      run_infer(pipe);
    } else if (*bench_cmd) {
      bench.methods.clear();
      for (const auto& m : methods) bench.methods.push_back(parse_estimator(m));
      bench.inference.forward_null = parse_forward_null(bench_null);
      write_benchmark(bench_out, run_benchmark(bench));
    } else if (*entropy_cmd) {
      run_entropy(ent);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
