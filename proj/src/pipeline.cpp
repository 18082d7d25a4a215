#include "poisnet/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "poisnet/graph.hpp"
#include "poisnet/parallel.hpp"

namespace poisnet {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr std::uint64_t kScreenStream = 0x7363726eULL;
constexpr std::uint64_t kGraphStream = 0x67726170ULL;
constexpr std::uint64_t kDataStream = 0x64617461ULL;
constexpr std::uint64_t kInferStream = 0x696e6672ULL;

std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::int64_t> parse_integer(const std::string& s) {
  std::int64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

bool looks_negative(const std::string& s) {
  std::string rest;
  if (s.rfind("-", 0) == 0)
    rest = s.substr(1);
  else if (s.rfind("\xe2\x88\x92", 0) == 0)  // U+2212 minus sign
    rest = s.substr(3);
  else
    return false;
  if (rest.empty()) return false;
  char* end = nullptr;
  std::strtod(rest.c_str(), &end);
  return end == rest.c_str() + rest.size();
}

std::string where(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

std::uint64_t double_bits(double v) {
  std::uint64_t b = 0;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

}  // namespace

CountMatrix load_counts(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());

  std::vector<std::string> labels;
  std::vector<Count> values;
  std::set<std::string> seen;
  std::optional<std::size_t> width;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xef\xbb\xbf", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() < 2)
      throw InputError("line " + std::to_string(lineno) + ": expected a label and at least one count");
    const std::size_t t = fields.size() - 1;
    if (width && *width != t)
      throw InputError("line " + std::to_string(lineno) + ": ragged row, " + std::to_string(t) +
                       " counts where " + std::to_string(*width) + " were expected");
    if (first) {
      first = false;
      width = t;
      const bool header = std::any_of(fields.begin() + 1, fields.end(), [](const std::string& f) {
        return !parse_integer(f).has_value() && !looks_negative(f);
      });
      if (header) continue;
    }
    if (fields[0].empty()) throw InputError(where(lineno, 1) + ": empty variable label");
    if (!seen.insert(fields[0]).second)
      throw InputError("line " + std::to_string(lineno) + ": duplicate label '" + fields[0] + "'");
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto v = parse_integer(fields[c]);
      if (!v) {
        if (looks_negative(fields[c]))
          throw InputError(where(lineno, c + 1) + ": negative count '" + fields[c] + "'");
        throw InputError(where(lineno, c + 1) + ": malformed count '" + fields[c] + "'");
      }
      if (*v < 0) throw InputError(where(lineno, c + 1) + ": negative count '" + fields[c] + "'");
      values.push_back(*v);
    }
    labels.push_back(fields[0]);
  }
  if (labels.empty()) throw InputError(path.string() + ": no data rows");
  const std::size_t n = labels.size();
  return CountMatrix(n, *width, std::move(values), std::move(labels));
}

void write_counts(const fs::path& path, const CountMatrix& counts) {
  std::ostringstream out;
  out << "variable";
  for (std::size_t s = 0; s < counts.samples(); ++s) out << ",s" << (s + 1);
  out << '\n';
  for (std::size_t i = 0; i < counts.variables(); ++i) {
    out << counts.label(i);
    for (auto v : counts.row(i)) out << ',' << v;
    out << '\n';
  }
  write_text(path, out.str());
}

std::string to_string(Screen s) {
  switch (s) {
    case Screen::none: return "none";
    case Screen::poisson: return "poisson";
    case Screen::negbin: return "negbin";
  }
  return "none";
}

Screen parse_screen(const std::string& s) {
  if (s == "none") return Screen::none;
  if (s == "poisson") return Screen::poisson;
  if (s == "negbin") return Screen::negbin;
  throw std::invalid_argument("unknown screen '" + s + "' (expected none, poisson or negbin)");
}

void PipelineConfig::validate() const {
  if (min_total_count < 0) throw std::invalid_argument("min_total_count must be >= 0");
  if (!(screen_alpha > 0.0 && screen_alpha < 1.0))
    throw std::invalid_argument("screen alpha must lie in (0, 1)");
  inference.validate();
}

Preprocessed preprocess(const CountMatrix& counts, const PipelineConfig& config) {
  config.validate();
  Preprocessed out;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < counts.variables(); ++i) {
    __int128 total = 0;
    for (auto v : counts.row(i)) total += v;
    if (total > config.min_total_count)
      keep.push_back(i);
    else
      out.dropped.push_back(counts.label(i));
  }
  if (keep.empty())
    throw InputError("no variable has more than " + std::to_string(config.min_total_count) +
                     " total counts");
  out.counts = counts.select_rows(keep);

  if (config.scale) {
    // floor(x / mean) = floor(x * t / total), in exact integer arithmetic.
    const std::size_t t = out.counts.samples();
    for (std::size_t i = 0; i < out.counts.variables(); ++i) {
      __int128 total = 0;
      for (auto v : out.counts.row(i)) total += v;
      for (std::size_t s = 0; s < t; ++s) {
        const __int128 x = out.counts(i, s);
        out.counts.set(i, s, static_cast<Count>(x * static_cast<__int128>(t) / total));
      }
    }
  }

  if (config.screen != Screen::none) {
    for (std::size_t i = 0; i < out.counts.variables(); ++i) {
      Rng rng = Rng::substream(config.seed, {kScreenStream, Rng::hash_label(out.counts.label(i))});
      ScreenRecord rec;
      rec.label = out.counts.label(i);
      rec.result = config.screen == Screen::poisson
                       ? ks_test_poisson(out.counts.row(i), rng, config.screen_boot)
                       : ks_test_negbin(out.counts.row(i), rng, config.screen_boot);
      rec.flagged = rec.result.p_value <= config.screen_alpha;
      out.screening.push_back(std::move(rec));
    }
  }
  return out;
}

namespace {

ordered_json fit_json(const DistributionFit& fit) {
  ordered_json j;
  j["family"] = to_string(fit.family);
  j["lambda"] = fit.lambda;
  if (fit.family == Family::negative_binomial) j["r"] = fit.r;
  return j;
}

template <class T>
ordered_json top_table(const std::vector<std::size_t>& order, const std::vector<T>& scores,
                       const CountMatrix& counts) {
  ordered_json rows = ordered_json::array();
  for (std::size_t k = 0; k < order.size() && k < 20; ++k) {
    const auto id = order[k];
    rows.push_back({{"rank", k + 1}, {"variable", counts.label(id)}, {"score", scores[id]}});
  }
  return rows;
}

}  // namespace

void run_infer(const PipelineConfig& config) {
  config.validate();
  const CountMatrix raw = load_counts(config.input);
  const Preprocessed pre = preprocess(raw, config);
  const CountMatrix& counts = pre.counts;
  if (counts.variables() < 2) throw InputError("inference needs at least 2 variables after filtering");
  if (counts.samples() < 3) throw InputError("inference needs at least 3 samples");

  InferenceConfig icfg = config.inference;
  icfg.seed = config.seed;
  const InferenceResult result = infer_network(counts, icfg);

  ensure_dir(config.output_dir);
  std::ostringstream edges;
  edges << "source,target,cmi_nats,p_value,order_added\n";
  for (const auto& e : result.edges)
    edges << counts.label(e.source) << ',' << counts.label(e.target) << ','
          << format_number(e.cmi) << ',' << format_number(e.p_value) << ',' << e.order_added
          << '\n';
  write_text(config.output_dir / "edges.csv", edges.str());

  const auto components = weakly_connected_components(result.adjacency);
  const CentralityReport cent = centrality_report(result.adjacency, icfg.workers);

  ordered_json report;
  ordered_json cfg;
  cfg["input"] = config.input.string();
  cfg["min_total_count"] = config.min_total_count;
  cfg["scale"] = config.scale;
  cfg["screen"] = to_string(config.screen);
  cfg["screen_alpha"] = config.screen_alpha;
  cfg["screen_bootstrap"] = config.screen_boot;
  cfg["estimator"] = to_string(icfg.estimator);
  cfg["alpha"] = icfg.alpha;
  cfg["shuffles"] = icfg.n_shuffles;
  cfg["lag"] = icfg.lag;
  cfg["forward_null"] = to_string(icfg.forward_null);
  if (icfg.max_parents)
    cfg["max_parents"] = *icfg.max_parents;
  else
    cfg["max_parents"] = nullptr;
  report["config"] = cfg;
  report["seed"] = config.seed;

  ordered_json prep;
  prep["order"] = {"filter", "scale", "screen"};
  prep["input_variables"] = raw.variables();
  prep["samples"] = raw.samples();
  prep["kept_variables"] = counts.variables();
  prep["dropped"] = pre.dropped;
  report["preprocessing"] = prep;

  ordered_json screening;
  screening["test"] = to_string(config.screen);
  std::size_t flagged = 0;
  ordered_json rows = ordered_json::array();
  for (const auto& rec : pre.screening) {
    flagged += rec.flagged ? 1 : 0;
    rows.push_back({{"variable", rec.label},
                    {"statistic", rec.result.statistic},
                    {"p_value", rec.result.p_value},
                    {"fit", fit_json(rec.result.fit)},
                    {"flagged", rec.flagged}});
  }
  screening["tested"] = pre.screening.size();
  screening["flagged"] = flagged;
  screening["rows"] = rows;
  report["screening"] = screening;

  ordered_json network;
  network["nodes"] = counts.variables();
  network["edges"] = result.edges.size();
  std::vector<std::size_t> sizes;
  for (const auto& c : components) sizes.push_back(c.size());
  network["component_sizes"] = sizes;
  network["lwcc_size"] = sizes.empty() ? 0 : sizes.front();
  report["network"] = network;

  ordered_json centrality;
  centrality["eigenvector_convention"] = "out-influence on the LWCC, max-normalized";
  if (cent.eigenvector) {
    centrality["eigenvalue"] = cent.eigenvector->eigenvalue;
    centrality["eigenvector_iterations"] = cent.eigenvector->iterations;
  } else {
    centrality["eigenvalue"] = nullptr;
    centrality["eigenvector_error"] = cent.eigenvector_error;
  }
  ordered_json nodes = ordered_json::array();
  for (std::size_t i = 0; i < counts.variables(); ++i) {
    ordered_json node;
    node["variable"] = counts.label(i);
    node["out_degree"] = cent.out_degree[i];
    node["betweenness"] = cent.betweenness[i];
    if (cent.eigenvector)
      node["eigenvector"] = cent.eigenvector->scores[i];
    else
      node["eigenvector"] = nullptr;
    nodes.push_back(node);
  }
  centrality["nodes"] = nodes;
  report["centrality"] = centrality;

  ordered_json top;
  top["out_degree"] = top_table(cent.rank_out_degree, cent.out_degree, counts);
  top["betweenness"] = top_table(cent.rank_betweenness, cent.betweenness, counts);
  top["eigenvector"] = cent.eigenvector
                           ? top_table(cent.rank_eigenvector, cent.eigenvector->scores, counts)
                           : ordered_json::array();
  report["top20"] = top;

  write_text(config.output_dir / "report.json", report.dump(2) + "\n");
}

void BenchmarkConfig::validate() const {
  if (n.empty() || p.empty() || t.empty() || methods.empty())
    throw std::invalid_argument("benchmark grid is empty");
  if (realizations == 0) throw std::invalid_argument("realizations must be positive");
  for (auto v : n)
    if (v < 2) throw std::invalid_argument("benchmark n must be at least 2");
  for (auto v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("benchmark p must lie in [0, 1]");
  for (auto v : t)
    if (v < 3) throw std::invalid_argument("benchmark t must be at least 3");
  inference.validate();
}

std::vector<BenchmarkCell> run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  struct Score {
    bool scored = false;
    std::vector<EdgeRates> by_method;
  };
  // scores[n][p][t][r]
  std::vector<std::vector<std::vector<std::vector<Score>>>> scores(config.n.size());
  for (std::size_t a = 0; a < config.n.size(); ++a) {
    scores[a].resize(config.p.size());
    for (std::size_t b = 0; b < config.p.size(); ++b) {
      scores[a][b].resize(config.t.size());
      for (std::size_t c = 0; c < config.t.size(); ++c) {
        auto& slot = scores[a][b][c];
        slot.resize(config.realizations);
        const std::size_t n = config.n[a];
        const double p = config.p[b];
        const std::size_t t = config.t[c];
        parallel_for(config.realizations, config.workers, [&](std::size_t r) {
          Rng grng = Rng::substream(config.seed, {kGraphStream, n, double_bits(p), r});
          const Adjacency truth = er_graph(n, p, grng);
          if (truth.edge_count() == 0) return;
          SimConfig sim = config.sim;
          sim.n = n;
          sim.t = t;
          sim.er_p = p;
          sim.seed = Rng::substream(config.seed, {kDataStream, n, double_bits(p), t, r}).next();
          const CountMatrix data = simulate(sim, truth);
          InferenceConfig icfg = config.inference;
          icfg.workers = 1;
          icfg.seed = Rng::substream(config.seed, {kInferStream, n, double_bits(p), t, r}).next();
          Score s;
          s.scored = true;
          for (auto m : config.methods) {
            icfg.estimator = m;
            s.by_method.push_back(tpr_fpr(truth, infer_network(data, icfg).adjacency));
          }
          slot[r] = std::move(s);
        });
      }
    }
  }

  std::vector<BenchmarkCell> cells;
  for (std::size_t m = 0; m < config.methods.size(); ++m)
    for (std::size_t a = 0; a < config.n.size(); ++a)
      for (std::size_t b = 0; b < config.p.size(); ++b)
        for (std::size_t c = 0; c < config.t.size(); ++c) {
          BenchmarkCell cell;
          cell.method = config.methods[m];
          cell.n = config.n[a];
          cell.p = config.p[b];
          cell.t = config.t[c];
          std::vector<double> tpr, fpr;
          for (const auto& s : scores[a][b][c]) {
            if (!s.scored) continue;
            tpr.push_back(s.by_method[m].tpr);
            fpr.push_back(s.by_method[m].fpr);
          }
          cell.realizations = tpr.size();
          if (tpr.empty()) {
            cell.error = "no realization has a true edge; TPR and FPR are undefined";
            cells.push_back(cell);
            continue;
          }
          auto mean_se = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (auto x : v) mean += x;
            mean /= static_cast<double>(v.size());
            if (v.size() < 2) return std::pair{mean, std::nan("")};
            double ss = 0.0;
            for (auto x : v) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            return std::pair{mean, sd / std::sqrt(static_cast<double>(v.size()))};
          };
          std::tie(cell.tpr_mean, cell.tpr_se) = mean_se(tpr);
          std::tie(cell.fpr_mean, cell.fpr_se) = mean_se(fpr);
          cells.push_back(cell);
        }
  return cells;
}

void write_benchmark(const fs::path& path, const std::vector<BenchmarkCell>& cells) {
  std::ostringstream ok, bad;
  ok << "method,n,p,t,tpr_mean,tpr_se,fpr_mean,fpr_se,realizations\n";
  bad << "method,n,p,t,error\n";
  for (const auto& c : cells) {
    const std::string key = to_string(c.method) + ',' + std::to_string(c.n) + ',' +
                            short_number(c.p) + ',' + std::to_string(c.t);
    if (!c.error.empty()) {
      bad << key << ',' << c.error << '\n';
      continue;
    }
    ok << key << ',' << short_number(c.tpr_mean) << ',' << short_number(c.tpr_se) << ','
       << short_number(c.fpr_mean) << ',' << short_number(c.fpr_se) << ',' << c.realizations
       << '\n';
  }
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_text(path, ok.str());
  write_text(path.parent_path() / "benchmark_errors.csv", bad.str());
}

void run_simulate(const SimConfig& config, const fs::path& output_dir) {
  config.validate();
  Rng grng = Rng::substream(config.seed, {kGraphStream});
  const Adjacency truth = er_graph(config.n, config.er_p, grng);
  const CountMatrix counts = simulate(config, truth);
  ensure_dir(output_dir);
  write_counts(output_dir / "counts.csv", counts);
  std::ostringstream out;
  out << "source,target\n";
  for (const auto& [i, j] : truth.edges())
    out << counts.label(i) << ',' << counts.label(j) << '\n';
  write_text(output_dir / "truth_edges.csv", out.str());
}

}  // namespace poisnet
