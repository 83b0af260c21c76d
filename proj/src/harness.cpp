#include "gcx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace gcx {

namespace {

constexpr std::uint64_t kNoiseTag = 0x6e01;
constexpr std::uint64_t kTrainTag = 0x7e41;
constexpr std::uint64_t kNodeSampleTag = 0x5a3f;

std::vector<int> default_hidden_dims(DatasetKind kind) {
  return kind == DatasetKind::BaShapes ? std::vector<int>{20, 20} : std::vector<int>{20};
}

std::vector<MethodSpec> default_methods() {
  std::vector<MethodSpec> methods;
  methods.push_back({ExplainMethod::Random, {}});
  methods.push_back({ExplainMethod::TopK, {}});
  methods.push_back({ExplainMethod::Greedy, {}});
  methods.push_back({ExplainMethod::Shapley, {}});
  methods.push_back({ExplainMethod::Banzhaf, {}});
  for (double b : {0.01, 0.05}) {
    MethodSpec spec{ExplainMethod::Banzhaf, {}};
    spec.threshold.mode = ThresholdMode::PruneRatio;
    spec.threshold.b = b;
    methods.push_back(spec);
  }
  return methods;
}

std::uint64_t node_tag(int budget, std::size_t method_index, int repeat, int node) {
  std::uint64_t t = static_cast<std::uint64_t>(budget);
  t = t * 1000003ULL + method_index;
  t = t * 1000003ULL + static_cast<std::uint64_t>(repeat);
  t = t * 1000003ULL + static_cast<std::uint64_t>(node);
  return t;
}

// Runs fn(i) for i in [0, count) across `threads` workers; results land in
// index order, so the aggregate is independent of scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct CellOutcome {
  std::vector<std::vector<Explanation>> per_repeat;
  double wall_time = 0.0;
  std::uint64_t utility_calls = 0;
  std::uint64_t pruned = 0;
  int evaluated = 0;
  int skipped = 0;
};

CellOutcome run_cell(const LabeledGraph& g, const GcnModel& model, const ExperimentConfig& cfg,
                     const std::vector<std::vector<int>>& node_samples, int budget, std::size_t method_index) {
  const MethodSpec& spec = cfg.methods[method_index];
  CellOutcome cell;
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::vector<int>& nodes = node_samples[static_cast<std::size_t>(r)];
    std::vector<std::optional<Explanation>> slot(nodes.size());
    parallel_for(static_cast<int>(nodes.size()), cfg.threads, [&](int idx) {
      ExplainerConfig ec;
      ec.method = spec.method;
      ec.budget = budget;
      ec.threshold = spec.threshold;
      ec.sample.count = cfg.coalition_count;
      ec.sample.size_mode = SamplePolicy::SizeMode::FixedSize;
      ec.sample.size = cfg.coalition_size > 0 ? cfg.coalition_size : budget;
      ec.shapley_permutations = cfg.shapley_permutations;
      ec.hops = cfg.hops;
      const int node = nodes[static_cast<std::size_t>(idx)];
      try {
        slot[static_cast<std::size_t>(idx)] =
            explain(g, model, node, ec, derive_seed(cfg.seed, node_tag(budget, method_index, r, node)));
      } catch (const GameError&) {
        // isolated node or oversized candidate set: counted, not silently dropped
      }
    });
    std::vector<Explanation> kept;
    for (auto& s : slot) {
      if (!s) {
        ++cell.skipped;
        continue;
      }
      cell.wall_time += s->wall_time_s;
      cell.utility_calls += s->utility_calls;
      cell.pruned += s->pruned_count;
      ++cell.evaluated;
      kept.push_back(std::move(*s));
    }
    cell.per_repeat.push_back(std::move(kept));
  }
  return cell;
}

ExperimentResult run_on_model(const LabeledGraph& g, const GcnModel& model, const TrainReport& report,
                              const ExperimentConfig& cfg, int coalition_count, int coalition_size) {
  ExperimentConfig local = cfg;
  local.coalition_count = coalition_count;
  local.coalition_size = coalition_size;

  std::vector<std::vector<int>> node_samples;
  const int n = g.node_count();
  const int sample_count = std::max(1, static_cast<int>(std::llround(cfg.node_sample_fraction * n)));
  for (int r = 0; r < cfg.repeats; ++r) {
    Rng rng(derive_seed(cfg.seed, kNodeSampleTag + static_cast<std::uint64_t>(r)));
    std::vector<int> nodes = rng.sample_without_replacement(n, std::min(sample_count, n));
    std::sort(nodes.begin(), nodes.end());
    node_samples.push_back(std::move(nodes));
  }

  ExperimentResult result;
  result.train_report = report;
  for (int budget : cfg.budgets) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      CellOutcome cell = run_cell(g, model, local, node_samples, budget, mi);
      ExperimentRecord rec;
      rec.dataset = dataset_kind_name(cfg.dataset.kind);
      rec.method = explain_method_name(cfg.methods[mi].method);
      rec.budget = budget;
      rec.threshold_mode = threshold_mode_name(cfg.methods[mi].threshold.mode);
      rec.threshold_b = cfg.methods[mi].threshold.b;
      rec.coalition_count = coalition_count;
      rec.coalition_size = coalition_size > 0 ? coalition_size : budget;
      bool have_any = true;
      for (const auto& r : cell.per_repeat)
        if (r.empty()) have_any = false;
      if (have_any) {
        const auto [mean, sd] = fidelity(cell.per_repeat);
        rec.fidelity_mean = mean;
        rec.fidelity_sd = sd;
      } else {
        rec.fidelity_mean = std::nan("");
        rec.fidelity_sd = std::nan("");
      }
      rec.wall_time_s = cell.wall_time;
      rec.utility_calls = cell.utility_calls;
      rec.pruned_count = cell.pruned;
      rec.nodes_evaluated = cell.evaluated;
      rec.nodes_skipped = cell.skipped;
      rec.seed = cfg.seed;
      result.total_skipped += cell.skipped;
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

struct PreparedExperiment {
  LabeledGraph graph;
  GcnModel model;
  TrainReport report;
};

PreparedExperiment prepare(const ExperimentConfig& cfg) {
  LabeledGraph g = generate(cfg.dataset);
  if (cfg.noise_ratio > 0.0) {
    Rng rng(derive_seed(cfg.seed, kNoiseTag));
    g = inject_noise_edges(g, cfg.noise_ratio, rng);
  }
  TrainConfig tc = cfg.train;
  if (tc.seed == 0) tc.seed = derive_seed(cfg.seed, kTrainTag);
  const std::vector<int> hidden = cfg.hidden_dims.empty() ? default_hidden_dims(cfg.dataset.kind) : cfg.hidden_dims;
  auto [model, report] = train(g, hidden, tc);
  return {std::move(g), std::move(model), report};
}

ExperimentConfig with_default_methods(ExperimentConfig cfg) {
  if (cfg.methods.empty()) cfg.methods = default_methods();
  if (cfg.repeats < 1) throw std::invalid_argument("run_experiment: repeats must be >= 1");
  if (cfg.node_sample_fraction <= 0.0 || cfg.node_sample_fraction > 1.0)
    throw std::invalid_argument("run_experiment: node_sample_fraction outside (0,1]");
  return cfg;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& raw) {
  const ExperimentConfig cfg = with_default_methods(raw);
  PreparedExperiment prep = prepare(cfg);
  return run_on_model(prep.graph, prep.model, prep.report, cfg, cfg.coalition_count, cfg.coalition_size);
}

ExperimentResult run_coalition_variation(const ExperimentConfig& raw, const std::vector<int>& counts,
                                         const std::vector<int>& sizes) {
  const ExperimentConfig cfg = with_default_methods(raw);
  PreparedExperiment prep = prepare(cfg);
  ExperimentResult all;
  all.train_report = prep.report;
  for (int c : counts) {
    ExperimentResult r = run_on_model(prep.graph, prep.model, prep.report, cfg, c, cfg.coalition_size);
    all.total_skipped += r.total_skipped;
    for (auto& rec : r.records) all.records.push_back(std::move(rec));
  }
  for (int s : sizes) {
    ExperimentResult r = run_on_model(prep.graph, prep.model, prep.report, cfg, cfg.coalition_count, s);
    all.total_skipped += r.total_skipped;
    for (auto& rec : r.records) all.records.push_back(std::move(rec));
  }
  return all;
}

TabulatedGame make_rank_gap_game(int n, int k, double epsilon, std::uint64_t seed, std::vector<int>* top_out) {
  if (k < 1 || k >= n) throw std::invalid_argument("make_rank_gap_game: k outside 1..n-1");
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    // Additive backbone with a wide gap at rank k, plus small pairwise
    // interactions so the estimators see real variance; everything stays in
    // [0,1] to keep the concentration bounds applicable.
    std::vector<double> base(static_cast<std::size_t>(n));
    const double high = 0.80 / k;
    for (int i = 0; i < k; ++i) base[static_cast<std::size_t>(i)] = high - 0.1 * high * i / std::max(1, k);
    for (int i = k; i < n; ++i) base[static_cast<std::size_t>(i)] = rng.uniform(0.0, 0.02);

    std::vector<double> table(std::size_t{1} << n, 0.0);
    std::vector<double> pairwise(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) pairwise[static_cast<std::size_t>(i * n + j)] = rng.uniform(-0.004, 0.004);
    for (std::size_t s = 1; s < table.size(); ++s) {
      double u = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!(s & (std::size_t{1} << i))) continue;
        u += base[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j)
          if (s & (std::size_t{1} << j)) u += pairwise[static_cast<std::size_t>(i * n + j)];
      }
      table[s] = std::clamp(u, 0.0, 1.0);
    }

    TabulatedGame game(n, std::move(table));
    const SemivalueResult exact = exact_banzhaf(game);
    std::vector<int> order = top_k(exact, n);
    const double gap = exact.values[static_cast<std::size_t>(order[static_cast<std::size_t>(k - 1)])] -
                       exact.values[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    if (gap > epsilon) {
      if (top_out) top_out->assign(order.begin(), order.begin() + k);
      game.reset_utility_calls();
      return game;
    }
  }
  throw std::runtime_error("make_rank_gap_game: could not construct the requested rank gap");
}

std::vector<SampleComplexityRow> run_sample_complexity_study(const SampleComplexityConfig& cfg) {
  std::vector<SampleComplexityRow> rows;
  for (int n : cfg.n_values) {
    std::vector<int> exact_top;
    TabulatedGame game = make_rank_gap_game(n, cfg.k, cfg.epsilon, derive_seed(cfg.seed, static_cast<std::uint64_t>(n)), &exact_top);
    const std::set<int> expected(exact_top.begin(), exact_top.end());

    SampleComplexityRow row;
    row.n = n;
    row.k = cfg.k;
    row.epsilon = cfg.epsilon;
    row.delta = cfg.delta;
    row.trials = cfg.trials;
    row.mc_budget_calls = required_samples_mc(n, cfg.epsilon, cfg.delta);
    row.msr_budget_calls = required_samples_msr(n, cfg.epsilon, cfg.delta);

    const int mc_per_player =
        static_cast<int>(std::max<std::uint64_t>(1, row.mc_budget_calls / (2ULL * static_cast<std::uint64_t>(n))));
    int mc_failures = 0, msr_failures = 0;
    std::uint64_t mc_calls = 0, msr_calls = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      SamplePolicy mc_policy;
      mc_policy.count = mc_per_player;
      mc_policy.seed = derive_seed(cfg.seed, node_tag(n, 1, t, 0));
      game.reset_utility_calls();
      const SemivalueResult mc = banzhaf_mc(game, {}, mc_policy);
      mc_calls += mc.utility_calls;
      const std::vector<int> mc_top = top_k(mc, cfg.k);
      if (std::set<int>(mc_top.begin(), mc_top.end()) != expected) ++mc_failures;

      SamplePolicy msr_policy;
      msr_policy.count = static_cast<int>(row.msr_budget_calls);
      msr_policy.seed = derive_seed(cfg.seed, node_tag(n, 2, t, 0));
      game.reset_utility_calls();
      const SemivalueResult msr = banzhaf_msr(game, {}, msr_policy);
      msr_calls += msr.utility_calls;
      const std::vector<int> msr_top = top_k(msr, cfg.k);
      if (std::set<int>(msr_top.begin(), msr_top.end()) != expected) ++msr_failures;
    }
    row.mc_failure_rate = static_cast<double>(mc_failures) / cfg.trials;
    row.msr_failure_rate = static_cast<double>(msr_failures) / cfg.trials;
    row.mc_mean_calls = static_cast<double>(mc_calls) / cfg.trials;
    row.msr_mean_calls = static_cast<double>(msr_calls) / cfg.trials;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "dataset,method,budget,threshold_mode,threshold_b,coalition_count,coalition_size,"
         "fidelity_mean,fidelity_sd,utility_calls,pruned_count,nodes_evaluated,nodes_skipped,seed\n";
  for (const ExperimentRecord& r : records) {
    out << r.dataset << ',' << r.method << ',' << r.budget << ',' << r.threshold_mode << ','
        << format_double(r.threshold_b) << ',' << r.coalition_count << ',' << r.coalition_size << ','
        << format_double(r.fidelity_mean) << ',' << format_double(r.fidelity_sd) << ',' << r.utility_calls << ','
        << r.pruned_count << ',' << r.nodes_evaluated << ',' << r.nodes_skipped << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string sample_complexity_to_csv(const std::vector<SampleComplexityRow>& rows) {
  std::ostringstream out;
  out << "n,k,epsilon,delta,trials,mc_budget_calls,msr_budget_calls,mc_failure_rate,msr_failure_rate,"
         "mc_mean_calls,msr_mean_calls\n";
  for (const SampleComplexityRow& r : rows) {
    out << r.n << ',' << r.k << ',' << format_double(r.epsilon) << ',' << format_double(r.delta) << ','
        << r.trials << ',' << r.mc_budget_calls << ',' << r.msr_budget_calls << ','
        << format_double(r.mc_failure_rate) << ',' << format_double(r.msr_failure_rate) << ','
        << format_double(r.mc_mean_calls) << ',' << format_double(r.msr_mean_calls) << '\n';
  }
  return out.str();
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_text_atomic: cannot open " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string experiment_result_to_json(const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["note"] = "wall_time_s is measured and varies run to run; all other fields are reproducible from (config, seed)";
  j["train"] = {{"train_accuracy", result.train_report.train_accuracy},
                {"test_accuracy", result.train_report.test_accuracy},
                {"final_loss", result.train_report.final_loss}};
  j["total_skipped"] = result.total_skipped;
  auto rows = nlohmann::ordered_json::array();
  for (const ExperimentRecord& r : result.records) {
    rows.push_back({{"dataset", r.dataset},
                    {"method", r.method},
                    {"budget", r.budget},
                    {"threshold_mode", r.threshold_mode},
                    {"threshold_b", r.threshold_b},
                    {"coalition_count", r.coalition_count},
                    {"coalition_size", r.coalition_size},
                    {"fidelity_mean", r.fidelity_mean},
                    {"fidelity_sd", r.fidelity_sd},
                    {"wall_time_s", r.wall_time_s},
                    {"utility_calls", r.utility_calls},
                    {"pruned_count", r.pruned_count},
                    {"nodes_evaluated", r.nodes_evaluated},
                    {"nodes_skipped", r.nodes_skipped},
                    {"seed", r.seed}});
  }
  j["records"] = std::move(rows);
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    cfg.dataset.kind = dataset_kind_from_name(d.value("kind", std::string("tree-cycles")));
    cfg.dataset.base_size = d.value("base_size", 0);
    cfg.dataset.motif_count = d.value("motif_count", 0);
    cfg.dataset.extra_edge_fraction = d.value("extra_edge_fraction", 0.1);
    cfg.dataset.feature_dim = d.value("feature_dim", 10);
    cfg.dataset.seed = d.value("seed", std::uint64_t{0});
  }
  cfg.budgets = j.value("budgets", std::vector<int>{3});
  if (j.contains("methods")) {
    for (const auto& m : j.at("methods")) {
      MethodSpec spec;
      spec.method = explain_method_from_name(m.at("method").get<std::string>());
      if (m.contains("threshold")) {
        const auto& t = m.at("threshold");
        spec.threshold.mode = threshold_mode_from_name(t.value("mode", std::string("none")));
        spec.threshold.b = t.value("b", 0.0);
        spec.threshold.absolute = t.value("absolute", false);
        spec.threshold.prune_stop_fraction = t.value("prune_stop_fraction", 0.25);
      }
      cfg.methods.push_back(spec);
    }
  }
  cfg.node_sample_fraction = j.value("node_sample_fraction", 0.5);
  cfg.repeats = j.value("repeats", 3);
  cfg.noise_ratio = j.value("noise_ratio", 0.0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.shapley_permutations = j.value("shapley_permutations", 50);
  cfg.coalition_count = j.value("coalition_count", 1500);
  cfg.coalition_size = j.value("coalition_size", 0);
  cfg.hops = j.value("hops", -1);
  cfg.hidden_dims = j.value("hidden_dims", std::vector<int>{});
  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.epochs = t.value("epochs", 1000);
    cfg.train.learning_rate = t.value("learning_rate", 0.01);
    cfg.train.weight_decay = t.value("weight_decay", 5e-4);
    cfg.train.train_fraction = t.value("train_fraction", 0.8);
    cfg.train.seed = t.value("seed", std::uint64_t{0});
  }
  cfg.threads = j.value("threads", 1);
  return cfg;
}

}  // namespace gcx
