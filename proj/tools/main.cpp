#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gcx/datasets.hpp"
#include "gcx/explain.hpp"
#include "gcx/gcn.hpp"
#include "gcx/harness.hpp"
#include "gcx/robustness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

gcx::ThresholdPolicy make_policy(const std::string& mode, double b, double prune_stop) {
  gcx::ThresholdPolicy policy;
  policy.mode = gcx::threshold_mode_from_name(mode);
  policy.b = b;
  policy.prune_stop_fraction = prune_stop;
  return policy;
}

int run(int argc, char** argv) {
  CLI::App app{"Game-theoretic counterfactual explanations for GCN node classification"};
  app.require_subcommand(1);

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate a synthetic benchmark graph as JSON");
  std::string gen_kind = "tree-cycles", gen_out = "graph.json";
  gcx::DatasetSpec spec;
  gen->add_option("--kind", gen_kind, "ba-shapes | tree-cycles | tree-grid");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--base-size", spec.base_size, "base graph size (0 = dataset default)");
  gen->add_option("--motif-count", spec.motif_count, "number of motifs (0 = dataset default)");
  gen->add_option("--extra-edge-fraction", spec.extra_edge_fraction, "extra edges as a fraction of node count");
  gen->add_option("--feature-dim", spec.feature_dim, "feature dimension (constant-ones features)");
  gen->add_option("--out", gen_out, "output path")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a GCN on a graph JSON file");
  std::string tr_graph, tr_out = "model.json";
  int tr_layers = 2;
  std::vector<int> tr_hidden;
  gcx::TrainConfig tr_cfg;
  tr->add_option("--graph", tr_graph, "graph JSON")->required();
  tr->add_option("--layers", tr_layers, "GCN layer count (hidden dims default to 20 each)");
  tr->add_option("--hidden", tr_hidden, "explicit hidden dims (overrides --layers)");
  tr->add_option("--epochs", tr_cfg.epochs);
  tr->add_option("--lr", tr_cfg.learning_rate);
  tr->add_option("--weight-decay", tr_cfg.weight_decay);
  tr->add_option("--train-fraction", tr_cfg.train_fraction);
  tr->add_option("--seed", tr_cfg.seed);
  tr->add_option("--out", tr_out, "model output path");

  // explain
  auto* ex = app.add_subcommand("explain", "Explain one node and print the explanation JSON");
  std::string ex_graph, ex_model, ex_method = "banzhaf", ex_tmode = "none";
  int ex_node = 0;
  std::uint64_t ex_seed = 0;
  double ex_b = 0.0, ex_prune_stop = 0.25;
  gcx::ExplainerConfig ex_cfg;
  ex->add_option("--graph", ex_graph)->required();
  ex->add_option("--model", ex_model)->required();
  ex->add_option("--node", ex_node)->required();
  ex->add_option("--method", ex_method, "random | topk | greedy | shapley | banzhaf");
  ex->add_option("--budget", ex_cfg.budget, "explanation size k");
  ex->add_option("--threshold-mode", ex_tmode, "none | hinge | prune");
  ex->add_option("--threshold", ex_b, "threshold b (ratio of the base class probability)");
  ex->add_option("--prune-stop-fraction", ex_prune_stop, "stop sampling once pruned >= fraction * coalitions");
  ex->add_option("--coalitions", ex_cfg.sample.count, "sampled coalitions for Banzhaf");
  ex->add_option("--coalition-size", ex_cfg.sample.size, "coalition size (0 = budget)");
  ex->add_option("--perms", ex_cfg.shapley_permutations, "permutations for Shapley");
  ex->add_option("--hops", ex_cfg.hops, "candidate hop radius (-1 = model layers)");
  ex->add_option("--seed", ex_seed);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run the fidelity/time experiment grid and write CSV + JSON");
  std::string exp_config, exp_dataset, exp_out = "experiment.csv", exp_json;
  std::vector<int> exp_budgets;
  std::uint64_t exp_seed = 0;
  bool exp_seed_set = false, exp_allow_skips = false;
  double exp_noise = -1.0, exp_fraction = -1.0;
  int exp_repeats = -1, exp_threads = 0;
  exp->add_option("--config", exp_config, "experiment config JSON file");
  exp->add_option("--dataset", exp_dataset, "dataset kind override");
  exp->add_option("--budgets", exp_budgets, "budget list override");
  exp->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { exp_seed = s; exp_seed_set = true; });
  exp->add_option("--noise-ratio", exp_noise, "noise edge ratio override");
  exp->add_option("--node-fraction", exp_fraction, "node sample fraction override");
  exp->add_option("--repeats", exp_repeats, "repeat count override");
  exp->add_option("--threads", exp_threads, "worker threads (results identical for any value)");
  exp->add_flag("--allow-skips", exp_allow_skips, "exit 0 even when some nodes could not be explained");
  exp->add_option("--out", exp_out, "CSV output path");
  exp->add_option("--json", exp_json, "JSON mirror path (default: CSV path with .json)");

  // coalition-sweep
  auto* sweep = app.add_subcommand("coalition-sweep", "Sweep coalition count and size for the Banzhaf estimator");
  std::string sw_config, sw_out = "sweep.csv", sw_json;
  std::vector<int> sw_counts, sw_sizes;
  std::uint64_t sw_seed = 0;
  bool sw_seed_set = false, sw_allow_skips = false;
  int sw_threads = 0;
  sweep->add_option("--config", sw_config, "experiment config JSON file");
  sweep->add_option("--counts", sw_counts, "coalition counts to sweep");
  sweep->add_option("--sizes", sw_sizes, "coalition sizes to sweep");
  sweep->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { sw_seed = s; sw_seed_set = true; });
  sweep->add_option("--threads", sw_threads);
  sweep->add_flag("--allow-skips", sw_allow_skips);
  sweep->add_option("--out", sw_out, "CSV output path");
  sweep->add_option("--json", sw_json, "JSON mirror path");

  // sample-complexity
  auto* sc = app.add_subcommand("sample-complexity", "Empirical top-k failure rates at the lemma budgets");
  gcx::SampleComplexityConfig sc_cfg;
  std::string sc_out;
  sc->add_option("--n", sc_cfg.n_values, "player counts");
  sc->add_option("--epsilon", sc_cfg.epsilon);
  sc->add_option("--delta", sc_cfg.delta);
  sc->add_option("--k", sc_cfg.k);
  sc->add_option("--trials", sc_cfg.trials);
  sc->add_option("--seed", sc_cfg.seed);
  sc->add_option("--out", sc_out, "CSV output path (stdout if omitted)");

  // safety-margin
  auto* sm = app.add_subcommand("safety-margin", "Closed-form and brute-force safety margins");
  int sm_n = 4;
  double sm_tau = 1.0, sm_b = 0.0;
  std::string sm_weights = "banzhaf", sm_tmode;
  std::uint64_t sm_seed = 0;
  sm->add_option("--n", sm_n, "player count (brute force needs n <= 5)");
  sm->add_option("--tau", sm_tau, "distinguishability level");
  sm->add_option("--weights", sm_weights, "banzhaf | shapley");
  sm->add_option("--threshold", sm_b, "hinge threshold (0 = none)");
  sm->add_option("--threshold-mode", sm_tmode, "force 'hinge' or 'none' regardless of --threshold");
  sm->add_option("--seed", sm_seed, "search seed");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    spec.kind = gcx::dataset_kind_from_name(gen_kind);
    const gcx::LabeledGraph g = gcx::generate(spec);
    gcx::save_graph(g, gen_out);
    std::cout << "wrote " << gen_out << " (" << g.node_count() << " nodes, " << g.edge_count() << " edges)\n";
    return 0;
  }

  if (tr->parsed()) {
    const gcx::LabeledGraph g = gcx::load_graph(tr_graph);
    std::vector<int> hidden = tr_hidden;
    if (hidden.empty()) hidden.assign(static_cast<std::size_t>(std::max(1, tr_layers - 1)), 20);
    const auto [model, report] = gcx::train(g, hidden, tr_cfg);
    gcx::save_model(model, tr_out);
    nlohmann::ordered_json j;
    j["model"] = tr_out;
    j["train_accuracy"] = report.train_accuracy;
    j["test_accuracy"] = report.test_accuracy;
    j["final_loss"] = report.final_loss;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (ex->parsed()) {
    const gcx::LabeledGraph g = gcx::load_graph(ex_graph);
    const gcx::GcnModel model = gcx::load_model(ex_model);
    ex_cfg.method = gcx::explain_method_from_name(ex_method);
    ex_cfg.threshold = make_policy(ex_tmode, ex_b, ex_prune_stop);
    ex_cfg.sample.size_mode = gcx::SamplePolicy::SizeMode::FixedSize;
    if (ex_cfg.sample.size == 0) ex_cfg.sample.size = ex_cfg.budget;
    const gcx::Explanation e = gcx::explain(g, model, ex_node, ex_cfg, ex_seed);
    nlohmann::ordered_json j;
    j["node"] = e.node;
    auto edges = nlohmann::ordered_json::array();
    for (const gcx::EdgeId& edge : e.edges) edges.push_back({edge.u, edge.v});
    j["edges"] = std::move(edges);
    j["flipped"] = e.flipped;
    j["candidate_count"] = e.candidate_count;
    j["budget_clamped"] = e.budget_clamped;
    j["utility_calls"] = e.utility_calls;
    j["pruned_count"] = e.pruned_count;
    j["wall_time_s"] = e.wall_time_s;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (exp->parsed() || sweep->parsed()) {
    const bool is_sweep = sweep->parsed();
    const std::string config_path = is_sweep ? sw_config : exp_config;
    gcx::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = gcx::experiment_config_from_json(read_file(config_path));
    if (is_sweep) {
      if (sw_seed_set) cfg.seed = sw_seed;
      if (sw_threads > 0) cfg.threads = sw_threads;
    } else {
      if (!exp_dataset.empty()) cfg.dataset.kind = gcx::dataset_kind_from_name(exp_dataset);
      if (!exp_budgets.empty()) cfg.budgets = exp_budgets;
      if (exp_seed_set) cfg.seed = exp_seed;
      if (exp_noise >= 0.0) cfg.noise_ratio = exp_noise;
      if (exp_fraction > 0.0) cfg.node_sample_fraction = exp_fraction;
      if (exp_repeats > 0) cfg.repeats = exp_repeats;
      if (exp_threads > 0) cfg.threads = exp_threads;
    }
    if (cfg.dataset.seed == 0) cfg.dataset.seed = gcx::derive_seed(cfg.seed, 0xd5);

    gcx::ExperimentResult result;
    if (is_sweep) {
      if (sw_counts.empty() && sw_sizes.empty()) sw_counts = {500, 1000, 1500, 2000};
      result = gcx::run_coalition_variation(cfg, sw_counts, sw_sizes);
    } else {
      result = gcx::run_experiment(cfg);
    }
    const std::string out_path = is_sweep ? sw_out : exp_out;
    std::string json_path = is_sweep ? sw_json : exp_json;
    if (json_path.empty()) json_path = out_path + ".json";
    gcx::write_text_atomic(out_path, gcx::records_to_csv(result.records));
    gcx::write_text_atomic(json_path, gcx::experiment_result_to_json(result));
    std::cout << "wrote " << out_path << " and " << json_path << " (test accuracy "
              << result.train_report.test_accuracy << ", skipped nodes " << result.total_skipped << ")\n";
    const bool allow = is_sweep ? sw_allow_skips : exp_allow_skips;
    if (result.total_skipped > 0 && !allow) {
      std::cerr << result.total_skipped << " node explanations were skipped; pass --allow-skips to accept\n";
      return 1;
    }
    return 0;
  }

  if (sc->parsed()) {
    const auto rows = gcx::run_sample_complexity_study(sc_cfg);
    const std::string csv = gcx::sample_complexity_to_csv(rows);
    if (sc_out.empty()) {
      std::cout << csv;
    } else {
      gcx::write_text_atomic(sc_out, csv);
      std::cout << "wrote " << sc_out << "\n";
    }
    return 0;
  }

  if (sm->parsed()) {
    const gcx::WeightFunction w = sm_weights == "shapley" ? gcx::shapley_weights(sm_n) : gcx::banzhaf_weights(sm_n);
    gcx::ThresholdPolicy policy;
    const bool hinge = sm_tmode.empty() ? sm_b > 0.0 : sm_tmode == "hinge";
    if (hinge) {
      policy.mode = gcx::ThresholdMode::Hinge;
      policy.b = sm_b;
      policy.absolute = true;
    }
    gcx::SafetyMarginSearchConfig search;
    search.seed = sm_seed;
    const gcx::RobustnessReport report = gcx::brute_force_safety_margin(sm_n, sm_tau, w, policy, search);
    nlohmann::ordered_json j;
    j["n"] = sm_n;
    j["tau"] = sm_tau;
    j["weights"] = w.name;
    j["thresholded"] = report.thresholded;
    j["closed_form"] = gcx::safety_margin_closed_form(sm_n, sm_tau, w);
    j["brute_force"] = report.epsilon_found;
    j["converged"] = report.converged;
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
