#include "trainperf/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "trainperf/dataset.hpp"
#include "trainperf/errors.hpp"
#include "trainperf/features.hpp"
#include "trainperf/forest.hpp"
#include "trainperf/network.hpp"
#include "trainperf/predictor.hpp"
#include "trainperf/search.hpp"
#include "trainperf/synthetic.hpp"

namespace trainperf::cli {

namespace {

using nlohmann::ordered_json;

struct Globals {
  std::uint64_t seed = 0;
  bool verbose = false;
  std::string format = "text";
  bool json() const { return format == "json"; }
};

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const PruneError*>(&e)) return "prune";
  if (dynamic_cast<const PlanError*>(&e)) return "plan";
  if (dynamic_cast<const CsvError*>(&e)) return "csv";
  if (dynamic_cast<const JoinError*>(&e)) return "join";
  if (dynamic_cast<const FitError*>(&e)) return "fit";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const VersionError*>(&e)) return "version";
  if (dynamic_cast<const ChecksumError*>(&e)) return "checksum";
  if (dynamic_cast<const EvalError*>(&e)) return "eval";
  if (dynamic_cast<const InfeasibleError*>(&e)) return "infeasible";
  return "internal";
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    T value{};
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size()) {
      throw CLI::ValidationError(std::string(what), "'" + item + "' is not a number");
    }
    out.push_back(value);
  }
  if (out.empty()) throw CLI::ValidationError(std::string(what), "empty list");
  return out;
}

std::vector<int> parse_levels(const std::string& text, const std::vector<int>& preset, const char* what) {
  if (text == "default") return preset;
  return parse_list<int>(text, what);
}

std::vector<std::int64_t> parse_batch_sizes(const std::string& text) {
  if (text == "default") return default_batch_sizes();
  return parse_list<std::int64_t>(text, "--batch-sizes");
}

std::vector<NetworkSpec> load_networks(const std::vector<std::string>& paths) {
  std::vector<NetworkSpec> nets;
  for (const auto& p : paths) nets.push_back(load_network(p));
  return nets;
}

AttributeModelSet load_models(const std::vector<std::string>& paths) {
  AttributeModelSet set;
  for (const auto& p : paths) set.add(load(p));
  return set;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("failed writing " + path);
}

/// Sends `text` to the file if one was named, otherwise to stdout.
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string plan_json(const ProfilingPlan& plan) {
  ordered_json doc;
  doc["train_levels"] = plan.train_levels;
  doc["test_levels"] = plan.test_levels;
  doc["batch_sizes"] = plan.batch_sizes;
  ordered_json entries = ordered_json::array();
  for (const auto& e : plan.entries) {
    entries.push_back({{"network", e.network}, {"pruning_level", e.pruning_level}, {"strategy", e.strategy},
                       {"seed", e.seed}, {"bs", e.bs}});
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

FeaturesPerSplit parse_features_per_split(const std::string& text) {
  if (text == "all") return {};
  if (text == "sqrt") return {FeaturesPerSplit::Kind::Sqrt, 1.0};
  double fraction = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), fraction);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !(fraction > 0.0 && fraction <= 1.0)) {
    throw CLI::ValidationError("--features-per-split", "expected all, sqrt, or a fraction in (0, 1]");
  }
  return {FeaturesPerSplit::Kind::Fraction, fraction};
}

WinogradLayout parse_winograd(const std::string& text) {
  return text == "split" ? WinogradLayout::Split : WinogradLayout::Summed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Analytical feature extraction and random-forest prediction of CNN training memory and latency"};
  app.name("trainperf");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_flag("-v,--verbose", g.verbose, "Progress notes on stderr");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "json"}));

  // features
  std::string f_network, f_mode = "training", f_winograd = "summed";
  std::int64_t f_bs = 1;
  auto* features = app.add_subcommand("features", "Feature vector of a network at one batch size");
  features->add_option("network", f_network, "Network JSON")->required()->check(CLI::ExistingFile);
  features->add_option("--bs", f_bs, "Batch size")->required();
  features->add_option("--mode", f_mode)->check(CLI::IsMember({"training", "inference"}));
  features->add_option("--winograd", f_winograd)->check(CLI::IsMember({"summed", "split"}));

  // plan
  std::vector<std::string> p_networks;
  std::string p_train, p_test, p_bs = "default", p_strategies = "uniform_random", p_seeds, p_out;
  auto* plan = app.add_subcommand("plan", "Profiling plan CSV for the measurement harness");
  plan->add_option("networks", p_networks, "Network JSON files")->required()->check(CLI::ExistingFile);
  plan->add_option("--train-levels", p_train, "'default' or comma-separated percentages");
  plan->add_option("--test-levels", p_test, "'default' or comma-separated percentages");
  plan->add_option("--batch-sizes", p_bs, "'default' or comma-separated batch sizes");
  plan->add_option("--strategies", p_strategies, "Comma-separated pruning strategies");
  plan->add_option("--seeds", p_seeds, "Comma-separated pruning seeds (default: --seed)");
  plan->add_option("-o,--out", p_out, "Output path (default stdout)");

  // prune
  std::string r_network, r_strategy = "uniform_random", r_out;
  double r_level = 0.0;
  auto* prune = app.add_subcommand("prune", "Pruned copy of a network");
  prune->add_option("network", r_network)->required()->check(CLI::ExistingFile);
  prune->add_option("--level", r_level, "Percent of filters removed")->required();
  prune->add_option("--strategy", r_strategy)->check(CLI::IsMember({"uniform_random", "depth_weighted"}));
  prune->add_option("-o,--out", r_out, "Output path (default stdout)");

  // train
  std::string t_data, t_attr, t_out, t_fps = "all", t_winograd = "summed";
  std::vector<std::string> t_networks;
  ForestConfig t_cfg;
  int t_max_depth = 0;
  bool t_no_bootstrap = false;
  unsigned t_threads = 0;
  auto* train = app.add_subcommand("train", "Fit one forest for one attribute");
  train->add_option("--data", t_data, "Measurement CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--networks", t_networks, "Network JSON files")->required()->check(CLI::ExistingFile);
  train->add_option("--attr", t_attr, "gamma, phi, small_gamma, small_phi (or Γ Φ γ φ)")->required();
  train->add_option("-o,--out", t_out, "Model file")->required();
  train->add_option("--trees", t_cfg.n_trees, "Number of trees");
  train->add_option("--max-depth", t_max_depth, "Depth limit (0 = unlimited)");
  train->add_option("--min-samples-leaf", t_cfg.min_samples_leaf);
  train->add_option("--features-per-split", t_fps, "all, sqrt, or a fraction");
  train->add_flag("--no-bootstrap", t_no_bootstrap, "Fit every tree on the full data");
  train->add_flag("--log-target", t_cfg.log_target, "Fit the logarithm of the target");
  train->add_option("--winograd", t_winograd)->check(CLI::IsMember({"summed", "split"}));
  train->add_option("--threads", t_threads, "Worker threads (0 = all cores)");

  // predict
  std::vector<std::string> d_models;
  std::string d_network;
  std::int64_t d_bs = 1;
  auto* predict = app.add_subcommand("predict", "Predict attributes of a network");
  predict->add_option("--model", d_models, "Model files (repeat the flag)")->required()->check(CLI::ExistingFile)->allow_extra_args(false);
  predict->add_option("network", d_network)->required()->check(CLI::ExistingFile);
  predict->add_option("--bs", d_bs, "Batch size")->required();

  // evaluate
  std::vector<std::string> e_models, e_networks;
  std::string e_data, e_errors;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Percentage errors of models on a test CSV");
  evaluate_cmd->add_option("--model", e_models, "Model files (repeat the flag)")->required()->check(CLI::ExistingFile)->allow_extra_args(false);
  evaluate_cmd->add_option("--data", e_data)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--networks", e_networks, "Network JSON files")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--errors-csv", e_errors, "Also write per-record errors here");

  // search
  std::string s_space, s_log;
  std::vector<std::string> s_models;
  Constraints s_cons;
  double s_max_gamma = 0.0, s_max_sgamma = 0.0, s_max_sphi = 0.0;
  EsConfig s_cfg;
  auto* search = app.add_subcommand("search", "Constrained evolutionary search over a sub-network space");
  search->add_option("space", s_space, "Search space JSON")->required()->check(CLI::ExistingFile);
  search->add_option("--model", s_models, "Model files for constrained attributes (repeat the flag)")->check(CLI::ExistingFile)->allow_extra_args(false);
  search->add_option("--max-gamma", s_max_gamma, "Training memory bound (MB) at --train-bs");
  search->add_option("--max-small-gamma", s_max_sgamma, "Inference memory bound (MB) at batch size 1");
  search->add_option("--max-small-phi", s_max_sphi, "Inference latency bound (ms) at batch size 1");
  search->add_option("--train-bs", s_cons.train_bs);
  search->add_option("--population", s_cfg.population);
  search->add_option("--iterations", s_cfg.iterations);
  search->add_option("--mutation-rate", s_cfg.mutation_rate);
  search->add_option("--parent-fraction", s_cfg.parent_fraction);
  search->add_option("--log", s_log, "JSON-lines search log");

  // synth
  std::vector<std::string> y_networks;
  std::string y_plan, y_levels, y_bs = "default", y_out;
  SyntheticDeviceConfig y_cfg;
  bool y_no_inference = false;
  auto* synth = app.add_subcommand("synth", "Synthetic-device dataset for tests (not real measurements)");
  synth->add_option("networks", y_networks)->required()->check(CLI::ExistingFile);
  auto* y_plan_opt = synth->add_option("--plan", y_plan, "Plan CSV to synthesize")->check(CLI::ExistingFile);
  auto* y_levels_opt = synth->add_option("--levels", y_levels, "'train', 'test', or comma-separated levels");
  y_plan_opt->excludes(y_levels_opt);
  synth->add_option("--batch-sizes", y_bs)->excludes(y_plan_opt);
  synth->add_option("--gamma-noise", y_cfg.gamma_noise, "Relative noise on memory");
  synth->add_option("--phi-noise", y_cfg.phi_noise, "Relative noise on latency");
  synth->add_flag("--no-inference", y_no_inference, "Leave the inference columns empty");
  synth->add_option("-o,--out", y_out, "Output path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto note = [&](const std::string& msg) {
    if (g.verbose) err << msg << '\n';
  };

  try {
    if (*features) {
      if (f_bs < 1) throw CLI::ValidationError("--bs", "must be >= 1");
      const NetworkSpec net = load_network(f_network);
      const FeatureLayout layout{feature_mode_from_string(f_mode), parse_winograd(f_winograd)};
      const FeatureVector v = extract_features(net, f_bs, layout);
      const auto names = v.names();
      const auto values = v.values();
      if (g.json()) {
        ordered_json doc;
        doc["network"] = net.name;
        doc["bs"] = f_bs;
        doc["schema"] = layout.schema_tag();
        ordered_json fs = ordered_json::object();
        for (std::size_t i = 0; i < names.size(); ++i) fs[names[i]] = values[i];
        doc["features"] = std::move(fs);
        out << doc.dump(2) << '\n';
      } else {
        out << "network,bs";
        for (const auto& n : names) out << ',' << n;
        out << '\n' << net.name << ',' << f_bs;
        for (double x : values) out << ',' << format_number(x);
        out << '\n';
      }
    } else if (*plan) {
      if (p_train.empty() && p_test.empty()) {
        throw CLI::RequiredError("--train-levels or --test-levels");
      }
      ProfilingPlan result;
      std::vector<int> levels;
      if (!p_train.empty()) {
        result.train_levels = parse_levels(p_train, train_levels(), "--train-levels");
        levels = result.train_levels;
      }
      if (!p_test.empty()) {
        result.test_levels = parse_levels(p_test, test_levels(), "--test-levels");
        levels.insert(levels.end(), result.test_levels.begin(), result.test_levels.end());
      }
      std::vector<std::string> strategies;
      std::stringstream ss(p_strategies);
      for (std::string s; std::getline(ss, s, ',');) strategies.push_back(s);
      const auto seeds = p_seeds.empty() ? std::vector<std::uint64_t>{g.seed} : parse_list<std::uint64_t>(p_seeds, "--seeds");
      auto generated = generate_plan(load_networks(p_networks), levels, strategies, seeds, parse_batch_sizes(p_bs));
      result.entries = std::move(generated.entries);
      result.batch_sizes = std::move(generated.batch_sizes);
      note(std::to_string(result.entries.size()) + " plan entries");
      if (g.json()) {
        emit(out, p_out, plan_json(result));
      } else {
        std::ostringstream csv;
        write_plan(csv, result);
        emit(out, p_out, csv.str());
      }
    } else if (*prune) {
      const NetworkSpec net = load_network(r_network);
      const NetworkSpec pruned = prune_network(net, make_prune_config(net, r_strategy, r_level, g.seed));
      emit(out, r_out, to_json(pruned) + "\n");
    } else if (*train) {
      const Attribute attr = attribute_from_string(t_attr);
      if (t_max_depth > 0) t_cfg.max_depth = t_max_depth;
      t_cfg.bootstrap = !t_no_bootstrap;
      t_cfg.features_per_split = parse_features_per_split(t_fps);
      t_cfg.seed = g.seed;
      t_cfg.validate();
      const auto records = load_dataset(t_data);
      const auto catalog = make_catalog(load_networks(t_networks));
      note("training " + std::string(column_name(attr)) + " on " + std::to_string(records.size()) + " records");
      const auto models = train_models(records, catalog, {attr}, t_cfg, parse_winograd(t_winograd), t_threads);
      const Forest& forest = models.at(attr);
      save(forest, t_out);
      if (g.json()) {
        ordered_json doc;
        doc["attribute"] = column_name(attr);
        doc["model"] = t_out;
        doc["trees"] = forest.trees().size();
        doc["schema"] = forest.feature_schema();
        doc["target_range"] = {forest.target_range().min, forest.target_range().max};
        out << doc.dump(2) << '\n';
      } else {
        out << "wrote " << t_out << ": " << forest.trees().size() << " trees for " << column_name(attr) << '\n';
      }
    } else if (*predict) {
      if (d_bs < 1) throw CLI::ValidationError("--bs", "must be >= 1");
      const auto models = load_models(d_models);
      const auto preds = predict_attributes(models, load_network(d_network), d_bs);
      if (g.json()) {
        ordered_json doc = ordered_json::object();
        for (const auto& [a, v] : preds) doc[std::string(column_name(a))] = v;
        out << doc.dump(2) << '\n';
      } else {
        for (const auto& [a, v] : preds) out << column_name(a) << ' ' << format_number(v) << '\n';
      }
    } else if (*evaluate_cmd) {
      const auto models = load_models(e_models);
      const auto report = evaluate(models, load_dataset(e_data), make_catalog(load_networks(e_networks)));
      if (!e_errors.empty()) {
        std::ostringstream csv;
        write_errors_csv(csv, report);
        write_text_file(e_errors, csv.str());
      }
      if (g.json()) {
        out << summary_json(report) << '\n';
      } else {
        for (const auto& ar : report.attributes) {
          out << column_name(ar.attribute) << ": mean APE " << format_number(ar.mean_ape) << "% over "
              << ar.records.size() << " records\n";
          for (const auto& [n, s] : ar.by_network) {
            out << "  " << n << ": " << format_number(s.mean_ape) << "% (" << s.count << ")\n";
          }
        }
      }
    } else if (*search) {
      if (search->count("--max-gamma")) s_cons.max_gamma_mb = s_max_gamma;
      if (search->count("--max-small-gamma")) s_cons.max_small_gamma_mb = s_max_sgamma;
      if (search->count("--max-small-phi")) s_cons.max_small_phi_ms = s_max_sphi;
      s_cfg.seed = g.seed;
      const SearchSpace space = load_search_space(s_space);
      const auto models = load_models(s_models);
      for (Attribute a : s_cons.required_attributes()) {
        if (!models.contains(a)) throw EvalError("constraint on " + std::string(column_name(a)) + " needs a model");
      }
      note("search space of " + std::to_string(space.size()) + " candidates");
      const auto result = evolve(space, s_cons, as_predictor(models), parameter_count_fitness(), s_cfg);
      if (!s_log.empty()) {
        std::ostringstream log;
        write_search_log(log, result.log);
        write_text_file(s_log, log.str());
      }
      const auto& best = result.best;
      if (g.json()) {
        ordered_json doc;
        doc["encoding"] = best.encoding;
        doc["fitness"] = best.fitness;
        doc["fitness_kind"] = "parameter_count";
        doc["evaluated_total"] = result.evaluated_total;
        ordered_json preds = ordered_json::object();
        for (const auto& [a, v] : best.predictions) preds[std::string(column_name(a))] = v;
        doc["predictions"] = std::move(preds);
        doc["network"] = ordered_json::parse(to_json(best.net));
        out << doc.dump(2) << '\n';
      } else {
        out << "best encoding:";
        for (auto c : best.encoding) out << ' ' << c;
        out << "\nparameter count: " << format_number(best.fitness) << '\n';
        for (const auto& [a, v] : best.predictions) out << column_name(a) << ' ' << format_number(v) << '\n';
        out << "evaluated candidates: " << result.evaluated_total << '\n';
      }
    } else if (*synth) {
      y_cfg.seed = g.seed;
      y_cfg.inference_columns = !y_no_inference;
      const auto nets = load_networks(y_networks);
      ProfilingPlan source;
      if (!y_plan.empty()) {
        std::ifstream in(y_plan, std::ios::binary);
        if (!in) throw IoError("cannot open plan " + y_plan);
        source = read_plan(in);
      } else {
        std::vector<int> levels;
        if (y_levels.empty() || y_levels == "train") {
          levels = train_levels();
        } else if (y_levels == "test") {
          levels = test_levels();
        } else {
          levels = parse_list<int>(y_levels, "--levels");
        }
        source = generate_plan(nets, levels, {"uniform_random"}, {g.seed}, parse_batch_sizes(y_bs));
      }
      const auto records = synthesize_dataset(source, make_catalog(nets), y_cfg);
      if (g.json()) {
        ordered_json rows = ordered_json::array();
        for (const auto& r : records) {
          ordered_json row{{"network", r.network}, {"pruning_level", r.pruning_level}, {"strategy", r.strategy},
                           {"seed", r.seed}, {"bs", r.bs}, {"gamma_mb", r.gamma_mb}, {"phi_ms", r.phi_ms}};
          row["small_gamma_mb"] = r.small_gamma_mb ? ordered_json(*r.small_gamma_mb) : ordered_json(nullptr);
          row["small_phi_ms"] = r.small_phi_ms ? ordered_json(*r.small_phi_ms) : ordered_json(nullptr);
          rows.push_back(std::move(row));
        }
        emit(out, y_out, rows.dump(2) + "\n");
      } else {
        std::ostringstream csv;
        write_dataset(csv, records);
        emit(out, y_out, csv.str());
      }
    }
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    if (g.json()) {
      err << ordered_json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << '\n';
    } else {
      err << "error[" << error_kind(e) << "]: " << e.what() << '\n';
    }
    return kExitDomainError;
  }
  return kExitOk;
}

}  // namespace trainperf::cli
