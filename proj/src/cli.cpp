#include "scr/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>

#include "scr/config.hpp"
#include "scr/data_io.hpp"
#include "scr/errors.hpp"
#include "scr/graph.hpp"
#include "scr/parallel.hpp"
#include "scr/snapshot.hpp"
#include "scr/train.hpp"

namespace scr::cli {
namespace fs = std::filesystem;
namespace {

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help{
      {"mode", "scr (view-averaged pseudo labels) or scr_m (EMA teacher)"},
      {"lambda", "consistency loss weight"},
      {"views", "dropout views per node"},
      {"temperature", "sharpening temperature in (0, 1]"},
      {"eta_start", "confidence threshold at the first epoch"},
      {"eta_end", "confidence threshold at the last epoch"},
      {"beta", "confident-set refresh period in epochs"},
      {"alpha", "EMA decay of the teacher (scr_m)"},
      {"tau", "warmup epochs without consistency (scr_m); 'auto' = 15% of epochs"},
      {"batch_labeled", "labeled nodes per step"},
      {"batch_unlabeled", "unlabeled nodes per step"},
      {"epochs", "training epochs"},
      {"dist", "consistency distance: mse or kl"},
      {"lr", "Adam learning rate"},
      {"dropout", "dropout rate after each hidden layer"},
      {"hidden", "comma-separated hidden widths, or 'none'"},
      {"hops", "propagation hops used as encoder input"},
      {"seed", "random seed"},
  };
  return help;
}

std::string option_names(const std::string& key) {
  std::string names = "--" + key;
  std::string dashed = key;
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  if (dashed != key) names += ",--" + dashed;
  return names;
}

fs::path resolve_data_dir(const std::string& given) {
  if (!given.empty()) return given;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  throw ConfigError("no data directory: pass --data or set " + std::string(kDataDirEnv));
}

fs::path hop_path(const fs::path& dir, std::size_t k) {
  return dir / ("features_hop_" + std::to_string(k) + ".bin");
}

std::string format_accuracy(double acc) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << acc;
  return s.str();
}

Matrix load_inputs(const fs::path& dir, std::size_t hops, std::size_t num_nodes) {
  HopFeatures features;
  for (std::size_t k = 0; k <= hops; ++k) {
    const fs::path path = hop_path(dir, k);
    if (!fs::exists(path)) {
      throw LoadError(path.string() + ": missing hop features (run `scr propagate --hops " +
                      std::to_string(hops) + "`)");
    }
    features.hops.push_back(read_matrix_file(path));
    if (features.hops.back().rows() != num_nodes) {
      throw LoadError(path.string() + ": row count does not match the dataset");
    }
  }
  return concat_hops(features);
}

struct SynthArgs {
  std::string out;
  SbmParams params;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& args, std::ostream& out) {
  Rng rng(args.seed);
  const Dataset ds = generate_sbm(args.params, rng);
  save_dataset(resolve_data_dir(args.out), ds);
  out << "N=" << ds.num_nodes() << " M=" << ds.graph.num_edges / 2 << " C=" << ds.num_classes
      << " train=" << ds.splits.train.size() << " valid=" << ds.splits.valid.size()
      << " test=" << ds.splits.test.size() << '\n';
  return kExitOk;
}

struct PropagateArgs {
  std::string data;
  std::size_t hops = 2;
};

int cmd_propagate(const PropagateArgs& args, std::ostream& out) {
  const fs::path dir = resolve_data_dir(args.data);
  const Dataset ds = load_dataset(dir);
  const SparseGraph normalized = normalize_adjacency(ds.graph, true);
  const HopFeatures features = propagate_features(normalized, ds.features, args.hops);
  for (std::size_t k = 0; k < features.hops.size(); ++k) {
    write_matrix_file(hop_path(dir, k), features.hops[k]);
  }
  out << "wrote " << features.hops.size() << " hop files (" << ds.num_nodes() << "x"
      << ds.features.cols() << ") to " << dir.string() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::map<std::string, std::string> raw;
};

int cmd_train(const TrainArgs& args, const CLI::App& sub, std::ostream& out) {
  ConfigMap file;
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw ConfigError(args.config + ": cannot read config file");
    std::stringstream text;
    text << in.rdbuf();
    try {
      file = parse_config_text(text.str());
    } catch (const ConfigError& e) {
      throw ConfigError(args.config + ": " + e.what());
    }
  }
  ConfigMap overrides;
  for (const auto& [key, value] : args.raw) {
    if (sub.get_option("--" + key)->count() > 0) overrides[key] = value;
  }
  const TrainConfig config = resolve_config(file, overrides);

  const fs::path data_dir = resolve_data_dir(args.data);
  const Dataset ds = load_dataset(data_dir);
  const Matrix inputs = load_inputs(data_dir, config.hops, ds.num_nodes());

  const TrainData data{inputs, ds.labels, ds.num_classes, ds.splits};
  const TrainResult result = train(config, data);

  const fs::path out_dir = args.out;
  fs::create_directories(out_dir);
  std::vector<MetricRecord> records;
  for (const auto& m : result.metrics) records.push_back(to_record(m));
  write_metrics(records, out_dir / "metrics.jsonl");
  {
    std::ofstream echo(out_dir / "config.resolved", std::ios::binary | std::ios::trunc);
    echo << format_config(config);
  }
  save_snapshot(out_dir, {result.model, config.hops});

  if (result.metrics.empty()) {
    out << "no epochs run\n";
    return kExitOk;
  }
  const auto& best = result.metrics[result.best_epoch];
  out << "best_epoch=" << result.best_epoch << " train_acc=" << format_accuracy(best.train_acc)
      << " valid_acc=" << format_accuracy(best.valid_acc)
      << " test_acc=" << format_accuracy(best.test_acc) << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string data;
  std::string model;
  std::string split = "test";
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const Snapshot snapshot = load_snapshot(args.model);
  const fs::path data_dir = resolve_data_dir(args.data);
  const Dataset ds = load_dataset(data_dir);
  const Matrix inputs = load_inputs(data_dir, snapshot.hops, ds.num_nodes());
  if (inputs.cols() != snapshot.model.input_dim()) {
    throw LoadError(args.model + ": model input width does not match hop features");
  }
  const std::vector<NodeId>& ids = args.split == "train"   ? ds.splits.train
                                   : args.split == "valid" ? ds.splits.valid
                                                           : ds.splits.test;
  out << format_accuracy(evaluate(snapshot.model, ids, ds.labels, inputs)) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consistency-regularized semi-supervised node classification"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 1;
  app.add_option("--threads", threads, "kernel worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a stochastic block model dataset");
  synth_cmd->add_option("--out", synth.out, "output dataset directory (default $SCR_DATA_DIR)");
  synth_cmd->add_option("--n", synth.params.num_nodes, "number of nodes");
  synth_cmd->add_option("--classes", synth.params.num_classes, "number of classes");
  synth_cmd->add_option("--p-in,--p_in", synth.params.p_in, "intra-class edge probability");
  synth_cmd->add_option("--p-out,--p_out", synth.params.p_out, "inter-class edge probability");
  synth_cmd->add_option("--dim", synth.params.feature_dim, "feature dimension");
  synth_cmd->add_option("--sigma", synth.params.sigma, "feature noise scale");
  synth_cmd->add_option("--labels-per-class,--labels_per_class", synth.params.labels_per_class,
                        "training labels per class");
  synth_cmd->add_option("--seed", synth.seed, "random seed");

  PropagateArgs propagate;
  auto* prop_cmd = app.add_subcommand("propagate", "precompute propagated hop features");
  prop_cmd->add_option("--data", propagate.data, "dataset directory (default $SCR_DATA_DIR)");
  prop_cmd->add_option("--hops", propagate.hops, "number of propagation hops K");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train an encoder with SCR or SCR-m");
  train_cmd->add_option("--data", train_args.data, "dataset directory (default $SCR_DATA_DIR)");
  train_cmd->add_option("--out", train_args.out, "output directory for metrics and snapshot")
      ->required();
  train_cmd->add_option("--config", train_args.config, "flat key = value config file");
  for (const auto& key : config_keys()) {
    train_cmd->add_option(option_names(key), train_args.raw[key], key_help().at(key));
  }

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained snapshot on a split");
  eval_cmd->add_option("--data", eval.data, "dataset directory (default $SCR_DATA_DIR)");
  eval_cmd->add_option("--model", eval.model, "directory holding model.manifest/model.bin")
      ->required();
  eval_cmd->add_option("--split", eval.split, "train, valid or test")
      ->check(CLI::IsMember({"train", "valid", "test"}));

  std::vector<const char*> argv{"scr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    set_num_threads(threads);
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (prop_cmd->parsed()) return cmd_propagate(propagate, out);
    if (train_cmd->parsed()) return cmd_train(train_args, *train_cmd, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LoadError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace scr::cli
