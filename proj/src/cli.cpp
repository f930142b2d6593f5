#include "eud/cli.hpp"

#include "eud/checkpoint.hpp"
#include "eud/config.hpp"
#include "eud/conllu.hpp"
#include "eud/decode.hpp"
#include "eud/evaluate.hpp"
#include "eud/graph.hpp"
#include "eud/pipeline.hpp"
#include "eud/training.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace eud
{
namespace
{
enum class LogLevel
{
  Quiet,
  Warn,
  Info,
  Debug
};

class Log
{
public:
  explicit Log(std::ostream & err) : err_(err)
  {
    const char * env = std::getenv("EUD_LOG");
    const std::string value = env ? env : "";
    if (value == "quiet" || value == "error") {
      level_ = LogLevel::Quiet;
    } else if (value == "warn") {
      level_ = LogLevel::Warn;
    } else if (value == "debug") {
      level_ = LogLevel::Debug;
    }
  }
  void warn(const std::string & msg) const { emit(LogLevel::Warn, "warning: ", msg); }
  void info(const std::string & msg) const { emit(LogLevel::Info, "", msg); }
  void debug(const std::string & msg) const { emit(LogLevel::Debug, "debug: ", msg); }

private:
  void emit(LogLevel level, const char * prefix, const std::string & msg) const
  {
    if (level <= level_) {
      err_ << prefix << msg << '\n';
    }
  }
  std::ostream & err_;
  LogLevel level_ = LogLevel::Info;
};

std::string hex64(std::uint64_t value)
{
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

std::string stem(const std::string & path) { return std::filesystem::path(path).stem().string(); }

struct Invocation
{
  std::string command_line;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

RunManifest base_manifest(const Invocation & inv, std::string_view command)
{
  RunManifest m;
  m.set("toolkit_version", std::string(kToolkitVersion));
  m.set("command", std::string(command));
  m.set("command_line", inv.command_line);
  return m;
}

void add_inputs(RunManifest & m, const std::vector<std::string> & paths)
{
  for (std::size_t i = 0; i < paths.size(); ++i) {
    m.set("input." + std::to_string(i) + ".path", paths[i]);
    m.set("input." + std::to_string(i) + ".fnv1a", file_checksum(paths[i]));
  }
}

void add_config(RunManifest & m, const RunConfig & config)
{
  std::istringstream lines(format_config(config));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    m.set("config." + line.substr(0, eq), line.substr(eq + 1));
  }
}

void finish_manifest(RunManifest & m, const Invocation & inv, const std::string & output)
{
  m.set("output.path", output);
  m.set("output.fnv1a", file_checksum(output));
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - inv.start;
  m.set_real("wall_clock_seconds", elapsed.count());
  std::ofstream file(manifest_path(output), std::ios::trunc);
  file << m.text();
  if (!file) {
    throw std::runtime_error("failed writing '" + manifest_path(output) + "'");
  }
}

struct TrainArgs
{
  std::string config;
  std::vector<std::string> train;
  std::string dev;
  std::string out;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  bool mtl = false;
};

struct ParseArgs
{
  std::string model;
  std::string input;
  std::string output;
  std::optional<double> threshold;
  unsigned threads = 1;
};

struct EvalArgs
{
  std::string gold;
  std::string system;
  std::string output;
  bool coarse = false;
};

struct FileArgs
{
  std::vector<std::string> inputs;
  std::string output;
};

RunConfig resolve_config(const TrainArgs & args)
{
  RunConfig config;
  if (!args.config.empty()) {
    config = read_config_file(args.config, config);
  }
  for (const auto & setting : args.settings) {
    const auto eq = setting.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(setting, "--set expects key=value");
    }
    apply_setting(config, setting.substr(0, eq), setting.substr(eq + 1));
  }
  if (args.seed) {
    config.train.seed = *args.seed;
  }
  if (args.lambda) {
    config.hyper.lambda = *args.lambda;
  }
  if (args.mtl) {
    config.hyper.mtl_enabled = true;
  }
  try {
    config.hyper.validate();
  } catch (const ModelError & e) {
    throw ConfigError("model", e.what());
  } catch (const EncoderConfigError & e) {
    throw ConfigError("encoder", e.what());
  }
  config.train.validate();
  return config;
}

int cmd_train(const TrainArgs & args, const Invocation & inv, const Log & log)
{
  const auto config = resolve_config(args);
  std::vector<NamedTreebank> banks;
  for (const auto & path : args.train) {
    banks.push_back({stem(path), read_conllu_file(path)});
    log.info("read " + std::to_string(banks.back().sentences.size()) + " sentences from " + path);
  }
  const auto train_data = banks.size() == 1 ? banks.front().sentences : concat_treebanks(banks);
  const auto dev_data = args.dev.empty() ? std::vector<Sentence>{} : read_conllu_file(args.dev);
  if (dev_data.empty()) {
    log.warn("no dev sentences; selecting on the training set");
  }

  TrainHooks hooks;
  hooks.warn = [&](const std::string & msg) { log.warn(msg); };
  hooks.on_epoch = [&](const EpochRecord & r) {
    char line[128];
    std::snprintf(line, sizeof line, "epoch %d loss %.6f dev_elas %.4f%s", r.epoch, r.train_loss, r.dev_elas,
                  r.improved ? " *" : "");
    log.info(line);
  };
  const auto result = train(train_data, dev_data, config.hyper, config.train, hooks);
  save_checkpoint(result.best, args.out);

  auto m = base_manifest(inv, "train");
  add_config(m, config);
  m.set("seed", std::to_string(config.train.seed));
  auto inputs = args.train;
  if (!args.dev.empty()) {
    inputs.push_back(args.dev);
  }
  add_inputs(m, inputs);
  std::string order;
  for (const auto & bank : banks) {
    order += (order.empty() ? "" : ",") + bank.name;
  }
  m.set("concat_order", order);
  m.set("stats.train_sentences", static_cast<long long>(train_data.size()));
  m.set("stats.skipped_sentences", static_cast<long long>(result.skipped.size()));
  m.set("stats.epochs_run", static_cast<long long>(result.epochs_run));
  m.set("stats.best_epoch", static_cast<long long>(result.best.epoch));
  m.set_real("stats.best_dev_elas", result.best.dev_history.empty() ? 0.0 : result.best.dev_history.back());
  m.set("stats.enhanced_labels", static_cast<long long>(result.best.model.labels.size()));
  finish_manifest(m, inv, args.out);
  return kExitOk;
}

int cmd_parse(const ParseArgs & args, const Invocation & inv, const Log & log)
{
  const auto checkpoint = load_checkpoint(args.model);
  const auto input = read_conllu_file(args.input);
  ParseOptions options;
  options.threshold = args.threshold;
  options.threads = args.threads;
  ParseStats stats;
  const auto output = parse_sentences(checkpoint.model, input, options, &stats);
  for (const auto index : stats.passed_through_indices) {
    log.warn("sentence " + std::to_string(index + 1) + " is not parseable; copied through unchanged");
  }
  write_conllu_file(args.output, output);

  auto m = base_manifest(inv, "parse");
  add_config(m, RunConfig{checkpoint.model.hyper, checkpoint.train});
  m.set("seed", std::to_string(checkpoint.train.seed));
  add_inputs(m, {args.model, args.input});
  m.set_real("threshold", args.threshold.value_or(checkpoint.model.hyper.edge_threshold));
  m.set("stats.sentences", stats.sentences);
  m.set("stats.fallback_heads", stats.fallback_heads);
  m.set("stats.repair_edges", stats.repair_edges);
  m.set("stats.passed_through", stats.passed_through);
  std::string passed;
  for (const auto index : stats.passed_through_indices) {
    passed += (passed.empty() ? "" : ",") + std::to_string(index + 1);
  }
  m.set("stats.passed_through_sentences", passed);
  finish_manifest(m, inv, args.output);
  return kExitOk;
}

int cmd_eval(const EvalArgs & args, const Invocation & inv, std::ostream & out)
{
  const auto gold = read_conllu_file(args.gold);
  const auto system = read_conllu_file(args.system);
  const auto report = evaluate(gold, system);
  std::ostringstream text;
  print_report(text, report, args.coarse);
  out << text.str();
  if (!args.output.empty()) {
    std::ofstream file(args.output, std::ios::trunc);
    file << text.str();
    if (!file) {
      throw std::runtime_error("failed writing '" + args.output + "'");
    }
    auto m = base_manifest(inv, "eval");
    add_inputs(m, {args.gold, args.system});
    m.set("stats.gold_edges", report.exact_counts.gold);
    m.set("stats.system_edges", report.exact_counts.system);
    m.set("stats.dropped_paths", static_cast<long long>(report.dropped_paths));
    finish_manifest(m, inv, args.output);
  }
  return kExitOk;
}

}  // namespace

void RunManifest::set(std::string key, std::string value)
{
  for (auto & [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

void RunManifest::set(std::string key, long long value) { set(std::move(key), std::to_string(value)); }

void RunManifest::set_real(std::string key, double value)
{
  char buffer[32];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  set(std::move(key), std::string(buffer, end));
}

std::string RunManifest::text() const
{
  std::string out;
  for (const auto & [k, v] : entries_) {
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string manifest_path(const std::string & output) { return output + ".manifest"; }

std::string file_checksum(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "' for reading");
  }
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return hex64(fnv1a(bytes.str()));
}

int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  Invocation inv;
  for (int i = 0; i < argc; ++i) {
    inv.command_line += (i ? " " : "") + std::string(argv[i]);
  }
  const Log log(err);

  CLI::App app{"Enhanced UD graph parser toolkit", "eudparse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  TrainArgs train_args;
  auto * train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--config", train_args.config, "Config file (key = value)");
  train_cmd->add_option("--train", train_args.train, "Training CoNLL-U file(s), concatenated in order")
    ->required()
    ->expected(1, -1);
  train_cmd->add_option("--dev", train_args.dev, "Dev CoNLL-U file for model selection");
  train_cmd->add_option("--out,-o", train_args.out, "Checkpoint path")->required();
  train_cmd->add_option("--set", train_args.settings, "Override a config key (key=value)");
  train_cmd->add_option("--seed", train_args.seed, "Master seed");
  train_cmd->add_option("--lambda", train_args.lambda, "Label loss weight");
  train_cmd->add_flag("--mtl", train_args.mtl, "Add the basic-tree head");

  ParseArgs parse_args;
  auto * parse_cmd = app.add_subcommand("parse", "Predict enhanced graphs for a CoNLL-U file");
  parse_cmd->add_option("--model,-m", parse_args.model, "Checkpoint path")->required();
  parse_cmd->add_option("--input,-i", parse_args.input, "Input CoNLL-U")->required();
  parse_cmd->add_option("--output,-o", parse_args.output, "Output CoNLL-U")->required();
  parse_cmd->add_option("--threshold", parse_args.threshold, "Edge probability threshold");
  parse_cmd->add_option("--threads", parse_args.threads, "Worker threads")->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  auto * eval_cmd = app.add_subcommand("eval", "Score a system file against gold");
  eval_cmd->add_option("gold", eval_args.gold, "Gold CoNLL-U")->required();
  eval_cmd->add_option("system", eval_args.system, "System CoNLL-U")->required();
  eval_cmd->add_flag("--coarse", eval_args.coarse, "Only report coarse ELAS");
  eval_cmd->add_option("--output,-o", eval_args.output, "Also write the report here");

  FileArgs repair_args;
  auto * repair_cmd = app.add_subcommand("repair", "Connect every graph to ROOT");
  repair_cmd->add_option("--input,-i", repair_args.inputs, "Input CoNLL-U")->required()->expected(1);
  repair_cmd->add_option("--output,-o", repair_args.output, "Output CoNLL-U")->required();

  FileArgs concat_args;
  auto * concat_cmd = app.add_subcommand("concat", "Concatenate treebanks with provenance comments");
  concat_cmd->add_option("--input,-i", concat_args.inputs, "Input CoNLL-U files")->required()->expected(1, -1);
  concat_cmd->add_option("--output,-o", concat_args.output, "Output CoNLL-U")->required();

  FileArgs copy_args;
  auto * copy_cmd = app.add_subcommand("baseline-copy", "Copy basic trees into DEPS");
  copy_cmd->add_option("--input,-i", copy_args.inputs, "Input CoNLL-U")->required()->expected(1);
  copy_cmd->add_option("--output,-o", copy_args.output, "Output CoNLL-U")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      return cmd_train(train_args, inv, log);
    }
    if (*parse_cmd) {
      return cmd_parse(parse_args, inv, log);
    }
    if (*eval_cmd) {
      return cmd_eval(eval_args, inv, out);
    }
    if (*repair_cmd) {
      auto sentences = read_conllu_file(repair_args.inputs.front());
      long long added = 0;
      for (auto & sentence : sentences) {
        auto repaired = connect_graph(to_graph(sentence));
        if (!repaired.added_root_edges.empty()) {
          added += static_cast<long long>(repaired.added_root_edges.size());
          sentence = from_graph(repaired.graph, sentence);
        }
      }
      write_conllu_file(repair_args.output, sentences);
      auto m = base_manifest(inv, "repair");
      add_inputs(m, repair_args.inputs);
      m.set("stats.sentences", static_cast<long long>(sentences.size()));
      m.set("stats.repair_edges", added);
      finish_manifest(m, inv, repair_args.output);
      return kExitOk;
    }
    if (*concat_cmd) {
      std::vector<NamedTreebank> banks;
      std::string order;
      for (const auto & path : concat_args.inputs) {
        banks.push_back({stem(path), read_conllu_file(path)});
        order += (order.empty() ? "" : ",") + banks.back().name;
      }
      const auto sentences = concat_treebanks(banks);
      write_conllu_file(concat_args.output, sentences);
      auto m = base_manifest(inv, "concat");
      add_inputs(m, concat_args.inputs);
      m.set("concat_order", order);
      m.set("stats.sentences", static_cast<long long>(sentences.size()));
      m.set("stats.enhanced_labels", static_cast<long long>(enhanced_label_vocab(sentences).size()));
      finish_manifest(m, inv, concat_args.output);
      return kExitOk;
    }
    if (*copy_cmd) {
      auto sentences = read_conllu_file(copy_args.inputs.front());
      for (auto & sentence : sentences) {
        sentence = from_graph(copy_tree_to_enhanced(sentence), sentence);
      }
      write_conllu_file(copy_args.output, sentences);
      auto m = base_manifest(inv, "baseline-copy");
      add_inputs(m, copy_args.inputs);
      m.set("stats.sentences", static_cast<long long>(sentences.size()));
      finish_manifest(m, inv, copy_args.output);
      return kExitOk;
    }
  } catch (const ConfigError & e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AlignmentError & e) {
    err << "alignment error: " << e.what() << '\n';
    return kExitAlignment;
  } catch (const std::exception & e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace eud
