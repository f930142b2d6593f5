#include "eud/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace eud
{
namespace
{
std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value)
{
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key), "cannot parse '" + std::string(value) + "' as a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value)
{
  if (value == "true" || value == "1" || value == "yes" || value == "on") {
    return true;
  }
  if (value == "false" || value == "0" || value == "no" || value == "off") {
    return false;
  }
  throw ConfigError(std::string(key), "expected a boolean, got '" + std::string(value) + "'");
}

std::string format_double(double value)
{
  char buffer[32];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, end);
}

using Setter = std::function<void(RunConfig &, std::string_view, std::string_view)>;
using Getter = std::function<std::string(const RunConfig &)>;

struct Field
{
  Setter set;
  Getter get;
};

template <typename T, typename Access>
Field int_field(Access access)
{
  return {[access](RunConfig & c, std::string_view k, std::string_view v) {
            access(c) = parse_number<T>(k, v);
          },
          [access](const RunConfig & c) { return std::to_string(access(c)); }};
}

template <typename Access>
Field double_field(Access access)
{
  return {[access](RunConfig & c, std::string_view k, std::string_view v) {
            access(c) = parse_number<double>(k, v);
          },
          [access](const RunConfig & c) { return format_double(access(c)); }};
}

const std::map<std::string, Field, std::less<>> & fields()
{
  static const std::map<std::string, Field, std::less<>> table = {
    {"encoder.dim",
     {[](RunConfig & c, std::string_view k, std::string_view v) {
        if (v == "base") {
          c.hyper.encoder.dim = 768;
        } else if (v == "large") {
          c.hyper.encoder.dim = 1024;
        } else {
          c.hyper.encoder.dim = parse_number<int>(k, v);
        }
      },
      [](const RunConfig & c) { return std::to_string(c.hyper.encoder.dim); }}},
    {"encoder.vocab_size", int_field<int>([](auto & c) -> auto & { return c.hyper.encoder.vocab_size; })},
    {"encoder.layers", int_field<int>([](auto & c) -> auto & { return c.hyper.encoder.layers; })},
    {"encoder.window", int_field<int>([](auto & c) -> auto & { return c.hyper.encoder.window; })},
    {"encoder.ngram", int_field<int>([](auto & c) -> auto & { return c.hyper.encoder.ngram; })},
    {"model.edge_ff", int_field<int>([](auto & c) -> auto & { return c.hyper.edge_ff; })},
    {"model.label_ff", int_field<int>([](auto & c) -> auto & { return c.hyper.label_ff; })},
    {"model.input_dropout", double_field([](auto & c) -> auto & { return c.hyper.input_dropout; })},
    {"model.dropout", double_field([](auto & c) -> auto & { return c.hyper.dropout; })},
    {"model.edge_threshold", double_field([](auto & c) -> auto & { return c.hyper.edge_threshold; })},
    {"model.lambda", double_field([](auto & c) -> auto & { return c.hyper.lambda; })},
    {"model.mtl",
     {[](RunConfig & c, std::string_view k, std::string_view v) { c.hyper.mtl_enabled = parse_bool(k, v); },
      [](const RunConfig & c) { return std::string(c.hyper.mtl_enabled ? "true" : "false"); }}},
    {"model.mtl_weight", double_field([](auto & c) -> auto & { return c.hyper.mtl_weight; })},
    {"train.epochs", int_field<int>([](auto & c) -> auto & { return c.train.epochs; })},
    {"train.batch_size", int_field<int>([](auto & c) -> auto & { return c.train.batch_size; })},
    {"train.learning_rate", double_field([](auto & c) -> auto & { return c.train.learning_rate; })},
    {"train.seed", int_field<std::uint64_t>([](auto & c) -> auto & { return c.train.seed; })},
    {"train.patience", int_field<int>([](auto & c) -> auto & { return c.train.patience; })},
    {"train.optimizer",
     {[](RunConfig & c, std::string_view k, std::string_view v) {
        if (v == "adam") {
          c.train.optimizer = OptimizerKind::Adam;
        } else if (v == "sgd") {
          c.train.optimizer = OptimizerKind::Sgd;
        } else {
          throw ConfigError(std::string(k), "expected 'adam' or 'sgd', got '" + std::string(v) + "'");
        }
      },
      [](const RunConfig & c) {
        return std::string(c.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd");
      }}},
    {"train.beta1", double_field([](auto & c) -> auto & { return c.train.beta1; })},
    {"train.beta2", double_field([](auto & c) -> auto & { return c.train.beta2; })},
    {"train.epsilon", double_field([](auto & c) -> auto & { return c.train.epsilon; })},
  };
  return table;
}

}  // namespace

void TrainConfig::validate() const
{
  if (epochs < 1) {
    throw ConfigError("train.epochs", "must be at least 1");
  }
  if (batch_size < 1) {
    throw ConfigError("train.batch_size", "must be at least 1");
  }
  if (!(learning_rate >= 0.0)) {
    throw ConfigError("train.learning_rate", "must be non-negative");
  }
  if (patience < 0) {
    throw ConfigError("train.patience", "must be non-negative");
  }
}

void apply_setting(RunConfig & config, std::string_view key, std::string_view value)
{
  const auto it = fields().find(key);
  if (it == fields().end()) {
    throw ConfigError(std::string(key), "unknown key");
  }
  it->second.set(config, key, trim(value));
}

RunConfig parse_config(std::string_view text, RunConfig base)
{
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) {
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(base, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
  }
  return base;
}

RunConfig read_config_file(const std::string & path, RunConfig base)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("", "cannot open config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string format_config(const RunConfig & config)
{
  std::string out;
  for (const auto & [key, field] : fields()) {
    out += key;
    out += '=';
    out += field.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace eud
