#include "cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include "third_party/toml.hpp"

#include "stedeflick/error.hpp"
#include "stedeflick/executor.hpp"

namespace stedeflick::cli {

void Config::validate() const {
  pipeline.validate();
  flicker.validate();
  if (threads < 0) throw InvalidArgument("threads must be >= 0");
}

namespace {

class Section {
 public:
  Section(const toml::table& table, std::string name, std::initializer_list<std::string_view> keys)
      : table_(table), name_(std::move(name)) {
    for (auto&& [key, node] : table_) {
      if (std::find(keys.begin(), keys.end(), key.str()) == keys.end()) {
        throw InvalidArgument("unknown config key '" + qualified(key.str()) + "'");
      }
    }
  }

  void read(std::string_view key, double& out) const {
    if (const toml::node* n = table_.get(key)) {
      if (!n->is_number()) type_error(key, "a number");
      out = n->value<double>().value();
    }
  }

  void read(std::string_view key, int& out) const {
    if (const toml::node* n = table_.get(key)) {
      if (!n->is_integer()) type_error(key, "an integer");
      const std::int64_t v = n->as_integer()->get();
      if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        type_error(key, "an integer in int range");
      }
      out = static_cast<int>(v);
    }
  }

  void read(std::string_view key, std::uint64_t& out) const {
    if (const toml::node* n = table_.get(key)) {
      if (!n->is_integer() || n->as_integer()->get() < 0) type_error(key, "a non-negative integer");
      out = static_cast<std::uint64_t>(n->as_integer()->get());
    }
  }

  void read(std::string_view key, bool& out) const {
    if (const toml::node* n = table_.get(key)) {
      if (!n->is_boolean()) type_error(key, "a boolean");
      out = n->as_boolean()->get();
    }
  }

  void read(std::string_view key, std::optional<std::filesystem::path>& out) const {
    if (const toml::node* n = table_.get(key)) {
      if (!n->is_string()) type_error(key, "a string");
      out = std::filesystem::path(n->as_string()->get());
    }
  }

  // Two-element numeric array; `false` clears an optional range.
  void read_range(std::string_view key, std::pair<double, double>& out) const {
    if (const toml::node* n = table_.get(key)) out = range(key, *n);
  }

  void read_range(std::string_view key, std::optional<std::pair<double, double>>& out) const {
    if (const toml::node* n = table_.get(key)) {
      if (n->is_boolean() && !n->as_boolean()->get()) {
        out.reset();
      } else {
        out = range(key, *n);
      }
    }
  }

  // Positive integer, or 0 to clear.
  void read_optional_int(std::string_view key, std::optional<int>& out) const {
    if (table_.get(key) == nullptr) return;
    int v = 0;
    read(key, v);
    if (v == 0) {
      out.reset();
    } else {
      out = v;
    }
  }

 private:
  std::pair<double, double> range(std::string_view key, const toml::node& n) const {
    const toml::array* arr = n.as_array();
    if (arr == nullptr || arr->size() != 2 || !(*arr)[0].is_number() || !(*arr)[1].is_number()) {
      type_error(key, "a [lo, hi] array");
    }
    return {(*arr)[0].value<double>().value(), (*arr)[1].value<double>().value()};
  }

  std::string qualified(std::string_view key) const {
    return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
  }

  [[noreturn]] void type_error(std::string_view key, const char* expected) const {
    throw InvalidArgument("config key '" + qualified(key) + "' must be " + expected);
  }

  const toml::table& table_;
  std::string name_;
};

const toml::table& subtable(const toml::table& root, std::string_view name) {
  static const toml::table empty;
  const toml::node* n = root.get(name);
  if (n == nullptr) return empty;
  if (!n->is_table()) throw InvalidArgument("config key '" + std::string(name) + "' must be a table");
  return *n->as_table();
}

}  // namespace

Config parse_config(std::string_view toml_text, Config base, std::string_view origin) {
  toml::table root;
  try {
    root = toml::parse(toml_text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "cannot parse " << origin << ": " << e.description() << " at line "
        << e.source().begin.line;
    throw InvalidArgument(msg.str());
  }

  Config c = std::move(base);
  const Section top(root, "", {"threads", "ste", "priors", "flow", "repair", "synth", "io"});
  top.read("threads", c.threads);

  const Section ste(subtable(root, "ste"), "ste", {"scale", "radius"});
  ste.read("scale", c.pipeline.ste.scale);
  ste.read("radius", c.pipeline.ste.radius);

  const Section priors(subtable(root, "priors"), "priors",
                       {"ma_radius", "kl_margin", "kl_floor", "dark_threshold", "bright_threshold",
                        "kl_smoothing"});
  priors.read("ma_radius", c.pipeline.priors.ma_radius);
  priors.read("kl_margin", c.pipeline.priors.kl_margin);
  priors.read("kl_floor", c.pipeline.priors.kl_floor);
  priors.read("dark_threshold", c.pipeline.priors.dark_threshold);
  priors.read("bright_threshold", c.pipeline.priors.bright_threshold);
  priors.read("kl_smoothing", c.pipeline.priors.kl_smoothing);

  const Section flow(subtable(root, "flow"), "flow",
                     {"pyramid_levels", "window", "iterations", "fb_threshold"});
  flow.read("pyramid_levels", c.pipeline.flow.pyramid_levels);
  flow.read("window", c.pipeline.flow.window);
  flow.read("iterations", c.pipeline.flow.iterations);
  flow.read("fb_threshold", c.pipeline.flow.fb_threshold);

  const Section repair(subtable(root, "repair"), "repair",
                       {"enable_local", "conf_power", "temporal_blend_alpha"});
  repair.read("enable_local", c.pipeline.repair.enable_local);
  repair.read("conf_power", c.pipeline.repair.conf_power);
  repair.read("temporal_blend_alpha", c.pipeline.repair.temporal_blend_alpha);

  const Section synth(subtable(root, "synth"), "synth",
                      {"window_w", "local_window_l", "offset_range", "gain_range", "seed"});
  synth.read("window_w", c.flicker.window_w);
  synth.read_optional_int("local_window_l", c.flicker.local_window_l);
  synth.read_range("offset_range", c.flicker.offset_range);
  synth.read_range("gain_range", c.flicker.gain_range);
  synth.read("seed", c.flicker.seed);

  const Section io(subtable(root, "io"), "io", {"input", "output", "report", "flows"});
  io.read("input", c.io.input);
  io.read("output", c.io.output);
  io.read("report", c.io.report);
  io.read("flows", c.io.flows);

  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base), path.string());
}

int resolve_threads(int configured) {
  if (configured > 0) return configured;
  const int env = threads_from_environment();
  if (env > 0) return env;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace stedeflick::cli
