#include "beamtrack/cli/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace beamtrack::cli {

namespace {

namespace pt = boost::property_tree;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Field {
  std::string section;  // empty for top-level keys
  std::string key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;

  std::string path() const { return section.empty() ? key : section + "." + key; }
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& path, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) fail(path, "not a number: '" + text + "'");
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

template <typename T>
T to_integer(const std::string& path, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    fail(path, "not an integer in range: '" + text + "'");
  return v;
}

bool to_bool(const std::string& path, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(path, "expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

tracking::Strategy to_strategy(const std::string& path, const std::string& text) {
  const auto s = tracking::parse_strategy(text);
  if (!s) fail(path, "unknown strategy '" + text + "' (expected VGS, GS, SAGS, NBS or MABS)");
  return *s;
}

// Interval check. Open ends are exclusive.
struct Range {
  double lo;
  double hi;
  bool lo_open = false;
  bool hi_open = false;

  void check(const std::string& path, double v) const {
    const bool ok_lo = lo_open ? v > lo : v >= lo;
    const bool ok_hi = hi_open ? v < hi : v <= hi;
    if (!ok_lo || !ok_hi) {
      std::ostringstream os;
      os << "value " << v << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi
         << (hi_open ? ")" : "]");
      fail(path, os.str());
    }
  }
};

template <typename Access>
Field real_field(std::string section, std::string key, Access access, Range range) {
  Field f{section, key, nullptr, nullptr};
  const std::string path = f.path();
  f.set = [=](Config& c, const std::string& text) {
    const double v = to_real(path, text);
    range.check(path, v);
    access(c) = v;
  };
  f.get = [=](const Config& c) { return format_real(access(const_cast<Config&>(c))); };
  return f;
}

template <typename Access>
Field int_field(std::string section, std::string key, Access access, long long lo,
                long long hi) {
  Field f{section, key, nullptr, nullptr};
  const std::string path = f.path();
  f.set = [=](Config& c, const std::string& text) {
    const long long v = to_integer<long long>(path, text);
    Range{static_cast<double>(lo), static_cast<double>(hi)}.check(path, static_cast<double>(v));
    using T = std::remove_reference_t<decltype(access(c))>;
    access(c) = static_cast<T>(v);
  };
  f.get = [=](const Config& c) { return std::to_string(access(const_cast<Config&>(c))); };
  return f;
}

template <typename Access>
Field bool_field(std::string section, std::string key, Access access) {
  Field f{section, key, nullptr, nullptr};
  const std::string path = f.path();
  f.set = [=](Config& c, const std::string& text) { access(c) = to_bool(path, text); };
  f.get = [=](const Config& c) {
    return std::string(access(const_cast<Config&>(c)) ? "true" : "false");
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    const Range positive{0.0, kInf, true, false};
    const Range nonneg{0.0, kInf};
    const Range unit{0.0, 1.0};
    // Top level.
    {
      Field f{"", "seed", nullptr, nullptr};
      f.set = [](Config& c, const std::string& text) {
        c.seed = to_integer<std::uint64_t>("seed", text);
      };
      f.get = [](const Config& c) { return std::to_string(c.seed); };
      t.push_back(f);
    }
    // [env]
    t.push_back(real_field("env", "frame_w", [](Config& c) -> double& { return c.env.sequence.frame_w; }, {16.0, 1e5}));
    t.push_back(real_field("env", "frame_h", [](Config& c) -> double& { return c.env.sequence.frame_h; }, {16.0, 1e5}));
    t.push_back(int_field("env", "length", [](Config& c) -> int& { return c.env.sequence.length; }, 2, 1000000));
    t.push_back(real_field("env", "velocity_sigma", [](Config& c) -> double& { return c.env.sequence.motion.velocity_sigma; }, nonneg));
    t.push_back(real_field("env", "accel_sigma", [](Config& c) -> double& { return c.env.sequence.motion.accel_sigma; }, nonneg));
    t.push_back(real_field("env", "occlusion_probability", [](Config& c) -> double& { return c.env.sequence.occlusion.probability; }, unit));
    t.push_back(int_field("env", "occlusion_min", [](Config& c) -> int& { return c.env.sequence.occlusion.min_length; }, 1, 1000000));
    t.push_back(int_field("env", "occlusion_max", [](Config& c) -> int& { return c.env.sequence.occlusion.max_length; }, 1, 1000000));
    t.push_back(int_field("env", "occlusion_period", [](Config& c) -> int& { return c.env.sequence.occlusion.period; }, 1, 1000000));
    t.push_back(int_field("env", "distractors", [](Config& c) -> int& { return c.env.sequence.distractors.count; }, 0, 1024));
    t.push_back(real_field("env", "distractor_similarity", [](Config& c) -> double& { return c.env.sequence.distractors.similarity; }, unit));
    t.push_back(real_field("env", "score_noise", [](Config& c) -> double& { return c.env.sequence.score_noise_sigma; }, nonneg));
    t.push_back(real_field("env", "feature_noise", [](Config& c) -> double& { return c.env.sequence.feature_noise_sigma; }, nonneg));
    t.push_back(int_field("env", "n_local", [](Config& c) -> int& { return c.env.proposals.n_local; }, 1, 100000));
    t.push_back(int_field("env", "n_global", [](Config& c) -> int& { return c.env.proposals.n_global; }, 0, 100000));
    t.push_back(real_field("env", "local_sigma_pos", [](Config& c) -> double& { return c.env.proposals.local_sigma_pos; }, positive));
    t.push_back(real_field("env", "local_sigma_scale", [](Config& c) -> double& { return c.env.proposals.local_sigma_scale; }, positive));
    t.push_back(real_field("env", "global_sigma_pos", [](Config& c) -> double& { return c.env.proposals.global_sigma_pos; }, positive));
    t.push_back(real_field("env", "global_sigma_scale", [](Config& c) -> double& { return c.env.proposals.global_sigma_scale; }, positive));
    // [model]
    t.push_back(int_field("model", "d_f", [](Config& c) -> std::size_t& { return c.model.feature_dim; }, 1, 65536));
    t.push_back(int_field("model", "d_h", [](Config& c) -> std::size_t& { return c.model.hidden_dim; }, 1, 65536));
    t.push_back(int_field("model", "beam_width", [](Config& c) -> std::size_t& { return c.model.beam_width; }, 1, 1024));
    t.push_back(int_field("model", "mlp_width1", [](Config& c) -> std::size_t& { return c.model.mlp_width1; }, 1, 65536));
    t.push_back(int_field("model", "mlp_width2", [](Config& c) -> std::size_t& { return c.model.mlp_width2; }, 1, 65536));
    t.push_back(real_field("model", "init_log_std", [](Config& c) -> double& { return c.model.init_log_std; }, {agents::kMinLogStd, agents::kMaxLogStd}));
    // [ppo]
    t.push_back(real_field("ppo", "clip_epsilon", [](Config& c) -> double& { return c.ppo.clip_epsilon; }, {0.0, 1.0, true, true}));
    t.push_back(real_field("ppo", "entropy_weight", [](Config& c) -> double& { return c.ppo.entropy_weight; }, nonneg));
    t.push_back(real_field("ppo", "gamma", [](Config& c) -> double& { return c.ppo.gamma; }, {0.0, 1.0, true, false}));
    t.push_back(int_field("ppo", "epochs", [](Config& c) -> int& { return c.ppo.epochs; }, 1, 100000));
    t.push_back(int_field("ppo", "minibatch", [](Config& c) -> int& { return c.ppo.minibatch; }, 1, 100000000));
    t.push_back(real_field("ppo", "actor_lr", [](Config& c) -> double& { return c.ppo.actor_lr; }, {0.0, 1.0, true, false}));
    t.push_back(real_field("ppo", "critic_lr", [](Config& c) -> double& { return c.ppo.critic_lr; }, {0.0, 1.0, true, false}));
    t.push_back(int_field("ppo", "episodes", [](Config& c) -> int& { return c.ppo.episodes; }, 0, 1000000000));
    t.push_back(int_field("ppo", "clip_length", [](Config& c) -> int& { return c.ppo.clip_length; }, 1, 1000000));
    t.push_back(int_field("ppo", "rollout_episodes", [](Config& c) -> int& { return c.ppo.rollout_episodes; }, 1, 1000000));
    t.push_back(real_field("ppo", "reward_threshold", [](Config& c) -> double& { return c.ppo.reward_threshold; }, {0.0, 1.0, true, true}));
    t.push_back(bool_field("ppo", "normalize_advantages", [](Config& c) -> bool& { return c.ppo.normalize_advantages; }));
    // [track]
    {
      Field f{"track", "strategy", nullptr, nullptr};
      f.set = [](Config& c, const std::string& text) {
        c.track.strategy = to_strategy("track.strategy", text);
      };
      f.get = [](const Config& c) { return std::string(tracking::strategy_name(c.track.strategy)); };
      t.push_back(f);
    }
    t.push_back(int_field("track", "beam_width", [](Config& c) -> std::size_t& { return c.track.beam_width; }, 1, 1024));
    t.push_back(bool_field("track", "stochastic", [](Config& c) -> bool& { return c.track.stochastic; }));
    t.push_back(int_field("track", "sequences", [](Config& c) -> std::size_t& { return c.track.sequences; }, 1, 10000000));
    t.push_back(int_field("track", "workers", [](Config& c) -> std::size_t& { return c.track.workers; }, 1, 1024));
    t.push_back(int_field("track", "gradcheck_coords", [](Config& c) -> std::size_t& { return c.track.gradcheck_coords; }, 0, 1000000000));
    {
      Field f{"track", "strategies", nullptr, nullptr};
      f.set = [](Config& c, const std::string& text) {
        std::vector<tracking::Strategy> out;
        for (const std::string& item : split_list(text)) {
          const tracking::Strategy s = to_strategy("track.strategies", item);
          if (std::find(out.begin(), out.end(), s) != out.end())
            fail("track.strategies", "duplicate strategy '" + item + "'");
          out.push_back(s);
        }
        if (out.empty()) fail("track.strategies", "list is empty");
        c.track.strategies = out;
      };
      f.get = [](const Config& c) {
        std::string out;
        for (tracking::Strategy s : c.track.strategies)
          out += (out.empty() ? "" : ",") + std::string(tracking::strategy_name(s));
        return out;
      };
      t.push_back(f);
    }
    {
      Field f{"track", "widths", nullptr, nullptr};
      f.set = [](Config& c, const std::string& text) {
        std::vector<std::size_t> out;
        for (const std::string& item : split_list(text)) {
          const auto w = to_integer<std::size_t>("track.widths", item);
          if (w < 1 || w > 1024) fail("track.widths", "width " + item + " outside [1, 1024]");
          if (std::find(out.begin(), out.end(), w) != out.end())
            fail("track.widths", "duplicate width " + item);
          out.push_back(w);
        }
        if (out.empty()) fail("track.widths", "list is empty");
        c.track.widths = out;
      };
      f.get = [](const Config& c) {
        std::string out;
        for (std::size_t w : c.track.widths) out += (out.empty() ? "" : ",") + std::to_string(w);
        return out;
      };
      t.push_back(f);
    }
    {
      Field f{"track", "seeds", nullptr, nullptr};
      f.set = [](Config& c, const std::string& text) {
        std::vector<std::uint64_t> out;
        for (const std::string& item : split_list(text)) {
          const auto s = to_integer<std::uint64_t>("track.seeds", item);
          if (std::find(out.begin(), out.end(), s) != out.end())
            fail("track.seeds", "duplicate seed " + item);
          out.push_back(s);
        }
        if (out.empty()) fail("track.seeds", "list is empty");
        c.track.seeds = out;
      };
      f.get = [](const Config& c) {
        std::string out;
        for (std::uint64_t s : c.track.seeds) out += (out.empty() ? "" : ",") + std::to_string(s);
        return out;
      };
      t.push_back(f);
    }
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool is_section(const std::string& name) {
  return name == "env" || name == "model" || name == "ppo" || name == "track";
}

// Boost's INI reader only knows ';' comments; accept '#' as well.
std::string normalize_comments(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    out << (t.starts_with("#") ? ";" + t : line) << '\n';
  }
  return out.str();
}

void assign(Config& c, const std::string& section, const std::string& key,
            const std::string& value) {
  const Field* f = find_field(section, key);
  if (f == nullptr) {
    const std::string path = section.empty() ? key : section + "." + key;
    if (!section.empty() && !is_section(section)) fail(path, "unknown section [" + section + "]");
    fail(path, "unknown key");
  }
  f->set(c, trim(value));
}

void finalize(Config& c) {
  c.env.sequence.feature_dim = static_cast<int>(c.model.feature_dim);
  try {
    c.env.sequence.validate();
    c.env.proposals.validate();
    c.model.validate();
    c.ppo.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

Config parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(normalize_comments(text));
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  Config c;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      assign(c, "", name, node.data());
      continue;
    }
    if (!is_section(name)) fail(name, "unknown section [" + name + "]");
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) fail(name + "." + key, "nested keys are not supported");
      assign(c, name, key, leaf.data());
    }
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("config: override '" + o + "' lacks '='");
    const std::string path = trim(o.substr(0, eq));
    const auto dot = path.find('.');
    if (dot == std::string::npos)
      assign(c, "", path, o.substr(eq + 1));
    else
      assign(c, path.substr(0, dot), path.substr(dot + 1), o.substr(eq + 1));
  }
  finalize(c);
  return c;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string render_config(const Config& config) {
  std::ostringstream out;
  std::string current = "";
  for (const Field& f : fields()) {
    if (f.section != current) {
      out << "\n[" << f.section << "]\n";
      current = f.section;
    }
    out << f.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

}  // namespace beamtrack::cli
