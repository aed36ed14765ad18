#include "moenet/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "moenet/error.hpp"

namespace moenet {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::InvalidConfig, path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    std::string what = e.what();
    if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    fail(Errc::ParseError, origin + ":" + std::to_string(line) + ": " + what);
  }
}

// One JSON object being read. Every key must be consumed by the time
// finish() runs.
class Fields {
 public:
  Fields(const json& j, std::string path, std::string origin)
      : j_(j), path_(std::move(path)), origin_(std::move(origin)) {
    if (!j_.is_object()) bad(path_, "expected an object");
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& need(const char* key) {
    const json* v = take(key);
    if (!v) bad(at(key), "missing required field");
    return *v;
  }

  void number(const char* key, double& out) {
    if (const json* v = take(key)) out = as_number(*v, at(key));
  }
  void integer(const char* key, int& out) {
    if (const json* v = take(key)) out = static_cast<int>(as_integer(*v, at(key)));
  }
  void integer(const char* key, std::int64_t& out) {
    if (const json* v = take(key)) out = as_integer(*v, at(key));
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) bad(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const char* key, std::string& out) {
    if (const json* v = take(key)) out = as_string(*v, at(key));
  }
  void ratio(const char* key, double& out) {
    if (const json* v = take(key)) out = as_ratio(*v, at(key));
  }
  void ratios(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) out = as_list<double>(*v, at(key), &Fields::as_ratio);
  }
  void integers(const char* key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      out.clear();
      for (auto x : as_list<std::int64_t>(*v, at(key), &Fields::as_integer))
        out.push_back(static_cast<int>(x));
    }
  }

  Fields object(const char* key) { return Fields(need(key), at(key), origin_); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) bad(at(item.key()), "unknown field");
  }

  [[nodiscard]] std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  [[nodiscard]] const std::string& path() const { return path_; }

  [[noreturn]] void bad(const std::string& where, const std::string& what) const {
    fail(Errc::InvalidConfig, origin_ + ": " + (where.empty() ? "<root>" : where) + ": " + what);
  }

  double as_number(const json& v, const std::string& where) const {
    if (!v.is_number()) bad(where, "expected a number");
    return v.get<double>();
  }
  double as_ratio(const json& v, const std::string& where) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string())
      if (auto r = parse_ratio(v.get<std::string>())) return *r;
    bad(where, "expected a number or a ratio like \"1/3\"");
  }
  std::int64_t as_integer(const json& v, const std::string& where) const {
    if (!v.is_number_integer()) bad(where, "expected an integer");
    return v.get<std::int64_t>();
  }
  std::string as_string(const json& v, const std::string& where) const {
    if (!v.is_string()) bad(where, "expected a string");
    return v.get<std::string>();
  }

  template <class T>
  std::vector<T> as_list(const json& v, const std::string& where,
                         T (Fields::*conv)(const json&, const std::string&) const) const {
    if (!v.is_array()) bad(where, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back((this->*conv)(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::string origin_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& path, const std::string& base_dir) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

ModelSpec read_model(Fields f) {
  ModelSpec m;
  f.string("name", m.name);
  f.integer("num_layers", m.num_layers);
  f.integer("num_dense_layers", m.num_dense_layers);
  f.integer("hidden_dim", m.hidden_dim);
  f.integer("num_experts", m.num_experts);
  f.integer("top_k", m.top_k);
  f.integer("expert_ffn_dim", m.expert_ffn_dim);
  f.integer("num_shared_experts", m.num_shared_experts);
  f.integer("dense_ffn_dim", m.dense_ffn_dim);
  f.integer("num_heads", m.num_heads);
  f.integer("q_lora_rank", m.q_lora_rank);
  f.integer("kv_lora_rank", m.kv_lora_rank);
  f.integer("qk_nope_head_dim", m.qk_nope_head_dim);
  f.integer("qk_rope_head_dim", m.qk_rope_head_dim);
  f.integer("v_head_dim", m.v_head_dim);
  f.integer("vocab_size", m.vocab_size);
  f.string("attention", m.attention);
  f.number("kv_bytes_per_token", m.kv_bytes_per_token);
  f.number("param_bytes_total", m.param_bytes_total);
  f.number("dtype_bytes", m.dtype_bytes);
  f.number("activation_bytes", m.activation_bytes);
  f.finish();
  try {
    validate(m);
  } catch (const Error& e) {
    f.bad(f.path(), e.what());
  }
  return m;
}

void read_hardware(Fields f, Config& c) {
  f.string("name", c.hardware.name);
  f.number("peak_flops", c.hardware.peak_flops);
  f.number("mem_bandwidth", c.hardware.mem_bandwidth);
  f.number("mem_capacity", c.hardware.mem_capacity);
  f.number("tdp", c.hardware.tdp);
  f.number("link_bandwidth", c.hardware.per_xpu_link_bandwidth);
  f.number("compute_efficiency", c.calibration.eff_c);
  f.number("memory_efficiency", c.calibration.eff_m);
  f.boolean("allow_fallback", c.calibration.allow_fallback);
  f.string("profile", c.profile_path);
  f.finish();
}

TopologyEntry read_topology(Fields f) {
  TopologyEntry t;
  t.name = f.as_string(f.need("name"), f.at("name"));
  const auto kind_name = f.as_string(f.need("kind"), f.at("kind"));
  auto kind = parse_topology_kind(kind_name);
  if (!kind) f.bad(f.at("kind"), "unknown topology kind '" + kind_name + "'");
  t.base.kind = *kind;
  f.ratio("link_share", t.link_share);
  f.integer("switch_radix", t.base.switch_radix);
  f.integer("scaleup_ports_per_xpu", t.base.scaleup_ports_per_xpu);
  f.integer("scaleout_ports_per_xpu", t.base.scaleout_ports_per_xpu);
  f.integer("xpus_per_rack", t.base.xpus_per_rack);
  f.integer("scaleup_domain_size", t.base.scaleup_domain_size);
  f.number("scaleup_domain_bandwidth", t.base.scaleup_domain_bandwidth);
  if (const json* dims = f.take("dims")) {
    const auto where = f.at("dims");
    if (!dims->is_object()) f.bad(where, "expected an object keyed by cluster size");
    for (const auto& item : dims->items()) {
      const auto key = where + "." + item.key();
      int n = 0;
      try {
        std::size_t used = 0;
        n = std::stoi(item.key(), &used);
        if (used != item.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        f.bad(key, "cluster size keys must be integers");
      }
      auto d = f.as_list<std::int64_t>(item.value(), key, &Fields::as_integer);
      if (d.size() != 3) f.bad(key, "expected three extents");
      t.dims[n] = Dims3{{int(d[0]), int(d[1]), int(d[2])}};
    }
  }
  f.finish();
  if (!(t.link_share > 0)) f.bad(f.at("link_share"), "must be positive");
  return t;
}

void read_costs(Fields f, CostConfig& c) {
  f.number("xpu_capex", c.xpu_capex);
  f.number("switch_cost_per_capacity", c.switch_cost_per_capacity);
  f.number("switch_cost_fixed", c.switch_cost_fixed);
  f.number("copper_cost_per_bandwidth", c.copper_cost_per_bandwidth);
  f.number("aoc_multiplier", c.aoc_multiplier);
  f.integer("amortization_months", c.amortization_months);
  f.number("electricity_price", c.electricity_price);
  f.number("pue", c.pue);
  f.number("hours_per_month", c.hours_per_month);
  f.number("switch_tdp_per_capacity", c.switch_tdp_per_capacity);
  f.number("link_tdp", c.link_tdp);
  f.number("adjustment_c", c.adjustment_c);
  f.boolean("normalize", c.normalize);
  f.finish();
}

ServingScenario read_scenario(Fields f) {
  ServingScenario s;
  s.name = f.as_string(f.need("name"), f.at("name"));
  s.tpot_slo = f.as_number(f.need("tpot_slo_ms"), f.at("tpot_slo_ms")) * 1e-3;
  s.context_length = f.as_integer(f.need("context_length"), f.at("context_length"));
  f.integer("spec_m", s.sd.spec_m);
  f.number("spec_p", s.sd.spec_p);
  f.finish();
  return s;
}

AlphaBetaParams read_alpha_beta(Fields f, AlphaBetaParams p) {
  double a0 = p.alpha0 * 1e6, ar = p.alpha_r * 1e6, ad = p.alpha_d * 1e6;
  f.number("alpha0_us", a0);
  f.number("alpha_r_us", ar);
  f.number("alpha_d_us", ad);
  f.number("link_utilization", p.link_utilization);
  f.finish();
  p.alpha0 = a0 * 1e-6;
  p.alpha_r = ar * 1e-6;
  p.alpha_d = ad * 1e-6;
  return p;
}

void read_sweep(Fields f, Config& c) {
  f.integers("cluster_sizes", c.cluster_sizes);
  f.ratios("bandwidth_multipliers", c.bandwidth_multipliers);
  if (const json* modes = f.take("modes")) {
    c.mode_sets.clear();
    const auto where = f.at("modes");
    for (const auto& label : f.as_list<std::string>(*modes, where, &Fields::as_string)) {
      auto m = ModeSet::parse(label);
      if (!m) f.bad(where, "unknown mode set '" + label + "' (noopt, dbo, sd, dbo+sd)");
      c.mode_sets.push_back(*m);
    }
  }
  f.integers("ep", c.sweep.ep_candidates);
  f.integers("tp", c.sweep.tp_candidates);
  f.integer("bisection_steps", c.sweep.bisection_steps);
  f.integer("max_batch_per_xpu", c.sweep.max_batch_per_xpu);
  f.number("alpha_scale", c.alpha_scale);
  if (f.has("alpha_beta")) {
    Fields ab = f.object("alpha_beta");
    if (ab.has("intra")) c.intra = read_alpha_beta(ab.object("intra"), c.intra);
    if (ab.has("inter")) c.inter = read_alpha_beta(ab.object("inter"), c.inter);
    ab.finish();
  }
  f.finish();
}

template <class F>
void checked(const std::string& origin, const std::string& section, F&& check) {
  try {
    check();
  } catch (const Error& e) {
    fail(Errc::InvalidConfig, origin + ": " + section + ": " + e.what());
  }
}

}  // namespace

std::optional<double> parse_ratio(std::string_view text) {
  auto one = [](std::string_view t) -> std::optional<double> {
    const std::string s(t);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return one(text);
  const auto num = one(text.substr(0, slash));
  const auto den = one(text.substr(slash + 1));
  if (!num || !den || *den == 0) return std::nullopt;
  return *num / *den;
}

ModelSpec parse_model(std::string_view text, const std::string& origin) {
  const json j = parse_json(text, origin);
  return read_model(Fields(j, "", origin));
}

ModelSpec load_model(const std::string& path) { return parse_model(read_file(path), path); }

Config parse_config(std::string_view text, const std::string& origin, const std::string& base_dir) {
  const json j = parse_json(text, origin);
  Fields root(j, "", origin);
  Config c;
  c.sources.push_back(origin);

  if (root.has("hardware")) read_hardware(root.object("hardware"), c);
  if (!c.profile_path.empty()) {
    c.profile_path = resolve(c.profile_path, base_dir);
    c.sources.push_back(c.profile_path);
  }

  const json& model = root.need("model");
  if (model.is_string()) {
    const auto path = resolve(model.get<std::string>(), base_dir);
    c.model = load_model(path);
    c.sources.push_back(path);
  } else {
    c.model = read_model(Fields(model, "model", origin));
  }

  if (const json* topos = root.take("topologies")) {
    if (!topos->is_array()) root.bad("topologies", "expected an array");
    for (std::size_t i = 0; i < topos->size(); ++i)
      c.topologies.push_back(
          read_topology(Fields((*topos)[i], "topologies[" + std::to_string(i) + "]", origin)));
  }
  if (root.has("costs")) read_costs(root.object("costs"), c.costs);
  if (const json* scen = root.take("scenarios")) {
    if (!scen->is_array()) root.bad("scenarios", "expected an array");
    for (std::size_t i = 0; i < scen->size(); ++i)
      c.scenarios.push_back(
          read_scenario(Fields((*scen)[i], "scenarios[" + std::to_string(i) + "]", origin)));
  }
  if (root.has("sweep")) read_sweep(root.object("sweep"), c);
  root.finish();

  checked(origin, "hardware", [&] {
    validate(c.hardware);
    validate(c.calibration);
  });
  checked(origin, "costs", [&] { validate(c.costs); });
  checked(origin, "sweep", [&] {
    validate(c.intra);
    validate(c.inter);
  });
  validate(c);
  return c;
}

Config load_config(const std::string& path) {
  const auto base = fs::path(path).parent_path().string();
  return parse_config(read_file(path), path, base);
}

void validate(const Config& c) {
  const auto& origin = c.sources.empty() ? std::string("config") : c.sources.front();
  std::set<std::string> names;
  for (const auto& t : c.topologies)
    if (!names.insert(t.name).second)
      fail(Errc::InvalidConfig, origin + ": topologies: duplicate name '" + t.name + "'");
  names.clear();
  for (const auto& s : c.scenarios) {
    if (!names.insert(s.name).second)
      fail(Errc::InvalidConfig, origin + ": scenarios: duplicate name '" + s.name + "'");
    checked(origin, "scenarios", [&] { validate(s); });
  }
  for (int n : c.cluster_sizes)
    if (n < 1) fail(Errc::InvalidConfig, origin + ": sweep.cluster_sizes: must be positive");
  for (double b : c.bandwidth_multipliers)
    if (!(b > 0))
      fail(Errc::InvalidConfig, origin + ": sweep.bandwidth_multipliers: must be positive");
  if (!(c.alpha_scale >= 0 && c.alpha_scale <= 1))
    fail(Errc::InvalidConfig, origin + ": sweep.alpha_scale: must lie in [0, 1]");
  if (c.sweep.bisection_steps < 0)
    fail(Errc::InvalidConfig, origin + ": sweep.bisection_steps: must be non-negative");
}

GridAxes grid_axes(const Config& c) {
  GridAxes a;
  a.topologies = c.topologies;
  a.bandwidth_multipliers = c.bandwidth_multipliers;
  a.cluster_sizes = c.cluster_sizes;
  a.scenarios = c.scenarios;
  a.mode_sets = c.mode_sets;
  return a;
}

GridBase grid_base(const Config& c, const ProfileTable* profile) {
  GridBase b;
  b.model = c.model;
  b.hw = c.hardware;
  b.calibration = c.calibration;
  b.profile = profile;
  b.intra = c.intra;
  b.inter = c.inter;
  b.alpha_scale = c.alpha_scale;
  b.cost = c.costs;
  b.sweep = c.sweep;
  return b;
}

}  // namespace moenet
