#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ebib/errors.hpp"
#include "ebib/rng.hpp"
#include "internal.hpp"

#ifndef EBIB_VERSION
#define EBIB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace ebib::experiments {
namespace detail {

namespace {

std::string type_name(const json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

}  // namespace

Params::Params(const json& defaults, const json& given, const std::string& experiment)
    : merged_(defaults), experiment_(experiment) {
  if (!given.is_object()) throw ValidationError(experiment + ": params must be an object");
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (!defaults.contains(it.key())) throw ValidationError(experiment + ": unknown parameter '" + it.key() + "'");
    const json& d = defaults.at(it.key());
    if (type_name(d) != type_name(it.value()))
      throw ValidationError(experiment + ": parameter '" + it.key() + "' must be " + type_name(d) + ", got " +
                            type_name(it.value()));
    if (d.is_array()) {
      for (const auto& e : it.value())
        if (!e.is_number()) throw ValidationError(experiment + ": parameter '" + it.key() + "' must hold numbers");
      if (it.value().empty()) throw ValidationError(experiment + ": parameter '" + it.key() + "' is empty");
    }
    merged_[it.key()] = it.value();
  }
}

const json& Params::at(const std::string& key) const {
  if (!merged_.contains(key)) throw Error(experiment_ + ": schema has no parameter " + key);
  return merged_.at(key);
}

double Params::num(const std::string& key) const { return at(key).get<double>(); }

int Params::integer(const std::string& key) const {
  const double v = num(key);
  if (v != std::floor(v)) throw ValidationError(experiment_ + ": parameter '" + key + "' must be an integer");
  return static_cast<int>(v);
}

bool Params::flag(const std::string& key) const { return at(key).get<bool>(); }
std::string Params::str(const std::string& key) const { return at(key).get<std::string>(); }
std::vector<double> Params::vec(const std::string& key) const { return at(key).get<std::vector<double>>(); }

std::vector<int> Params::ints(const std::string& key) const {
  std::vector<int> out;
  for (double v : vec(key)) {
    if (v != std::floor(v)) throw ValidationError(experiment_ + ": parameter '" + key + "' must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

const std::vector<Definition>& registry() {
  static const std::vector<Definition> all = [] {
    std::vector<Definition> v;
    for (auto part : {normal_mean_experiments(), regression_experiments(), mixture_experiments()})
      for (auto& d : part) v.push_back(std::move(d));
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return v;
  }();
  return all;
}

const Definition& find(const std::string& name) {
  for (const auto& d : registry())
    if (d.name == name) return d;
  throw ValidationError("unknown experiment '" + name + "'");
}

std::uint64_t rep_seed(const ExperimentConfig& c, int rep, std::int64_t n) {
  return derive_seed(c.seed_base, {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(n)});
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] <= v[i - 1])) return false;
  return true;
}

Check check(std::string name, bool passed, double value, std::string detail) {
  return Check{std::move(name), passed, value, std::move(detail)};
}

io::ResultTable table(std::string name, std::vector<std::string> columns) {
  io::ResultTable t;
  t.name = std::move(name);
  t.columns = std::move(columns);
  return t;
}

}  // namespace detail

namespace {

const std::set<std::string> kTopLevel = {"experiment", "description", "seeds",      "output_dir",
                                         "threads",    "dump_chains", "params"};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!kTopLevel.count(it.key())) throw ValidationError("unknown config key '" + it.key() + "'");
  ExperimentConfig c;
  try {
    if (!doc.contains("experiment")) throw ValidationError("config: missing 'experiment'");
    c.experiment = doc.at("experiment").get<std::string>();
    if (!doc.contains("seeds")) throw ValidationError("config: missing 'seeds'");
    const json& s = doc.at("seeds");
    if (!s.is_object()) throw ValidationError("config: 'seeds' must be an object {count, base}");
    for (auto it = s.begin(); it != s.end(); ++it)
      if (it.key() != "count" && it.key() != "base") throw ValidationError("unknown seeds key '" + it.key() + "'");
    if (!s.contains("count") || !s.at("count").is_number_integer())
      throw ValidationError("config: seeds.count must be an integer");
    c.seed_count = s.at("count").get<int>();
    if (c.seed_count < 1) throw ValidationError("config: seeds.count must be at least 1");
    if (s.contains("base")) {
      if (!s.at("base").is_number_unsigned()) throw ValidationError("config: seeds.base must be a nonnegative integer");
      c.seed_base = s.at("base").get<std::uint64_t>();
    }
    if (doc.contains("description")) c.description = doc.at("description").get<std::string>();
    c.output_dir = doc.contains("output_dir") ? doc.at("output_dir").get<std::string>() : c.experiment;
    if (doc.contains("threads")) {
      if (!doc.at("threads").is_number_integer() || doc.at("threads").get<int>() < 0)
        throw ValidationError("config: threads must be a nonnegative integer");
      c.threads = doc.at("threads").get<int>();
    }
    if (doc.contains("dump_chains")) c.dump_chains = doc.at("dump_chains").get<bool>();
    if (doc.contains("params")) c.params = doc.at("params");
  } catch (const json::type_error& e) {
    throw ValidationError(std::string("config: wrong value type: ") + e.what());
  }
  c.hash = io::fnv1a64(doc.dump());
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& config) {
  const auto& def = detail::find(config.experiment);
  if (config.seed_count < 1) throw ValidationError("config: seeds.count must be at least 1");
  detail::Params p(def.defaults, config.params, def.name);
  (void)p;
}

std::vector<ExperimentInfo> list_experiments() {
  std::vector<ExperimentInfo> out;
  for (const auto& d : detail::registry()) out.push_back({d.name, d.description});
  return out;
}

RunResult run_experiment(const ExperimentConfig& config, const std::string& output_root) {
  const auto& def = detail::find(config.experiment);
  const detail::Params params(def.defaults, config.params, def.name);
  fs::path dir = fs::path(config.output_dir);
  if (dir.is_relative()) dir = fs::path(output_root.empty() ? "." : output_root) / dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());

  detail::Context ctx{config, params,
                      config.threads > 0 ? config.threads
                                         : std::max(1, static_cast<int>(std::thread::hardware_concurrency())),
                      {}};
  if (config.dump_chains) {
    ctx.chain_dir = (dir / "chains").string();
    fs::create_directories(ctx.chain_dir);
  }
  detail::Outcome out = def.run(ctx);

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config.hash));
  const std::vector<std::string> provenance = {
      std::string("experiment: ") + def.name, std::string("config_hash: ") + hash,
      "seed_base: " + std::to_string(config.seed_base), "seed_count: " + std::to_string(config.seed_count),
      "seed_rule: derive_seed(base, {seed, n})", std::string("version: ") + EBIB_VERSION};

  RunResult res;
  res.directory = dir.string();
  for (auto& t : out.tables) {
    std::vector<std::string> header = provenance;
    header.insert(header.end(), t.header.begin(), t.header.end());
    t.header = std::move(header);
    const auto path = (dir / (t.name + ".csv")).string();
    io::write_text(path, t.to_csv());
    res.files.push_back(path);
  }
  res.checks = out.checks;
  res.passed = !out.checks.empty() &&
               std::all_of(out.checks.begin(), out.checks.end(), [](const Check& c) { return c.passed; });

  json summary;
  summary["experiment"] = def.name;
  summary["config_hash"] = hash;
  summary["seed_base"] = config.seed_base;
  summary["seed_count"] = config.seed_count;
  summary["version"] = EBIB_VERSION;
  summary["params"] = params.merged();
  summary["passed"] = res.passed;
  summary["checks"] = json::array();
  for (const auto& c : out.checks) {
    json j{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}};
    j["value"] = std::isfinite(c.value) ? json(c.value) : json(io::format_double(c.value));
    summary["checks"].push_back(j);
  }
  summary["stats"] = out.stats;
  const auto spath = (dir / "summary.json").string();
  io::write_text(spath, summary.dump(2) + "\n");
  res.files.push_back(spath);
  return res;
}

io::ResultTable emit_density_curves(const std::vector<PosteriorRep>& reps, const std::vector<double>& x_grid) {
  std::vector<std::string> cols{"x"};
  for (std::size_t k = 0; k < reps.size(); ++k) {
    if (dimension(reps[k]) != 1) throw DomainError("emit_density_curves: representations must be 1-D");
    cols.push_back("dens_" + std::to_string(k + 1));
  }
  auto t = detail::table("densities", cols);
  for (double x : x_grid) {
    std::vector<double> row{x};
    for (const auto& r : reps) row.push_back(density_1d(r, x));
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw DomainError("linear_grid: need points ≥ 2 and hi > lo");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
  return g;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0)) throw DomainError("log_grid: lower end must be positive");
  auto g = linear_grid(std::log(lo), std::log(hi), points);
  for (auto& v : g) v = std::exp(v);
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace ebib::experiments
