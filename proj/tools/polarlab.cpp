#include "polar/engine.hpp"
#include "polar/experiments.hpp"
#include "polar/model.hpp"
#include "polar/oracle.hpp"
#include "polar/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polar;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  int n = 3;
  double beta = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t reps = 1000;
  std::string scheme = "direct";
  std::uint64_t max_events = 0;  // 0 = unset
  double max_time = 0.0;         // 0 = unset
  double delta = 0.5;
  int cap = 4;
  int m = 3;
  std::string start;   // comma-separated pressures
  std::string target;  // L | L+ | L- | C+ | C-
  std::string out = "out";
  std::string format = "both";
};

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

PressureList parse_start(const std::string& text, int n) {
  if (text.empty()) return PressureList::Zero(n);
  std::vector<std::int64_t> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stoll(item));
  if (static_cast<int>(vals.size()) != n)
    throw CLI::ValidationError("--start", "expected " + std::to_string(n) + " pressures");
  PressureList u(n);
  for (int i = 0; i < n; ++i) u[i] = vals[static_cast<std::size_t>(i)];
  check_state(u);
  return u;
}

TargetClass parse_target(const std::string& text) {
  if (text == "L") return TargetClass::ladder;
  if (text == "L+") return TargetClass::ladder_plus;
  if (text == "L-") return TargetClass::ladder_minus;
  if (text == "C+") return TargetClass::consensus_plus;
  if (text == "C-") return TargetClass::consensus_minus;
  throw CLI::ValidationError("--target", "expected one of L, L+, L-, C+, C-");
}

Scheme parse_scheme(const std::string& text) {
  if (text == "direct") return Scheme::direct;
  if (text == "thinning") return Scheme::thinning;
  throw CLI::ValidationError("--scheme", "expected direct or thinning");
}

std::string state_text(const PressureList& u) {
  std::string s;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(u[i]);
  }
  return s;
}

json config_json(const RunConfig& c) {
  return json{{"n", c.n},           {"beta", c.beta},
              {"seed", c.seed},     {"reps", c.reps},
              {"scheme", c.scheme}, {"max-events", c.max_events},
              {"max-time", c.max_time}, {"delta", c.delta},
              {"cap", c.cap},       {"m", c.m},
              {"start", c.start},   {"target", c.target},
              {"out", c.out},       {"format", c.format}};
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c,
                    const PressureList& start, const std::vector<std::string>& files,
                    const json& pass_flags) {
  json m{{"command", command},
         {"version", kVersion},
         {"config", config_json(c)},
         {"seed", c.seed},
         {"start", state_text(start)},
         {"results_files", files},
         {"pass_flags", pass_flags}};
  std::ofstream os(dir / "manifest.json");
  os << m.dump(2) << '\n';
}

bool all_flags_pass(const json& flags) {
  for (const auto& [key, value] : flags.items())
    if (value.is_boolean() && !value.get<bool>()) return false;
  return true;
}

// Minimal static histogram, enough to eyeball a hitting-time distribution.
void write_svg_histogram(const fs::path& path, const std::vector<double>& samples) {
  std::ofstream os(path);
  const int width = 640, height = 360, bins = 30, pad = 20;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\">\n";
  if (!samples.empty()) {
    const double lo = *std::min_element(samples.begin(), samples.end());
    const double hi = *std::max_element(samples.begin(), samples.end());
    const double span = hi > lo ? hi - lo : 1.0;
    std::vector<int> count(bins, 0);
    for (double x : samples) {
      int b = static_cast<int>((x - lo) / span * bins);
      ++count[std::clamp(b, 0, bins - 1)];
    }
    const int peak = *std::max_element(count.begin(), count.end());
    const double bw = static_cast<double>(width - 2 * pad) / bins;
    for (int b = 0; b < bins; ++b) {
      const double h = peak > 0 ? static_cast<double>(count[b]) / peak * (height - 2 * pad) : 0;
      os << "<rect x=\"" << pad + b * bw << "\" y=\"" << height - pad - h << "\" width=\""
         << bw * 0.9 << "\" height=\"" << h << "\" fill=\"#4878a8\"/>\n";
    }
  }
  os << "</svg>\n";
}

StopCondition budget_from(const RunConfig& c) {
  StopCondition stop;
  if (c.max_events > 0) stop.max_events = c.max_events;
  if (c.max_time > 0.0) stop.max_time = c.max_time;
  return stop;
}

ExperimentSpec spec_from(const RunConfig& c, const PressureList& start) {
  ExperimentSpec spec;
  spec.grid = {{c.n, c.beta}};
  spec.starts = {start};
  spec.replications = c.reps;
  spec.master_seed = c.seed;
  spec.scheme = parse_scheme(c.scheme);
  spec.budget = budget_from(c);
  spec.delta = c.delta;
  return spec;
}

int cmd_simulate(const RunConfig& c, const fs::path& dir) {
  const ModelParams p(c.n, c.beta);
  const PressureList u0 = parse_start(c.start, c.n);
  StopCondition stop = budget_from(c);
  if (!stop.max_events && !stop.max_time) stop.max_events = 1000;
  if (!c.target.empty()) stop.target = Target{parse_target(c.target), std::nullopt};
  const Trajectory traj = simulate(p, u0, stop, parse_scheme(c.scheme), c.seed);
  {
    std::ofstream os(dir / "trajectory.jsonl");
    write_jsonl(os, p, c.seed, parse_scheme(c.scheme), traj);
  }
  write_manifest(dir, "simulate", c, u0, {"trajectory.jsonl"}, json::object());
  return 0;
}

int cmd_occupation(const RunConfig& c, const fs::path& dir) {
  const PressureList u0 = parse_start(c.start, c.n);
  const auto rows = occupation_experiment(spec_from(c, u0));
  const OccupationRow& row = rows.front();
  {
    std::ofstream os(dir / "occupation.csv");
    os << "class,fraction,stderr\n";
    for (const auto& [key, f] : row.fraction)
      os << key << ',' << fmt17(f) << ',' << fmt17(row.stderr_.at(key)) << '\n';
  }
  {
    std::ofstream os(dir / "occupation_states.csv");
    os << "state,fraction\n";
    for (const auto& [key, f] : row.state_fraction)
      os << '"' << key << "\"," << fmt17(f) << '\n';
  }
  json summary{{"n", row.n_actors},
               {"beta", row.beta},
               {"observed_time", row.observed_time},
               {"events", row.events},
               {"fraction", row.fraction},
               {"stderr", row.stderr_}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  write_manifest(dir, "occupation", c, u0,
                 {"occupation.csv", "occupation_states.csv", "summary.json"}, json::object());
  return 0;
}

int cmd_consensus(const RunConfig& c, const fs::path& dir) {
  const PressureList u0 = parse_start(c.start, c.n);
  const auto rows = consensus_time_experiment(spec_from(c, u0));
  const ConsensusRow& row = rows.front();
  {
    std::ofstream os(dir / "consensus.csv");
    os << "replication,hitting_time,censored\n";
    std::size_t k = 0;
    for (double t : row.samples) os << k++ << ',' << fmt17(t) << ",0\n";
    for (std::uint64_t i = 0; i < row.censored; ++i) os << k++ << ",,1\n";
  }
  write_svg_histogram(dir / "consensus.svg", row.samples);
  json pass{{"tail_below_5pct", row.tail.estimate < 0.05}};
  json summary{{"n", row.n_actors},
               {"beta", row.beta},
               {"start", state_text(row.start)},
               {"threshold", row.threshold},
               {"tail_estimate", row.tail.estimate},
               {"tail_low", row.tail.low},
               {"tail_high", row.tail.high},
               {"censored", row.censored},
               {"mean", row.times.mean},
               {"pass_flags", pass}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  write_manifest(dir, "consensus", c, u0, {"consensus.csv", "consensus.svg", "summary.json"},
                 pass);
  return all_flags_pass(pass) ? 0 : 1;
}

int cmd_metastable(const RunConfig& c, const fs::path& dir) {
  PressureList start;
  if (c.start.empty()) {
    start = PressureList(c.n);
    for (int i = 0; i < c.n; ++i) start[i] = i;
  } else {
    start = parse_start(c.start, c.n);
  }
  const TargetClass target = c.target.empty() ? TargetClass::ladder_minus
                                              : parse_target(c.target);
  const ModelParams p(c.n, c.beta);
  const MetastabilityResult res = metastability_run(p, start, target, c.reps, c.seed,
                                                    parse_scheme(c.scheme), budget_from(c));
  {
    std::ofstream os(dir / "hitting_times.csv");
    os << "replication,hitting_time,censored\n";
    std::size_t k = 0;
    for (double t : res.samples) os << k++ << ',' << fmt17(t) << ",0\n";
    for (std::uint64_t i = 0; i < res.censored; ++i) os << k++ << ",,1\n";
  }
  write_svg_histogram(dir / "hitting_times.svg", res.samples);
  const double ks_crit = ks_critical_5pct(res.samples.size());
  json pass{{"bound_ok", res.bound_ok},
            {"ks_ok", res.ks_valid && res.summary.ks_exp1 < ks_crit}};
  json summary{{"n", res.n_actors},
               {"beta", res.beta},
               {"start", state_text(res.start)},
               {"c_hat", res.c_hat},
               {"c_lower_bound", res.c_lower_bound},
               {"ks_exp1", res.summary.ks_exp1},
               {"ks_critical", ks_crit},
               {"ks_valid", res.ks_valid},
               {"mean", res.summary.mean},
               {"censored", res.censored},
               {"pass_flags", pass}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  write_manifest(dir, "metastable", c, start,
                 {"hitting_times.csv", "hitting_times.svg", "summary.json"}, pass);
  return all_flags_pass(pass) ? 0 : 1;
}

int cmd_oracle_check(const RunConfig& c, const fs::path& dir) {
  const ModelParams p(c.n, c.beta);
  const TruncatedChain chain = build_generator(p, c.cap);
  const StationaryPair st = stationary_distribution(chain);
  const double kac = kac_consistency(chain);
  const bool irr = is_irreducible(chain);
  {
    std::ofstream os(dir / "states.csv");
    write_states_csv(os, chain);
  }
  {
    std::ofstream os(dir / "generator.csv");
    write_triplets_csv(os, chain);
  }
  {
    std::ofstream os(dir / "stationary.csv");
    os << "state,mu,mu_tilde\n";
    for (std::size_t i = 0; i < chain.states.size(); ++i)
      os << '"' << state_text(chain.states[i]) << "\"," << fmt17(st.mu[static_cast<long>(i)])
         << ',' << fmt17(st.mu_tilde[static_cast<long>(i)]) << '\n';
  }
  json pass{{"irreducible", irr}, {"kac_ok", kac <= 1e-8}};
  json summary{{"n", c.n},
               {"beta", c.beta},
               {"cap", c.cap},
               {"n_states", chain.states.size()},
               {"residual_mu", st.residual_mu},
               {"residual_mu_tilde", st.residual_mu_tilde},
               {"kac_max_error", kac},
               {"pass_flags", pass}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  write_manifest(dir, "oracle-check", c, PressureList::Zero(c.n),
                 {"states.csv", "generator.csv", "stationary.csv", "summary.json"}, pass);
  return all_flags_pass(pass) ? 0 : 1;
}

int cmd_greedy_check(const RunConfig& c, const fs::path& dir) {
  const LemmaReport report = greedy_consensus_check(c.n, c.cap);
  json summary{{"n", c.n},
               {"cap", c.cap},
               {"n_states_checked", report.n_states_checked},
               {"max_steps_needed", report.max_steps_needed},
               {"all_pass", report.all_pass}};
  if (report.counterexample) {
    json moves = json::array();
    for (const auto& [a, o] : report.counterexample->second)
      moves.push_back({{"actor", a}, {"opinion", opinion_sign(o)}});
    summary["counterexample"] = {{"start", state_text(report.counterexample->first)},
                                 {"moves", moves}};
  }
  std::ofstream(dir / "report.json") << summary.dump(2) << '\n';
  json pass{{"all_pass", report.all_pass}};
  write_manifest(dir, "greedy-check", c, PressureList::Zero(c.n), {"report.json"}, pass);
  return report.all_pass ? 0 : 1;
}

int cmd_m_events(const RunConfig& c, const fs::path& dir) {
  const ModelParams p(c.n, c.beta);
  const PressureList u0 = parse_start(c.start, c.n);
  const auto rows = m_event_probability_experiment(spec_from(c, u0), c.m);
  const MEventRow& row = rows.front();
  const double exact = exact_m_event_probability(p, u0, c.m);
  {
    std::ofstream os(dir / "m_events.csv");
    os << "m,estimate,ci_low,ci_high,exact,zeta_power_m\n";
    os << row.m << ',' << fmt17(row.estimate.estimate) << ',' << fmt17(row.estimate.low) << ','
       << fmt17(row.estimate.high) << ',' << fmt17(exact) << ',' << fmt17(row.zeta_power_m)
       << '\n';
  }
  json pass{{"mc_bound_ok", row.bound_ok},
            {"exact_bound_ok", exact >= row.zeta_power_m - 1e-12},
            {"mc_matches_exact", row.estimate.low <= exact && exact <= row.estimate.high}};
  json summary{{"n", c.n},
               {"beta", c.beta},
               {"start", state_text(u0)},
               {"m", c.m},
               {"estimate", row.estimate.estimate},
               {"exact", exact},
               {"zeta_power_m", row.zeta_power_m},
               {"pass_flags", pass}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  write_manifest(dir, "m-events", c, u0, {"m_events.csv", "summary.json"}, pass);
  return all_flags_pass(pass) ? 0 : 1;
}

// Flat key=value config file; keys mirror flag names, flags given on the
// command line take precedence over the file.
void apply_config_file(const CLI::App* sub, const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--config",
                                 path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw CLI::ValidationError("--config", path + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // explicit flag wins
    try {
      if (key == "n") c.n = std::stoi(value);
      else if (key == "beta") c.beta = std::stod(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "reps") c.reps = std::stoull(value);
      else if (key == "scheme") c.scheme = value;
      else if (key == "max-events") c.max_events = std::stoull(value);
      else if (key == "max-time") c.max_time = std::stod(value);
      else if (key == "delta") c.delta = std::stod(value);
      else if (key == "cap") c.cap = std::stoi(value);
      else if (key == "m") c.m = std::stoi(value);
      else if (key == "start") c.start = value;
      else if (key == "target") c.target = value;
      else if (key == "out") c.out = value;
      else if (key == "format") c.format = value;
    } catch (const std::exception&) {
      throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) +
                                                 ": bad value for '" + key + "'");
    }
  }
}

void add_common_options(CLI::App* sub, RunConfig& c, std::string& config_path) {
  sub->add_option("--n", c.n, "number of actors (>= 3)");
  sub->add_option("--beta", c.beta, "polarization coefficient (>= 0)");
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--reps", c.reps, "number of replications");
  sub->add_option("--scheme", c.scheme, "direct | thinning");
  sub->add_option("--max-events", c.max_events, "event budget per run");
  sub->add_option("--max-time", c.max_time, "time horizon per run");
  sub->add_option("--delta", c.delta, "consensus threshold exponent parameter");
  sub->add_option("--cap", c.cap, "truncation cap for exact computations");
  sub->add_option("--m", c.m, "number of leading events checked");
  sub->add_option("--start", c.start, "comma-separated start pressures");
  sub->add_option("--target", c.target, "L | L+ | L- | C+ | C-");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--format", c.format, "csv | jsonl | both");
  sub->add_option("--config", config_path, "flat key=value config file (flags override)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polarlab: event-driven polarized-opinion process toolkit"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;

  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, const fs::path&);
  };
  const Cmd commands[] = {
      {"simulate", "run one trajectory and export it as JSONL", cmd_simulate},
      {"occupation", "time-weighted class occupation over a long run", cmd_occupation},
      {"consensus", "tail of the consensus reaching time", cmd_consensus},
      {"metastable", "ladder-to-opposite-ladder hitting times", cmd_metastable},
      {"oracle-check", "exact truncated-chain diagnostics", cmd_oracle_check},
      {"greedy-check", "exhaustive forced-consensus verification", cmd_greedy_check},
      {"m-events", "probability that the first m events are admissible moves", cmd_m_events},
  };
  for (const Cmd& cmd : commands)
    add_common_options(app.add_subcommand(cmd.name, cmd.help), cfg, config_path);

  try {
    app.parse(argc, argv);
    if (!config_path.empty())
      for (const Cmd& cmd : commands)
        if (const CLI::App* sub = app.get_subcommand(cmd.name); sub->parsed())
          apply_config_file(sub, config_path, cfg);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (const char* env_out = std::getenv("POLARLAB_OUT")) cfg.out = env_out;
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    for (const Cmd& cmd : commands)
      if (app.get_subcommand(cmd.name)->parsed()) return cmd.run(cfg, dir);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
