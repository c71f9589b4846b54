// Command-line front end: stability horizons, pooling diagnostics and the
// experiment drivers that write CSV tables plus JSON manifests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poolfund/approximation.hpp"
#include "poolfund/errors.hpp"
#include "poolfund/experiments.hpp"
#include "poolfund/life_table.hpp"
#include "poolfund/pool_metrics.hpp"
#include "poolfund/savings.hpp"
#include "poolfund/stability_mc.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace poolfund;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDomain = 3;
constexpr const char* kLifeTableEnv = "POOLFUND_LIFE_TABLE";

// Flags shared by most subcommands. Each subcommand registers the subset
// it understands.
struct Flags {
  std::vector<std::string> savings;
  double eps1 = 0.1;
  std::optional<double> eps2;
  bool eps2_inf = false;
  double beta = 0.9;
  std::size_t reps = kDefaultReplications;
  bool paper_fidelity = false;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = default_workers();
  std::string life_table;
  int base_age = 70;
  double rate = 0.0;
  std::string out;
  std::string manifest;
};

void add_savings(CLI::App* app, Flags& f, bool required) {
  auto* opt = app->add_option("--savings", f.savings,
                              "Roster: inline 'count@amount,...' or a CSV with one amount per row");
  if (required) opt->required();
}

void add_band(CLI::App* app, Flags& f) {
  app->add_option("--eps1", f.eps1, "Lower tolerance (income may fall to 1-eps1)");
  auto* eps2 = app->add_option("--eps2", f.eps2, "Upper tolerance (income may rise to 1+eps2)");
  auto* inf = app->add_flag("--eps2-inf", f.eps2_inf, "No upper tolerance");
  eps2->excludes(inf);
  app->add_option("--beta", f.beta, "Required probability of staying in the band");
}

void add_mc(CLI::App* app, Flags& f) {
  app->add_option("--reps", f.reps, "Monte Carlo replications");
  app->add_flag("--paper-fidelity", f.paper_fidelity, "Use 1e6 replications");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--workers", f.workers, "Worker threads");
}

void add_table(CLI::App* app, Flags& f) {
  app->add_option("--life-table", f.life_table,
                  std::string("Mortality CSV (age plus qx and/or lx); default $") + kLifeTableEnv);
  app->add_option("--base-age", f.base_age, "Age of all members at time 0");
  app->add_option("--rate", f.rate, "Per-period interest rate R");
}

void add_out(CLI::App* app, Flags& f, const std::string& what) {
  app->add_option("--out", f.out, what + " CSV path (stdout when omitted)");
  app->add_option("--manifest", f.manifest, "JSON manifest path (default <out>.json)");
}

StabilityParams params_of(const Flags& f, double default_eps2) {
  StabilityParams p;
  p.eps_lower = f.eps1;
  p.eps_upper = f.eps2_inf ? std::numeric_limits<double>::infinity() : f.eps2.value_or(default_eps2);
  p.beta = f.beta;
  p.validate();
  return p;
}

RunOptions options_of(const Flags& f, double default_eps2) {
  RunOptions o;
  o.params = params_of(f, default_eps2);
  o.replications = f.paper_fidelity ? kPaperReplications : f.reps;
  if (o.replications == 0) throw InputError("--reps must be >= 1");
  o.seed = f.seed;
  o.workers = f.workers == 0 ? 1 : f.workers;
  return o;
}

SavingsVector read_roster(const std::string& text) {
  if (looks_like_savings_spec(text)) {
    const auto terms = parse_savings_spec(text);
    return expand_savings_terms(terms);
  }
  return read_savings_csv(text);
}

SavingsHashMap read_hash_map(const std::string& text) {
  if (looks_like_savings_spec(text)) {
    const auto terms = parse_savings_spec(text);
    return SavingsHashMap::from_terms(terms);
  }
  return SavingsHashMap::from_savings(read_savings_csv(text));
}

SavingsVector single_roster(const Flags& f) {
  if (f.savings.size() != 1) throw InputError("give exactly one --savings");
  return read_roster(f.savings.front());
}

std::string table_path(const Flags& f) {
  if (!f.life_table.empty()) return f.life_table;
  if (const char* env = std::getenv(kLifeTableEnv); env != nullptr && *env != '\0') return env;
  return {};
}

std::string stand_in_path() {
  return (fs::path(POOLFUND_DATA_DIR) / "gompertz_stand_in_70.csv").string();
}

struct TableChoice {
  std::shared_ptr<const LifeTable> table;
  std::string path;
  bool stand_in = false;
};

TableChoice optional_table(const Flags& f) {
  const auto path = table_path(f);
  if (path.empty()) return {};
  return {std::make_shared<const LifeTable>(load_life_table(path, f.base_age, f.rate)), path, false};
}

// Experiment drivers fall back to the bundled stand-in table.
TableChoice table_or_stand_in(const Flags& f) {
  auto choice = optional_table(f);
  if (choice.table) return choice;
  const auto path = stand_in_path();
  std::cerr << "note: no life table given; using the Gompertz stand-in " << path << '\n';
  return {std::make_shared<const LifeTable>(load_life_table(path, 70, f.rate)), path, true};
}

json band_json(const StabilityParams& p) {
  json j;
  j["eps1"] = p.eps_lower;
  j["eps2"] = p.upper_unbounded() ? json("inf") : json(p.eps_upper);
  j["beta"] = p.beta;
  return j;
}

json table_json(const TableChoice& t, const Flags& f) {
  if (!t.table) return nullptr;
  return {{"path", t.path}, {"stand_in", t.stand_in}, {"base_age", t.table->base_age()},
          {"limiting_age", t.table->limiting_age()}, {"rate", f.rate}};
}

// Writes CSV to --out (or stdout) and, when a file was written, a manifest.
template <class Writer>
void emit_csv(const Flags& f, const std::string& kind, const std::string& command, json flags,
              Writer write) {
  if (f.out.empty()) {
    write(std::cout);
    return;
  }
  {
    std::ofstream out(f.out);
    if (!out) throw InputError("cannot write " + f.out);
    write(out);
  }
  const std::string manifest_path = f.manifest.empty() ? f.out + ".json" : f.manifest;
  json manifest;
  manifest["kind"] = kind;
  manifest["command"] = command;
  manifest["csv"] = fs::path(f.out).filename().string();
  manifest["version"] = POOLFUND_VERSION;
  manifest["seed"] = f.seed;
  manifest["flags"] = std::move(flags);
  std::ofstream out(manifest_path);
  if (!out) throw InputError("cannot write " + manifest_path);
  out << manifest.dump(2) << '\n';
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

// Parses "a:b:step" or "a,b,c".
std::vector<std::size_t> parse_count_grid(const std::string& text) {
  std::vector<std::size_t> out;
  auto number = [&](const std::string& s) -> std::size_t {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      throw InputError("bad count '" + s + "' in grid '" + text + "'");
    }
    if (used != s.size() || v < 0) throw InputError("bad count '" + s + "' in grid '" + text + "'");
    return static_cast<std::size_t>(v);
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw InputError("range grid must be start:stop:step");
    const auto start = number(parts[0]), stop = number(parts[1]), step = number(parts[2]);
    if (step == 0 || stop < start) throw InputError("range grid needs step > 0 and stop >= start");
    for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  if (out.empty()) throw InputError("empty grid");
  return out;
}

int run_stability(const Flags& f, const std::string& taus_out) {
  const auto savings = single_roster(f);
  const auto options = options_of(f, std::numeric_limits<double>::infinity());
  const auto table = optional_table(f);
  const auto taus = sample_stop_times(savings, options.params, options.replications, options.seed,
                                      options.workers);
  auto est = quantile_estimate(taus, options.params.beta);
  if (table.table) est.t_star = table.table->f_inverse(est.u_star);
  if (!taus_out.empty()) {
    std::ofstream out(taus_out);
    if (!out) throw InputError("cannot write " + taus_out);
    out << "replication,tau_probability\n";
    out.precision(17);
    for (std::size_t r = 0; r < taus.size(); ++r) out << r << ',' << taus[r] << '\n';
  }
  json j;
  j["u_star"] = est.u_star;
  j["t_star"] = est.t_star ? json(*est.t_star) : json(nullptr);
  j["se"] = est.std_error_u;
  j["reps"] = est.replications;
  j["seed"] = options.seed;
  j["members"] = savings.size();
  j["nu"] = implied_number(savings);
  j["band"] = band_json(options.params);
  j["life_table"] = table_json(table, f);
  print(j);
  return 0;
}

int run_approx(const Flags& f) {
  if (f.eps2 && !f.eps2_inf) {
    throw InputError("the approximation has no upper band; use 'stability' for a finite --eps2");
  }
  const auto savings = single_roster(f);
  const double nu = implied_number(savings);
  const auto result = approx_u({nu, f.eps1, f.beta});
  const auto table = optional_table(f);
  json j;
  j["u"] = result.u;
  j["t_years"] = table.table ? json(table.table->f_inverse(result.u)) : json(nullptr);
  j["nu"] = nu;
  j["members"] = savings.size();
  j["boundary"] = result.boundary == ApproxBoundary::none           ? "none"
                  : result.boundary == ApproxBoundary::certain_beta ? "certain_beta"
                                                                    : "zero_tolerance";
  j["life_table"] = table_json(table, f);
  print(j);
  return 0;
}

int run_compare(const Flags& f) {
  const auto options = options_of(f, std::numeric_limits<double>::infinity());
  if (!options.params.upper_unbounded()) {
    throw InputError("compare needs an unbounded upper band (the approximation has none)");
  }
  const auto table = optional_table(f);
  std::vector<PoolRow> rows;
  if (f.savings.empty()) {
    rows = run_table1(table.table.get(), options);
  } else {
    for (const auto& text : f.savings) {
      rows.push_back({text, 0, 1.0, estimate_horizon(read_roster(text), table.table.get(), options)});
    }
  }
  json flags = {{"band", band_json(options.params)},
                {"reps", options.replications},
                {"savings", f.savings},
                {"life_table", table_json(table, f)}};
  emit_csv(f, "error-panel", "compare", flags,
           [&](std::ostream& out) { write_compare_csv(out, rows); });
  return 0;
}

int run_nu(const Flags& f) {
  if (f.savings.size() != 1) throw InputError("give exactly one --savings");
  const auto map = read_hash_map(f.savings.front());
  json j;
  j["nu"] = implied_number(map);
  j["members"] = map.total_count();
  j["groups"] = map.groups();
  if (map.has_integer_counts()) {
    const auto roster = map.expand();
    j["optimal_extension_amount"] = optimal_extension_amount(roster);
  }
  print(j);
  return 0;
}

int run_beneficial(const Flags& f) {
  if (f.savings.size() != 1) throw InputError("give exactly one --savings");
  const auto map = read_hash_map(f.savings.front());
  const auto scan = best_prefix(map);
  json j;
  j["beneficial"] = scan.best_groups == map.groups();
  j["best_prefix_groups"] = scan.best_groups;
  j["groups"] = map.groups();
  j["best_prefix_members"] = scan.cumulative_count[scan.best_groups - 1];
  j["best_prefix_max_amount"] = map.amounts()[scan.best_groups - 1];
  j["nu_max"] = scan.nu_max;
  j["nu_whole"] = scan.prefix_nu.back();
  if (!f.out.empty()) {
    const std::vector<double> amounts(map.amounts().begin(), map.amounts().end());
    emit_csv(f, "histogram-prefix", "beneficial", json{{"savings", f.savings}},
             [&](std::ostream& out) { write_prefix_csv(out, scan, amounts); });
  }
  print(j);
  return 0;
}

int run_cap_advise(const Flags& f, double slack, std::optional<std::uint64_t> synthetic_seed,
                   const std::string& histogram_out) {
  if (synthetic_seed && !f.savings.empty()) {
    throw InputError("--savings and --synthetic-seed are mutually exclusive");
  }
  const auto savings = synthetic_seed ? synthetic_roster({}, *synthetic_seed) : single_roster(f);
  const auto params = params_of(f, std::numeric_limits<double>::infinity());
  const auto table = optional_table(f);
  const auto advice = cap_advise(savings, table.table.get(), params, slack);

  auto horizon = [](const std::optional<HorizonPair>& h) {
    return h ? json{{"u", h->u}, {"t_years", h->years}} : json(nullptr);
  };
  json j;
  j["members"] = savings.size();
  j["groups"] = advice.amounts.size();
  j["nu_whole"] = advice.nu_whole;
  j["nu_max"] = advice.scan.nu_max;
  j["recommended_cap"] = advice.recommended_cap;
  j["best_prefix_groups"] = advice.scan.best_groups;
  j["best_prefix_members"] = advice.scan.cumulative_count[advice.scan.best_groups - 1];
  j["slack"] = advice.slack;
  j["window_groups"] = advice.window;
  j["cap_range"] = {advice.cap_low, advice.cap_high};
  j["member_range"] = {advice.members_low, advice.members_high};
  j["nu_window"] = {advice.nu_window_min, advice.nu_window_max};
  j["nu_capped_contributions"] = advice.nu_capped_contributions;
  j["horizon_best"] = horizon(advice.horizon_best);
  j["horizon_window_min"] = horizon(advice.horizon_window_min);
  j["horizon_window_max"] = horizon(advice.horizon_window_max);
  j["horizon_whole"] = horizon(advice.horizon_whole);
  j["horizon_capped_contributions"] = horizon(advice.horizon_capped_contributions);
  j["life_table"] = table_json(table, f);

  if (!histogram_out.empty()) {
    std::ofstream out(histogram_out);
    if (!out) throw InputError("cannot write " + histogram_out);
    out << "z,count\n";
    out.precision(17);
    double previous = 0.0;
    for (std::size_t i = 0; i < advice.amounts.size(); ++i) {
      out << advice.amounts[i] << ',' << advice.scan.cumulative_count[i] - previous << '\n';
      previous = advice.scan.cumulative_count[i];
    }
  }
  if (!f.out.empty()) {
    json flags = {{"band", band_json(params)},
                  {"slack", slack},
                  {"savings", f.savings},
                  {"synthetic_seed", synthetic_seed ? json(*synthetic_seed) : json(nullptr)},
                  {"histogram_csv", histogram_out.empty() ? json(nullptr)
                                                          : json(fs::path(histogram_out).filename().string())},
                  {"report", j}};
    emit_csv(f, "histogram-prefix", "cap-advise", flags,
             [&](std::ostream& out) { write_prefix_csv(out, advice.scan, advice.amounts); });
  }
  print(j);
  return 0;
}

int run_fund_path_cmd(const Flags& f) {
  const auto savings = single_roster(f);
  const auto table = table_or_stand_in(f);
  const auto rows = run_fund_path(savings, table.table, f.seed);
  json flags = {{"savings", f.savings}, {"life_table", table_json(table, f)}};
  emit_csv(f, "path-band", "fund-path", flags,
           [&](std::ostream& out) { write_fund_path_csv(out, rows); });
  return 0;
}

int run_table1_cmd(const Flags& f) {
  const auto options = options_of(f, std::numeric_limits<double>::infinity());
  const auto table = table_or_stand_in(f);
  const auto rows = run_table1(table.table.get(), options);
  json flags = {{"band", band_json(options.params)},
                {"reps", options.replications},
                {"n_poor", kTable1Poor},
                {"total", kTable1Total},
                {"ratios", kTable1Ratios},
                {"life_table", table_json(table, f)}};
  emit_csv(f, "error-panel", "table1", flags,
           [&](std::ostream& out) { write_pool_rows_csv(out, rows); });
  return 0;
}

int run_sweep_cmd(const Flags& f, const std::string& n_poor_text,
                  const std::vector<double>& ratios, std::size_t total, bool approx_only) {
  auto options = options_of(f, std::numeric_limits<double>::infinity());
  if (approx_only) {
    if (!options.params.upper_unbounded()) {
      throw InputError("--approx-only needs an unbounded upper band");
    }
    options.monte_carlo = false;
  }
  const auto table = table_or_stand_in(f);
  const auto grid = parse_count_grid(n_poor_text);
  const auto rows = run_sweep(table.table.get(), options, grid, ratios, total);
  json flags = {{"band", band_json(options.params)},
                {"reps", options.replications},
                {"n_poor", grid},
                {"ratios", ratios},
                {"total", total},
                {"approx_only", approx_only},
                {"life_table", table_json(table, f)}};
  emit_csv(f, "sweep-curves", "sweep", flags,
           [&](std::ostream& out) { write_pool_rows_csv(out, rows); });
  return 0;
}

int run_figure1_cmd(const Flags& f, double grid_step) {
  const auto savings = f.savings.empty() ? SavingsVector::two_group(900, 1.0, 100, 10.0)
                                         : single_roster(f);
  const auto options = options_of(f, 0.1);
  const auto table = table_or_stand_in(f);
  const auto result = run_figure1(savings, *table.table, options, grid_step);
  json flags = {{"band", band_json(options.params)},
                {"reps", options.replications},
                {"savings", f.savings.empty() ? json("900@1,100@10") : json(f.savings)},
                {"grid_step_years", grid_step},
                {"marker_u", result.marker_u},
                {"marker_years", result.marker_years},
                {"marker_se_u", result.marker_se_u},
                {"scenario", result.scenario},
                {"scenario_tau", result.scenario_tau},
                {"life_table", table_json(table, f)}};
  emit_csv(f, "path-band", "figure1", flags,
           [&](std::ostream& out) { write_figure1_csv(out, result); });
  if (!f.out.empty()) {
    print({{"marker_years", result.marker_years}, {"marker_u", result.marker_u},
           {"marker_se_u", result.marker_se_u}, {"scenario", result.scenario}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pooled annuity fund stability and pooling diagnostics"};
  app.set_version_flag("--version", std::string(POOLFUND_VERSION));
  app.require_subcommand(1);

  Flags f;
  std::string taus_out;
  double slack = kDefaultCapSlack;
  std::optional<std::uint64_t> synthetic_seed;
  std::string histogram_out;
  std::string n_poor_grid = "0:1000:50";
  std::vector<double> ratios = kTable1Ratios;
  std::size_t total = kTable1Total;
  bool approx_only = false;
  double grid_step = 0.05;

  auto* stability = app.add_subcommand("stability", "Monte Carlo maximal stable time");
  add_savings(stability, f, true);
  add_band(stability, f);
  add_mc(stability, f);
  add_table(stability, f);
  stability->add_option("--taus-out", taus_out, "CSV of the sampled stop times");

  auto* approx = app.add_subcommand("approx", "Brownian-bridge approximation of the stable time");
  add_savings(approx, f, true);
  add_band(approx, f);
  add_table(approx, f);

  auto* compare = app.add_subcommand("compare", "Monte Carlo against the approximation");
  add_savings(compare, f, false);
  add_band(compare, f);
  add_mc(compare, f);
  add_table(compare, f);
  add_out(compare, f, "Error table");

  auto* nu = app.add_subcommand("nu", "Implied number of homogeneous members");
  add_savings(nu, f, true);

  auto* beneficial = app.add_subcommand("beneficial", "Whether the whole roster is the best subgroup");
  add_savings(beneficial, f, true);
  add_out(beneficial, f, "Prefix table");

  auto* cap = app.add_subcommand("cap-advise", "Savings cap that keeps the pool beneficial");
  add_savings(cap, f, false);
  add_band(cap, f);
  add_table(cap, f);
  add_out(cap, f, "Prefix table");
  cap->add_option("--slack", slack, "Relative slack below the best implied number");
  cap->add_option("--synthetic-seed", synthetic_seed, "Use the synthetic 1000-member roster");
  cap->add_option("--histogram-out", histogram_out, "CSV of members per amount");

  auto* fund_path = app.add_subcommand("fund-path", "Per-period accounts of one seeded scenario");
  add_savings(fund_path, f, true);
  add_table(fund_path, f);
  fund_path->add_option("--seed", f.seed, "Random seed");
  add_out(fund_path, f, "Fund path");

  auto* table1 = app.add_subcommand("table1", "Poor, rich and mixed pools at 800 poor members");
  add_band(table1, f);
  add_mc(table1, f);
  add_table(table1, f);
  add_out(table1, f, "Table");

  auto* sweep = app.add_subcommand("sweep", "Pools over a grid of poor counts and ratios");
  add_band(sweep, f);
  add_mc(sweep, f);
  add_table(sweep, f);
  add_out(sweep, f, "Sweep");
  sweep->add_option("--n-poor", n_poor_grid, "Poor counts: start:stop:step or a,b,c");
  sweep->add_option("--ratios", ratios, "Savings ratios m/M")->delimiter(',');
  sweep->add_option("--total", total, "Members in the mixed pool");
  sweep->add_flag("--approx-only", approx_only, "Skip the Monte Carlo columns");

  auto* figure1 = app.add_subcommand("figure1", "Income-ratio path with the stop-time marker");
  add_savings(figure1, f, false);
  add_band(figure1, f);
  add_mc(figure1, f);
  add_table(figure1, f);
  add_out(figure1, f, "Path");
  figure1->add_option("--grid-step", grid_step, "Path resolution in years");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*stability) return run_stability(f, taus_out);
    if (*approx) return run_approx(f);
    if (*compare) return run_compare(f);
    if (*nu) return run_nu(f);
    if (*beneficial) return run_beneficial(f);
    if (*cap) return run_cap_advise(f, slack, synthetic_seed, histogram_out);
    if (*fund_path) return run_fund_path_cmd(f);
    if (*table1) return run_table1_cmd(f);
    if (*sweep) return run_sweep_cmd(f, n_poor_grid, ratios, total, approx_only);
    if (*figure1) return run_figure1_cmd(f, grid_step);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
