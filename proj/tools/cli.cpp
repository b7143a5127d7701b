#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracbvp/conditions.hpp"
#include "fracbvp/determine.hpp"
#include "fracbvp/errors.hpp"
#include "fracbvp/expr.hpp"
#include "fracbvp/iterate.hpp"
#include "fracbvp/problem.hpp"
#include "fracbvp/verify.hpp"

#ifndef FRACBVP_VERSION
#define FRACBVP_VERSION "0.0.0"
#endif

namespace fracbvp::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Settings {
  std::string command;
  std::optional<std::string> config;
  std::optional<std::string> builtin;
  std::optional<long> grid_n;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool force = false;
  int m = -1;
  std::optional<double> tol;
  int subdiv = 13;
  bool recompute = false;
};

/// Raised for command-line misuse that CLI11 cannot detect on its own.
struct UsageError : Error {
  using Error::Error;
};

std::string source_label(const Settings& s) {
  return s.builtin ? "builtin:" + *s.builtin : "config:" + *s.config;
}

Problem load(const Settings& s) {
  LoadOptions options;
  if (s.grid_n) options.grid_n = static_cast<Index>(*s.grid_n);
  options.sampling.seed = s.seed;
  if (s.builtin) return load_builtin(*s.builtin, options);
  if (s.config) return load_problem(*s.config, options);
  throw UsageError("one of --config or --builtin is required");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream text;
  text << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return text.str();
}

std::string vec_text(const VectorXd& v) {
  std::string out = "[";
  for (Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
  return out + "]";
}

json vec_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd json_vec(const json& j) {
  VectorXd out(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Index>(i)] = j[i].get<double>();
  return out;
}

fs::path prepare_out(const Settings& s) {
  const fs::path dir(s.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const Settings& s, const Problem* prob) {
  json manifest;
  manifest["command"] = s.command;
  manifest["source"] = source_label(s);
  if (prob) manifest["grid_n"] = prob->N;
  else if (s.grid_n) manifest["grid_n"] = *s.grid_n;
  manifest["seed"] = s.seed;
  if (s.command == "solve") {
    manifest["m"] = s.m;
    manifest["tol"] = s.tol ? json(*s.tol) : json(nullptr);
    manifest["force"] = s.force;
  } else if (s.command == "exclude") {
    manifest["m"] = s.m;
    manifest["subdiv"] = s.subdiv;
  } else if (s.command == "verify") {
    manifest["m"] = s.m;
    manifest["recompute"] = s.recompute;
  }
  manifest["tool_version"] = FRACBVP_VERSION;
  manifest["timestamp"] = utc_timestamp();
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

void write_table(const fs::path& file, const Table& table) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write '" + file.string() + "'");
  table.write_csv(out);
}

std::string component_suffix(Index i) { return "_" + std::to_string(i + 1); }

// ---- check ---------------------------------------------------------------

void append_row(std::ostream& out, const std::string& name, const std::string& value) {
  out << name << ',' << value << '\n';
}

void write_conditions_csv(const fs::path& file, const ConditionsReport& r) {
  std::ofstream out(file);
  const Index n = r.M.size();
  out << "quantity,value\n";
  append_row(out, "p", format_number(r.p));
  append_row(out, "T", format_number(r.T));
  append_row(out, "kernel_constant", format_number(r.kernel_constant));
  for (Index i = 0; i < n; ++i) append_row(out, "M" + component_suffix(i), format_number(r.M[i]));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      append_row(out, "K" + component_suffix(i) + component_suffix(j), format_number(r.K(i, j)));
  for (Index i = 0; i < n; ++i) append_row(out, "beta_raw" + component_suffix(i), format_number(r.beta[i]));
  for (Index i = 0; i < n; ++i)
    append_row(out, "beta_over_M" + component_suffix(i), format_number(r.beta_over_M[i]));
  append_row(out, "dbeta_basis", r.dbeta_basis == BetaBasis::Raw ? "raw" : "normalized");
  for (Index i = 0; i < n; ++i) append_row(out, "beta_used" + component_suffix(i), format_number(r.beta_used[i]));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      append_row(out, "Q" + component_suffix(i) + component_suffix(j), format_number(r.Q(i, j)));
  append_row(out, "spectral_radius", format_number(r.spectral_radius));
  append_row(out, "R", format_number(r.R));
  append_row(out, "contraction", r.contraction() ? "1" : "0");
  append_row(out, "dbeta_nonempty", r.dbeta_ok ? "1" : "0");
  append_row(out, "alpha1_in_dbeta", r.alpha1_in_dbeta ? "1" : "0");
  append_row(out, "all_hold", r.all_hold() ? "1" : "0");
  for (std::size_t m = 0; m < r.apriori_bounds.size(); ++m)
    for (Index i = 0; i < n; ++i)
      append_row(out, "apriori_m" + std::to_string(m) + component_suffix(i), format_number(r.apriori_bounds[m][i]));
}

std::string conditions_summary(const Problem& prob, const ConditionsReport& r) {
  std::ostringstream s;
  const char* basis = r.dbeta_basis == BetaBasis::Raw ? "raw" : "normalized";
  s << "p = " << format_number(r.p) << ", T = " << format_number(r.T) << ", n = " << prob.dim() << '\n';
  s << "M = " << vec_text(r.M) << (prob.bounds_estimated ? " (estimated)" : "") << '\n';
  s << "beta (raw, M T^p / (2^(2p-1) Gamma(p+1))) = " << vec_text(r.beta) << '\n';
  s << "beta / M = " << vec_text(r.beta_over_M) << '\n';
  s << "D_beta verdict uses the " << basis << " beta " << vec_text(r.beta_used) << ": "
    << (r.dbeta_ok ? "non-empty" : "EMPTY") << "; alpha1 in D_beta: " << (r.alpha1_in_dbeta ? "yes" : "no")
    << '\n';
  s << "Q = K beta / M";
  if (prob.dim() == 1) s << " = " << format_number(r.Q(0, 0));
  s << ", r(Q) = " << format_number(r.spectral_radius) << (r.contraction() ? " < 1" : " >= 1 (NOT a contraction)")
    << '\n';
  s << "R = sup |t - T (t/T)^p| = " << format_number(r.R) << '\n';
  if (!r.apriori_bounds.empty())
    s << "a-priori bound on |u - u_m|: m=0 " << vec_text(r.apriori_bounds.front()) << ", m="
      << r.apriori_bounds.size() - 1 << " " << vec_text(r.apriori_bounds.back()) << '\n';
  s << "all conditions hold: " << (r.all_hold() ? "yes" : "no") << '\n';
  return s.str();
}

int cmd_check(const Settings& s, std::ostream& out) {
  const Problem prob = load(s);
  const ConditionsReport report = check_conditions(prob);
  const fs::path dir = prepare_out(s);
  write_conditions_csv(dir / "conditions.csv", report);
  const std::string summary = conditions_summary(prob, report);
  std::ofstream(dir / "summary.txt") << summary;
  write_manifest(dir, s, &prob);
  out << summary;
  return report.all_hold() ? kOk : kConditionsFailed;
}

// ---- solve ---------------------------------------------------------------

struct SolveStep {
  DeterminingResult root;
  ApproxSolution approx;
};

Table iterates_table(const ApproxSolution& approx) {
  const Grid& grid = approx.last().grid;
  const Index n = approx.last().components();
  Table table;
  table.header.push_back("t");
  for (std::size_t k = 0; k < approx.iterates.size(); ++k)
    for (Index i = 0; i < n; ++i) table.header.push_back("u" + std::to_string(i + 1) + "_m" + std::to_string(k));
  table.rows.resize(grid.size(), static_cast<Index>(table.header.size()));
  for (Index j = 0; j < grid.size(); ++j) {
    table.rows(j, 0) = grid.node(j);
    Index c = 1;
    for (const GridFunction& u : approx.iterates)
      for (Index i = 0; i < n; ++i) table.rows(j, c++) = u.values(i, j);
  }
  return table;
}

Table sup_diffs_table(const ApproxSolution& approx) {
  const Index n = approx.last().components();
  Table table;
  table.header.push_back("k");
  for (Index i = 0; i < n; ++i) table.header.push_back("sup_diff" + component_suffix(i));
  for (Index i = 0; i < n; ++i) table.header.push_back("bound" + component_suffix(i));
  table.rows.resize(static_cast<Index>(approx.sup_diffs.size()), 1 + 2 * n);
  for (std::size_t k = 0; k < approx.sup_diffs.size(); ++k) {
    const Index r = static_cast<Index>(k);
    table.rows(r, 0) = static_cast<double>(k + 1);
    table.rows.block(r, 1, 1, n) = approx.sup_diffs[k].transpose();
    table.rows.block(r, 1 + n, 1, n) = approx.bounds_used[k].transpose();
  }
  return table;
}

Table chi_trace_table(const std::vector<SolveStep>& steps, Index n) {
  Table table;
  table.header.push_back("k");
  for (Index i = 0; i < n; ++i) table.header.push_back("chi1" + component_suffix(i));
  for (Index i = 0; i < n; ++i) table.header.push_back("residual" + component_suffix(i));
  table.header.push_back("probes");
  table.rows.resize(static_cast<Index>(steps.size()), 2 + 2 * n);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Index r = static_cast<Index>(k);
    table.rows(r, 0) = static_cast<double>(steps[k].root.m);
    table.rows.block(r, 1, 1, n) = steps[k].root.chi1_star.transpose();
    table.rows.block(r, 1 + n, 1, n) = steps[k].root.residual.transpose();
    table.rows(r, 1 + 2 * n) = static_cast<double>(steps[k].root.solver_trace.size());
  }
  return table;
}

void write_solve_outputs(const fs::path& dir, const Settings& s, const Problem& prob,
                         const std::vector<SolveStep>& steps, bool converged, const std::string& failure) {
  json doc;
  doc["source"] = source_label(s);
  doc["grid_n"] = prob.N;
  doc["converged"] = converged;
  if (!failure.empty()) doc["failure"] = failure;
  json trace = json::array();
  for (const SolveStep& step : steps) {
    json entry;
    entry["k"] = step.root.m;
    entry["chi1"] = vec_json(step.root.chi1_star);
    entry["residual"] = vec_json(step.root.residual);
    entry["solver_iterations"] = step.root.iterations_used;
    entry["probes"] = step.root.solver_trace.size();
    entry["domain_escapes"] = step.approx.domain_escapes;
    trace.push_back(entry);
  }
  doc["trace"] = trace;
  std::ofstream(dir / "determining.json") << doc.dump(2) << '\n';
  write_table(dir / "chi_trace.csv", chi_trace_table(steps, prob.dim()));
  if (!steps.empty()) {
    write_table(dir / "iterates.csv", iterates_table(steps.back().approx));
    write_table(dir / "sup_diffs.csv", sup_diffs_table(steps.back().approx));
  }
}

int cmd_solve(Settings s, std::ostream& out, std::ostream& err) {
  const Problem prob = load(s);
  const ConditionsReport report = check_conditions(prob);
  if (!report.all_hold() && !s.force) {
    err << conditions_summary(prob, report) << "conditions fail; rerun with --force to iterate anyway\n";
    return kConditionsFailed;
  }
  const bool tol_mode = s.tol.has_value();
  if (s.m < 0) s.m = tol_mode ? 50 : 2;
  const VectorXd tol = VectorXd::Constant(prob.dim(), tol_mode ? *s.tol : 0.0);
  const fs::path dir = prepare_out(s);
  write_manifest(dir, s, &prob);

  std::vector<SolveStep> steps;
  bool converged = false;
  try {
    for (int k = 0; k <= s.m; ++k) {
      DeterminingResult root = solve_determining(prob, k);
      ApproxSolution approx = fixed_iterates(prob, root.chi1_star, k);
      out << "k = " << k << ": chi1 = " << vec_text(root.chi1_star) << ", |Delta_" << k
          << "| = " << vec_text(root.residual.cwiseAbs()) << '\n';
      steps.push_back({std::move(root), std::move(approx)});
      const ApproxSolution& a = steps.back().approx;
      if (tol_mode && k >= 1 && (a.sup_diffs.back().array() <= tol.array()).all()) {
        converged = true;
        break;
      }
    }
  } catch (const NoBracketError& e) {
    write_solve_outputs(dir, s, prob, steps, false, e.what());
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const NonConvergenceError& e) {
    write_solve_outputs(dir, s, prob, steps, false, e.what());
    err << "error: " << e.what() << " (" << e.trace.size() << " probes)\n";
    return kNonConvergence;
  }
  if (!tol_mode) converged = steps.back().approx.converged;
  write_solve_outputs(dir, s, prob, steps, converged, "");
  const ApproxSolution& last = steps.back().approx;
  out << "final m = " << last.m << ", converged = " << (converged ? "true" : "false");
  if (last.domain_escapes > 0) out << ", iterate nodes outside D: " << last.domain_escapes;
  out << '\n';
  if (tol_mode && !converged) {
    err << "tolerance not reached within " << s.m << " steps\n";
    return kNonConvergence;
  }
  return kOk;
}

// ---- exclude -------------------------------------------------------------

int cmd_exclude(Settings s, std::ostream& out) {
  const Problem prob = load(s);
  if (s.m < 0) s.m = 1;
  const ExclusionResult result = exclusion_sweep(prob, s.m, s.subdiv);
  const fs::path dir = prepare_out(s);
  write_manifest(dir, s, &prob);

  const Index n = prob.dim();
  Table table;
  table.header.push_back("box");
  for (const char* name : {"lo", "hi", "center", "delta", "threshold"})
    for (Index i = 0; i < n; ++i) table.header.push_back(name + component_suffix(i));
  table.header.push_back("kept");
  table.rows.resize(static_cast<Index>(result.boxes.size()), static_cast<Index>(table.header.size()));
  for (std::size_t b = 0; b < result.boxes.size(); ++b) {
    const BoxVerdict& v = result.boxes[b];
    const Index r = static_cast<Index>(b);
    table.rows(r, 0) = static_cast<double>(b);
    Index c = 1;
    for (const VectorXd* column : {&v.box.lo, &v.box.hi, &v.representative, &v.delta, &v.threshold})
      for (Index i = 0; i < n; ++i) table.rows(r, c++) = (*column)[i];
    table.rows(r, c) = v.kept ? 1.0 : 0.0;
  }
  write_table(dir / "boxes.csv", table);

  out << "m = " << s.m << ", " << result.boxes.size() << " boxes, kept " << result.kept_count() << '\n';
  for (const Box& box : result.survivors()) out << "  kept " << vec_text(box.lo) << " .. " << vec_text(box.hi) << '\n';
  return kOk;
}

// ---- verify --------------------------------------------------------------

std::vector<VectorXd> chi_trace_from_disk(const fs::path& dir, const Settings& s, const Problem& prob) {
  const fs::path file = dir / "determining.json";
  std::ifstream in(file);
  if (!in) throw UsageError("no solve outputs in '" + dir.string() + "': run solve first or pass --recompute");
  const json doc = json::parse(in);
  if (doc.at("source").get<std::string>() != source_label(s) || doc.at("grid_n").get<Index>() != prob.N)
    throw UsageError("solve outputs in '" + dir.string() +
                     "' belong to a different problem: run solve first or pass --recompute");
  std::vector<VectorXd> chis;
  for (const json& entry : doc.at("trace")) chis.push_back(json_vec(entry.at("chi1")));
  if (static_cast<int>(chis.size()) <= s.m)
    throw UsageError("solve outputs stop at k = " + std::to_string(static_cast<int>(chis.size()) - 1) +
                     ": run solve first with --m " + std::to_string(s.m) + " or pass --recompute");
  return chis;
}

int cmd_verify(Settings s, std::ostream& out) {
  const Problem prob = load(s);
  if (s.m < 0) s.m = 2;
  const fs::path dir(s.out_dir);
  std::vector<VectorXd> chis;
  if (s.recompute) {
    for (int k = 0; k <= s.m; ++k) chis.push_back(solve_determining(prob, k).chi1_star);
  } else {
    chis = chi_trace_from_disk(dir, s, prob);
  }
  prepare_out(s);
  write_manifest(dir, s, &prob);

  const Index n = prob.dim();
  Table table;
  table.header.push_back("k");
  for (const char* name : {"chi1", "sup_residual", "sup_residual_with_delta", "delta", "boundary_start", "boundary_end"})
    for (Index i = 0; i < n; ++i) table.header.push_back(name + component_suffix(i));
  table.rows.resize(s.m + 1, static_cast<Index>(table.header.size()));

  for (int k = 0; k <= s.m; ++k) {
    const ApproxSolution approx = fixed_iterates(prob, chis[static_cast<std::size_t>(k)], k);
    const ResidualReport plain = residuals(prob, approx, false);
    const ResidualReport shifted = residuals(prob, approx, true);
    table.rows(k, 0) = k;
    Index c = 1;
    for (const VectorXd* column : {&approx.chi1, &plain.sup_residual, &shifted.sup_residual, &*shifted.delta,
                                   &plain.boundary_start, &plain.boundary_end})
      for (Index i = 0; i < n; ++i) table.rows(k, c++) = (*column)[i];
    if (n == 1) write_table(dir / ("figure_m" + std::to_string(k) + ".csv"), emit_figure_data(prob, approx));
    out << "k = " << k << ": sup |cD^p u - f| = " << vec_text(plain.sup_residual)
        << ", with Delta offset = " << vec_text(shifted.sup_residual) << '\n';
  }
  write_table(dir / "residuals.csv", table);
  if (s.m > 0) {
    const double first = table.rows.block(0, 1 + 2 * n, 1, n).maxCoeff();
    const double last = table.rows.block(s.m, 1 + 2 * n, 1, n).maxCoeff();
    out << "residual ratio m=" << s.m << " / m=0: " << format_number(last / first) << '\n';
  }
  return kOk;
}

int cmd_example_list(std::ostream& out) {
  for (const std::string& name : builtin_names()) out << name << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Successive approximations for fractional two-point boundary value problems", "fracbvp"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  auto* config = app.add_option("--config", s.config, "Problem config file");
  auto* builtin = app.add_option("--builtin", s.builtin, "Built-in problem name (see example-list)");
  config->excludes(builtin);
  app.add_option("--grid-n", s.grid_n, "Grid node count override")->check(CLI::Range(5L, 1000000L));
  app.add_option("--seed", s.seed, "Seed for bound-estimation sampling");
  app.add_option("--out", s.out_dir, "Output directory");
  app.add_flag("--force", s.force, "Iterate even when the conditions fail");

  auto* check = app.add_subcommand("check", "Check the convergence conditions");
  auto* solve = app.add_subcommand("solve", "Solve the determining equations for k = 0..m");
  solve->add_option("--m", s.m, "Outer steps (default 2; step limit 50 with --tol)")->check(CLI::NonNegativeNumber);
  solve->add_option("--tol", s.tol, "Stop once max |u_k - u_(k-1)| <= tol")->check(CLI::PositiveNumber);
  auto* exclude = app.add_subcommand("exclude", "Exclude parameter boxes that hold no solution");
  exclude->add_option("--m", s.m, "Iterations (default 1)")->check(CLI::NonNegativeNumber);
  exclude->add_option("--subdiv", s.subdiv, "Boxes per axis")->check(CLI::PositiveNumber);
  auto* verify = app.add_subcommand("verify", "Residuals of the solved iterates");
  verify->add_option("--m", s.m, "Outer steps (default 2)")->check(CLI::NonNegativeNumber);
  verify->add_flag("--recompute", s.recompute, "Solve inline instead of reading solve outputs");
  auto* list = app.add_subcommand("example-list", "List built-in problems");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    s.command = app.get_subcommands().front()->get_name();
    if (check->parsed()) return cmd_check(s, out);
    if (solve->parsed()) return cmd_solve(s, out, err);
    if (exclude->parsed()) return cmd_exclude(s, out);
    if (verify->parsed()) return cmd_verify(s, out);
    if (list->parsed()) return cmd_example_list(out);
  } catch (const BoundUndefinedError& e) {
    err << "error: " << e.what() << '\n';
    return kConditionsFailed;
  } catch (const NoBracketError& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const NonConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace fracbvp::cli
