#include "melonfield/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "melonfield/errors.hpp"
#include "melonfield/model_core.hpp"
#include "melonfield/observables.hpp"
#include "melonfield/saddle.hpp"
#include "melonfield/sd_verifier.hpp"
#include "melonfield/series.hpp"

namespace melonfield::cli {

using nlohmann::json;

namespace {

struct Invocation {
  std::string command;
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

// ---- configuration ---------------------------------------------------------------------------

bool is_integer(const json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

void check_against(const json& schema, const json& value, const std::string& path) {
  const std::string where = path.empty() ? "config" : path;
  if (schema.is_object()) {
    if (!value.is_object()) throw ConfigError(where, "expected an object");
    for (const auto& [key, item] : value.items()) {
      const std::string child = path.empty() ? key : path + "." + key;
      if (!schema.contains(key)) throw ConfigError(child, "unknown key");
      check_against(schema.at(key), item, child);
    }
  } else if (schema.is_array()) {
    if (!value.is_array()) throw ConfigError(where, "expected an array");
    if (!schema.empty()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        check_against(schema.front(), value[i], path + "[" + std::to_string(i) + "]");
      }
    }
  } else if (is_integer(schema)) {
    if (!is_integer(value)) throw ConfigError(where, "expected an integer");
  } else if (schema.is_number_float()) {
    if (!value.is_number()) throw ConfigError(where, "expected a number");
  } else if (schema.is_string()) {
    if (!value.is_string()) throw ConfigError(where, "expected a string");
  } else if (schema.is_boolean()) {
    if (!value.is_boolean()) throw ConfigError(where, "expected a boolean");
  }
}

// Integers given where the schema has a float are stored as floats so equivalent inputs serialize identically.
void normalize_numbers(const json& schema, json& value) {
  if (schema.is_object()) {
    for (auto& [key, item] : value.items()) normalize_numbers(schema.at(key), item);
  } else if (schema.is_array() && !schema.empty()) {
    for (auto& item : value) normalize_numbers(schema.front(), item);
  } else if (schema.is_number_float() && value.is_number()) {
    value = value.get<double>();
  }
}

json parse_set_value(const std::string& text) {
  json parsed = json::parse(text, nullptr, false);
  return parsed.is_discarded() ? json(text) : parsed;
}

void apply_set(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "--set expects key=value");
  const std::string key = assignment.substr(0, eq);
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "path does not name an object");
    if (dot == std::string::npos) {
      (*node)[part] = parse_set_value(assignment.substr(eq + 1));
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json load_user_config(const Invocation& inv) {
  json user = json::object();
  if (!inv.config_path.empty()) {
    std::ifstream in(inv.config_path);
    if (!in) throw ConfigError("config", "cannot open " + inv.config_path);
    try {
      user = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config", e.what());
    }
    if (!user.is_object()) throw ConfigError("config", "top level must be an object");
  }
  for (const auto& s : inv.sets) apply_set(user, s);
  if (inv.seed) user["seed"] = *inv.seed;
  return user;
}

// ---- value access with domain diagnostics --------------------------------------------------

int get_int(const json& cfg, const std::string& key, int lo, int hi) {
  const auto v = cfg.at(key).get<std::int64_t>();
  if (v < lo || v > hi) {
    throw ConfigError(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + std::to_string(v));
  }
  return static_cast<int>(v);
}

double get_coupling(const json& value, const std::string& field) {
  const double v = value.get<double>();
  if (!std::isfinite(v) || v < 0.0) throw ConfigError(field, "coupling must be finite and >= 0, got " + format_number(v));
  return v;
}

std::vector<int> get_colors(const json& list, const std::string& field) {
  std::vector<int> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto v = list[i].get<std::int64_t>();
    if (v < 1 || v > 64) throw ConfigError(field + "[" + std::to_string(i) + "]", "colors must lie in [1, 64]");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError(field, "must not be empty");
  return out;
}

// ---- output --------------------------------------------------------------------------------

struct Artifact {
  std::string name;
  std::string content;
};

std::string csv_preamble(const std::string& command, const json& cfg) {
  return "# schema: melonfield." + command + "/" + kSchemaVersion + "\n# config: " + cfg.dump() + "\n";
}

json json_envelope(const std::string& command, const json& cfg) {
  json j;
  j["schema"] = "melonfield." + command + "/" + std::string(kSchemaVersion);
  j["config"] = cfg;
  return j;
}

void emit(const std::vector<Artifact>& artifacts, const std::string& out_dir, std::ostream& out) {
  if (out_dir == "-") {
    for (const auto& a : artifacts) out << a.content;
    return;
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& a : artifacts) {
    const auto path = std::filesystem::path(out_dir) / a.name;
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + path.string());
    file << a.content;
  }
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  return row + "\n";
}

// ---- commands ------------------------------------------------------------------------------

std::vector<Artifact> cmd_lo(const json& cfg, std::string& summary) {
  const auto colors = get_colors(cfg.at("colors"), "colors");
  std::vector<double> couplings;
  const auto& list = cfg.at("couplings");
  for (std::size_t i = 0; i < list.size(); ++i) couplings.push_back(get_coupling(list[i], "couplings[" + std::to_string(i) + "]"));
  const int size = get_int(cfg, "size", 1, 1 << 20);

  std::string csv = csv_preamble("lo", cfg) + "D,lambda,alpha_im,log_z,g2\n";
  for (int d : colors) {
    for (double lambda : couplings) {
      const double alpha_im = lambda == 0.0 ? kAlphaAtZeroCoupling : alpha_lo(d, lambda).imag();
      const double log_z = lambda == 0.0 ? std::numeric_limits<double>::infinity()
                                         : log_z_saddle(ModelParams{d, size, lambda});
      csv += join_row({std::to_string(d), format_number(lambda), format_number(alpha_im), format_number(log_z),
                       format_number(g2_lo(d, lambda))});
    }
  }
  summary = "lo: " + std::to_string(colors.size() * couplings.size()) + " rows";
  return {{"lo.csv", csv}};
}

std::vector<Artifact> cmd_saddle(const json& cfg, std::string& summary) {
  ModelParams params{get_int(cfg, "colors", 1, 64), get_int(cfg, "size", 1, 4096),
                     get_coupling(cfg.at("coupling"), "coupling")};
  if (params.coupling == 0.0) throw ConfigError("coupling", "the saddle solver needs coupling > 0");
  SolverConfig solver;
  solver.tolerance = cfg.at("tolerance").get<double>();
  if (!(solver.tolerance > 0.0)) throw ConfigError("tolerance", "must be > 0");
  solver.max_iterations = get_int(cfg, "max_iterations", 0, 100000);
  solver.damping = cfg.at("damping").get<double>();
  if (!(solver.damping > 0.0 && solver.damping <= 1.0)) throw ConfigError("damping", "must lie in (0, 1]");
  const std::string mode = cfg.at("mode").get<std::string>();
  if (mode == "symmetric") {
    solver.mode = SolverMode::symmetric_ansatz;
  } else if (mode == "full") {
    solver.mode = SolverMode::full_coupled;
  } else {
    throw ConfigError("mode", "expected \"symmetric\" or \"full\"");
  }
  solver.seed = cfg.at("seed").get<std::uint64_t>();
  const int bins = get_int(cfg, "bins", 1, 100000);

  const SaddleSolution sol = solve_newton(params, solver);
  if (!sol.converged) {
    throw DivergenceError("solve_newton: no convergence within " + std::to_string(solver.max_iterations) + " iterations",
                          sol.residual_norm);
  }
  const NloComparison cmp = compare_to_nlo(sol, params);
  const SemicircleLaw law = semicircle_law(params.colors, params.coupling);

  json doc = json_envelope("saddle", cfg);
  doc["solution"] = to_json(sol, params);
  doc["nlo"] = {{"max_deviation", cmp.max_deviation},
                {"ks_distance", cmp.ks_distance ? json(*cmp.ks_distance) : json(nullptr)},
                {"rescaled", cmp.rescaled},
                {"scale", law.scale()},
                {"half_width", law.half_width()}};

  const double edge = 1.2 * law.half_width();
  const Histogram hist = empirical_histogram(cmp.rescaled, -edge, edge, bins);
  std::string csv = csv_preamble("saddle", cfg) + "bin_lower,bin_upper,empirical_density,semicircle_density\n";
  for (int b = 0; b < bins; ++b) {
    const double lo = -edge + b * hist.bin_width();
    const double hi = b + 1 == bins ? edge : lo + hist.bin_width();
    const double predicted = (law.cdf(hi) - law.cdf(lo)) / (hi - lo);
    csv += join_row({format_number(lo), format_number(hi), format_number(hist.density[b]), format_number(predicted)});
  }

  summary = "saddle: N=" + std::to_string(params.size) + " residual=" + format_number(sol.residual_norm) +
            " iterations=" + std::to_string(sol.iterations) +
            " ks=" + (cmp.ks_distance ? format_number(*cmp.ks_distance) : std::string("n/a"));
  return {{"saddle.json", doc.dump(2) + "\n"}, {"histogram.csv", csv}};
}

std::vector<Artifact> cmd_series(const json& cfg, std::string& summary) {
  const auto colors = get_colors(cfg.at("colors"), "colors");
  const int order = get_int(cfg, "order", 0, 64);
  json doc = json_envelope("series", cfg);
  bool all_equal = true;
  json per_color = json::array();
  for (int d : colors) {
    const auto g2 = g2_series(d, order);
    const auto oracle = catalan_oracle(d, order);
    const bool equal = g2 == oracle;
    json entry{{"D", d}, {"g2_series", g2.to_json()}, {"catalan_oracle", oracle.to_json()}, {"equal", equal}};
    entry["fixed_point"] = order >= 1 ? json(fixed_point_check(g2, d)) : json(nullptr);
    all_equal = all_equal && equal && (order < 1 || entry["fixed_point"].get<bool>());
    per_color.push_back(std::move(entry));
  }
  doc["colors"] = std::move(per_color);
  const auto tutte = tutte_series(order);
  const auto planar = planar_moment_solve(order);
  doc["tutte_series"] = tutte.to_json();
  doc["planar_moment_solve"] = planar.to_json();
  doc["tutte_equal"] = tutte == planar;
  all_equal = all_equal && tutte == planar;
  doc["all_equal"] = all_equal;
  summary = std::string("series: all_equal=") + (all_equal ? "true" : "false");
  return {{"series.json", doc.dump(2) + "\n"}};
}

std::vector<Artifact> cmd_sd(const json& cfg, int threads, std::string& summary) {
  ModelParams params{get_int(cfg, "colors", 1, 64), get_int(cfg, "size", 1, 4096),
                     get_coupling(cfg.at("coupling"), "coupling")};
  const int k_max = get_int(cfg, "k_max", 0, 32);
  std::vector<int> color_list;
  const auto& cl = cfg.at("color_list");
  for (std::size_t i = 0; i < cl.size(); ++i) {
    if (!is_integer(cl[i])) throw ConfigError("color_list[" + std::to_string(i) + "]", "expected an integer");
    const auto c = cl[i].get<std::int64_t>();
    if (c < 0 || c >= params.colors) throw ConfigError("color_list[" + std::to_string(i) + "]", "color out of range");
    color_list.push_back(static_cast<int>(c));
  }
  if (color_list.empty()) {
    for (int c = 0; c < params.colors; ++c) color_list.push_back(c);
  }
  std::vector<SDForm> forms;
  const auto& fl = cfg.at("forms");
  for (std::size_t i = 0; i < fl.size(); ++i) {
    const auto f = fl[i].get<std::string>();
    if (f == "exact") {
      forms.push_back(SDForm::exact);
    } else if (f == "leading") {
      forms.push_back(SDForm::leading);
    } else {
      throw ConfigError("forms[" + std::to_string(i) + "]", "expected \"exact\" or \"leading\"");
    }
  }
  if (forms.empty()) throw ConfigError("forms", "must not be empty");

  EstimatorConfig est;
  const std::string method = cfg.at("method").get<std::string>();
  if (method == "auto") {
    est.method = params.size == 1 && params.colors <= kMaxQuadratureColors ? EstimatorMethod::quadrature
                                                                            : EstimatorMethod::monte_carlo;
  } else if (method == "quadrature") {
    est.method = EstimatorMethod::quadrature;
  } else if (method == "monte_carlo") {
    est.method = EstimatorMethod::monte_carlo;
  } else {
    throw ConfigError("method", "expected \"auto\", \"quadrature\" or \"monte_carlo\"");
  }
  if (est.method == EstimatorMethod::quadrature && params.size != 1) {
    throw ConfigError("method", "quadrature requires size = 1");
  }
  est.dense_resolvent = cfg.at("dense_resolvent").get<bool>();
  const auto& q = cfg.at("quadrature");
  est.quadrature.tolerance = q.at("tolerance").get<double>();
  if (!(est.quadrature.tolerance > 0.0)) throw ConfigError("quadrature.tolerance", "must be > 0");
  est.quadrature.initial_nodes = get_int(q, "initial_nodes", 2, 1000);
  est.quadrature.max_nodes = get_int(q, "max_nodes", 2, 1000);
  est.quadrature.max_points = q.at("max_points").get<std::int64_t>();
  const auto& m = cfg.at("monte_carlo");
  est.monte_carlo.chains = get_int(m, "chains", 1, 4096);
  est.monte_carlo.steps = m.at("steps").get<std::int64_t>();
  est.monte_carlo.burn_in_fraction = m.at("burn_in_fraction").get<double>();
  est.monte_carlo.blocks_per_chain = get_int(m, "blocks_per_chain", 1, 1 << 20);
  est.monte_carlo.seed = cfg.at("seed").get<std::uint64_t>();
  est.monte_carlo.threads = threads;
  try {
    est.monte_carlo.validate();
  } catch (const DomainError& e) {
    throw ConfigError("monte_carlo", e.what());
  }

  std::vector<SDRequest> requests;
  for (SDForm form : forms) {
    for (int c : color_list) {
      for (int k = 0; k <= k_max; ++k) requests.push_back({c, k, form});
    }
  }
  const ShiftedModel model(params);
  const auto entries = sd_residuals(model, requests, est);

  json doc = json_envelope("sd", cfg);
  doc["method"] = to_string(est.method);
  doc["alpha"] = {{"re", model.alpha().real()}, {"im", model.alpha().imag()}};
  json list = json::array();
  double worst_exact = 0.0;
  double worst_leading = 0.0;
  bool sign_problem = false;
  for (const auto& e : entries) {
    list.push_back(to_json(e));
    (e.form == SDForm::exact ? worst_exact : worst_leading) =
        std::max(e.form == SDForm::exact ? worst_exact : worst_leading, e.normalized);
    sign_problem = sign_problem || e.sign_problem;
  }
  doc["entries"] = std::move(list);
  doc["warnings"] = sign_problem ? json::array({"sign_problem"}) : json::array();
  summary = "sd: method=" + to_string(est.method) + " max_normalized_exact=" + format_number(worst_exact) +
            " max_normalized_leading=" + format_number(worst_leading) + (sign_problem ? " warning=sign_problem" : "");
  return {{"sd.json", doc.dump(2) + "\n"}};
}

std::vector<Artifact> cmd_hermite(const json& cfg, std::string& summary) {
  const int degree = get_int(cfg, "degree", 0, 128);
  Rational sigma2;
  try {
    sigma2 = parse_rational(cfg.at("sigma2").get<std::string>());
  } catch (const DomainError& e) {
    throw ConfigError("sigma2", e.what());
  }
  if (sigma2 <= 0) throw ConfigError("sigma2", "must be > 0");
  const HermiteBasisMap map(degree, sigma2);
  bool round_trip = true;
  for (int n = 0; n <= degree; ++n) {
    std::vector<Rational> unit(degree + 1, Rational(0));
    unit[n] = 1;
    const auto h = map.monomial_coefficients_to_hermite(unit);
    round_trip = round_trip && map.hermite_coefficients_to_monomial(h) == unit;
  }
  json doc = json_envelope("hermite", cfg);
  doc["basis"] = map.to_json();
  doc["round_trip"] = round_trip;
  summary = "hermite: degree=" + std::to_string(degree) + " sigma2=" + format_rational(sigma2) +
            " round_trip=" + (round_trip ? "true" : "false");
  return {{"hermite.json", doc.dump(2) + "\n"}};
}

int default_threads() {
  if (const char* env = std::getenv("MELONFIELD_THREADS")) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), v);
    if (ec == std::errc() && *ptr == '\0' && v >= 0) return v;
  }
  return 0;
}

int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err) {
  try {
    const json cfg = resolve_config(inv.command, load_user_config(inv));
    std::string summary;
    std::vector<Artifact> artifacts;
    if (inv.command == "lo") {
      artifacts = cmd_lo(cfg, summary);
    } else if (inv.command == "saddle") {
      artifacts = cmd_saddle(cfg, summary);
    } else if (inv.command == "series") {
      artifacts = cmd_series(cfg, summary);
    } else if (inv.command == "sd") {
      artifacts = cmd_sd(cfg, inv.threads, summary);
    } else {
      artifacts = cmd_hermite(cfg, summary);
    }
    // Single-table output goes to stdout unless a directory is named; multi-file output defaults to ".".
    std::string dir = inv.out;
    if (dir.empty()) dir = inv.command == "lo" ? "-" : ".";
    emit(artifacts, dir, out);
    if (dir != "-") out << summary << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "solver divergence: " << e.what() << " (last residual " << format_number(e.last_residual()) << ")\n";
    return kExitDivergence;
  } catch (const SingularityError& e) {
    err << (inv.command == "saddle" ? "solver divergence: " : "estimator failure: ") << e.what() << "\n";
    return inv.command == "saddle" ? kExitDivergence : kExitEstimator;
  } catch (const ConvergenceError& e) {
    err << "estimator failure: " << e.what() << "\n";
    return kExitEstimator;
  } catch (const SignProblemError& e) {
    err << "estimator failure: " << e.what() << "\n";
    return kExitEstimator;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitEstimator;
  }
}

}  // namespace

json default_config(const std::string& command) {
  if (command == "lo") {
    return {{"colors", {3}}, {"couplings", {0.0, 0.05, 0.1, 0.5, 1.0}}, {"size", 1}, {"seed", 0}};
  }
  if (command == "saddle") {
    return {{"colors", 3},          {"coupling", 0.1}, {"size", 32},   {"mode", "symmetric"}, {"tolerance", 1e-13},
            {"max_iterations", 100}, {"damping", 1.0},  {"bins", 24}, {"seed", 0}};
  }
  if (command == "series") return {{"colors", {3}}, {"order", 12}, {"seed", 0}};
  if (command == "sd") {
    return {{"colors", 3},
            {"coupling", 0.05},
            {"size", 1},
            {"k_max", 4},
            {"color_list", json::array()},
            {"forms", {"exact", "leading"}},
            {"method", "auto"},
            {"dense_resolvent", true},
            {"quadrature", {{"tolerance", 1e-10}, {"initial_nodes", 12}, {"max_nodes", 160}, {"max_points", 30000000}}},
            {"monte_carlo", {{"chains", 4}, {"steps", 100000}, {"burn_in_fraction", 0.1}, {"blocks_per_chain", 16}}},
            {"seed", 0}};
  }
  if (command == "hermite") return {{"degree", 16}, {"sigma2", "1"}, {"seed", 0}};
  throw ConfigError("command", "unknown command " + command);
}

json resolve_config(const std::string& command, const json& user) {
  const json schema = default_config(command);
  check_against(schema, user, "");
  json merged = schema;
  merged.merge_patch(user);
  normalize_numbers(schema, merged);
  return merged;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"melonfield: quartic melonic tensor model numerics"};
  app.require_subcommand(1);
  Invocation inv;
  inv.threads = default_threads();
  std::uint64_t seed = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"lo", "Leading-order table: alpha, log Z at the saddle, G2 over a (D, lambda) grid"},
      {"saddle", "Solve the eigenvalue saddle equations and compare with the semicircle law"},
      {"series", "Exact rational series: G2, Catalan oracle, planar moments vs Tutte counts"},
      {"sd", "Schwinger-Dyson residuals of the shifted model"},
      {"hermite", "Exact monomial/Hermite change of basis"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", inv.config_path, "JSON configuration file");
    sub->add_option("--set", inv.sets, "Override a config field: key=value (dotted keys for nested fields)");
    sub->add_option("--seed", seed, "Override the seed");
    sub->add_option("--threads", inv.threads, "Worker thread cap (0 = hardware; default $MELONFIELD_THREADS)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("-o,--out", inv.out, "Output directory ('-' for stdout)");
    sub->callback([&inv, name = name] { inv.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) inv.seed = seed;
  }
  return dispatch(inv, out, err);
}

}  // namespace melonfield::cli
