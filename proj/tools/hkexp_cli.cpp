// hkexp: batch front end for the heat-trace expansion engine.
//
//   hkexp expand     --potential linear --n 1 --order 1 --out run
//   hkexp symbols    --potential quadratic --order 6 --out run
//   hkexp oracle     --potential quadratic --hbar 0.2,0.1,0.05 --s 0.5 --x 0,0.5,1 --out run
//   hkexp invariants --potential quartic --n 2 --s-grid 0.5,1 --r-grid 0.5,1,2 --out run
//   hkexp detect     --potential radial-bump --n 2 --r-grid 0.25,0.5,1,1.5,2 --out run
//   hkexp validate   [--fault cmu] --out run
//
// Exit codes: 0 success, 1 configuration error, 2 check failure, 3 resource limit.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hkexp/hkexp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCheck = 2;
constexpr int kExitResource = 3;
constexpr int kMaxSymbolicOrder = 3;
constexpr int kMaxSymbolIndex = 8;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A check failed; the message names the first failing check.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kCommands{"expand", "symbols", "oracle", "invariants", "detect", "validate"};

struct JobConfig {
  std::string command;
  std::string potential = "quadratic";
  json potential_json;  // inline polynomial from a config file, if any
  int n = 1;
  int order = -1;  // -1: command default
  std::vector<double> hbar{0.2, 0.1, 0.05};
  double s = 0.5;
  int basis = 0;
  std::vector<double> x;
  std::vector<double> r_grid{0.5, 1.0, 1.5, 2.0};
  std::vector<double> s_grid{0.5, 1.0, 2.0};
  std::string out = "hkexp_out";
  std::optional<double> tol;
  std::string fault;
  int scan_points = 400;
};

struct ResolvedPotential {
  std::string name;                 // fixture name, file path or "inline"
  std::optional<hkexp::Polynomial> poly;
  bool numeric = false;             // radial-bump
};

// --- configuration ----------------------------------------------------------

template <typename T>
T read_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

/// Loads a JobConfig JSON file; unknown keys and wrong types are configuration errors.
void load_config_file(const std::string& path, JobConfig& cfg, const std::set<std::string>& overridden) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  static const std::set<std::string> known{"command", "potential", "n",     "order", "hbar", "s",   "basis",
                                           "x",       "r_grid",    "s_grid", "out",  "tol",  "fault", "scan_points"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  auto take = [&](const char* key) { return j.contains(key) && !overridden.contains(key); };
  if (take("command")) cfg.command = read_field<std::string>(j, "command");
  if (take("potential")) {
    if (j["potential"].is_object())
      cfg.potential_json = j["potential"];
    else
      cfg.potential = read_field<std::string>(j, "potential");
  }
  if (take("n")) cfg.n = read_field<int>(j, "n");
  if (take("order")) cfg.order = read_field<int>(j, "order");
  if (take("hbar")) cfg.hbar = read_field<std::vector<double>>(j, "hbar");
  if (take("s")) cfg.s = read_field<double>(j, "s");
  if (take("basis")) cfg.basis = read_field<int>(j, "basis");
  if (take("x")) cfg.x = read_field<std::vector<double>>(j, "x");
  if (take("r_grid")) cfg.r_grid = read_field<std::vector<double>>(j, "r_grid");
  if (take("s_grid")) cfg.s_grid = read_field<std::vector<double>>(j, "s_grid");
  if (take("out")) cfg.out = read_field<std::string>(j, "out");
  if (take("tol")) cfg.tol = read_field<double>(j, "tol");
  if (take("fault")) cfg.fault = read_field<std::string>(j, "fault");
  if (take("scan_points")) cfg.scan_points = read_field<int>(j, "scan_points");
}

void validate_config(JobConfig& cfg) {
  if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
    throw ConfigError("unknown command '" + cfg.command + "'");
  if (cfg.n < 1 || cfg.n > hkexp::kMaxDim) throw ConfigError("n must be 1, 2 or 3");
  if (!(cfg.s > 0.0)) throw ConfigError("s must be positive");
  if (cfg.basis < 0) throw ConfigError("basis must be >= 0 (0 selects it automatically)");
  for (double h : cfg.hbar)
    if (!(h > 0.0)) throw ConfigError("hbar values must be positive");
  for (double r : cfg.r_grid)
    if (!(r > 0.0)) throw ConfigError("r-grid values must be positive");
  for (double s : cfg.s_grid)
    if (!(s > 0.0)) throw ConfigError("s-grid values must be positive");
  if (cfg.tol && !(*cfg.tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (!cfg.fault.empty() && cfg.fault != "cmu") throw ConfigError("unknown fault '" + cfg.fault + "' (known: cmu)");
  if (cfg.scan_points < 2) throw ConfigError("scan-points must be >= 2");
  if (cfg.order < 0) cfg.order = cfg.command == "symbols" ? 6 : 1;
  if (cfg.command == "expand" && cfg.order > kMaxSymbolicOrder)
    throw ConfigError("expansion order K must be <= " + std::to_string(kMaxSymbolicOrder));
  if (cfg.command == "symbols" && (cfg.order < 1 || cfg.order > kMaxSymbolIndex))
    throw ConfigError("symbol index must be between 1 and " + std::to_string(kMaxSymbolIndex));
  if ((cfg.command == "oracle" || cfg.command == "validate") && cfg.hbar.size() < 3)
    throw ConfigError("an hbar fit needs at least 3 hbar values, got " + std::to_string(cfg.hbar.size()));
}

ResolvedPotential resolve_potential(const JobConfig& cfg) {
  ResolvedPotential out;
  auto from_json = [&](const json& j, std::string name) {
    try {
      out.poly = hkexp::polynomial_from_json(j);
    } catch (const hkexp::Error& e) {
      throw ConfigError(std::string("invalid potential: ") + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid potential: ") + e.what());
    }
    if (out.poly->dim() != cfg.n) throw ConfigError("potential dimension does not match n");
    out.name = std::move(name);
  };
  if (!cfg.potential_json.is_null()) {
    from_json(cfg.potential_json, "inline");
    return out;
  }
  const auto& names = hkexp::fixtures::polynomial_names();
  if (std::find(names.begin(), names.end(), cfg.potential) != names.end()) {
    out.name = cfg.potential;
    out.poly = hkexp::fixtures::by_name(cfg.potential, cfg.n);
    return out;
  }
  if (cfg.potential == "radial-bump") {
    if (cfg.n != 2) throw ConfigError("the radial-bump fixture is defined for n = 2");
    out.name = cfg.potential;
    out.numeric = true;
    return out;
  }
  if (!cfg.potential.empty() && cfg.potential.front() == '{') {
    try {
      from_json(json::parse(cfg.potential), "inline");
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("inline potential is not valid JSON: ") + e.what());
    }
    return out;
  }
  std::ifstream in(cfg.potential);
  if (!in) throw ConfigError("unknown potential '" + cfg.potential + "' (not a fixture name or readable file)");
  try {
    from_json(json::parse(in), cfg.potential);
  } catch (const json::parse_error& e) {
    throw ConfigError("potential file is not valid JSON: " + std::string(e.what()));
  }
  return out;
}

const hkexp::Polynomial& require_polynomial(const ResolvedPotential& p, const std::string& command) {
  if (!p.poly) throw ConfigError("command '" + command + "' needs a polynomial potential");
  return *p.poly;
}

// --- output -----------------------------------------------------------------

json manifest(const JobConfig& cfg, const ResolvedPotential& pot) {
  json c{{"command", cfg.command},
         {"potential", pot.name},
         {"n", cfg.n},
         {"order", cfg.order},
         {"hbar", cfg.hbar},
         {"s", cfg.s},
         {"basis", cfg.basis},
         {"x", cfg.x},
         {"r_grid", cfg.r_grid},
         {"s_grid", cfg.s_grid},
         {"out", cfg.out},
         {"tol", cfg.tol ? json(*cfg.tol) : json(nullptr)},
         {"fault", cfg.fault},
         {"scan_points", cfg.scan_points}};
  if (pot.poly) c["potential_polynomial"] = hkexp::to_json(*pot.poly);
  return {{"tool", "hkexp"}, {"format_version", 1}, {"config", c}};
}

class OutputDir {
 public:
  OutputDir(const std::string& dir, json manifest) : dir_(dir), manifest_(std::move(manifest)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    write_json("manifest.json", manifest_, false);
  }

  /// Writes a JSON document; the manifest is attached under "manifest".
  void write_json(const std::string& name, json body, bool attach = true) const {
    if (attach) body["manifest"] = manifest_;
    open(name) << body.dump(2) << '\n';
  }

  /// Writes text; CSV files start with a "# manifest:" comment line.
  void write_text(const std::string& name, const std::string& text, bool csv) const {
    std::ofstream os = open(name);
    if (csv) os << "# manifest: " << manifest_.dump() << '\n';
    os << text;
  }

 private:
  std::ofstream open(const std::string& name) const {
    std::ofstream os(dir_ / name);
    if (!os) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
    return os;
  }

  fs::path dir_;
  json manifest_;
};

std::vector<std::vector<double>> points_from(const std::vector<double>& flat, int n) {
  if (flat.size() % static_cast<std::size_t>(n) != 0)
    throw ConfigError("x-point list length must be a multiple of n");
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < flat.size(); k += n) out.emplace_back(flat.begin() + k, flat.begin() + k + n);
  return out;
}

hkexp::DerivativeConstants derivative_table(const JobConfig& cfg) {
  if (cfg.fault == "cmu") return hkexp::validate::corrupted_derivative_constant;
  return hkexp::mehler_derivative_constant;
}

json checks_json(const std::vector<hkexp::validate::Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) arr.push_back(hkexp::validate::to_json(c));
  return arr;
}

void fail_on(const std::vector<hkexp::validate::Check>& checks) {
  for (const auto& c : checks)
    if (!c.passed) throw CheckFailure(c.name + " (" + c.detail + ")");
}

// --- commands ---------------------------------------------------------------

void run_expand(const JobConfig& cfg, const ResolvedPotential& pot, const OutputDir& out) {
  const hkexp::Polynomial& v = require_polynomial(pot, cfg.command);
  const auto ups = hkexp::assemble_upsilon(v, cfg.order, derivative_table(cfg));
  json list = json::array();
  std::ostringstream text;
  for (std::size_t k = 0; k < ups.size(); ++k) {
    list.push_back({{"k", k}, {"coefficient", hkexp::to_json(ups[k])}, {"text", hkexp::to_string(ups[k])}});
    text << "Upsilon_" << k << " = " << ups[k] << '\n';
  }
  out.write_json("upsilon_k.json", {{"potential", hkexp::to_json(v)}, {"order", cfg.order}, {"upsilon", list}});
  out.write_text("upsilon.txt", text.str(), false);
}

void run_symbols(const JobConfig& cfg, const ResolvedPotential& pot, const OutputDir& out) {
  const hkexp::Polynomial& v = require_polynomial(pot, cfg.command);
  const auto chain = hkexp::x_chain(v, cfg.order);
  hkexp::GradedSymbol p = hkexp::first_symbol(v);
  json per_m = json::array();
  for (int m = 1; m <= cfg.order; ++m) {
    if (m > 1) p = hkexp::full_symbol_step(p, v);
    const json rho = m % 2 == 1 ? hkexp::to_json(hkexp::rho_odd(chain[m])) : hkexp::to_json(hkexp::rho_even(chain[m]));
    per_m.push_back({{"m", m},
                     {"full", hkexp::to_json(p)},
                     {"principal", hkexp::to_json(hkexp::principal_part(p))},
                     {"subprincipal", hkexp::to_json(hkexp::subprincipal_part(p))},
                     {"sigma_top", hkexp::to_json(hkexp::sigma_top(m, v))},
                     {"rho", rho}});
  }
  const std::vector<hkexp::Polynomial> vs{v};
  std::vector<int> ms;
  for (int m = 1; m <= std::min(cfg.order, 6); ++m) ms.push_back(m);
  const std::vector<hkexp::validate::Check> checks{
      hkexp::validate::operator_vs_symbol(vs, cfg.order), hkexp::validate::principal_subprincipal(vs, cfg.order),
      hkexp::validate::symbol_vs_diagonal(vs, derivative_table(cfg), ms)};
  out.write_json("symbols.json", {{"symbols", per_m}});
  out.write_json("report.json", {{"checks", checks_json(checks)}});
  fail_on(checks);
}

void run_oracle(const JobConfig& cfg, const ResolvedPotential& pot, const OutputDir& out) {
  const hkexp::Polynomial& v = require_polynomial(pot, cfg.command);
  if (v.dim() > 2) throw ConfigError("the spectral oracle supports n = 1 or 2");
  std::vector<double> flat = cfg.x;
  if (flat.empty())
    for (double t : {0.0, 0.5, 1.0})
      for (int r = 0; r < cfg.n; ++r) flat.push_back(r == 0 ? t : 0.0);
  const auto xs = points_from(flat, cfg.n);
  hkexp::oracle::FitOptions fo;
  fo.levels = cfg.basis;
  const auto cmp = hkexp::validate::compare_fit(v, cfg.s, xs, cfg.hbar, fo, derivative_table(cfg));

  std::ostringstream csv;
  csv.precision(17);
  csv << "hbar";
  if (cfg.n == 1)
    csv << ",x";
  else
    csv << ",x1,x2";
  csv << ",s,defect,kernel_tail,levels\n";
  for (const auto& smp : cmp.fit.samples) {
    csv << smp.hbar;
    for (double c : smp.x) csv << ',' << c;
    csv << ',' << smp.s << ',' << smp.defect << ',' << smp.kernel_tail << ',' << smp.levels << '\n';
  }
  out.write_text("sweep.csv", csv.str(), true);

  json points = json::array();
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const auto& f = cmp.fit.points[p];
    json sym = json::array();
    for (const auto& u : cmp.upsilon) sym.push_back(u[p]);
    points.push_back({{"x", f.x},
                      {"coefficients", f.coefficients},
                      {"residuals", f.residuals},
                      {"uncertainty", f.uncertainty},
                      {"symbolic", sym}});
  }
  const double tol0 = cfg.tol.value_or(0.01), tol1 = cfg.tol.value_or(0.05);
  const std::vector<hkexp::validate::Check> checks{
      {"oracle_upsilon0", cmp.max_relative_error[0] <= tol0, cmp.max_relative_error[0], tol0, "relative"},
      {"oracle_upsilon1", cmp.max_relative_error[1] <= tol1, cmp.max_relative_error[1], tol1, "relative"}};
  out.write_json("report.json", {{"s", cfg.s},
                                 {"hbar", cmp.fit.hbars},
                                 {"condition_number", cmp.fit.condition_number},
                                 {"max_kernel_tail", cmp.fit.max_kernel_tail},
                                 {"points", points},
                                 {"checks", checks_json(checks)}});
  fail_on(checks);
}

void run_invariants(const JobConfig& cfg, const ResolvedPotential& pot, const OutputDir& out) {
  const hkexp::Polynomial& v = require_polynomial(pot, cfg.command);
  const hkexp::InvariantReport rep = hkexp::invariant_report(v, cfg.s_grid, cfg.r_grid);
  std::ostringstream inv, sph;
  hkexp::write_invariants_csv(inv, rep);
  hkexp::write_spheres_csv(sph, rep);
  const std::vector<hkexp::validate::Check> checks{
      hkexp::validate::invariant_consistency({v}, cfg.s_grid, cfg.tol.value_or(hkexp::kExactTolerance))};
  json body = hkexp::to_json(rep);
  body["checks"] = checks_json(checks);
  out.write_json("report.json", body);
  out.write_text("invariants.csv", inv.str(), true);
  out.write_text("spheres.csv", sph.str(), true);
  fail_on(checks);
}

void run_detect(const JobConfig& cfg, const ResolvedPotential& pot, const OutputDir& out) {
  if (cfg.n < 2) throw ConfigError("detectors need n >= 2");
  json rows = json::array();
  json body;
  if (pot.numeric) {
    const double tol = cfg.tol.value_or(hkexp::kNumericTolerance);
    const hkexp::fixtures::RadialBump bump;
    for (double r : cfg.r_grid) {
      const auto c = hkexp::constancy_detector(bump, r, tol);
      rows.push_back({{"r", r}, {"constant", c.constant}, {"value", c.value}, {"relative_defect", c.relative_defect}});
    }
    const double r_max = *std::max_element(cfg.r_grid.begin(), cfg.r_grid.end());
    const auto a = hkexp::support_annulus(bump, r_max, cfg.scan_points);
    body["support_annulus"] = {{"empty", a.empty},
                               {"inner", a.inner},
                               {"outer", a.outer},
                               {"inner_bracket", a.inner_bracket},
                               {"outer_bracket", a.outer_bracket},
                               {"resolution", a.resolution}};
  } else {
    const hkexp::Polynomial& v = *pot.poly;
    const double tol = cfg.tol.value_or(hkexp::kExactTolerance);
    for (double r : cfg.r_grid) {
      const auto c = hkexp::constancy_detector(v, r, tol);
      json row{{"r", r}, {"constant", c.constant}, {"value", c.value}, {"relative_defect", c.relative_defect}};
      if (v.is_odd() && !v.is_zero()) {
        const auto f = hkexp::sphere_functionals(v, r);
        if (f.m2 > 0.0) {
          const auto d = hkexp::odd_linear_verdict(f, v.dim(), tol);
          row["odd_linear"] = {{"in_class", d.in_class}, {"lhs", d.lhs}, {"rhs", d.rhs},
                               {"gap", d.gap},           {"chi", d.chi}, {"lambda1", d.lambda1}};
        } else {
          row["odd_linear"] = "undefined: V vanishes on this sphere";
        }
      }
      rows.push_back(row);
    }
  }
  body["spheres"] = rows;
  out.write_json("report.json", body);
}

void run_validate(const JobConfig& cfg, const ResolvedPotential&, const OutputDir& out) {
  hkexp::validate::ValidationOptions opt;
  opt.hbars = cfg.hbar;
  opt.s = cfg.s;
  opt.levels = cfg.basis;
  opt.operator_table = derivative_table(cfg);
  if (cfg.tol) opt.exact_tolerance = *cfg.tol;
  const auto rep = hkexp::validate::run_validation(opt);
  out.write_json("report.json", hkexp::validate::to_json(rep));
  for (const auto& c : rep.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
  fail_on(rep.checks);
}

int run(const JobConfig& cfg) {
  const ResolvedPotential pot = resolve_potential(cfg);
  const OutputDir out(cfg.out, manifest(cfg, pot));
  if (cfg.command == "expand") run_expand(cfg, pot, out);
  else if (cfg.command == "symbols") run_symbols(cfg, pot, out);
  else if (cfg.command == "oracle") run_oracle(cfg, pot, out);
  else if (cfg.command == "invariants") run_invariants(cfg, pot, out);
  else if (cfg.command == "detect") run_detect(cfg, pot, out);
  else run_validate(cfg, pot, out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical heat-trace expansion engine"};
  JobConfig cfg;
  std::string config_file;
  app.add_option("command,--command", cfg.command, "expand | symbols | oracle | invariants | detect | validate");
  app.add_option("--config", config_file, "JobConfig JSON file; command-line flags take precedence");
  auto* o_pot = app.add_option("--potential", cfg.potential, "fixture name, polynomial JSON file or inline JSON");
  auto* o_n = app.add_option("--n", cfg.n, "dimension");
  auto* o_order = app.add_option("--order", cfg.order, "expansion order K (expand) or largest index m (symbols)");
  auto* o_hbar = app.add_option("--hbar", cfg.hbar, "hbar values, comma separated")->delimiter(',');
  auto* o_s = app.add_option("--s", cfg.s, "rescaled time s");
  auto* o_basis = app.add_option("--basis", cfg.basis, "oracle levels (0: automatic)");
  auto* o_x = app.add_option("--x", cfg.x, "evaluation points, n coordinates each, comma separated")->delimiter(',');
  auto* o_r = app.add_option("--r-grid", cfg.r_grid, "sphere radii, comma separated")->delimiter(',');
  auto* o_sg = app.add_option("--s-grid", cfg.s_grid, "invariant s values, comma separated")->delimiter(',');
  auto* o_out = app.add_option("--out", cfg.out, "output directory");
  auto* o_tol = app.add_option("--tol", cfg.tol, "tolerance override");
  auto* o_fault = app.add_option("--fault", cfg.fault, "fault injection hook (cmu)");
  auto* o_scan = app.add_option("--scan-points", cfg.scan_points, "radii in the support scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!config_file.empty()) {
      std::set<std::string> overridden;
      const std::pair<CLI::Option*, const char*> flags[] = {
          {o_pot, "potential"}, {o_n, "n"},     {o_order, "order"}, {o_hbar, "hbar"}, {o_s, "s"},
          {o_basis, "basis"},   {o_x, "x"},     {o_r, "r_grid"},    {o_sg, "s_grid"}, {o_out, "out"},
          {o_tol, "tol"},       {o_fault, "fault"}, {o_scan, "scan_points"}};
      for (const auto& [opt, key] : flags)
        if (opt->count() > 0) overridden.insert(key);
      if (app.get_option("command")->count() > 0) overridden.insert("command");
      load_config_file(config_file, cfg, overridden);
    }
    validate_config(cfg);
    return run(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "hkexp: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hkexp::ResourceLimit& e) {
    std::cerr << "hkexp: resource limit: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::bad_alloc&) {
    std::cerr << "hkexp: resource limit: out of memory\n";
    return kExitResource;
  } catch (const CheckFailure& e) {
    std::cerr << "hkexp: check failed: " << e.what() << '\n';
    return kExitCheck;
  } catch (const hkexp::DomainError& e) {
    std::cerr << "hkexp: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hkexp::DimensionMismatch& e) {
    std::cerr << "hkexp: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hkexp::FormatError& e) {
    std::cerr << "hkexp: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "hkexp: check failed: " << e.what() << '\n';
    return kExitCheck;
  }
}
