#include "isohom/cli.hpp"

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "isohom/cellsolver.hpp"
#include "isohom/coercivity.hpp"
#include "isohom/laminate.hpp"
#include "isohom/microgeom.hpp"
#include "isohom/nulllag.hpp"
#include "isohom/report.hpp"
#include "isohom/tensor2d.hpp"

namespace isohom::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

json ellipticity_defaults() {
  return {{"grid_n", 360}, {"refine_tol", 1e-10}, {"degeneracy_tol", 1e-7}};
}

json defaults_for(const std::string& cmd) {
  if (cmd == "homogenize")
    return {{"microstructure", nullptr},
            {"solver", {{"tol", 1e-9}, {"max_iter", 0}, {"reference", nullptr}}},
            {"ellipticity", ellipticity_defaults()},
            {"corrector_dump", nullptr}};
  if (cmd == "coercivity")
    return {{"microstructure", nullptr},
            {"resolution", nullptr},
            {"eigen", {{"eig_tol", 1e-8}, {"max_iter", 1000}, {"block_size", 4}, {"reference", nullptr}}},
            {"bloch", {{"enabled", true}, {"k_grid", 8}}},
            {"csv", nullptr}};
  if (cmd == "decompose") return {{"phase1", nullptr}, {"phase2", nullptr}};
  if (cmd == "laminate")
    return {{"phase1", nullptr},
            {"phase2", nullptr},
            {"theta", 0.5},
            {"normal", {1.0, 0.0}},
            {"sweep", {{"thetas", nullptr}, {"start", 0.05}, {"stop", 0.95}, {"count", 0}}},
            {"ellipticity", ellipticity_defaults()},
            {"csv", nullptr}};
  if (cmd == "ellipticity")
    return {{"tensor", nullptr}, {"moduli", nullptr}, {"ellipticity", ellipticity_defaults()}};
  throw ConfigError("unknown subcommand " + cmd);
}

// Entries whose default is null or an array take the user value verbatim and
// are validated when they are consumed; objects are merged key by key.
void merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key \"" + where + "\"");
    json& slot = base[key];
    if (slot.is_object() && !value.is_null())
      merge(slot, value, where);
    else
      slot = value;
  }
}

void set_path(json& root, const std::string& dotted, json value) {
  json* node = &root;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty() || std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.empty(); }))
    throw ConfigError("malformed override key \"" + dotted + "\"");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override \"" + dotted + "\" descends into a non-object");
    node = &next;
  }
  (*node)[parts.back()] = std::move(value);
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() <= 2) throw ConfigError("unexpected argument \"" + a + "\"");
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("override " + a + " is missing a value");
      out.emplace_back(a.substr(2), extras[++i]);
    }
  }
  return out;
}

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": value has the wrong type");
  }
}

double positive_tol(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!(v > 0.0)) throw ConfigError(where + ": tolerance must be positive");
  return v;
}

int positive_int(const json& j, const std::string& where, int min_value) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const int v = j.get<int>();
  if (v < min_value) throw ConfigError(where + ": must be at least " + std::to_string(min_value));
  return v;
}

void require_power_of_two(int n, const std::string& where) {
  if (n < 2 || !std::has_single_bit(static_cast<unsigned>(n)))
    throw ConfigError(where + ": resolution " + std::to_string(n) + " is not a power of two");
}

RankOneOptions ellipticity_options(const json& j) {
  RankOneOptions o;
  o.grid_n = positive_int(j["grid_n"], "ellipticity.grid_n", 8);
  o.refine_tol = positive_tol(j["refine_tol"], "ellipticity.refine_tol");
  o.degeneracy_tol = positive_tol(j["degeneracy_tol"], "ellipticity.degeneracy_tol");
  return o;
}

IsotropicModuli moduli_at(const json& j, const std::string& where) {
  if (j.is_null()) throw ConfigError("missing required config entry \"" + where + "\"");
  try {
    return moduli_from_json(j);
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::optional<IsotropicModuli> optional_reference(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  const IsotropicModuli r = moduli_at(j, where);
  if (!r.very_strongly_elliptic()) throw ConfigError(where + ": reference medium must have mu > 0 and lambda + mu > 0");
  return r;
}

// Builds the microstructure and writes the fully specified descriptor back
// into the resolved config.
Microstructure build_microstructure(json& desc, const fs::path& base_dir) {
  if (desc.is_null()) throw ConfigError("missing required config entry \"microstructure\"");
  Microstructure m = microstructure_from_json(desc, base_dir);
  require_power_of_two(m.n(), "microstructure.n");
  desc["n"] = m.n();
  json& g = desc["generator"];
  const std::string kind = g["kind"].get<std::string>();
  if (kind == "laminate" && !g.contains("normal_axis")) g["normal_axis"] = 1;
  if (kind == "disk" && !g.contains("center")) g["center"] = {0.5, 0.5};
  desc["phase1"] = to_json(m.phase1());
  desc["phase2"] = to_json(m.phase2());
  return m;
}

// ---------------------------------------------------------------------------
// Admissibility

std::vector<std::string> phase_warnings(const PhaseConditions& p) {
  std::vector<std::string> w;
  if (!p.mu1_positive) w.push_back("phase condition fails: mu1 > 0");
  if (!p.shear_bulk_equality) w.push_back("phase condition fails: mu1 = -(lambda2 + mu2)");
  if (!p.mu1_below_mu2) w.push_back("phase condition fails: mu1 < mu2");
  if (!p.bulk1_positive) w.push_back("phase condition fails: lambda1 + mu1 > 0");
  return w;
}

// Prints the warnings; returns true when --strict turns them into an error.
bool report_warnings(const std::vector<std::string>& warnings, bool strict, std::ostream& err) {
  for (const auto& w : warnings) err << (strict ? "error: " : "warning: ") << w << "\n";
  return strict && !warnings.empty();
}

std::vector<std::string> admissibility_warnings(const AdmissibilityReport& a) {
  auto w = phase_warnings(a.phases);
  if (!a.matrix_connected)
    w.push_back("matrix phase is not connected (" + std::to_string(a.matrix_components) + " components)");
  return w;
}

json envelope(const std::string& cmd, const json& config) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = cmd;
  j["config"] = config;
  return j;
}

struct Context {
  std::string command;
  json config;
  fs::path base_dir;
  bool strict{false};
  std::optional<fs::path> out_path;
  std::ostream& out;
  std::ostream& err;
};

void emit_report(const Context& ctx, const json& report) {
  const std::string text = dump_json(report);
  if (ctx.out_path)
    write_text(*ctx.out_path, text);
  else
    ctx.out << text;
}

std::optional<fs::path> csv_target(const Context& ctx, const json& entry) {
  if (!entry.is_null()) return fs::path(get_as<std::string>(entry, "csv"));
  if (ctx.out_path) {
    fs::path p = *ctx.out_path;
    return p.replace_extension(".csv");
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_homogenize(Context& ctx) {
  json& cfg = ctx.config;
  const RankOneOptions eopts = ellipticity_options(cfg["ellipticity"]);
  SolverOptions sopts;
  sopts.tol = positive_tol(cfg["solver"]["tol"], "solver.tol");
  sopts.max_iter = positive_int(cfg["solver"]["max_iter"], "solver.max_iter", 0);
  sopts.reference = optional_reference(cfg["solver"]["reference"], "solver.reference");
  const Microstructure m = build_microstructure(cfg["microstructure"], ctx.base_dir);
  if (sopts.max_iter == 0) sopts.max_iter = 10 * m.n();
  cfg["solver"]["max_iter"] = sopts.max_iter;
  if (!sopts.reference) sopts.reference = spectral::default_reference(m);
  cfg["solver"]["reference"] = to_json(*sopts.reference);

  const AdmissibilityReport adm = check_admissibility(m);
  if (report_warnings(admissibility_warnings(adm), ctx.strict, ctx.err)) return kUsage;

  const CellSolution sol = homogenize(m, sopts);
  json rep = envelope(ctx.command, cfg);
  rep["admissibility"] = to_json(adm);
  rep["solution"] = to_json(sol);
  rep["ellipticity"] = to_json(rank_one_min(sol.lstar, eopts));
  const IsotropicProjection proj = project_isotropic(sol.lstar);
  rep["isotropic_projection"] = {{"bulk", proj.bulk},
                                 {"shear", proj.shear},
                                 {"lambda", proj.moduli().lambda},
                                 {"residual", proj.residual}};

  auto energies = json::array();
  for (int i = 0; i < 3; ++i) energies.push_back(energy_of(m, Mat2::Zero(), sol.correctors[i]));
  rep["corrector_energy"] = std::move(energies);

  json bounds;
  const Tensor4 voigt = m.voigt_mean();
  bounds["voigt"] = to_json(voigt);
  bounds["voigt_gap_min_eigenvalue"] = min_eigenvalue(voigt - sol.lstar);
  if (m.phase1().very_strongly_elliptic() && m.phase2().very_strongly_elliptic()) {
    const Tensor4 reuss = m.reuss_mean();
    bounds["reuss"] = to_json(reuss);
    bounds["reuss_gap_min_eigenvalue"] = min_eigenvalue(sol.lstar - reuss);
  } else {
    bounds["reuss"] = nullptr;
  }
  rep["bounds"] = std::move(bounds);

  const json& gen = cfg["microstructure"]["generator"];
  if (gen["kind"] == "laminate") {
    LaminateSpec spec;
    spec.theta = m.volume_fraction();
    spec.normal = gen["normal_axis"].get<int>() == 1 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    spec.phase1 = m.phase1();
    spec.phase2 = m.phase2();
    json oracle;
    oracle["theta"] = spec.theta;
    try {
      const Tensor4 L = laminate_homogenize(spec);
      oracle["lstar"] = to_json(L);
      oracle["ellipticity"] = to_json(rank_one_min(L, eopts));
      oracle["relative_error"] = (sol.lstar.mandel() - L.mandel()).norm() / L.mandel().norm();
    } catch (const LaminateError& e) {
      oracle["error"] = e.what();
    }
    rep["laminate_oracle"] = std::move(oracle);
  }

  if (!cfg["corrector_dump"].is_null()) {
    const std::string prefix = get_as<std::string>(cfg["corrector_dump"], "corrector_dump");
    const char* names[3] = {"E11", "E22", "E12"};
    for (int i = 0; i < 3; ++i) write_corrector(sol.correctors[i], prefix + "_" + names[i] + ".bin");
  }

  emit_report(ctx, rep);
  if (sol.diagnostics.indefiniteness_detected) {
    ctx.err << "error: negative curvature encountered in the cell problem\n";
    return kIndefinite;
  }
  if (!sol.diagnostics.converged) {
    ctx.err << "error: conjugate gradients did not converge within " << sopts.max_iter << " iterations\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_coercivity(Context& ctx) {
  json& cfg = ctx.config;
  EigenOptions eo;
  eo.eig_tol = positive_tol(cfg["eigen"]["eig_tol"], "eigen.eig_tol");
  eo.max_iter = positive_int(cfg["eigen"]["max_iter"], "eigen.max_iter", 1);
  eo.block_size = positive_int(cfg["eigen"]["block_size"], "eigen.block_size", 1);
  eo.reference = optional_reference(cfg["eigen"]["reference"], "eigen.reference");
  const bool bloch = get_as<bool>(cfg["bloch"]["enabled"], "bloch.enabled");
  const int k_grid = positive_int(cfg["bloch"]["k_grid"], "bloch.k_grid", 2);
  const Microstructure m = build_microstructure(cfg["microstructure"], ctx.base_dir);
  int n = m.n();
  if (!cfg["resolution"].is_null()) n = positive_int(cfg["resolution"], "resolution", 8);
  require_power_of_two(n, "resolution");
  if (n % m.n() != 0) throw ConfigError("resolution must be a multiple of microstructure.n");
  cfg["resolution"] = n;

  const AdmissibilityReport adm = check_admissibility(m);
  if (report_warnings(admissibility_warnings(adm), ctx.strict, ctx.err)) return kUsage;

  const CoercivityReport cr = assess_coercivity(m, n, bloch ? std::optional<int>(k_grid) : std::nullopt, eo);
  json rep = envelope(ctx.command, cfg);
  rep["admissibility"] = to_json(adm);
  rep["coercivity"] = to_json(cr);
  if (cr.bloch) {
    if (const auto path = csv_target(ctx, cfg["csv"])) write_text(*path, bloch_csv(*cr.bloch));
  }
  emit_report(ctx, rep);
  return kOk;
}

int cmd_decompose(Context& ctx) {
  json& cfg = ctx.config;
  const IsotropicModuli p1 = moduli_at(cfg["phase1"], "phase1");
  const IsotropicModuli p2 = moduli_at(cfg["phase2"], "phase2");
  cfg["phase1"] = to_json(p1);
  cfg["phase2"] = to_json(p2);
  const PhaseConditions pc = check_phase_conditions(p1, p2);
  if (report_warnings(phase_warnings(pc), ctx.strict, ctx.err)) return kUsage;
  json rep = envelope(ctx.command, cfg);
  rep["phase_conditions"] = pc.all();
  rep["decomposition"] = to_json(decompose(p1, p2));
  emit_report(ctx, rep);
  return kOk;
}

std::vector<double> sweep_thetas(const json& s) {
  if (!s["thetas"].is_null()) {
    if (!s["thetas"].is_array()) throw ConfigError("sweep.thetas: expected an array");
    std::vector<double> t;
    for (const auto& v : s["thetas"]) t.push_back(get_as<double>(v, "sweep.thetas"));
    return t;
  }
  const int count = positive_int(s["count"], "sweep.count", 0);
  const double a = get_as<double>(s["start"], "sweep.start"), b = get_as<double>(s["stop"], "sweep.stop");
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back(count == 1 ? a : a * (1.0 - static_cast<double>(i) / (count - 1)) + b * (static_cast<double>(i) / (count - 1)));
  return t;
}

int cmd_laminate(Context& ctx) {
  json& cfg = ctx.config;
  LaminateSpec spec;
  spec.phase1 = moduli_at(cfg["phase1"], "phase1");
  spec.phase2 = moduli_at(cfg["phase2"], "phase2");
  cfg["phase1"] = to_json(spec.phase1);
  cfg["phase2"] = to_json(spec.phase2);
  spec.theta = get_as<double>(cfg["theta"], "theta");
  const auto nv = get_as<std::vector<double>>(cfg["normal"], "normal");
  if (nv.size() != 2) throw ConfigError("normal: expected two components");
  spec.normal = Vec2(nv[0], nv[1]);
  const RankOneOptions eopts = ellipticity_options(cfg["ellipticity"]);
  const std::vector<double> thetas = sweep_thetas(cfg["sweep"]);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Tensor4 L = laminate_homogenize(spec);
  const Tensor4 Lr = laminate_homogenize_rotated(spec);
  json rep = envelope(ctx.command, cfg);
  rep["lstar"] = to_json(L);
  rep["route_discrepancy"] = (L.mandel() - Lr.mandel()).norm() / std::max(L.mandel().norm(), 1e-300);
  rep["ellipticity"] = to_json(rank_one_min(L, eopts));
  const IsotropicProjection proj = project_isotropic(L);
  rep["isotropic_projection"] = {{"bulk", proj.bulk}, {"shear", proj.shear}, {"residual", proj.residual}};
  if (!thetas.empty()) {
    const auto samples = ellipticity_vs_fraction(spec, thetas, eopts);
    auto rows = json::array();
    for (const auto& s : samples) {
      json r;
      r["theta"] = s.theta;
      r["min_rank_one"] = s.ellipticity.min_value;
      r["argmin_angle_a"] = s.ellipticity.argmin.angle_a();
      r["argmin_angle_b"] = s.ellipticity.argmin.angle_b();
      r["classification"] = to_string(s.ellipticity.classification);
      r["lstar"] = to_json(s.lstar);
      rows.push_back(std::move(r));
    }
    rep["sweep"] = std::move(rows);
    if (const auto path = csv_target(ctx, cfg["csv"])) write_text(*path, fraction_csv(samples));
  }
  emit_report(ctx, rep);
  return kOk;
}

int cmd_ellipticity(Context& ctx) {
  json& cfg = ctx.config;
  const RankOneOptions eopts = ellipticity_options(cfg["ellipticity"]);
  const bool has_t = !cfg["tensor"].is_null(), has_m = !cfg["moduli"].is_null();
  if (has_t == has_m) throw ConfigError("exactly one of \"tensor\" and \"moduli\" must be given");
  Tensor4 L;
  if (has_m) {
    const IsotropicModuli mod = moduli_at(cfg["moduli"], "moduli");
    cfg["moduli"] = to_json(mod);
    L = Tensor4::isotropic(mod);
  } else {
    try {
      L = tensor_from_json(cfg["tensor"]);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("tensor: ") + e.what());
    }
    cfg["tensor"] = to_json(L);
  }
  json rep = envelope(ctx.command, cfg);
  rep["tensor"] = to_json(L);
  rep["ellipticity"] = to_json(rank_one_min(L, eopts));
  rep["min_mandel_eigenvalue"] = min_eigenvalue(L);
  const IsotropicProjection proj = project_isotropic(L);
  rep["isotropic_projection"] = {{"bulk", proj.bulk}, {"shear", proj.shear}, {"residual", proj.residual}};
  emit_report(ctx, rep);
  return kOk;
}

json load_config(const std::optional<fs::path>& path) {
  if (!path) return json::object();
  std::ifstream f(*path);
  if (!f) throw ConfigError("cannot read config " + path->string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path->string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic homogenization of two-phase isotropic elastic composites", "isohom"};
  app.require_subcommand(1);
  const char* commands[][2] = {
      {"homogenize", "solve the cell problem and assemble the homogenized tensor"},
      {"coercivity", "estimate periodic and Bloch coercivity constants"},
      {"decompose", "null-Lagrangian decomposition of the phase energy densities"},
      {"laminate", "closed-form laminate tensor and volume-fraction sweep"},
      {"ellipticity", "rank-one ellipticity analysis of a single tensor"},
  };
  std::string config_path, out_path;
  bool strict = false;
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out", out_path, "report path (default: standard output)");
    sub->add_flag("--strict", strict, "treat admissibility warnings as errors");
    sub->allow_extras();
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  CLI::App* sub = *std::find_if(subs.begin(), subs.end(), [](CLI::App* s) { return s->parsed(); });
  const std::string cmd = sub->get_name();
  Context ctx{cmd, json(), {}, strict, std::nullopt, out, err};
  try {
    std::optional<fs::path> cfg_file;
    if (!config_path.empty()) cfg_file = config_path;
    json user = load_config(cfg_file);
    for (const auto& [key, value] : parse_overrides(sub->remaining())) set_path(user, key, parse_override_value(value));
    ctx.config = defaults_for(cmd);
    merge(ctx.config, user, "");
    if (cfg_file) ctx.base_dir = cfg_file->parent_path();
    if (!out_path.empty()) ctx.out_path = out_path;

    if (cmd == "homogenize") return cmd_homogenize(ctx);
    if (cmd == "coercivity") return cmd_coercivity(ctx);
    if (cmd == "decompose") return cmd_decompose(ctx);
    if (cmd == "laminate") return cmd_laminate(ctx);
    return cmd_ellipticity(ctx);
  } catch (const LaminateError& e) {
    err << "error: " << e.what() << "\n";
    return kLaminateIllPosed;
  } catch (const EigenSolveError& e) {
    err << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const RasterError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed config: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace isohom::cli
