#pragma once

// Sectioned key-value configuration files mirroring the solver's parameter
// structure: [section] headers, key = value lines, # comments. Values are
// numbers, booleans, comma lists, or quoted expression strings. Unknown
// sections or keys are rejected, and every expression is parsed up front so
// a bad input file fails at load time, not mid-run.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "meltsim/coupling.hpp"
#include "meltsim/expr.hpp"
#include "meltsim/verify.hpp"

namespace meltsim {

class ConfigError : public Error {
public:
  using Error::Error;
};

class Config {
public:
  using Section = std::map<std::string, std::string>;

  static Config load(const std::string &path);
  static Config parse(std::istream &is, const std::string &origin = "<stream>");

  bool has(const std::string &section, const std::string &key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  const std::string &raw(const std::string &section, const std::string &key) const {
    auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key))
      throw ConfigError("missing required key '" + section + "." + key + "'");
    return s->second.at(key);
  }

  double number(const std::string &section, const std::string &key) const {
    return to_number(raw(section, key), section + "." + key);
  }

  double number_or(const std::string &section, const std::string &key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }

  int integer(const std::string &section, const std::string &key) const {
    double v = number(section, key);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw ConfigError("key '" + section + "." + key + "' must be an integer");
    return i;
  }

  int integer_or(const std::string &section, const std::string &key, int fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
  }

  bool boolean_or(const std::string &section, const std::string &key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string &v = raw(section, key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key '" + section + "." + key + "' must be true or false");
  }

  std::string text(const std::string &section, const std::string &key) const {
    return unquote(raw(section, key));
  }

  std::string text_or(const std::string &section, const std::string &key,
                      const std::string &fallback) const {
    return has(section, key) ? text(section, key) : fallback;
  }

  std::vector<double> numbers(const std::string &section, const std::string &key) const {
    std::vector<double> out;
    for (const std::string &item : split_list(raw(section, key)))
      out.push_back(to_number(item, section + "." + key));
    return out;
  }

  std::vector<std::string> texts(const std::string &section, const std::string &key) const {
    std::vector<std::string> out;
    for (const std::string &item : split_list(raw(section, key))) out.push_back(unquote(item));
    return out;
  }

  // constants shared by every expression in the file
  Bindings bindings() const {
    Bindings b;
    auto s = sections_.find("constants");
    if (s != sections_.end())
      for (const auto &[name, value] : s->second) b.set(name, to_number(value, "constants." + name));
    return b;
  }

  Expr expression(const std::string &section, const std::string &key) const {
    try {
      return Expr::parse(text(section, key));
    } catch (const Error &e) {
      throw ConfigError("bad expression in '" + section + "." + key + "': " + e.what());
    }
  }

  void write(std::ostream &os) const {
    for (const auto &[name, section] : sections_) {
      os << "[" << name << "]\n";
      for (const auto &[key, value] : section) os << key << " = " << value << "\n";
      os << "\n";
    }
  }

  bool operator==(const Config &o) const { return sections_ == o.sections_; }

  // comma splitting that respects quoted strings
  static std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : s) {
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        out.push_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(trim(cur));
    return out;
  }

private:
  static std::string trim(const std::string &s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
  }

  static std::string unquote(const std::string &s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
  }

  static double to_number(const std::string &s, const std::string &where) {
    const std::string t = unquote(s);
    char *end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0')
      throw ConfigError("value '" + t + "' of '" + where + "' is not a number");
    return v;
  }

  void check_schema() const;

  std::map<std::string, Section> sections_;
};

inline Config Config::parse(std::istream &is, const std::string &origin) {
  Config cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::size_t hash = std::string::npos;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        hash = i;
        break;
      }
    }
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any section");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  cfg.check_schema();
  return cfg;
}

inline Config Config::load(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  return parse(is, path);
}

inline void Config::check_schema() const {
  static const std::map<std::string, std::set<std::string>> kSchema = {
      {"meta", {"dim"}},
      {"constants", {}},  // free-form constant names
      {"geometry", {"grid_name", "sizes", "shell_angular_cells"}},
      {"pde", {"velocity", "diffusivity", "source"}},
      {"initial_values", {"function", "checkpoint"}},
      {"boundary_conditions",
       {"implementation_types", "function_names", "function_double_arguments", "parsed_functions"}},
      {"refinement", {"initial_global_cycles", "boundaries_to_refine", "initial_boundary_cycles"}},
      {"time", {"end_time", "step_size", "semi_implicit_theta"}},
      {"solver", {"tolerance", "max_iterations", "method", "jacobi"}},
      {"verification", {"enabled", "exact"}},
      {"output", {"directory", "write_vtk", "vtk_stride", "write_checkpoint", "write_pci", "pci_level"}},
      {"body", {"shape", "sizes", "hull_samples"}},
      {"rbd",
       {"gravity", "melting_temperature", "max_change", "tol_g", "tol_f", "step_tol",
        "outer_iterations", "inner_iterations"}},
      {"coupling",
       {"steps", "step_size", "substeps", "flux_boundary", "flux_steps", "flux_values"}},
  };
  for (const auto &[name, section] : sections_) {
    auto it = kSchema.find(name);
    if (it == kSchema.end()) throw ConfigError("unknown section [" + name + "]");
    if (it->second.empty()) continue;  // free-form keys
    for (const auto &[key, value] : section)
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "' in section [" + name + "]");
  }
}

// ---------------------------------------------------------------------------
// Builders from a validated config to the runtime objects.

namespace config {

inline GridSpec grid_spec(const Config &cfg) {
  GridSpec spec;
  spec.name = grid_name_from_string(cfg.text("geometry", "grid_name"));
  spec.sizes = cfg.numbers("geometry", "sizes");
  spec.shell_angular_cells = cfg.integer_or("geometry", "shell_angular_cells", 8);
  spec.validate();
  return spec;
}

inline Mesh build_mesh(const Config &cfg) {
  Mesh m = mesh_ops::generate(grid_spec(cfg));
  int global = cfg.integer_or("refinement", "initial_global_cycles", 0);
  m = mesh_ops::refine_global(m, global);
  if (cfg.has("refinement", "boundaries_to_refine")) {
    int cycles = cfg.integer_or("refinement", "initial_boundary_cycles", 0);
    for (double idd : cfg.numbers("refinement", "boundaries_to_refine"))
      m = mesh_ops::refine_boundary(m, static_cast<int>(idd), cycles);
  }
  int dim = cfg.integer("meta", "dim");
  if (dim != 1 && dim != 2) throw ConfigError("meta.dim must be 1 or 2");
  if (m.dim != dim)
    throw ConfigError("meta.dim disagrees with the dimension of geometry.grid_name");
  return m;
}

// boundary conditions from the triple of per-boundary lists
inline std::map<int, BcSpec> boundary_conditions(const Config &cfg, int n_boundary_ids,
                                                 const Bindings &bindings) {
  auto types = cfg.texts("boundary_conditions", "implementation_types");
  if (static_cast<int>(types.size()) != n_boundary_ids)
    throw ConfigError("boundary_conditions.implementation_types has " +
                      std::to_string(types.size()) + " entries but the mesh has " +
                      std::to_string(n_boundary_ids) + " boundary ids");
  std::vector<std::string> names(types.size(), "constant");
  if (cfg.has("boundary_conditions", "function_names")) {
    names = cfg.texts("boundary_conditions", "function_names");
    if (names.size() != types.size())
      throw ConfigError("boundary_conditions.function_names length mismatch");
  }
  std::vector<double> doubles;
  if (cfg.has("boundary_conditions", "function_double_arguments"))
    doubles = cfg.numbers("boundary_conditions", "function_double_arguments");
  std::vector<std::string> parsed;
  if (cfg.has("boundary_conditions", "parsed_functions"))
    parsed = cfg.texts("boundary_conditions", "parsed_functions");

  std::map<int, BcSpec> out;
  std::size_t next_double = 0, next_parsed = 0;
  for (int id = 0; id < n_boundary_ids; ++id) {
    const std::string &type = types[static_cast<std::size_t>(id)];
    BcSpec::Kind kind;
    if (type == "strong") kind = BcSpec::kStrong;
    else if (type == "natural") kind = BcSpec::kNatural;
    else throw ConfigError("implementation_types entries must be 'strong' or 'natural', got '" + type + "'");

    const std::string &name = names[static_cast<std::size_t>(id)];
    SpaceTimeFn fn;
    if (name == "constant") {
      if (next_double >= doubles.size())
        throw ConfigError("not enough function_double_arguments for the constant boundary functions");
      double v = doubles[next_double++];
      fn = [v](const Vec2 &, double) { return v; };
    } else if (name == "parsed") {
      if (next_parsed >= parsed.size())
        throw ConfigError("not enough parsed_functions for the parsed boundary functions");
      Expr e = Expr::parse(parsed[next_parsed++]);
      fn = verify::space_time_fn(std::move(e), bindings);
    } else {
      throw ConfigError("function_names entries must be 'constant' or 'parsed', got '" + name + "'");
    }
    out[id] = {kind, std::move(fn)};
  }
  if (next_double != doubles.size())
    throw ConfigError("unused entries in boundary_conditions.function_double_arguments");
  if (next_parsed != parsed.size())
    throw ConfigError("unused entries in boundary_conditions.parsed_functions");
  return out;
}

inline linsolve::SolveOptions solver_options(const Config &cfg) {
  linsolve::SolveOptions opt;
  opt.tol = cfg.number_or("solver", "tolerance", 1e-8);
  opt.max_iter = cfg.integer_or("solver", "max_iterations", 5000);
  opt.jacobi = cfg.boolean_or("solver", "jacobi", false);
  return opt;
}

struct LoadedProblem {
  AmbientProblem problem;
  Expr exact;        // empty unless verification is enabled
  Bindings bindings;
  bool verification = false;
};

inline LoadedProblem build_ambient(const Config &cfg, std::shared_ptr<const Mesh> mesh) {
  Bindings bindings = cfg.bindings();
  AmbientProblem p{FeSpace(std::move(mesh))};

  Expr diff = cfg.has("pde", "diffusivity") ? cfg.expression("pde", "diffusivity") : Expr::parse("1");
  p.diffusivity = verify::scalar_fn(diff, bindings);

  if (cfg.has("pde", "velocity")) {
    auto comps = Expr::parse_vector(cfg.text("pde", "velocity"));
    bool zero = true;
    for (const Expr &c : comps) zero = zero && c.is_literal_zero();
    if (!zero) {
      p.velocity = verify::velocity_fn(comps, bindings);
      p.velocity_is_zero = false;
    }
  }
  if (cfg.has("pde", "source")) {
    Expr s = cfg.expression("pde", "source");
    if (!s.is_literal_zero()) p.source = verify::space_time_fn(std::move(s), bindings);
  }

  p.bcs = boundary_conditions(cfg, p.space.mesh->n_boundary_ids, bindings);

  if (cfg.has("initial_values", "checkpoint")) {
    Checkpoint cp = read_checkpoint(cfg.text("initial_values", "checkpoint"));
    p.initial_field = std::move(cp.field);
    p.t_start = cp.time;
  } else {
    Expr iv = cfg.has("initial_values", "function") ? cfg.expression("initial_values", "function")
                                                    : Expr::parse("0");
    p.initial_values = verify::scalar_fn(std::move(iv), bindings);
  }

  p.theta = cfg.number_or("time", "semi_implicit_theta", 0.5);
  p.dt = cfg.number("time", "step_size");
  p.t_end = p.t_start + cfg.number("time", "end_time");
  p.solver = solver_options(cfg);

  LoadedProblem out{std::move(p), {}, std::move(bindings), false};
  if (cfg.boolean_or("verification", "enabled", false)) {
    out.exact = cfg.expression("verification", "exact");
    out.verification = true;
  }
  out.problem.validate();
  return out;
}

inline BodyGeometry build_body(const Config &cfg) {
  std::string shape = cfg.text("body", "shape");
  auto sizes = cfg.numbers("body", "sizes");
  int samples = cfg.integer_or("body", "hull_samples", 32);
  if (shape == "circle") {
    if (sizes.size() != 1) throw ConfigError("body.sizes for a circle is one radius");
    return BodyGeometry::circle(sizes[0], samples);
  }
  if (shape == "sphere_cylinder" || shape == "sphere-cylinder") {
    if (sizes.size() != 2) throw ConfigError("body.sizes for a sphere_cylinder is R_nose, L_body");
    return BodyGeometry::sphere_cylinder(sizes[0], sizes[1], samples);
  }
  throw ConfigError("body.shape must be circle or sphere_cylinder");
}

inline RbdProblem build_rbd(const Config &cfg) {
  RbdProblem p;
  p.body = build_body(cfg);
  auto gv = cfg.numbers("rbd", "gravity");
  if (gv.size() != 2) throw ConfigError("rbd.gravity needs two components");
  p.gravity = {gv[0], gv[1]};
  p.melting_temperature = cfg.number_or("rbd", "melting_temperature", 0.0);
  auto mc = cfg.numbers("rbd", "max_change");
  if (mc.size() != 3) throw ConfigError("rbd.max_change needs theta, r0, r1 bounds");
  p.max_change = {mc[0], mc[1], mc[2]};
  p.tol_g = cfg.number_or("rbd", "tol_g", 1e-6);
  p.tol_f = cfg.number_or("rbd", "tol_f", 1e-9);
  p.step_tol = cfg.number_or("rbd", "step_tol", 1e-4);
  p.outer_iterations = cfg.integer_or("rbd", "outer_iterations", 12);
  p.inner_iterations = cfg.integer_or("rbd", "inner_iterations", 60);
  return p;
}

inline CouplingConfig build_coupling(const Config &cfg) {
  CouplingConfig cc;
  cc.steps = cfg.integer("coupling", "steps");
  cc.dt = cfg.number("coupling", "step_size");
  cc.substeps = cfg.integer_or("coupling", "substeps", 1);
  cc.theta = cfg.number_or("time", "semi_implicit_theta", 0.5);

  Bindings bindings = cfg.bindings();
  Expr diff = cfg.has("pde", "diffusivity") ? cfg.expression("pde", "diffusivity") : Expr::parse("1");
  cc.diffusivity = verify::scalar_fn(std::move(diff), bindings);
  if (cfg.has("pde", "source")) {
    Expr s = cfg.expression("pde", "source");
    if (!s.is_literal_zero()) cc.source = verify::space_time_fn(std::move(s), bindings);
  }

  Mesh mesh = build_mesh(cfg);
  cc.bcs = boundary_conditions(cfg, mesh.n_boundary_ids, bindings);
  cc.flux_boundary = cfg.integer_or("coupling", "flux_boundary", -1);
  if (cfg.has("coupling", "flux_steps") || cfg.has("coupling", "flux_values")) {
    auto steps = cfg.numbers("coupling", "flux_steps");
    auto values = cfg.numbers("coupling", "flux_values");
    if (steps.size() != values.size())
      throw ConfigError("coupling.flux_steps and coupling.flux_values differ in length");
    if (cc.flux_boundary < 0) throw ConfigError("a flux schedule needs coupling.flux_boundary");
    for (std::size_t i = 0; i < steps.size(); ++i)
      cc.flux_schedule.push_back({static_cast<int>(steps[i]), values[i]});
  }
  cc.solver = solver_options(cfg);
  cc.rbd = build_rbd(cfg);
  cc.validate();
  return cc;
}

inline TrajectoryState initial_trajectory_state(const Config &cfg) {
  if (cfg.has("initial_values", "checkpoint")) {
    Checkpoint cp = read_checkpoint(cfg.text("initial_values", "checkpoint"));
    RigidState xi = cp.rigid.size() > 0 ? cp.rigid[0] : RigidState{};
    RigidState rate = cp.rigid.size() > 1 ? cp.rigid[1] : RigidState{};
    RigidState xi_v = cp.rigid.size() > 2 ? cp.rigid[2] : xi;
    TrajectoryState ts = coupling::make_initial_state(std::move(cp.field), xi, rate, cp.time);
    ts.xi_v = xi_v;
    return ts;
  }
  auto mesh = std::make_shared<Mesh>(build_mesh(cfg));
  Bindings bindings = cfg.bindings();
  Expr iv = cfg.has("initial_values", "function") ? cfg.expression("initial_values", "function")
                                                  : Expr::parse("0");
  auto fn = verify::scalar_fn(std::move(iv), bindings);
  std::vector<double> vals;
  for (const Vec2 &p : mesh->nodes) vals.push_back(fn(p));
  return coupling::make_initial_state(FeField(std::move(mesh), std::move(vals)), {0, 0, 0},
                                      {0, 0, 0}, 0.0);
}

}  // namespace config

}  // namespace meltsim
