// Command-line front end: run the convection-diffusion solver on a config
// file, run convergence studies, drive coupled trajectories, restart from
// checkpoints, and dump energy-landscape slices.

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "meltsim/config.hpp"

namespace fs = std::filesystem;
using namespace meltsim;

namespace {

int thread_budget() {
  if (const char *env = std::getenv("MELTSIM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct OutputSettings {
  std::string directory = "output";
  bool write_vtk = true;
  int vtk_stride = 1;
  bool write_checkpoint = true;
  bool write_pci = true;
  double pci_level = 0.0;
};

OutputSettings output_settings(const Config &cfg, const std::string &cli_dir) {
  OutputSettings out;
  out.directory = cfg.text_or("output", "directory", "output");
  if (!cli_dir.empty()) out.directory = cli_dir;
  out.write_vtk = cfg.boolean_or("output", "write_vtk", true);
  out.vtk_stride = cfg.integer_or("output", "vtk_stride", 1);
  out.write_checkpoint = cfg.boolean_or("output", "write_checkpoint", true);
  out.write_pci = cfg.boolean_or("output", "write_pci", true);
  out.pci_level = cfg.number_or("output", "pci_level", cfg.number_or("rbd", "melting_temperature", 0.0));
  return out;
}

int run_solve(const std::string &config_path, const std::string &cli_dir) {
  Config cfg = Config::load(config_path);
  auto mesh = std::make_shared<Mesh>(config::build_mesh(cfg));
  config::LoadedProblem loaded = config::build_ambient(cfg, mesh);
  OutputSettings out = output_settings(cfg, cli_dir);
  fs::create_directories(out.directory);

  std::ofstream err_csv;
  SpaceTimeFn exact;
  if (loaded.verification) {
    exact = verify::space_time_fn(loaded.exact, loaded.bindings);
    err_csv.open(fs::path(out.directory) / "error_vs_exact.csv");
    err_csv.precision(17);
    err_csv << "step,time,l2_error\n";
  }

  std::vector<pde::Observer> observers;
  if (out.write_vtk)
    observers.push_back([&](int step, double t, const FeField &f) {
      if (out.vtk_stride > 0 && step % out.vtk_stride == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "solution_%05d.vtk", step);
        export_vtk(f, (fs::path(out.directory) / name).string(), t);
      }
    });
  if (loaded.verification)
    observers.push_back([&](int step, double t, const FeField &f) {
      err_csv << step << "," << t << "," << verify::l2_error(f, exact, t) << "\n";
    });

  pde::UnsteadyResult res = pde::run_unsteady(loaded.problem, observers);

  if (out.write_checkpoint)
    write_checkpoint(res.field, {RigidState{}}, res.history.back().time,
                     (fs::path(out.directory) / "final.msim").string());

  std::cout << "steps: " << res.history.back().step << "\n";
  std::cout << "final time: " << res.history.back().time << "\n";
  std::cout << "nodal range: [" << res.history.back().min_u << ", " << res.history.back().max_u
            << "]\n";
  if (loaded.verification)
    std::cout << "final L2 error vs exact: "
              << verify::l2_error(res.field, exact, res.history.back().time) << "\n";
  std::cout << "output in " << out.directory << "\n";
  return 0;
}

void write_report_csv(const verify::ConvergenceReport &rep, const std::string &path) {
  std::ofstream os(path);
  os.precision(17);
  os << "level,scale,error,local_order\n";
  for (const auto &l : rep.levels)
    os << l.level << "," << l.scale << "," << l.error << "," << l.local_order << "\n";
}

struct VerifyOptions {
  std::string mode = "both";
  int levels_spatial = 0;  // 0: per-case default
  int levels_temporal = 5;
  int base_cycles = -1;
  double dt_factor = 0.5;
  double dt0 = 0.125;
  int temporal_cycles = -1;
  std::string out_dir = "verify_out";
};

verify::StudyOptions spatial_options(const VerifyOptions &vo, int dim) {
  verify::StudyOptions so;
  so.levels = vo.levels_spatial > 0 ? vo.levels_spatial : (dim == 1 ? 6 : 5);
  so.base_cycles = vo.base_cycles >= 0 ? vo.base_cycles : (dim == 1 ? 3 : 2);
  so.dt_factor = vo.dt_factor;
  return so;
}

verify::StudyOptions temporal_options(const VerifyOptions &vo, int dim) {
  verify::StudyOptions to;
  to.levels = vo.levels_temporal;
  to.dt0 = vo.dt0;
  to.temporal_mesh_cycles = vo.temporal_cycles >= 0 ? vo.temporal_cycles : (dim == 1 ? 6 : 5);
  return to;
}

int run_mms_case(const verify::MmsCase &c, const VerifyOptions &vo, const std::string &label,
                 double *p_out = nullptr, double *q_out = nullptr) {
  fs::create_directories(vo.out_dir);
  double p = 0, q = 0;
  if (vo.mode == "spatial" || vo.mode == "both") {
    auto rep = verify::run_convergence_study(c, verify::StudyMode::kSpatial, spatial_options(vo, c.dim));
    p = rep.fitted_order;
    write_report_csv(rep, (fs::path(vo.out_dir) / (label + "_spatial.csv")).string());
  }
  if (vo.mode == "temporal" || vo.mode == "both") {
    auto rep = verify::run_convergence_study(c, verify::StudyMode::kTemporal, temporal_options(vo, c.dim));
    q = rep.fitted_order;
    write_report_csv(rep, (fs::path(vo.out_dir) / (label + "_temporal.csv")).string());
  }
  std::cout << label << ": p = " << p << "  q = " << q << "\n";
  if (p_out) *p_out = p;
  if (q_out) *q_out = q;
  return 0;
}

int run_table(int dim, const VerifyOptions &vo) {
  auto rows = dim == 1 ? verify::table2_rows() : verify::table3_rows();
  std::vector<double> ps(rows.size()), qs(rows.size());
  std::atomic<std::size_t> next{0};
  int n_threads = std::min<int>(thread_budget(), static_cast<int>(rows.size()));
  std::vector<std::thread> pool;
  std::mutex io;
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= rows.size()) return;
        verify::MmsCase c = dim == 1 ? verify::mms1d(rows[i]) : verify::mms2d(rows[i]);
        auto sp = verify::run_convergence_study(c, verify::StudyMode::kSpatial, spatial_options(vo, dim));
        auto tp = verify::run_convergence_study(c, verify::StudyMode::kTemporal, temporal_options(vo, dim));
        ps[i] = sp.fitted_order;
        qs[i] = tp.fitted_order;
        std::lock_guard<std::mutex> lock(io);
        std::cout << (dim == 1 ? "v" : "vmax") << "=" << rows[i].v << " alpha=" << rows[i].alpha
                  << " g=" << rows[i].g << "  p=" << ps[i] << " q=" << qs[i] << "\n";
      }
    });
  for (auto &th : pool) th.join();

  fs::create_directories(vo.out_dir);
  std::string name = dim == 1 ? "table2.csv" : "table3.csv";
  std::ofstream os(fs::path(vo.out_dir) / name);
  os.precision(6);
  os << (dim == 1 ? "v" : "vmax") << ",alpha,g,p,q\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    os << rows[i].v << "," << rows[i].alpha << "," << rows[i].g << "," << ps[i] << "," << qs[i]
       << "\n";
  std::cout << "wrote " << (fs::path(vo.out_dir) / name).string() << "\n";
  return 0;
}

// steady 1D exact-solution study: fully implicit to t_f, error against the
// closed-form steady state over spatial halvings
int run_steady1d(double v, double alpha, double g, int levels, const std::string &out_dir) {
  std::vector<std::pair<double, double>> pts;
  fs::create_directories(out_dir);
  std::ofstream os(fs::path(out_dir) / "steady1d.csv");
  os.precision(17);
  os << "level,h,error,local_order\n";
  double h_neumann = verify::neumann_steady(v, alpha, g);
  for (int k = 0; k < levels; ++k) {
    int cycles = 3 + k;
    auto mesh = std::make_shared<Mesh>(
        mesh_ops::refine_global(mesh_ops::generate({GridName::kHyperCube, {0.0, 1.0}}), cycles));
    AmbientProblem p{FeSpace(mesh)};
    if (v != 0.0) {
      p.velocity = [v](const Vec2 &) { return Vec2{v, 0}; };
      p.velocity_is_zero = false;
    }
    p.diffusivity = [alpha](const Vec2 &) { return alpha; };
    p.bcs[0] = BcSpec::natural([h_neumann](const Vec2 &, double) { return h_neumann; });
    p.bcs[1] = BcSpec::strong([g](const Vec2 &, double) { return g; });
    p.initial_values = [g](const Vec2 &) { return g; };
    p.theta = 1.0;
    p.dt = 0.1;
    p.t_end = 20.0;
    p.solver.tol = 1e-12;
    auto res = pde::run_unsteady(p);
    double err = verify::l2_error(
        res.field, [&](const Vec2 &x, double) { return verify::exact_steady_1d(v, alpha, g, x.x); },
        20.0);
    double local = pts.empty() ? 0.0 : std::log2(pts.back().second / err);
    pts.push_back({std::ldexp(1.0, -cycles), err});
    os << cycles << "," << pts.back().first << "," << err << "," << local << "\n";
  }
  double order = verify::observed_order(pts);
  std::cout << "steady1d: observed spatial order = " << order << "\n";
  return 0;
}

int run_simulate(const std::string &config_path, const std::string &cli_dir) {
  Config cfg = Config::load(config_path);
  CouplingConfig cc = config::build_coupling(cfg);
  TrajectoryState init = config::initial_trajectory_state(cfg);
  OutputSettings out = output_settings(cfg, cli_dir);

  coupling::TrajectoryOutput traj_out{out.directory, out.write_vtk, out.write_pci, out.pci_level};
  auto history = coupling::run_trajectory(cc, std::move(init), &traj_out);

  const TrajectoryState &last = history.back();
  if (out.write_checkpoint)
    write_checkpoint(last.field, {last.xi, last.xi_dot, last.xi_v}, last.time,
                     (fs::path(out.directory) / "final.msim").string());
  std::cout << "steps: " << cc.steps << "\n";
  std::cout << "final pose: theta=" << last.xi.theta << " r0=" << last.xi.r0
            << " r1=" << last.xi.r1 << "\n";
  std::cout << "final rate: theta_dot=" << last.xi_dot.theta << " r0_dot=" << last.xi_dot.r0
            << " r1_dot=" << last.xi_dot.r1 << "\n";
  std::cout << "output in " << out.directory << "\n";
  return 0;
}

int run_resume(const std::string &checkpoint_path, const std::string &config_path,
               const std::string &cli_dir) {
  Config cfg = Config::load(config_path);
  CouplingConfig cc = config::build_coupling(cfg);
  Checkpoint cp = read_checkpoint(checkpoint_path);
  RigidState xi = cp.rigid.size() > 0 ? cp.rigid[0] : RigidState{};
  RigidState rate = cp.rigid.size() > 1 ? cp.rigid[1] : RigidState{};
  TrajectoryState init = coupling::make_initial_state(std::move(cp.field), xi, rate, cp.time);
  if (cp.rigid.size() > 2) init.xi_v = cp.rigid[2];
  OutputSettings out = output_settings(cfg, cli_dir);

  coupling::TrajectoryOutput traj_out{out.directory, out.write_vtk, out.write_pci, out.pci_level};
  auto history = coupling::run_trajectory(cc, std::move(init), &traj_out);
  const TrajectoryState &last = history.back();
  if (out.write_checkpoint)
    write_checkpoint(last.field, {last.xi, last.xi_dot, last.xi_v}, last.time,
                     (fs::path(out.directory) / "final.msim").string());
  std::cout << "resumed from t = " << cp.time << ", ran " << cc.steps << " steps to t = "
            << last.time << "\n";
  std::cout << "output in " << out.directory << "\n";
  return 0;
}

int run_landscape(const std::string &config_path, const std::string &cli_dir) {
  Config cfg = Config::load(config_path);
  RbdProblem rp = config::build_rbd(cfg);
  TrajectoryState ts = config::initial_trajectory_state(cfg);
  const FeField &f = ts.field;
  rp.temperature = [&f](const Vec2 &x) { return f.eval_extrapolated(x); };
  OutputSettings out = output_settings(cfg, cli_dir);
  fs::create_directories(out.directory);

  auto slice = rbd::energy_landscape(rp, ts.xi);
  std::ofstream os(fs::path(out.directory) / "landscape.csv");
  os.precision(17);
  os << "slice,coordinate,psi\n";
  for (const auto &[th, psi] : slice.theta) os << "theta," << th << "," << psi << "\n";
  for (const auto &[r1, psi] : slice.r1) os << "r1," << r1 << "," << psi << "\n";
  std::cout << "wrote " << (fs::path(out.directory) / "landscape.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"meltsim: rigid-body heat-source trajectories through a phase-change material"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, cli_dir;

  auto *solve = app.add_subcommand("solve", "run the convection-diffusion solver on a config");
  solve->add_option("config", config_path, "config file")->required();
  solve->add_option("--output-dir", cli_dir, "override the output directory");

  auto *verify_cmd = app.add_subcommand("verify", "convergence-order studies");
  std::string case_name;
  VerifyOptions vo;
  double opt_v = -5, opt_alpha = 2, opt_g = -2, opt_beta = 10;
  int steady_levels = 5;
  verify_cmd->add_option("case", case_name, "mms1d | mms2d | steady1d | table2 | table3")->required();
  verify_cmd->add_option("--v", opt_v, "convection velocity (vmax in 2D)");
  verify_cmd->add_option("--vmax", opt_v, "alias of --v for 2D cases");
  verify_cmd->add_option("--alpha", opt_alpha, "diffusivity");
  verify_cmd->add_option("--g", opt_g, "Dirichlet value");
  verify_cmd->add_option("--beta", opt_beta, "time transition rate");
  verify_cmd->add_option("--mode", vo.mode, "spatial | temporal | both");
  verify_cmd->add_option("--levels", vo.levels_spatial, "spatial levels");
  verify_cmd->add_option("--temporal-levels", vo.levels_temporal, "temporal levels");
  verify_cmd->add_option("--base-cycles", vo.base_cycles, "coarsest spatial refinement");
  verify_cmd->add_option("--dt-factor", vo.dt_factor, "spatial mode: dt = factor * h");
  verify_cmd->add_option("--dt0", vo.dt0, "temporal mode: coarsest step");
  verify_cmd->add_option("--temporal-cycles", vo.temporal_cycles, "temporal mode: mesh refinement");
  verify_cmd->add_option("--out", vo.out_dir, "output directory");
  verify_cmd->add_option("--steady-levels", steady_levels, "levels for steady1d");

  auto *simulate = app.add_subcommand("simulate", "run a coupled trajectory");
  simulate->add_option("config", config_path, "config file")->required();
  simulate->add_option("--output-dir", cli_dir, "override the output directory");

  auto *resume = app.add_subcommand("resume", "restart a trajectory from a checkpoint");
  resume->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  resume->add_option("config", config_path, "config file")->required();
  resume->add_option("--output-dir", cli_dir, "override the output directory");

  auto *landscape = app.add_subcommand("landscape", "energy slices of the rigid-body potential");
  landscape->add_option("config", config_path, "config file")->required();
  landscape->add_option("--output-dir", cli_dir, "override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(config_path, cli_dir);
    if (verify_cmd->parsed()) {
      if (case_name == "mms1d")
        return run_mms_case(verify::mms1d({opt_v, opt_alpha, opt_g, opt_beta}), vo, "mms1d");
      if (case_name == "mms2d")
        return run_mms_case(verify::mms2d({opt_v, opt_alpha, opt_g, opt_beta}), vo, "mms2d");
      if (case_name == "steady1d") return run_steady1d(opt_v, opt_alpha, opt_g, steady_levels, vo.out_dir);
      if (case_name == "table2") return run_table(1, vo);
      if (case_name == "table3") return run_table(2, vo);
      std::cerr << "unknown verify case '" << case_name << "'\n";
      return 1;
    }
    if (simulate->parsed()) return run_simulate(config_path, cli_dir);
    if (resume->parsed()) return run_resume(checkpoint_path, config_path, cli_dir);
    if (landscape->parsed()) return run_landscape(config_path, cli_dir);
  } catch (const SolveError &e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
