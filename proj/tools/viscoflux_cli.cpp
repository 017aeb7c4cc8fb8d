#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "viscoflux/viscoflux.hpp"

namespace vf = viscoflux;

namespace {

int report_error(int status, const std::string& msg, const std::string& key) {
  std::cerr << "error: " << msg;
  if (!key.empty()) std::cerr << " [key: " << key << "]";
  std::cerr << '\n';
  return status;
}

void print_checks(const std::map<std::string, vf::CheckResult>& checks) {
  for (const auto& [name, c] : checks) {
    std::printf("%-24s %s  value=%.6g  tolerance=%.6g\n", name.c_str(), c.pass ? "PASS" : "FAIL", c.value,
                c.tolerance);
  }
}

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& pat : patterns) {
    glob_t g{};
    if (::glob(pat.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int cmd_run(const std::string& config, const std::string& out, const vf::RunOptions& opt) {
  vf::RunConfig cfg;
  try {
    cfg = vf::load_config(config);
  } catch (const vf::ConfigError& e) {
    return report_error(vf::exit_config, e.what(), e.key());
  }
  const auto dir = vf::output_dir_for(cfg, out);
  const auto res = vf::execute(cfg, dir, opt);
  if (res.status >= vf::exit_config) return report_error(res.status, res.error, res.error_key);
  print_checks(res.checks);
  std::printf("%s: %s (output in %s)\n", cfg.name.c_str(), res.status == vf::exit_pass ? "pass" : "FAIL",
              dir.string().c_str());
  return res.status;
}

int cmd_sweep(const std::vector<std::string>& patterns, const std::string& out, std::size_t jobs,
              const vf::RunOptions& opt) {
  const auto paths = expand_globs(patterns);
  if (paths.empty()) return report_error(vf::exit_config, "sweep matched no config files", "config");
  const std::filesystem::path root = out.empty() ? std::filesystem::path("out/sweep") : std::filesystem::path(out);
  const auto entries = vf::run_sweep(paths, root, vf::resolve_jobs(jobs), opt);
  const auto summary = vf::sweep_summary(entries);
  vf::io::OutputDir dir(root);
  dir.write_json("sweep_summary.json", summary);
  for (const auto& e : entries) {
    std::printf("%-40s status=%d\n", e.config_path.c_str(), e.result.status);
    if (!e.result.error.empty()) std::printf("    %s [key: %s]\n", e.result.error.c_str(), e.result.error_key.c_str());
  }
  std::printf("summary: %s\n", (root / "sweep_summary.json").string().c_str());
  return summary.at("pass").get<bool>() ? vf::exit_pass : vf::exit_check_failed;
}

int cmd_paths(const std::string& run_dir, const std::vector<double>& seeds, bool ode, const std::string& out) {
  const auto run = vf::load_run(run_dir);
  if (seeds.empty()) throw vf::ConfigError("paths needs at least one seed radius", "seeds");
  vf::io::OutputDir dir(out.empty() ? std::filesystem::path(run_dir) : std::filesystem::path(out));
  const auto chk = vf::detail::write_paths(dir, run.snapshots, run.config.scenario.law, seeds, ode);
  for (const auto& f : dir.files()) std::printf("wrote %s\n", (dir.root() / f).string().c_str());
  std::printf("ordering_min_gap %s  value=%.6g\n", chk.pass ? "PASS" : "FAIL", chk.value);
  return chk.pass ? vf::exit_pass : vf::exit_check_failed;
}

int cmd_blowup(const std::string& run_dir, const std::string& params, double support_density, double window_start,
               const std::string& out) {
  if (run_dir.empty() == params.empty()) {
    throw vf::ConfigError("blowup needs exactly one of --run or --config", "run");
  }
  if (!params.empty()) {
    const auto p = vf::parse_blowup_params(vf::read_json_file(params));
    vf::io::OutputDir dir(out.empty() ? std::filesystem::path("out/blowup") : std::filesystem::path(out));
    const auto ct = vf::detail::write_contradiction(dir, p);
    if (ct.reachable) {
      std::printf("T* = %.17g\n", ct.T_star);
    } else {
      std::printf("T* not reached before t = %g\n", p.t_max);
    }
    return vf::exit_pass;
  }
  const auto run = vf::load_run(run_dir);
  const auto& law = run.config.scenario.law;
  if (run.config.blowup) {
    if (support_density < 0.0) support_density = run.config.blowup->support_density;
    if (window_start < 0.0) window_start = run.config.blowup->window_start;
  }
  vf::io::OutputDir dir(out.empty() ? std::filesystem::path(run_dir) : std::filesystem::path(out));
  const auto rep = vf::detail::write_blowup(dir, run.snapshots, law, support_density < 0.0 ? 1e-4 : support_density,
                                            std::max(window_start, 0.0));
  std::printf("min_margin=%.6g tol_discrete=%.6g margin_ok=%s T*=%.17g\n", rep.min_margin, rep.tol_discrete,
              rep.margin_ok ? "true" : "false", rep.contradiction.T_star);
  return rep.margin_ok ? vf::exit_pass : vf::exit_check_failed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscoflux: radial compressible Navier-Stokes solver and diagnostics"};
  app.require_subcommand(1);

  std::string config, out, run_dir;
  std::vector<std::string> patterns;
  std::size_t jobs = 0, snapshot_every = 0;
  std::vector<double> seeds;
  bool ode = false;
  double support_density = -1.0, window_start = -1.0;

  auto* run = app.add_subcommand("run", "execute one configuration");
  run->add_option("--config", config, "config JSON")->required();
  run->add_option("--out", out, "output directory (default: output.dir, else out/<name>)");
  run->add_option("--snapshot-every", snapshot_every, "override time.snapshot_every");

  auto* check = app.add_subcommand("check", "run the built-in acceptance suite");

  auto* sweep = app.add_subcommand("sweep", "run many configurations concurrently");
  sweep->add_option("--config", patterns, "config files or glob patterns")->required();
  sweep->add_option("--out", out, "output root (default out/sweep)");
  sweep->add_option("--jobs", jobs, "worker threads (default: VISCOFLUX_JOBS, else 1)");
  sweep->add_option("--snapshot-every", snapshot_every, "override time.snapshot_every");

  auto* paths = app.add_subcommand("paths", "particle paths on an existing run");
  paths->add_option("--run", run_dir, "run directory")->required();
  paths->add_option("--seeds", seeds, "initial radii")->required()->delimiter(',');
  paths->add_flag("--ode-residual", ode, "also write the particle-ODE residual");
  paths->add_option("--out", out, "output directory (default: the run directory)");

  auto* blowup = app.add_subcommand("blowup", "blow-up report on a run, or contradiction time from parameters");
  blowup->add_option("--run", run_dir, "compact-support run directory");
  blowup->add_option("--config", config, "parameter JSON {schema_version, law, H0, M0, area0[, t_max]}");
  blowup->add_option("--support-density", support_density, "support threshold");
  blowup->add_option("--window-start", window_start, "first time used for the margin");
  blowup->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? vf::exit_pass : vf::exit_config;
  }

  vf::RunOptions opt;
  opt.snapshot_every = snapshot_every;
  try {
    if (*run) return cmd_run(config, out, opt);
    if (*check) return vf::acceptance::all_pass(vf::acceptance::run_all(std::cout)) ? vf::exit_pass : vf::exit_check_failed;
    if (*sweep) return cmd_sweep(patterns, out, jobs, opt);
    if (*paths) return cmd_paths(run_dir, seeds, ode, out);
    if (*blowup) return cmd_blowup(run_dir, config, support_density, window_start, out);
  } catch (const vf::ConfigError& e) {
    return report_error(vf::exit_config, e.what(), e.key());
  } catch (const vf::IntegrityError& e) {
    return report_error(vf::exit_integrity, e.what(), "");
  } catch (const vf::DomainError& e) {
    return report_error(vf::exit_integrity, e.what(), "");
  }
  return vf::exit_config;
}
