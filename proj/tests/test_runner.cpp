#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "viscoflux/viscoflux.hpp"

using namespace viscoflux;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "viscoflux_runner_tests" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_json(const fs::path& p, const nlohmann::json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << j.dump(2) << '\n';
}

nlohmann::json shipped_doc(const std::string& name) { return acceptance::shipped(name).doc; }

// A short, coarse static run that keeps the CLI tests fast.
nlohmann::json small_static() {
  auto j = shipped_doc("static");
  j["grid"]["n_cells"] = 64;
  j["time"]["T"] = 0.1;
  j["time"]["snapshot_dt"] = 0.02;
  return j;
}

struct CliResult {
  int status = -1;
  std::string output;
};

// Runs the CLI binary named by VISCOFLUX_CLI with stdout and stderr captured.
CliResult cli(const std::string& args) {
  const char* bin = std::getenv("VISCOFLUX_CLI");
  CliResult r;
  if (!bin) return r;
  const auto log = fs::temp_directory_path() / "viscoflux_runner_tests" / "cli_output.txt";
  fs::create_directories(log.parent_path());
  const std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = slurp(log);
  return r;
}

#define REQUIRE_CLI()                                                   \
  if (!std::getenv("VISCOFLUX_CLI")) GTEST_SKIP() << "VISCOFLUX_CLI not set"

} // namespace

TEST(Configs, ShippedFilesMatchBuiltinDocuments) {
  for (const auto& c : acceptance::shipped_configs()) {
    const fs::path p = fs::path(VISCOFLUX_SOURCE_DIR) / "configs" / (c.name + ".json");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(read_json(p), c.doc) << c.name;
    EXPECT_NO_THROW(load_config(p.string())) << c.name;
  }
}

TEST(Configs, SweepExamplesParse) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(fs::path(VISCOFLUX_SOURCE_DIR) / "configs" / "sweep")) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 2u);
}

TEST(Configs, UnknownKeyNamesTheKey) {
  auto j = small_static();
  j["regularization"] = {{"delta_flor", 0.0}};
  try {
    parse_config(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "regularization.delta_flor");
    EXPECT_NE(std::string(e.what()).find("regularization.delta_flor"), std::string::npos);
  }
}

TEST(Configs, MissingAndMistypedValues) {
  auto j = small_static();
  j["grid"].erase("r_max");
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "grid.r_max");
  }
  j = small_static();
  j["grid"]["n_cells"] = -4;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = small_static();
  j["schema_version"] = 2;
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "schema_version");
  }
}

TEST(Configs, HashIsStableAndSensitive) {
  const auto j = small_static();
  EXPECT_EQ(config_hash(j), config_hash(nlohmann::json::parse(j.dump())));
  EXPECT_EQ(config_hash(j).size(), 16u);
  auto k = j;
  k["grid"]["n_cells"] = 65;
  EXPECT_NE(config_hash(j), config_hash(k));
}

TEST(Configs, BlowupRequiresHypotheses) {
  auto j = shipped_doc("compact_support");
  j["law"]["gamma"] = 1.0;
  j["law"]["beta"] = 1.0;
  try {
    parse_config(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "law.gamma");
    EXPECT_NE(std::string(e.what()).find("gamma > 1"), std::string::npos);
  }
  j = shipped_doc("compact_support");
  j["law"]["rho_tilde"] = 1.0;
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Execute, StaticRunPassesWithCompleteManifest) {
  const auto dir = scratch("static");
  const auto res = execute(parse_config(small_static()), dir);
  ASSERT_EQ(res.status, exit_pass) << res.error;
  const auto m = read_json(dir / "manifest.json");
  EXPECT_TRUE(m.at("pass").get<bool>());
  EXPECT_EQ(m.at("config_hash"), config_hash(small_static()));
  EXPECT_EQ(m.at("code_version"), code_version);
  for (const auto& [name, c] : m.at("checks").items()) EXPECT_TRUE(c.at("pass").get<bool>()) << name;
  // Every listed file exists and every file on disk except the manifest is listed.
  std::set<std::string> listed;
  for (const auto& f : m.at("files")) {
    listed.insert(f.get<std::string>());
    EXPECT_TRUE(fs::exists(dir / f.get<std::string>())) << f;
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel != "manifest.json") EXPECT_TRUE(listed.count(rel)) << rel;
  }
}

TEST(Execute, SnapshotsRoundTripThroughDisk) {
  const auto dir = scratch("roundtrip");
  auto j = small_static();
  j["scenario"]["velocity"] = {{"breaks", {1.0}}, {"slopes", {0.5, -0.25}}, {"offsets", {0.0, 0.75}}};
  const auto cfg = parse_config(j);
  ASSERT_EQ(execute(cfg, dir).status, exit_pass);
  const auto stored = load_run(dir);
  const auto mem = run(cfg.scenario);
  ASSERT_EQ(stored.snapshots.size(), mem.snapshots.size());
  for (std::size_t k = 0; k < mem.snapshots.size(); ++k) {
    EXPECT_EQ(stored.snapshots[k].t, mem.snapshots[k].t);
    EXPECT_EQ(stored.snapshots[k].rho, mem.snapshots[k].rho);
    EXPECT_EQ(stored.snapshots[k].v, mem.snapshots[k].v);
  }
}

TEST(Execute, VacuumManifestListsInterfaceReports) {
  const auto dir = scratch("vacuum");
  auto j = shipped_doc("vacuum_annulus");
  j["time"]["T"] = 0.05;
  const auto res = execute(parse_config(j), dir);
  ASSERT_LE(res.status, exit_check_failed) << res.error;
  const auto files = read_json(dir / "manifest.json").at("files");
  auto listed = [&](const std::string& f) { return std::find(files.begin(), files.end(), f) != files.end(); };
  EXPECT_TRUE(listed("vacuum_report.csv"));
  EXPECT_TRUE(listed("interfaces.csv"));
  EXPECT_TRUE(listed("annulus_fit.csv"));
  EXPECT_TRUE(listed("two_fluid.csv"));
}

TEST(Execute, FailingCheckGivesStatusOne) {
  auto j = small_static();
  j["scenario"]["velocity"] = {{"breaks", {1.0}}, {"slopes", {0.5, -0.25}}, {"offsets", {0.0, 0.75}}};
  j["diagnostics"]["energy"]["tolerance"] = 0.5;
  EXPECT_EQ(execute(parse_config(j), scratch("passing")).status, exit_pass);
  j["diagnostics"]["mass_tolerance"] = -1.0; // drift is nonnegative, so no run can meet this
  const auto res = execute(parse_config(j), scratch("failing"));
  EXPECT_EQ(res.status, exit_check_failed);
  EXPECT_FALSE(res.checks.at("mass_drift").pass);
  EXPECT_FALSE(res.checks.count("equilibrium_deviation"));
}

TEST(Execute, ByteIdenticalReruns) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto j = shipped_doc("smooth_bump");
  j["grid"]["n_cells"] = 64;
  j["time"]["T"] = 0.1;
  const auto cfg = parse_config(j);
  ASSERT_LE(execute(cfg, a).status, exit_check_failed);
  ASSERT_LE(execute(cfg, b).status, exit_check_failed);
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++n;
  }
  EXPECT_GT(n, 5u);
}

TEST(Sweep, ThreadCountDoesNotChangeOutputs) {
  const auto cfgdir = scratch("sweep_cfg");
  for (double d : {1e-4, 5e-5}) {
    auto j = shipped_doc("vacuum_annulus");
    j["grid"]["n_cells"] = 128;
    j["time"]["T"] = 0.05;
    j["regularization"]["delta_floor"] = d;
    j["diagnostics"].erase("paths");
    j["diagnostics"].erase("energy");
    write_json(cfgdir / ("d" + std::to_string(d) + ".json"), j);
  }
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(cfgdir)) paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  const auto one = scratch("sweep_one"), two = scratch("sweep_two");
  const auto s1 = sweep_summary(run_sweep(paths, one, 1));
  const auto s2 = sweep_summary(run_sweep(paths, two, 2));
  for (const auto& p : paths) {
    const auto stem = fs::path(p).stem();
    EXPECT_EQ(slurp(one / stem / "manifest.json"), slurp(two / stem / "manifest.json"));
    EXPECT_EQ(slurp(one / stem / "vacuum_report.csv"), slurp(two / stem / "vacuum_report.csv"));
  }
  ASSERT_EQ(s1.at("delta_pairs").size(), 1u);
  const auto& pair = s1.at("delta_pairs")[0];
  EXPECT_NEAR(pair.at("delta_ratio").get<double>(), 2.0, 1e-12);
  EXPECT_TRUE(pair.at("linear_within_factor_1_5").get<bool>());
  EXPECT_EQ(s1.at("delta_pairs"), s2.at("delta_pairs"));
}

TEST(Sweep, JobsFallBackToEnvironment) {
  EXPECT_EQ(resolve_jobs(3), 3u);
  ::setenv("VISCOFLUX_JOBS", "4", 1);
  EXPECT_EQ(resolve_jobs(0), 4u);
  ::setenv("VISCOFLUX_JOBS", "zero", 1);
  EXPECT_THROW(resolve_jobs(0), ConfigError);
  ::unsetenv("VISCOFLUX_JOBS");
  EXPECT_EQ(resolve_jobs(0), 1u);
}

TEST(Blowup, ParameterFileGivesClosedFormTime) {
  // gamma = beta = 2, H0 = 5 pi / 2, unit mass and area pi: T* = sqrt(5)/2 - 1 at M0 = pi.
  const double pi = std::numbers::pi;
  nlohmann::json j{{"schema_version", 1},
                   {"law", {{"gamma", 2.0}, {"beta", 2.0}}},
                   {"H0", 2.5 * pi},
                   {"M0", pi},
                   {"area0", pi}};
  const auto dir = scratch("blowup_params");
  io::OutputDir out(dir);
  const auto ct = detail::write_contradiction(out, parse_blowup_params(j));
  EXPECT_NEAR(ct.T_star, std::sqrt(5.0) / 2.0 - 1.0, 1e-10);
  EXPECT_NEAR(read_json(dir / "blowup_report.json").at("T_star").get<double>(), ct.T_star, 0.0);
  EXPECT_TRUE(fs::exists(dir / "G_curve.csv"));
  j["extra"] = 1;
  EXPECT_THROW(parse_blowup_params(j), ConfigError);
}

TEST(Cli, RunStaticExitsZero) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_static");
  write_json(dir / "static.json", small_static());
  // The output directory does not exist yet and is created on demand.
  const auto r = cli("run --config " + (dir / "static.json").string() + " --out " + (dir / "a/b/out").string());
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(read_json(dir / "a/b/out/manifest.json").at("pass").get<bool>());
}

TEST(Cli, GammaOneWithBlowupExitsTwo) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_gamma");
  auto j = shipped_doc("compact_support");
  j["law"]["gamma"] = 1.0;
  j["law"]["beta"] = 1.0;
  write_json(dir / "g.json", j);
  const auto r = cli("run --config " + (dir / "g.json").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("gamma > 1"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("law.gamma"), std::string::npos) << r.output;
}

TEST(Cli, UnknownKeyExitsTwoNamingTheKey) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_unknown");
  auto j = small_static();
  j["time"]["snapshot_evrey"] = 3;
  write_json(dir / "u.json", j);
  const auto r = cli("run --config " + (dir / "u.json").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("time.snapshot_evrey"), std::string::npos) << r.output;
}

TEST(Cli, FailingCheckExitsOne) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_fail");
  auto j = small_static();
  j["scenario"]["velocity"] = {{"breaks", {1.0}}, {"slopes", {0.5, -0.25}}, {"offsets", {0.0, 0.75}}};
  j["diagnostics"]["mass_tolerance"] = -1.0;
  write_json(dir / "f.json", j);
  const auto r = cli("run --config " + (dir / "f.json").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.status, 1) << r.output;
}

TEST(Cli, EmptySweepGlobExitsTwo) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_empty");
  const auto r = cli("sweep --config '" + (dir / "nothing" / "*.json").string() + "' --out " + (dir / "out").string());
  EXPECT_EQ(r.status, 2) << r.output;
}

TEST(Cli, SweepWritesSummary) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_sweep");
  write_json(dir / "cfg" / "a.json", small_static());
  auto b = small_static();
  b["name"] = "other";
  write_json(dir / "cfg" / "b.json", b);
  const auto r = cli("sweep --jobs 2 --config '" + (dir / "cfg" / "*.json").string() + "' --out " +
                     (dir / "out").string());
  EXPECT_EQ(r.status, 0) << r.output;
  const auto s = read_json(dir / "out" / "sweep_summary.json");
  EXPECT_EQ(s.at("runs").size(), 2u);
  EXPECT_TRUE(s.at("pass").get<bool>());
}

TEST(Cli, PathsOnExistingRun) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_paths");
  ASSERT_EQ(execute(parse_config(small_static()), dir / "run").status, exit_pass);
  const auto r = cli("paths --run " + (dir / "run").string() + " --seeds 0.5,1.5 --out " + (dir / "p").string());
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "p/paths/path_0.csv"));
  EXPECT_TRUE(fs::exists(dir / "p/paths/path_1.csv"));
  const auto bad = cli("paths --run " + (dir / "missing").string() + " --seeds 0.5");
  EXPECT_EQ(bad.status, 2) << bad.output;
}

TEST(Cli, BlowupFromParameters) {
  REQUIRE_CLI();
  const auto dir = scratch("cli_blowup");
  const double pi = std::numbers::pi;
  write_json(dir / "p.json", {{"schema_version", 1},
                              {"law", {{"gamma", 2.0}, {"beta", 2.0}}},
                              {"H0", 2.5 * pi},
                              {"M0", pi},
                              {"area0", pi}});
  const auto r = cli("blowup --config " + (dir / "p.json").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "out/blowup_report.json"));
  EXPECT_TRUE(fs::exists(dir / "out/G_curve.csv"));
}
