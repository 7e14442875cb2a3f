#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "funnel/experiments/commands.hpp"
#include "funnel/experiments/config.hpp"
#include "funnel/experiments/output.hpp"
#include "funnel/experiments/scan.hpp"
#include "funnel/experiments/table.hpp"

using namespace funnel;
using namespace funnel::experiments;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no funnel::Error thrown";
  return ErrorKind::domain;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("funnel_lab_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<fs::path> files_in(const fs::path& d, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(d))
    if (e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

ScanSpec spec_of(const std::string& text) { return scan_spec_from(Config::parse(text)); }

}  // namespace

// Config

TEST(Config, SectionsCommentsAndGeneral) {
  const auto c = Config::parse(
      "top = 1\n# comment\n; other comment\n[saddle]\n  rho = 2.5  \nnu=3\n\n[scan]\naxis1 = c -1 0 3\n");
  EXPECT_EQ(c.get_int("general", "top"), 1);
  EXPECT_DOUBLE_EQ(c.get_double("saddle", "rho"), 2.5);
  EXPECT_DOUBLE_EQ(c.get_double("saddle", "nu"), 3.0);
  EXPECT_EQ(c.raw("scan", "axis1"), "c -1 0 3");
  EXPECT_DOUBLE_EQ(c.get_double("saddle", "missing", 7.0), 7.0);
}

TEST(Config, Errors) {
  EXPECT_EQ(kind_of([] { Config::parse("[a]\nx = 1\nx = 2\n"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { Config::parse("[a\n"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { Config::parse("no equals sign\n"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { Config::parse("[a]\nx = abc\n").get_double("a", "x"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { Config::parse("[a]\nx = 1.5\n").get_int("a", "x"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { Config::parse("").get_double("a", "x"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { Config().set_assignment("nodot=1"); }), ErrorKind::config);
}

TEST(Config, CanonicalRoundTrip) {
  const auto c = Config::parse("[b]\ny = 2\nx = 1\n[a]\nz = hello world\n");
  const auto again = Config::parse(c.canonical());
  EXPECT_EQ(again.canonical(), c.canonical());
  EXPECT_EQ(again.get_string("a", "z", ""), "hello world");
}

TEST(Config, LayeringOrder) {
  const auto& cmd = find_command("check-prop1");
  const auto file = Config::parse("[profile]\na = 0.5\n[global]\nmu = 0.01\n");
  Config flags;
  flags.set_assignment("profile.a=0.2");
  const auto r = resolve_config(cmd, file, flags);
  EXPECT_DOUBLE_EQ(r.get_double("profile", "a"), 0.2);    // flag over file
  EXPECT_DOUBLE_EQ(r.get_double("global", "mu"), 0.01);   // file over default
  EXPECT_DOUBLE_EQ(r.get_double("saddle", "rho"), 1.0);   // default
}

// Output formatting

TEST(Output, EmptyTable) {
  RunOutput r;
  r.subcommand = "scan";
  r.records = Table({"a", "b"});
  EXPECT_EQ(to_csv(r.records), "a,b\n");
  const auto doc = document(r, "20000101T000000Z");
  EXPECT_TRUE(doc["records"].is_array());
  EXPECT_TRUE(doc["records"].empty());
  for (const char* k : {"spec", "records", "summary", "provenance"}) EXPECT_TRUE(doc.contains(k)) << k;
}

TEST(Output, FloatsRoundTripBitExactly) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  Table t({"x"});
  std::vector<double> xs{0.1, 1.0 / 3.0, -0.0, 5e-324, std::numeric_limits<double>::max()};
  while (xs.size() < 200) {
    const std::uint64_t b = bits(rng);
    double x;
    std::memcpy(&x, &b, sizeof x);
    if (std::isfinite(x)) xs.push_back(x);
  }
  for (double x : xs) t.add({{"x", x}});
  const auto back = Json::parse(to_json(t).dump());
  std::istringstream csv(to_csv(t));
  std::string line;
  std::getline(csv, line);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double j = back[i]["x"].get<double>();
    std::getline(csv, line);
    const double c = std::strtod(line.c_str(), nullptr);
    EXPECT_EQ(std::memcmp(&j, &xs[i], sizeof j), 0) << format_double(xs[i]);
    EXPECT_EQ(std::memcmp(&c, &xs[i], sizeof c), 0) << line;
  }
}

TEST(Output, NonFiniteAndQuoting) {
  Table t({"x", "s"});
  t.add({{"x", std::numeric_limits<double>::quiet_NaN()}, {"s", std::string("a,\"b\"")}});
  t.add({{"x", -std::numeric_limits<double>::infinity()}});
  EXPECT_EQ(to_csv(t), "x,s\nnan,\"a,\"\"b\"\"\"\n-inf,\n");
  const auto j = to_json(t);
  EXPECT_EQ(j[0]["x"], "nan");
  EXPECT_TRUE(j[1]["s"].is_null());
}

TEST(Output, HashDependsOnlyOnSpec) {
  RunOutput a;
  a.subcommand = "check-prop1";
  a.config = Config::parse("[profile]\na = 0.3\n");
  RunOutput b = a;
  b.records = Table({"z"});
  EXPECT_EQ(spec_hash(a), spec_hash(b));
  EXPECT_EQ(spec_hash(a).size(), 10u);
  b.config.set("profile", "a", "0.31");
  EXPECT_NE(spec_hash(a), spec_hash(b));
  EXPECT_EQ(output_stem(a, "T"), "check-prop1-T-" + spec_hash(a));
}

TEST(Output, UnwritableDirectoryIsAnIoError) {
  const auto d = fresh_dir("io");
  std::ofstream(d / "file") << "x";
  RunOutput r;
  r.subcommand = "scan";
  EXPECT_EQ(kind_of([&] { write_outputs(r, d / "file" / "sub", Format::both, "T"); }), ErrorKind::io);
}

// Scans

TEST(Scan, AxisValidation) {
  EXPECT_EQ(kind_of([] { parse_axis("c -1 0 1"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_axis("c -1 0 2.5"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_axis("c -1 0 3 cubic"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { parse_axis("c -1 0"); }), ErrorKind::config);
  EXPECT_EQ(kind_of([] { spec_of("[scan]\ntarget = map-family\nanalysis = fixed-points\naxis1 = mu -1 1 3 log\n"); }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([] { spec_of("[scan]\ntarget = burster\nanalysis = classify-regime\naxis1 = mu 0 1 3\n"); }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([] { spec_of("[scan]\ntarget = burster\nanalysis = rotation-number\naxis1 = c 0 1 3\n"); }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([] { spec_of("[scan]\ntarget = nothing\nanalysis = rotation-number\naxis1 = c 0 1 3\n"); }),
            ErrorKind::config);
  const auto a = parse_axis("mu 1e-4 1e-2 3 log");
  EXPECT_TRUE(a.log);
  EXPECT_NEAR(a.value(1), 1e-3, 1e-15);
  EXPECT_EQ(a.value(2), 1e-2);
}

TEST(Scan, CompletenessAndOrder) {
  const auto r = run_scan(spec_of(
      "[scan]\ntarget = circle-map\nanalysis = rotation-number\naxis1 = a 0 0.5 3\naxis2 = omega_tilde 0 1 4\n"));
  ASSERT_EQ(r.table.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(r.table.number(i, "index"), static_cast<double>(i));
    EXPECT_EQ(r.table.number(i, "a"), r.spec.axes[0].value(i / 4));
    EXPECT_EQ(r.table.number(i, "omega_tilde"), r.spec.axes[1].value(i % 4));
    EXPECT_EQ(r.table.text(i, "status"), "ok");
  }
}

TEST(Scan, DegenerateTwoPointScan) {
  const auto r = run_scan(spec_of("[scan]\ntarget = map-family\nanalysis = fixed-points\naxis1 = mu 1e-3 1e-2 2\n"));
  EXPECT_EQ(r.table.size(), 2u);
  const std::string csv = to_csv(r.table);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Scan, FailuresAreRecordedPerPoint) {
  // a > 1 makes alpha change sign; those points fail without aborting the scan.
  const auto r = run_scan(spec_of(
      "[scan]\ntarget = circle-map\nanalysis = rotation-number\naxis1 = a 0.3 1.3 3\n"));
  ASSERT_EQ(r.table.size(), 3u);
  EXPECT_EQ(r.table.text(0, "status"), "ok");
  EXPECT_NE(r.table.text(2, "status").rfind("error(", 0), std::string::npos);
  EXPECT_EQ(r.errors, 1u);
}

TEST(Scan, SerialAndParallelAgree) {
  const std::string base =
      "[scan]\ntarget = circle-map\nanalysis = circle-lyapunov\naxis1 = a 0 0.9 5\n"
      "axis2 = omega_tilde 0 6 7\nseed = 42\n";
  const auto one = run_scan(spec_of(base + "workers = 1\n"));
  const auto many = run_scan(spec_of(base + "workers = 6\n"));
  EXPECT_EQ(to_csv(one.table), to_csv(many.table));
  const auto other_seed = run_scan(spec_of(
      "[scan]\ntarget = circle-map\nanalysis = circle-lyapunov\naxis1 = a 0 0.9 5\n"
      "axis2 = omega_tilde 0 6 7\nseed = 43\n"));
  EXPECT_NE(to_csv(one.table), to_csv(other_seed.table));
}

TEST(Scan, ModeLockingFlagsRunsOfEqualValues) {
  ScanResult r;
  r.spec.axes = {Axis{"omega_tilde", 0, 1, 8, false}};
  r.table = Table({"rotation_number", "locked"});
  for (double x : {0.1, 0.25, 0.25, 0.25 + 5e-7, 0.3, 0.0, 1.0 - 1e-9, 0.0}) r.table.add({{"rotation_number", x}});
  flag_mode_locking(r);
  const std::vector<double> expect{0, 1, 1, 1, 0, 1, 1, 1};
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(r.table.number(i, "locked"), expect[i]) << i;
}

TEST(Scan, TongueLockedFractionGrowsWithA) {
  const auto r = run_scan(spec_of(
      "[scan]\ntarget = circle-map\nanalysis = rotation-number\naxis1 = a 0 0.9 64\n"
      "axis2 = omega_tilde 0 6.283185307179586 64\n"));
  ASSERT_EQ(r.table.size(), 64u * 64u);
  EXPECT_EQ(r.errors, 0u);
  std::vector<double> fraction(64, 0.0);
  for (std::size_t i = 0; i < r.table.size(); ++i) fraction[i / 64] += r.table.number(i, "locked") / 64.0;
  // Coarse bands of a, to average out the lattice of rational values.
  auto band = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 16 * k; i < 16 * (k + 1); ++i) s += fraction[i];
    return s / 16.0;
  };
  for (std::size_t k = 1; k < 4; ++k) EXPECT_GT(band(k), band(k - 1)) << "band " << k;
}

// Subcommands in process

TEST(Commands, EveryCommandIsDeterministic) {
  for (const auto& cmd : command_table()) {
    if (cmd.name.rfind("burster", 0) == 0 || cmd.name == "fast-branch" || cmd.name == "scan") continue;
    const auto cfg = resolve_config(cmd, Config{}, Config{});
    const auto a = run_command(cmd, cfg);
    const auto b = run_command(cmd, cfg);
    EXPECT_EQ(to_csv(a.records), to_csv(b.records)) << cmd.name;
    EXPECT_EQ(a.summary.dump(), b.summary.dump()) << cmd.name;
    EXPECT_EQ(a.exit_code, 0) << cmd.name << ": " << a.message;
  }
}

TEST(Commands, SelftestPasses) {
  const auto r = run_command(find_command("selftest"), Config{});
  EXPECT_EQ(r.exit_code, 0) << r.message;
}

TEST(Commands, CheckProp2MatchesExample) {
  const auto& cmd = find_command("check-prop2");
  const auto r = run_command(cmd, resolve_config(cmd, Config{}, Config{}));
  EXPECT_EQ(r.summary["alternative"], "1");
  EXPECT_NEAR(r.summary["margin"].get<double>(), 0.609, 0.01);
}

// The binary

#ifdef FUNNEL_LAB_PATH

namespace {

int lab(const std::string& args, const fs::path& out, const std::string& env = "") {
  const std::string cmd = env + " " + FUNNEL_LAB_PATH + " " + args + " --out " + out.string() +
                          " >" + (out.parent_path() / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto d = fresh_dir("exit") / "out";
  EXPECT_EQ(lab("selftest", d), 0);
  EXPECT_EQ(lab("no-such-command", d), 2);
  EXPECT_EQ(lab("check-prop1 --bogus 1", d), 2);
  EXPECT_EQ(lab("check-prop1 --a abc", d), 2);
  EXPECT_EQ(lab("check-prop1 --set nodot=1", d), 2);
  EXPECT_EQ(lab("scan --set scan.target=burster --set scan.analysis=classify-regime "
                "--set 'scan.axis1=c 0 1 1'", d), 2);
  // Non-invertible circle component: the analysis fails.
  EXPECT_EQ(lab("invariant-curve --a 0.8", d), 1);
  // The flag table only offers flags a subcommand uses.
  EXPECT_EQ(lab("selftest --a 0.3", d), 2);
}

TEST(Cli, ConfigFileAndFlags) {
  const auto root = fresh_dir("config");
  const auto cfg = root / "run.ini";
  std::ofstream(cfg) << "[profile]\na = 0.96\n[saddle]\nomega_over_rho = 5\n[check-prop2]\nm = 2\n";
  ASSERT_EQ(lab("check-prop2 --config " + cfg.string() + " --interval 1.5708 4.7124", root / "out"), 0);
  EXPECT_NE(slurp(root / "stdout.txt").find("alternative 1, margin 0.609"), std::string::npos)
      << slurp(root / "stdout.txt");
  const auto json = files_in(root / "out", ".json");
  ASSERT_EQ(json.size(), 1u);
  const auto doc = Json::parse(slurp(json[0]));
  EXPECT_EQ(doc["spec"]["config"]["check-prop2"]["interval"], "1.5708 4.7124");
  EXPECT_EQ(doc["provenance"]["artifact"], "funnel_lab");
}

TEST(Cli, RerunsAreByteIdenticalApartFromTimestamps) {
  const auto root = fresh_dir("determinism");
  const std::string args =
      "scan --set scan.target=circle-map --set scan.analysis=circle-lyapunov "
      "--set 'scan.axis1=a 0 0.9 4' --set 'scan.axis2=omega_tilde 0 6 5' --set scan.seed=9";
  ASSERT_EQ(lab(args, root / "a"), 0);
  ASSERT_EQ(lab(args + " --workers 3", root / "b"), 0);
  const auto ca = files_in(root / "a", ".csv"), cb = files_in(root / "b", ".csv");
  ASSERT_EQ(ca.size(), 1u);
  ASSERT_EQ(cb.size(), 1u);
  EXPECT_EQ(slurp(ca[0]), slurp(cb[0]));
  auto ja = Json::parse(slurp(files_in(root / "a", ".json")[0]));
  auto jb = Json::parse(slurp(files_in(root / "b", ".json")[0]));
  // Worker count is part of the resolved config, so only records and summary compare equal.
  EXPECT_EQ(ja["records"], jb["records"]);
  EXPECT_EQ(ja["summary"], jb["summary"]);

  ASSERT_EQ(lab(args, root / "c"), 0);
  auto jc = Json::parse(slurp(files_in(root / "c", ".json")[0]));
  ja["provenance"].erase("timestamp");
  jc["provenance"].erase("timestamp");
  EXPECT_EQ(ja.dump(), jc.dump());
  const auto stem = [](const fs::path& p) {
    const auto s = p.stem().string();
    return s.substr(s.rfind('-'));
  };
  EXPECT_EQ(stem(files_in(root / "a", ".csv")[0]), stem(files_in(root / "c", ".csv")[0]));
}

TEST(Cli, EnvironmentOverridesOut) {
  const auto root = fresh_dir("env");
  ASSERT_EQ(lab("sine-branches --format csv", root / "ignored", "FUNNEL_LAB_OUT=" + (root / "env").string()), 0);
  EXPECT_FALSE(fs::exists(root / "ignored"));
  EXPECT_EQ(files_in(root / "env", ".csv").size(), 1u);
  EXPECT_EQ(files_in(root / "env", ".json").size(), 0u);
}

#endif
