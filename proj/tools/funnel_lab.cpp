// funnel_lab: command-line front end for the map and burster experiments.
//
// Every subcommand layers its built-in defaults, an optional --config file,
// named flags and --set section.key=value overrides, runs, writes
// <subcommand>-<timestamp>-<hash>.{csv,json} into --out (or $FUNNEL_LAB_OUT)
// and prints one summary line. Exit status: 0 ok, 1 analysis failure,
// 2 configuration or usage error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "funnel/core/error.hpp"
#include "funnel/experiments/commands.hpp"
#include "funnel/experiments/config.hpp"
#include "funnel/experiments/output.hpp"

namespace fx = funnel::experiments;

namespace {

struct Flag {
  const char* name;
  const char* key;  // section.key; "@" stands for the subcommand's own section
  const char* help;
  bool pair = false;
  bool list = false;
};

const std::vector<Flag>& flags() {
  static const std::vector<Flag> table{
      {"--a", "profile.a", "modulation amplitude in alpha = 1 + a sin(phi)"},
      {"--rho", "saddle.rho", "expansion rate"},
      {"--nu", "saddle.nu", "saddle index lambda/rho"},
      {"--omega-over-rho", "saddle.omega_over_rho", "rotation over expansion"},
      {"--mu", "global.mu", "splitting parameter"},
      {"--phi-star", "global.phi_star", "phase offset of the global map"},
      {"--n", "global.n", "winding number (0 or 1)"},
      {"--eps-r", "global.eps_r", "z coupling of the radial return"},
      {"--eps-phi", "global.eps_phi", "z coupling of the angular return"},
      {"--omega-tilde", "map.omega_tilde", "circle-map drift"},
      {"--amplitude", "sine.amplitude", "A in phi -> A sin(phi) + omega_tilde"},
      {"--kind", "circle-map.kind", "circle map: profile or sine"},
      {"--map", "@.map", "map kind"},
      {"--m", "@.m", "number of symbols"},
      {"--interval", "@.interval", "phi1 phi2", true},
      {"--iterations", "@.iterations", "iterations"},
      {"--z0", "@.z0", "initial height"},
      {"--phi0", "@.phi0", "initial phase"},
      {"--seeds", "@.seeds", "number of random seeds"},
      {"--seed", "@.seed", "RNG seed"},
      {"--phi-target", "@.phi_target", "fixed-point phase to construct"},
      {"--mus", "@.mus", "list of mu values", false, true},
      {"--count", "@.count", "grid points"},
      {"--workers", "@.workers", "worker threads (0: all cores)"},
      {"--c", "burster.c", "slow-nullcline offset"},
      {"--delta", "burster.delta", "recovery timescale"},
      {"--mu-slow", "burster.mu_slow", "slow timescale"},
      {"--I", "burster.I", "constant drive"},
      {"--t-end", "@.t_end", "integration time"},
      {"--t-max", "@.t_max", "observation time"},
      {"--t-max", "classify.t_max", "observation time"},
      {"--y-min", "@.y_min", "lower end of the frozen-y range"},
      {"--y-max", "@.y_max", "upper end of the frozen-y range"},
  };
  return table;
}

struct Parsed {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out_dir = "funnel_lab_out";
  std::string format = "both";
  std::map<std::string, std::vector<std::string>> values;  // section.key -> words
};

int run(const fx::Command& cmd, const Parsed& a) {
  fx::Config file;
  if (!a.config_file.empty()) file = fx::Config::load(a.config_file);
  fx::Config over;
  for (const auto& [key, words] : a.values) {
    std::string joined;
    for (const auto& w : words) joined += (joined.empty() ? "" : " ") + w;
    over.set_assignment(key + "=" + joined);
  }
  for (const auto& s : a.sets) over.set_assignment(s);
  const fx::Config resolved = fx::resolve_config(cmd, file, over);
  const auto format = fx::parse_format(a.format);
  std::string out_dir = a.out_dir;
  if (const char* env = std::getenv("FUNNEL_LAB_OUT"); env && *env) out_dir = env;

  const fx::RunOutput out = fx::run_command(cmd, resolved);
  const auto paths = fx::write_outputs(out, out_dir, format, fx::utc_timestamp());
  std::cout << cmd.name << ": " << out.message << "\n";
  for (const auto& p : paths) std::cerr << "wrote " << p.string() << "\n";
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"funnel_lab: Shilnikov-funnel return maps and the elliptic burster"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::map<std::string, Parsed> parsed;
  for (const auto& cmd : fx::command_table()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    Parsed& a = parsed[cmd.name];
    sub->add_option("--config", a.config_file, "config file (key = value with [sections])")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", a.sets, "override: section.key=value (repeatable)");
    sub->add_option("--out", a.out_dir, "output directory (FUNNEL_LAB_OUT overrides)")
        ->capture_default_str();
    sub->add_option("--format", a.format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    // A flag exists on a subcommand only if its key is among that subcommand's
    // defaults.
    const auto defaults = fx::default_config(cmd);
    for (const auto& f : flags()) {
      std::string key = f.key;
      if (key.rfind("@.", 0) == 0) key = cmd.name + key.substr(1);
      const auto dot = key.find('.');
      if (!defaults.has(key.substr(0, dot), key.substr(dot + 1))) continue;
      if (sub->get_option_no_throw(f.name)) continue;
      auto* opt = sub->add_option_function<std::vector<std::string>>(
          f.name, [&a, key](const std::vector<std::string>& v) { a.values[key] = v; }, f.help);
      if (f.pair) {
        opt->expected(2);
      } else if (f.list) {
        opt->expected(1, 64);
      } else {
        opt->expected(1);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  const auto& cmd = fx::find_command(sub->get_name());
  try {
    return run(cmd, parsed[cmd.name]);
  } catch (const funnel::Error& e) {
    std::cerr << cmd.name << ": " << funnel::to_string(e.kind()) << " error: " << e.what() << "\n";
    return e.kind() == funnel::ErrorKind::config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << cmd.name << ": " << e.what() << "\n";
    return 1;
  }
}
