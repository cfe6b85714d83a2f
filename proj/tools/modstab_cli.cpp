// modstab: scenario runner and one-shot numeric kernels.
//
//   modstab run <config|builtin> [--out path] [--seed-override n] [--probes n] [--quiet]
//   modstab list
//   modstab show <builtin>
//   modstab norm <modular> <vector>
//   modstab decompose <re> <im>
//
// Exit codes: 0 all records pass, 1 a check failed, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "modstab/algebra.hpp"
#include "modstab/modular.hpp"
#include "modstab/scenario.hpp"

namespace {

using modstab::json;

constexpr int kExitConfig = 2;

modstab::VecX parse_vector(const std::string& text) {
  std::vector<modstab::Scalar> coords;
  if (!text.empty() && text.front() == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error&) {
      throw modstab::ConfigError("vector is not valid JSON: " + text);
    }
    for (const auto& v : j) {
      if (v.is_number()) {
        coords.emplace_back(v.get<double>(), 0.0);
      } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        coords.emplace_back(v[0].get<double>(), v[1].get<double>());
      } else {
        throw modstab::ConfigError("vector entries must be numbers or [re, im]");
      }
    }
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) throw modstab::ConfigError("bad vector entry '" + item + "'");
      coords.emplace_back(v, 0.0);
    }
  }
  if (coords.empty()) throw modstab::ConfigError("empty vector");
  return modstab::VecX(std::move(coords));
}

int cmd_run(const std::string& target, const std::string& out_path, const modstab::RunOptions& opts, bool quiet) {
  modstab::RunResult res;
  if (!std::filesystem::exists(target)) {
    const auto names = modstab::list_builtin_scenarios();
    if (std::find(names.begin(), names.end(), target) != names.end()) {
      res = modstab::run_scenario(modstab::builtin_scenario(target), opts);
    } else {
      res = modstab::run_scenario_file(target, opts);
    }
  } else {
    res = modstab::run_scenario_file(target, opts);
  }

  const std::string report = modstab::to_jsonl(res.records);
  if (out_path.empty() || out_path == "-") {
    std::cout << report;
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      std::cerr << "modstab: cannot write " << out_path << "\n";
      return kExitConfig;
    }
    out << report;
  }

  if (!quiet) {
    std::size_t failed = 0;
    for (const auto& r : res.records)
      if (!r.value("pass", false)) ++failed;
    std::cerr << res.records.front().value("scenario", "?") << ": " << res.records.size() << " records, " << failed
              << " failing, exit " << res.exit_code << "\n";
  }
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability lab for bi-additive functional inequalities in modular spaces"};
  app.set_version_flag("--version", std::string(modstab::kToolVersion));
  app.require_subcommand(1);

  std::string out_path;
  std::uint64_t seed_override = 0;
  std::size_t probes_override = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a scenario config (file path or builtin name)");
  std::string target;
  run->add_option("config", target, "Config file or builtin scenario name")->required();
  run->add_option("--out", out_path, "Report path (default stdout)");
  auto* seed_opt = run->add_option("--seed-override", seed_override, "Replace the probe seed");
  auto* probes_opt = run->add_option("--probes", probes_override, "Replace the probe count")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "No summary on stderr");

  auto* list = app.add_subcommand("list", "List builtin scenarios");

  auto* show = app.add_subcommand("show", "Print a builtin scenario config");
  std::string show_name;
  show->add_option("name", show_name)->required();

  auto* norm = app.add_subcommand("norm", "Luxemburg norm of a vector");
  std::string modular_text, vector_text;
  norm->add_option("modular", modular_text, "norm | power:<p> | orlicz:<square|exp_minus_one|linear>")->required();
  norm->add_option("vector", vector_text, "3,4 or [[1,0],[0,2]]")->required();

  auto* decompose = app.add_subcommand("decompose", "Write w = re + i im (|w| <= 3) as three unimodular numbers");
  double re = 0.0, im = 0.0;
  decompose->add_option("re", re)->required();
  decompose->add_option("im", im)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      modstab::RunOptions opts;
      if (*seed_opt) opts.seed_override = seed_override;
      if (*probes_opt) opts.probes_override = probes_override;
      return cmd_run(target, out_path, opts, quiet);
    }
    if (*list) {
      for (const auto& n : modstab::list_builtin_scenarios()) std::cout << n << "\n";
      return 0;
    }
    if (*show) {
      std::cout << modstab::builtin_scenario(show_name).dump(2) << "\n";
      return 0;
    }
    if (*norm) {
      const auto m = modstab::parse_modular_shorthand(modular_text);
      const auto x = parse_vector(vector_text);
      std::printf("%.12g\n", modstab::luxemburg_norm(m, x));  // bisection tolerance is 1e-12
      return 0;
    }
    if (*decompose) {
      const auto t = modstab::three_unimodular_decomposition({re, im});
      const auto c = [](modstab::Scalar v) { return json::array({v.real(), v.imag()}); };
      std::cout << json{{"mu1", c(t.mu1)}, {"mu2", c(t.mu2)}, {"mu3", c(t.mu3)}, {"sum", c(t.sum())}}.dump() << "\n";
      return 0;
    }
  } catch (const modstab::ConfigError& e) {
    std::cerr << "modstab: " << e.what() << "\n";
    return kExitConfig;
  } catch (const modstab::OutOfDiscError& e) {
    std::cerr << "modstab: " << e.what() << "\n";
    return kExitConfig;
  } catch (const modstab::Error& e) {
    std::cerr << "modstab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
